"""Synthetic scene generation: determinism, rendering, failure modes."""

import numpy as np
import pytest

from rotdet.errors import GenerationError
from rotdet.geometry import OrientedBox, box_to_polygon
from rotdet.scenes import SceneSpec, _render_box, gen_scene


def test_zero_objects_pure_noise():
    image, truth = gen_scene(0, SceneSpec(objects=0), canvas=64)
    assert truth == []
    assert image.shape == (3, 64, 64)
    assert image.data.max() <= 0.1  # only the noise floor


def test_seed_determinism():
    spec = SceneSpec(objects=3, classes=2)
    img_a, truth_a = gen_scene(42, spec, canvas=128)
    img_b, truth_b = gen_scene(42, spec, canvas=128)
    assert np.array_equal(img_a.data, img_b.data)
    assert truth_a == truth_b


def test_different_seeds_differ():
    spec = SceneSpec(objects=3)
    img_a, _ = gen_scene(1, spec, canvas=128)
    img_b, _ = gen_scene(2, spec, canvas=128)
    assert not np.array_equal(img_a.data, img_b.data)


def test_axis_aligned_box_renders_inside_polygon():
    spec = SceneSpec(objects=1, classes=1, noise_level=0.0)
    canvas = np.zeros((64, 64))
    box = OrientedBox(32, 32, 20, 10, 0.0)
    _render_box(canvas, box, 0.9)
    poly = box_to_polygon(box)
    ys, xs = np.nonzero(canvas)
    assert len(xs) == pytest.approx(20 * 10, rel=0.1)
    assert xs.min() + 0.5 >= poly[:, 0].min()
    assert xs.max() + 0.5 <= poly[:, 0].max()
    assert ys.min() + 0.5 >= poly[:, 1].min()
    assert ys.max() + 0.5 <= poly[:, 1].max()


def test_truth_boxes_lie_in_canvas():
    _, truth = gen_scene(7, SceneSpec(objects=4), canvas=256)
    for b in truth:
        poly = box_to_polygon(b)
        assert poly.min() >= 0.0
        assert poly.max() <= 256.0


def test_class_intensities_distinct():
    spec = SceneSpec(classes=3)
    vals = [spec.class_intensity(c) for c in range(3)]
    assert len(set(vals)) == 3


def test_overcrowded_spec_fails():
    spec = SceneSpec(objects=50, min_size=60, max_size=60, max_overlap=0.0)
    with pytest.raises(GenerationError):
        gen_scene(0, spec, canvas=128)
