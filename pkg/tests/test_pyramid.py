"""Network assembly: bottom-up recursion, shapes, determinism, decode."""

import math

import numpy as np
import pytest

from rotdet import angle
from rotdet.errors import ShapeError
from rotdet.msk import ConvParams
from rotdet.pyramid import (HeadOutputs, NetworkConfig, NetworkWeights,
                            assemble_forward, bottom_up, decode_boxes)
from rotdet.tensor import Tensor


def _dirac_identity(conv):
    conv.kernel.data[:] = 0.0
    c = conv.kernel.shape[0]
    kh, kw = conv.kernel.shape[2:]
    conv.kernel.data[np.arange(c), np.arange(c), (kh - 1) // 2,
                     (kw - 1) // 2] = 1.0
    conv.bias.data[:] = 0.0


def _tower(rng, c=4, base=16):
    return [Tensor(rng.standard_normal((1, c, base >> i, base >> i)))
            for i in range(4)]


class TestBottomUp:
    def _convs(self, rng, c=4):
        down = [ConvParams.create(rng, c, c, 3, 3, stride=(2, 2))
                for _ in range(3)]
        fuse = [ConvParams.create(rng, c, c, 3, 3) for _ in range(3)]
        return down, fuse

    def test_extent_recursion(self):
        rng = np.random.default_rng(0)
        down, fuse = self._convs(rng)
        levels, n5 = bottom_up(_tower(rng), down, fuse)
        assert [t.shape[2] for t in levels] == [8, 4, 2]
        assert n5 is levels[-1]

    def test_dirac_oracle(self):
        # center-tap identity convs turn the recursion into
        # N_{l+1} = M_{l+1} + N_l[::2, ::2]
        rng = np.random.default_rng(1)
        down, fuse = self._convs(rng)
        for conv in down + fuse:
            _dirac_identity(conv)
        m = _tower(rng)
        levels, _ = bottom_up(m, down, fuse)
        prev = m[0].data
        for l in range(3):
            want = m[l + 1].data + prev[:, :, ::2, ::2]
            np.testing.assert_allclose(levels[l].data, want, atol=1e-6)
            prev = levels[l].data

    def test_wrong_level_count(self):
        rng = np.random.default_rng(2)
        down, fuse = self._convs(rng)
        with pytest.raises(ShapeError):
            bottom_up(_tower(rng)[:3], down, fuse)

    def test_extent_mismatch(self):
        rng = np.random.default_rng(3)
        down, fuse = self._convs(rng)
        m = _tower(rng)
        m[1] = Tensor(rng.standard_normal((1, 4, 5, 5)))
        with pytest.raises(ShapeError):
            bottom_up(m, down, fuse)


class TestAssemble:
    def test_documented_shapes(self):
        cfg = NetworkConfig()
        rng = np.random.default_rng(4)
        w = NetworkWeights.create(rng, cfg)
        image = Tensor(rng.standard_normal((1, 3, 128, 128)).astype(np.float32))
        feats, head = assemble_forward(image, w)
        shapes = {k: v.shape for k, v in feats.named().items()}
        assert shapes["C3"] == (1, 16, 16, 16)
        assert shapes["C4"] == (1, 16, 8, 8)
        assert shapes["C5"] == (1, 16, 4, 4)
        assert shapes["M1"] == (1, 40, 64, 64)
        assert shapes["M4"] == (1, 40, 8, 8)
        assert shapes["CP2"] == (1, 40, 32, 32)
        assert shapes["N5"] == (1, 40, 8, 8)
        assert shapes["fused_s8"] == (1, 56, 16, 16)
        assert shapes["fused_s16"] == (1, 56, 8, 8)
        assert shapes["fused_s32"] == (1, 96, 4, 4)
        out = head.named()
        assert out["logits_s8"].shape == (1, 2, 16, 16)
        assert out["boxes_s32"].shape == (1, 6, 4, 4)

    def test_extent_not_divisible_by_64(self):
        cfg = NetworkConfig()
        w = NetworkWeights.create(np.random.default_rng(5), cfg)
        with pytest.raises(ShapeError):
            assemble_forward(Tensor(np.zeros((1, 3, 96, 96))), w)
        with pytest.raises(ShapeError):
            assemble_forward(Tensor(np.zeros((1, 4, 64, 64))), w)

    def test_seeded_weights_deterministic(self):
        cfg = NetworkConfig()
        wa = NetworkWeights.create(np.random.default_rng(6), cfg)
        wb = NetworkWeights.create(np.random.default_rng(6), cfg)
        x = Tensor(np.random.default_rng(7).standard_normal(
            (1, 3, 64, 64)).astype(np.float32))
        _, ha = assemble_forward(x, wa)
        _, hb = assemble_forward(x, wb)
        for a, b in zip(ha.logits + ha.boxes, hb.logits + hb.boxes):
            assert np.array_equal(a.data, b.data)

    def test_zero_weights_decode_to_priors(self):
        cfg = NetworkConfig()
        w = NetworkWeights.create(np.random.default_rng(8), cfg)
        for p in w.parameters():
            p.data[:] = 0.0
        _, head = assemble_forward(Tensor(np.zeros((1, 3, 64, 64))), w)
        for lg in head.logits:
            np.testing.assert_array_equal(lg.data, 0.0)
        boxes = decode_boxes(head, cfg)
        # every cell survives at sigmoid(0) = 0.5 and decodes to its anchor
        assert len(boxes) == 8 * 8 + 4 * 4 + 2 * 2
        b = boxes[0]
        assert (b.cx, b.cy) == (4.0, 4.0)
        assert b.w == b.h == 8 * cfg.anchor_scale
        assert b.theta == 0.0
        assert b.score == 0.5


class TestDecodeBoxes:
    def _head(self, logits, deltas):
        return HeadOutputs(logits=[Tensor(np.array(logits, dtype=np.float64))],
                           boxes=[Tensor(np.array(deltas, dtype=np.float64))])

    def test_known_deltas(self):
        cfg = NetworkConfig()
        code = angle.encode(1.0, cfg.omega)
        logits = np.zeros((1, 2, 1, 1))
        logits[0, 1, 0, 0] = 4.0
        deltas = np.zeros((1, 6, 1, 1))
        deltas[0, :, 0, 0] = [0.25, -0.25, math.log(2.0), 0.0, code.x, code.y]
        boxes = decode_boxes(self._head(logits, deltas), cfg)
        assert len(boxes) == 1
        b = boxes[0]
        assert b.class_id == 1
        assert b.score == pytest.approx(1.0 / (1.0 + math.exp(-4.0)))
        assert b.cx == pytest.approx(0.5 * 8 + 0.25 * 32)
        assert b.cy == pytest.approx(0.5 * 8 - 0.25 * 32)
        assert b.w == pytest.approx(64.0)
        assert b.h == pytest.approx(32.0)
        assert b.theta == pytest.approx(1.0, abs=1e-9)

    def test_score_threshold_filters(self):
        cfg = NetworkConfig()
        logits = np.full((1, 2, 1, 1), -10.0)
        boxes = decode_boxes(self._head(logits, np.zeros((1, 6, 1, 1))), cfg)
        assert boxes == []

    def test_degenerate_angle_vector_falls_back(self):
        cfg = NetworkConfig()
        deltas = np.zeros((1, 6, 1, 1))
        deltas[0, 4:, 0, 0] = 1e-9
        boxes = decode_boxes(self._head(np.zeros((1, 2, 1, 1)), deltas), cfg)
        assert boxes[0].theta == 0.0
