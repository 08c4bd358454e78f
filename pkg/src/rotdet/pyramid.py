"""Network assembly: stub backbone, feature tower, bottom-up path, head.

Layout for an (N, 3, H, W) input with H and W divisible by 64:

* stub backbone: stride-2 stem plus stride-2 stages giving C3 (stride 8),
  C4 (stride 16), C5 (stride 32);
* feature tower: a stride-2 stem feeds the four-module MSK block, so
  M1..M4 sit at strides 2/4/8/16;
* attention: CP_k = mdcaa_apply(M_k) for k = 2..4 (M1 only seeds the
  bottom-up path);
* bottom-up path: N = Conv3x3(M_{l+1} + Down(N_prev)) for l = 1..3 with
  N_prev starting at M1; the last level is N5 (stride 16);
* fusion (all sources brought to the target stride by stride-2 3x3
  convolutions): [C3 | CP2] at stride 8, [C4 | CP3] at stride 16,
  [C5 | CP4 | N5] at stride 32;
* head: per fused level, a 3x3 conv to anchors*classes logits and a 3x3
  conv to anchors*6 box channels (dcx, dcy, dw, dh, angle x, angle y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import angle as eaem
from .errors import ShapeError
from .geometry import OrientedBox
from .mdcaa import MdcaaWeights, mdcaa_apply
from .msk import ConvParams, MskModuleWeights, msk_block_forward
from .tensor import Tensor, add, concat_channels, conv2d, sigmoid


@dataclass(frozen=True)
class NetworkConfig:
    """Channel and head bookkeeping for the assembled network."""

    stem_channels: int = 8
    branch_out: int = 8
    backbone_channels: int = 16
    strip_len: int = 11
    pool_window: int = 7
    omega: float = 1.0
    anchors: int = 1
    classes: int = 2
    anchor_scale: float = 4.0

    @property
    def tower_channels(self) -> int:
        return 5 * self.branch_out

    @property
    def fused_channels(self) -> tuple[int, int, int]:
        c, t = self.backbone_channels, self.tower_channels
        return (c + t, c + t, c + 2 * t)

    @property
    def strides(self) -> tuple[int, int, int]:
        return (8, 16, 32)


@dataclass
class PyramidFeatures:
    """Every named intermediate of one forward pass."""

    C: list[Tensor]
    M: list[Tensor]
    CP: list[Tensor]
    N: list[Tensor]
    N5: Tensor
    fused: list[Tensor]

    def named(self) -> dict[str, Tensor]:
        out = {}
        for i, t in enumerate(self.C):
            out[f"C{i + 3}"] = t
        for i, t in enumerate(self.M):
            out[f"M{i + 1}"] = t
        for i, t in enumerate(self.CP):
            out[f"CP{i + 2}"] = t
        out["N5"] = self.N5
        for stride, t in zip((8, 16, 32), self.fused):
            out[f"fused_s{stride}"] = t
        return out


@dataclass
class HeadOutputs:
    """Per-level logits (A*K channels) and box regression (A*6 channels)."""

    logits: list[Tensor]
    boxes: list[Tensor]

    def named(self) -> dict[str, Tensor]:
        out = {}
        for stride, lg, bx in zip((8, 16, 32), self.logits, self.boxes):
            out[f"logits_s{stride}"] = lg
            out[f"boxes_s{stride}"] = bx
        return out


@dataclass
class NetworkWeights:
    config: NetworkConfig
    backbone: list[ConvParams] = field(default_factory=list)
    tower_stem: ConvParams = None
    msk: list[MskModuleWeights] = field(default_factory=list)
    mdcaa: list[MdcaaWeights] = field(default_factory=list)
    bottom_up_down: list[ConvParams] = field(default_factory=list)
    bottom_up_fuse: list[ConvParams] = field(default_factory=list)
    fusion_adjust: dict[str, ConvParams] = field(default_factory=dict)
    head_cls: list[ConvParams] = field(default_factory=list)
    head_box: list[ConvParams] = field(default_factory=list)

    @staticmethod
    def create(rng: np.random.Generator, config: NetworkConfig,
               dtype=np.float32) -> "NetworkWeights":
        cfg = config
        w = NetworkWeights(cfg)
        bc = cfg.backbone_channels
        # stem (stride 2) + four stride-2 stages; the last three are C3/C4/C5
        chain = [(bc, 3)] + [(bc, bc)] * 4
        w.backbone = [ConvParams.create(rng, oc, ic, 3, 3, stride=(2, 2),
                                        dtype=dtype) for oc, ic in chain]
        w.tower_stem = ConvParams.create(rng, cfg.stem_channels, 3, 3, 3,
                                         stride=(2, 2), dtype=dtype)
        in_c = cfg.stem_channels
        for level in range(4):
            mod = MskModuleWeights.create(rng, in_c, cfg.branch_out,
                                          downsample=level > 0, dtype=dtype)
            w.msk.append(mod)
            in_c = mod.out_channels
        tc = cfg.tower_channels
        for _ in range(3):
            w.mdcaa.append(MdcaaWeights.create(rng, tc, cfg.strip_len,
                                               cfg.pool_window, dtype=dtype))
            w.bottom_up_down.append(ConvParams.create(rng, tc, tc, 3, 3,
                                                      stride=(2, 2), dtype=dtype))
            w.bottom_up_fuse.append(ConvParams.create(rng, tc, tc, 3, 3,
                                                      dtype=dtype))
        for name in ("CP2", "CP3", "CP4", "N5"):
            w.fusion_adjust[name] = ConvParams.create(rng, tc, tc, 3, 3,
                                                      stride=(2, 2), dtype=dtype)
        for fc in cfg.fused_channels:
            w.head_cls.append(ConvParams.create(
                rng, cfg.anchors * cfg.classes, fc, 3, 3, dtype=dtype))
            w.head_box.append(ConvParams.create(
                rng, cfg.anchors * 6, fc, 3, 3, dtype=dtype))
        return w

    def parameters(self) -> list[Tensor]:
        params = []
        for conv in self.backbone + [self.tower_stem] + \
                self.bottom_up_down + self.bottom_up_fuse + \
                list(self.fusion_adjust.values()) + self.head_cls + self.head_box:
            params += conv.parameters()
        for mod in self.msk:
            params += mod.parameters()
        for att in self.mdcaa:
            params += att.parameters()
        return params

    def tensors(self) -> dict[str, tuple[Tensor, str]]:
        named = {}
        for i, conv in enumerate(self.backbone):
            named.update(conv.tensors(f"backbone.{i}"))
        named.update(self.tower_stem.tensors("tower_stem"))
        for i, mod in enumerate(self.msk):
            named.update(mod.tensors(f"msk.{i + 1}"))
        for i, att in enumerate(self.mdcaa):
            named.update(att.tensors(f"mdcaa.cp{i + 2}"))
        for i, conv in enumerate(self.bottom_up_down):
            named.update(conv.tensors(f"bottom_up.down.{i + 1}"))
        for i, conv in enumerate(self.bottom_up_fuse):
            named.update(conv.tensors(f"bottom_up.fuse.{i + 1}"))
        for name, conv in self.fusion_adjust.items():
            named.update(conv.tensors(f"fusion.adjust.{name}"))
        for i, conv in enumerate(self.head_cls):
            named.update(conv.tensors(f"head.cls.{i}"))
        for i, conv in enumerate(self.head_box):
            named.update(conv.tensors(f"head.box.{i}"))
        return named


def bottom_up(m_levels: list[Tensor], down_convs: list[ConvParams],
              fuse_convs: list[ConvParams]) -> tuple[list[Tensor], Tensor]:
    """Downsample-add recursion over the tower levels; returns (levels, N5).

    N_prev starts at M1; each step computes
    Conv3x3(M_{l+1} + Down(N_prev)) where Down is a stride-2 convolution.
    """
    if len(m_levels) != 4:
        raise ShapeError("bottom_up expects the four tower levels")
    levels = []
    prev = m_levels[0]
    for l in range(3):
        down = down_convs[l](prev)
        target = m_levels[l + 1]
        if down.shape != target.shape:
            raise ShapeError(
                f"bottom-up extent mismatch at level {l + 2}: "
                f"{down.shape} vs {target.shape}")
        prev = fuse_convs[l](add(target, down))
        levels.append(prev)
    return levels, levels[-1]


def assemble_forward(image: Tensor,
                     w: NetworkWeights) -> tuple[PyramidFeatures, HeadOutputs]:
    """Full forward pass from image to head outputs."""
    if image.ndim != 4 or image.shape[1] != 3:
        raise ShapeError("expected an (N, 3, H, W) image")
    h, width = image.shape[2:]
    if h % 64 or width % 64:
        raise ShapeError(f"input extent {h}x{width} not divisible by 64")

    cur = image
    stages = []
    for conv in w.backbone:
        cur = conv(cur)
        stages.append(cur)
    c_levels = stages[2:]  # strides 8, 16, 32

    stem = w.tower_stem(image)
    m_levels = msk_block_forward(stem, w.msk)
    cp_levels = [mdcaa_apply(m_levels[k], w.mdcaa[k - 1]) for k in (1, 2, 3)]
    n_levels, n5 = bottom_up(m_levels, w.bottom_up_down, w.bottom_up_fuse)

    adj = w.fusion_adjust
    fused = [
        concat_channels([c_levels[0], adj["CP2"](cp_levels[0])]),
        concat_channels([c_levels[1], adj["CP3"](cp_levels[1])]),
        concat_channels([c_levels[2], adj["CP4"](cp_levels[2]),
                         adj["N5"](n5)]),
    ]
    logits = [conv(f) for conv, f in zip(w.head_cls, fused)]
    boxes = [conv(f) for conv, f in zip(w.head_box, fused)]
    feats = PyramidFeatures(C=c_levels, M=m_levels, CP=cp_levels,
                            N=n_levels, N5=n5, fused=fused)
    return feats, HeadOutputs(logits=logits, boxes=boxes)


def decode_boxes(head: HeadOutputs, config: NetworkConfig,
                 score_threshold: float = 0.05,
                 image_index: int = 0) -> list[OrientedBox]:
    """Anchor-relative decode of head outputs into oriented boxes.

    Centers move by delta*anchor_size, extents scale by exp(delta), the
    angle comes from the unit-circle decode of the normalized (x, y)
    channels. Degenerate (near-zero) angle vectors fall back to the prior
    angle 0, so a zero-weight network decodes every cell to its anchor.
    """
    out: list[OrientedBox] = []
    a, k = config.anchors, config.classes
    for stride, logits, deltas in zip(config.strides, head.logits, head.boxes):
        scores = sigmoid(logits).data[image_index]
        raw = deltas.data[image_index]
        _, hh, ww = scores.shape
        anchor_size = stride * config.anchor_scale
        for ai in range(a):
            cls_block = scores[ai * k:(ai + 1) * k]
            box_block = raw[ai * 6:(ai + 1) * 6]
            for r in range(hh):
                for c in range(ww):
                    cls_id = int(np.argmax(cls_block[:, r, c]))
                    score = float(cls_block[cls_id, r, c])
                    if score < score_threshold:
                        continue
                    dcx, dcy, dw, dh, ax, ay = (float(v)
                                                for v in box_block[:, r, c])
                    cx = (c + 0.5) * stride + dcx * anchor_size
                    cy = (r + 0.5) * stride + dcy * anchor_size
                    bw = anchor_size * math.exp(dw)
                    bh = anchor_size * math.exp(dh)
                    if math.hypot(ax, ay) < 1e-6:
                        theta = 0.0
                    else:
                        theta = eaem.decode(
                            eaem.normalize((ax, ay), config.omega))
                    out.append(OrientedBox(cx, cy, bw, bh, theta,
                                           class_id=cls_id, score=score))
    return out
