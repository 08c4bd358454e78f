"""Minimal dense-tensor engine with reverse-mode differentiation.

Tensors wrap contiguous numpy arrays (float32 or float64). Every operation
that produced a tensor keeps a backward closure and its parents, so calling
``backward`` on a scalar result accumulates gradients into every leaf that
was created with ``requires_grad=True``. The op set is exactly what the
feature blocks need: conv2d (with groups and stride), quarter rotations,
average pooling, sigmoid, channel concat/slice, and elementwise arithmetic.

All forward math is plain single-threaded numpy, so two identical runs
produce bit-identical outputs and gradients.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import ContractError, ShapeError

FLOAT_DTYPES = (np.float32, np.float64)


def _as_pair(v) -> tuple[int, int]:
    if isinstance(v, int):
        return (v, v)
    a, b = v
    return (int(a), int(b))


class Tensor:
    """Dense N-d array node in a dynamically built computation graph."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype)
        elif arr.dtype not in FLOAT_DTYPES:
            arr = arr.astype(np.float64)
        arr = np.ascontiguousarray(arr)
        if not np.all(np.isfinite(arr)):
            raise ValueError("tensor values must be finite")
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def zeros(shape, dtype=np.float32, requires_grad=False) -> "Tensor":
        return Tensor(np.zeros(shape, dtype=dtype), requires_grad=requires_grad)

    @staticmethod
    def _from_op(data: np.ndarray, parents: Sequence["Tensor"],
                 backward: Callable[[np.ndarray], None]) -> "Tensor":
        out = Tensor(data)
        if any(p.requires_grad or p._parents for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        return out

    # -- basic introspection --------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype})"

    # -- operator sugar -------------------------------------------------------

    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return sub(self, other)

    def __mul__(self, other: "Tensor") -> "Tensor":
        return mul(self, other)

    # -- autograd -------------------------------------------------------------

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data, dtype=g.dtype)
        self.grad += g

    def backward(self) -> None:
        backward(self)


def backward(loss: Tensor) -> None:
    """Reverse-mode accumulation from a scalar loss over its recorded graph.

    Gradients land in ``.grad`` of every reachable node; leaves that never
    contributed keep ``grad is None`` (read as zero via :func:`gradients`).
    """
    if loss.data.size != 1:
        raise ContractError("backward requires a scalar loss")
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


def gradients(loss: Tensor, leaves: Sequence[Tensor]) -> list[np.ndarray]:
    """Gradient of ``loss`` w.r.t. each leaf; zeros for unused leaves."""
    for leaf in leaves:
        leaf.grad = None
    backward(loss)
    return [leaf.grad if leaf.grad is not None
            else np.zeros_like(leaf.data) for leaf in leaves]


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# -- elementwise ops ----------------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum of identically shaped tensors."""
    if a.shape != b.shape:
        raise ShapeError(f"add shape mismatch: {a.shape} vs {b.shape}")

    def bwd(g):
        a._accumulate(g)
        b._accumulate(g)

    return Tensor._from_op(a.data + b.data, (a, b), bwd)


def sub(a: Tensor, b: Tensor) -> Tensor:
    """Broadcasting elementwise difference."""
    def bwd(g):
        a._accumulate(_unbroadcast(g, a.shape))
        b._accumulate(_unbroadcast(-g, b.shape))

    return Tensor._from_op(a.data - b.data, (a, b), bwd)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Broadcasting elementwise product."""
    ad, bd = a.data, b.data

    def bwd(g):
        a._accumulate(_unbroadcast(g * bd, a.shape))
        b._accumulate(_unbroadcast(g * ad, b.shape))

    return Tensor._from_op(ad * bd, (a, b), bwd)


def scale(x: Tensor, c: float) -> Tensor:
    def bwd(g):
        x._accumulate(g * c)

    return Tensor._from_op(x.data * c, (x,), bwd)


def bias_add(x: Tensor, bias: Tensor) -> Tensor:
    """Add a per-channel bias vector to a 4-D feature map."""
    if x.ndim != 4 or bias.ndim != 1 or bias.shape[0] != x.shape[1]:
        raise ShapeError(f"bias {bias.shape} does not match channels of {x.shape}")
    b4 = bias.data.reshape(1, -1, 1, 1)

    def bwd(g):
        x._accumulate(g)
        bias._accumulate(g.sum(axis=(0, 2, 3)))

    return Tensor._from_op(x.data + b4, (x, bias), bwd)


def sigmoid(x: Tensor) -> Tensor:
    """Numerically stable logistic function, outputs strictly in (0, 1)."""
    v = x.data
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    # keep the open-interval contract even where rounding would hit 0 or 1
    tiny = np.nextafter(v.dtype.type(0), v.dtype.type(1))
    below_one = np.nextafter(v.dtype.type(1), v.dtype.type(0))
    np.clip(out, tiny, below_one, out=out)

    def bwd(g):
        x._accumulate(g * out * (1.0 - out))

    return Tensor._from_op(out, (x,), bwd)


def smooth_l1(x: Tensor, beta: float = 1.0) -> Tensor:
    """Huber-style loss applied elementwise to a residual tensor."""
    v = x.data
    absv = np.abs(v)
    out = np.where(absv < beta, 0.5 * v * v / beta, absv - 0.5 * beta)

    def bwd(g):
        x._accumulate(g * np.where(absv < beta, v / beta, np.sign(v)))

    return Tensor._from_op(out, (x,), bwd)


def sum_all(x: Tensor) -> Tensor:
    shape = x.shape

    def bwd(g):
        x._accumulate(np.broadcast_to(g, shape).astype(x.data.dtype))

    return Tensor._from_op(np.asarray(x.data.sum(), dtype=x.data.dtype), (x,), bwd)


def mean_all(x: Tensor) -> Tensor:
    n = x.data.size
    return scale(sum_all(x), 1.0 / n)


def normalize_vec(v: Tensor, eps: float = 1e-12) -> Tensor:
    """Project a flat vector onto the unit sphere, with gradient."""
    norm = float(np.linalg.norm(v.data))
    if norm <= eps:
        raise ContractError("cannot normalize a (near-)zero vector")
    u = v.data / norm

    def bwd(g):
        v._accumulate((g - u * float(np.dot(u.ravel(), g.ravel()))) / norm)

    return Tensor._from_op(u, (v,), bwd)


# -- structural ops -----------------------------------------------------------


def concat_channels(parts: Sequence[Tensor]) -> Tensor:
    """Concatenate 4-D tensors along the channel axis, order preserved."""
    if not parts:
        raise ShapeError("concat_channels needs at least one part")
    first = parts[0]
    for p in parts:
        if p.ndim != 4:
            raise ShapeError("concat_channels expects 4-D tensors")
        if p.shape[0] != first.shape[0] or p.shape[2:] != first.shape[2:]:
            raise ShapeError(
                f"concat_channels batch/spatial mismatch: {p.shape} vs {first.shape}")
    splits = np.cumsum([p.shape[1] for p in parts])[:-1]

    def bwd(g):
        for p, gp in zip(parts, np.split(g, splits, axis=1)):
            p._accumulate(gp)

    return Tensor._from_op(
        np.concatenate([p.data for p in parts], axis=1), tuple(parts), bwd)


def slice_channels(x: Tensor, start: int, stop: int) -> Tensor:
    if x.ndim != 4 or not (0 <= start < stop <= x.shape[1]):
        raise ShapeError(f"bad channel slice [{start}:{stop}] for {x.shape}")

    def bwd(g):
        full = np.zeros_like(x.data, dtype=g.dtype)
        full[:, start:stop] = g
        x._accumulate(full)

    return Tensor._from_op(x.data[:, start:stop].copy(), (x,), bwd)


def rot90(x: Tensor, direction: str) -> Tensor:
    """Quarter rotation of the spatial plane of a 4-D tensor.

    ``ccw`` sends input cell (r, c) to output cell (W-1-c, r); ``cw`` is the
    exact inverse. Values are moved, never interpolated, so the op is
    bit-exact and four applications are the identity.
    """
    if x.ndim != 4:
        raise ShapeError("rot90 expects a 4-D tensor")
    if direction not in ("ccw", "cw"):
        raise ContractError(f"unknown rotation direction {direction!r}")
    k = 1 if direction == "ccw" else -1

    def bwd(g):
        x._accumulate(np.ascontiguousarray(np.rot90(g, k=-k, axes=(2, 3))))

    return Tensor._from_op(
        np.ascontiguousarray(np.rot90(x.data, k=k, axes=(2, 3))), (x,), bwd)


# -- convolution and pooling --------------------------------------------------


def _im2col(xp: np.ndarray, kh: int, kw: int, sh: int, sw: int,
            oh: int, ow: int) -> np.ndarray:
    n, c = xp.shape[:2]
    cols = np.empty((n, c, kh, kw, oh, ow), dtype=xp.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, i, j] = xp[:, :, i:i + sh * oh:sh, j:j + sw * ow:sw]
    return cols


def _col2im(gcols: np.ndarray, xp_shape, kh, kw, sh, sw, oh, ow) -> np.ndarray:
    gxp = np.zeros(xp_shape, dtype=gcols.dtype)
    for i in range(kh):
        for j in range(kw):
            gxp[:, :, i:i + sh * oh:sh, j:j + sw * ow:sw] += gcols[:, :, i, j]
    return gxp


def conv2d(x: Tensor, kernel: Tensor, stride=(1, 1), padding=(0, 0),
           groups: int = 1, bias: Tensor | None = None) -> Tensor:
    """2-D cross-correlation over NCHW input with grouped channels.

    Kernel layout is (out_channels, in_channels // groups, kH, kW);
    ``groups == in_channels`` gives a depthwise convolution. Output spatial
    extent is floor((H + 2*padH - kH) / strideH) + 1 and must be positive.
    """
    if x.ndim != 4 or kernel.ndim != 4:
        raise ShapeError("conv2d expects 4-D input and kernel")
    n, c, h, w = x.shape
    oc, cg, kh, kw = kernel.shape
    sh, sw = _as_pair(stride)
    ph, pw = _as_pair(padding)
    if groups < 1 or c % groups != 0 or oc % groups != 0:
        raise ShapeError(f"groups={groups} incompatible with C={c}, outC={oc}")
    if cg != c // groups:
        raise ShapeError(
            f"kernel expects {cg} channels per group, input supplies {c // groups}")
    oh = (h + 2 * ph - kh) // sh + 1
    ow = (w + 2 * pw - kw) // sw + 1
    if oh < 1 or ow < 1:
        raise ShapeError(f"conv2d output would be empty: ({oh}, {ow})")

    xp = np.pad(x.data, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    cols = _im2col(xp, kh, kw, sh, sw, oh, ow)
    # (N, G, Cg*kh*kw, oh*ow) x (G, OCg, Cg*kh*kw)
    colsr = cols.reshape(n, groups, cg * kh * kw, oh * ow)
    wr = kernel.data.reshape(groups, oc // groups, cg * kh * kw)
    out = np.einsum("gok,ngkl->ngol", wr, colsr, optimize=True)
    out = np.ascontiguousarray(out.reshape(n, oc, oh, ow))

    def bwd(g):
        go = g.reshape(n, groups, oc // groups, oh * ow)
        gw = np.einsum("ngol,ngkl->gok", go, colsr, optimize=True)
        kernel._accumulate(gw.reshape(kernel.shape))
        gcols = np.einsum("gok,ngol->ngkl", wr, go, optimize=True)
        gcols = gcols.reshape(n, c, kh, kw, oh, ow)
        gxp = _col2im(gcols, xp.shape, kh, kw, sh, sw, oh, ow)
        x._accumulate(gxp[:, :, ph:ph + h, pw:pw + w])

    out_t = Tensor._from_op(out, (x, kernel), bwd)
    if bias is not None:
        out_t = bias_add(out_t, bias)
    return out_t


def avg_pool(x: Tensor, window, stride=None, padding=(0, 0)) -> Tensor:
    """Mean pooling with zero padding; the divisor always counts padded cells."""
    if x.ndim != 4:
        raise ShapeError("avg_pool expects a 4-D tensor")
    kh, kw = _as_pair(window)
    if kh < 1 or kw < 1:
        raise ContractError("pool window must be >= 1 per axis")
    sh, sw = _as_pair(stride if stride is not None else window)
    ph, pw = _as_pair(padding)
    n, c, h, w = x.shape
    oh = (h + 2 * ph - kh) // sh + 1
    ow = (w + 2 * pw - kw) // sw + 1
    if oh < 1 or ow < 1:
        raise ShapeError(f"avg_pool output would be empty: ({oh}, {ow})")

    xp = np.pad(x.data, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    cols = _im2col(xp, kh, kw, sh, sw, oh, ow)
    inv = 1.0 / (kh * kw)
    out = cols.sum(axis=(2, 3)) * inv

    def bwd(g):
        gcols = np.broadcast_to(
            (g * inv)[:, :, None, None], (n, c, kh, kw, oh, ow))
        gxp = _col2im(np.ascontiguousarray(gcols), xp.shape, kh, kw, sh, sw, oh, ow)
        x._accumulate(gxp[:, :, ph:ph + h, pw:pw + w])

    return Tensor._from_op(np.ascontiguousarray(out), (x,), bwd)


# -- gradient checking --------------------------------------------------------


def gradcheck(fn, inputs, eps: float = 1e-5, coord_limit: int | None = None,
              seed: int = 0) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``fn`` maps the given tensors to a scalar tensor. Every coordinate of
    every input is perturbed by ±eps (or a seeded subset of ``coord_limit``
    coordinates when the input is large). The error at one coordinate is
    |analytic - numeric| / max(1, |analytic|).
    """
    if eps <= 0:
        raise ContractError("eps must be positive")
    if isinstance(inputs, Tensor):
        inputs = [inputs]
    for t in inputs:
        t.requires_grad = True
    out = fn(*inputs)
    if out.data.size != 1:
        raise ContractError("gradcheck target must return a scalar")
    grads = gradients(out, inputs)

    rng = np.random.default_rng(seed)
    worst = 0.0
    for t, analytic in zip(inputs, grads):
        flat = t.data.reshape(-1)
        n = flat.size
        if coord_limit is not None and n > coord_limit:
            idx = rng.choice(n, size=coord_limit, replace=False)
        else:
            idx = np.arange(n)
        aflat = analytic.reshape(-1)
        for i in idx:
            keep = flat[i]
            flat[i] = keep + eps
            hi = fn(*inputs).item()
            flat[i] = keep - eps
            lo = fn(*inputs).item()
            flat[i] = keep
            numeric = (hi - lo) / (2.0 * eps)
            err = abs(aflat[i] - numeric) / max(1.0, abs(aflat[i]))
            worst = max(worst, err)
    return worst


# -- deterministic initialization ---------------------------------------------


def uniform_init(rng: np.random.Generator, shape, fan_in: int,
                 dtype=np.float32) -> Tensor:
    """Seeded uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)]."""
    bound = 1.0 / math.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape).astype(dtype),
                  requires_grad=True)
