"""File interchange: the RMKT binary tensor format, PGM images, manifests.

RMKT layout: magic bytes 0x52 0x4D 0x4B 0x54 ("RMKT"), version byte 0x01,
dtype byte (0 = float32, 1 = float64), ndim byte, ndim little-endian u32
extents, then the row-major little-endian payload. Round-trips are
bit-exact.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .tensor import Tensor

MAGIC = b"RMKT"
VERSION = 1
_DTYPE_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
_CODE_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


def save_tensor(path, t: Tensor) -> None:
    arr = t.data
    code = _DTYPE_CODES[arr.dtype]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes([VERSION, code, arr.ndim]))
        for extent in arr.shape:
            fh.write(struct.pack("<I", extent))
        fh.write(np.ascontiguousarray(arr, dtype=_CODE_DTYPES[code]).tobytes())


def load_tensor(path) -> Tensor:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: not an RMKT file")
    version, code, ndim = raw[4], raw[5], raw[6]
    if version != VERSION:
        raise ValueError(f"{path}: unsupported RMKT version {version}")
    if code not in _CODE_DTYPES:
        raise ValueError(f"{path}: unknown dtype code {code}")
    off = 7
    shape = struct.unpack_from(f"<{ndim}I", raw, off)
    off += 4 * ndim
    dtype = _CODE_DTYPES[code]
    count = int(np.prod(shape)) if ndim else 1
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=off)
    return Tensor(data.reshape(shape).astype(dtype.newbyteorder("=")))


# -- PGM images (P2 ascii / P5 binary), values scaled to [0, 1] ---------------


def save_pgm(path, image: np.ndarray, binary: bool = True) -> None:
    if image.ndim != 2:
        raise ValueError("PGM writer expects a 2-D grayscale array")
    pixels = np.clip(np.round(image * 255.0), 0, 255).astype(np.uint8)
    h, w = pixels.shape
    if binary:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n255\n".encode())
            fh.write(pixels.tobytes())
    else:
        with open(path, "w") as fh:
            fh.write(f"P2\n{w} {h}\n255\n")
            for row in pixels:
                fh.write(" ".join(str(v) for v in row) + "\n")


def load_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    tokens: list[bytes] = []
    i = 0
    while i < len(raw) and len(tokens) < 4:
        if raw[i:i + 1].isspace():
            i += 1
        elif raw[i:i + 1] == b"#":
            while i < len(raw) and raw[i] != 0x0A:
                i += 1
        else:
            j = i
            while j < len(raw) and not raw[j:j + 1].isspace():
                j += 1
            tokens.append(raw[i:j])
            i = j
    magic = tokens[0]
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic == b"P5":
        data = np.frombuffer(raw, dtype=np.uint8, count=w * h, offset=i + 1)
    elif magic == b"P2":
        data = np.array(raw[i:].split()[:w * h], dtype=np.uint8)
    else:
        raise ValueError(f"{path}: not a PGM file")
    return data.reshape(h, w).astype(np.float64) / maxval


# -- weight directories -------------------------------------------------------
# A weight set is a directory of RMKT tensors plus "manifest.txt" with one
# line per tensor: "<name>\t<file>\t<dim0xdim1x...>\t<role>".


def save_weight_dir(directory, named: dict[str, tuple[Tensor, str]]) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = []
    for name, (tensor, role) in named.items():
        fname = name.replace("/", "_") + ".rmkt"
        save_tensor(directory / fname, tensor)
        shape = "x".join(str(d) for d in tensor.shape)
        lines.append(f"{name}\t{fname}\t{shape}\t{role}")
    (directory / "manifest.txt").write_text("\n".join(lines) + "\n")


def load_weight_dir(directory) -> dict[str, tuple[Tensor, str]]:
    directory = Path(directory)
    named: dict[str, tuple[Tensor, str]] = {}
    for line in (directory / "manifest.txt").read_text().splitlines():
        if not line.strip():
            continue
        name, fname, shape, role = line.split("\t")
        tensor = load_tensor(directory / fname)
        got = "x".join(str(d) for d in tensor.shape)
        if got != shape:
            raise ValueError(f"{name}: manifest says {shape}, file has {got}")
        named[name] = (tensor, role)
    return named
