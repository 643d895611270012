"""Binary file formats: CWTN tensors and P5 (binary) PGM images.

CWTN layout: magic "CWTN", u16 version (=1), u8 element kind (0 = float64,
1 = complex128 interleaved re/im), u8 rank, rank x u32 dims, then the
row-major little-endian float64 payload.  Round trips are bit-exact.

PGM reads map sample values onto [0, 1] by dividing by maxval; writes invert
that exactly for values on the representable grid.  16-bit samples are
big-endian per the Netpbm convention.
"""

import re
import struct

import numpy as np

from .errors import FileFormatError

__all__ = [
    "read_tensor",
    "write_tensor",
    "read_pgm",
    "write_pgm",
    "read_image",
    "write_image",
]

_MAGIC = b"CWTN"
_VERSION = 1
_KIND_REAL = 0
_KIND_COMPLEX = 1


def write_tensor(path, array) -> None:
    array = np.asarray(array)
    if np.iscomplexobj(array):
        kind = _KIND_COMPLEX
        payload = np.ascontiguousarray(array, dtype="<c16").tobytes()
    else:
        kind = _KIND_REAL
        payload = np.ascontiguousarray(array, dtype="<f8").tobytes()
    header = _MAGIC + struct.pack("<HBB", _VERSION, kind, array.ndim)
    header += struct.pack(f"<{array.ndim}I", *array.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MAGIC:
        raise FileFormatError(f"{path}: bad magic {blob[:4]!r}")
    version, kind, rank = struct.unpack_from("<HBB", blob, 4)
    if version != _VERSION:
        raise FileFormatError(f"{path}: unsupported version {version}")
    if kind not in (_KIND_REAL, _KIND_COMPLEX):
        raise FileFormatError(f"{path}: unknown element kind {kind}")
    dims = struct.unpack_from(f"<{rank}I", blob, 8)
    offset = 8 + 4 * rank
    count = int(np.prod(dims)) if rank else 1
    itemsize = 16 if kind == _KIND_COMPLEX else 8
    if len(blob) - offset != count * itemsize:
        raise FileFormatError(
            f"{path}: payload is {len(blob) - offset} bytes, expected {count * itemsize}"
        )
    dtype = "<c16" if kind == _KIND_COMPLEX else "<f8"
    return np.frombuffer(blob, dtype=dtype, count=count, offset=offset).reshape(dims).copy()


def _parse_pgm_header(blob):
    # P5, then width, height, maxval as whitespace-separated tokens with
    # optional '#' comments; a single whitespace byte ends the header.
    pos = 0
    tokens = []
    if blob[:2] != b"P5":
        raise FileFormatError(f"unsupported magic {blob[:2]!r} (want P5)")
    pos = 2
    while len(tokens) < 3:
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if pos < len(blob) and blob[pos : pos + 1] == b"#":
            while pos < len(blob) and blob[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FileFormatError("truncated PGM header")
        tokens.append(blob[start:pos])
    pos += 1  # single whitespace after maxval
    if any(not re.fullmatch(rb"\d+", t) for t in tokens):
        raise FileFormatError(f"malformed PGM header tokens {tokens}")
    width, height, maxval = (int(t) for t in tokens)
    if maxval <= 0 or maxval >= 65536:
        raise FileFormatError(f"unsupported maxval {maxval}")
    return width, height, maxval, pos


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM into a float64 matrix scaled to [0, 1]."""
    with open(path, "rb") as fh:
        blob = fh.read()
    width, height, maxval, offset = _parse_pgm_header(blob)
    dtype = ">u2" if maxval > 255 else "u1"
    count = width * height
    try:
        data = np.frombuffer(blob, dtype=dtype, count=count, offset=offset)
    except ValueError as exc:
        raise FileFormatError(f"{path}: truncated pixel data") from exc
    return data.reshape(height, width).astype(np.float64) / maxval


def write_pgm(path, matrix, maxval: int = 255) -> None:
    """Write a [0, 1] float matrix as binary PGM with the given maxval."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise FileFormatError(f"expected a 2-d matrix, got shape {matrix.shape}")
    if matrix.min() < 0.0 or matrix.max() > 1.0:
        raise ValueError("PGM values must lie in [0, 1]")
    if not 0 < maxval < 65536:
        raise ValueError(f"maxval must lie in [1, 65535], got {maxval}")
    samples = np.rint(matrix * maxval).astype(">u2" if maxval > 255 else "u1")
    header = f"P5\n{matrix.shape[1]} {matrix.shape[0]}\n{maxval}\n".encode()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(samples.tobytes())


def read_image(path) -> np.ndarray:
    """Read a 2-d real matrix from either a PGM or a CWTN file."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == _MAGIC:
        arr = read_tensor(path)
        if arr.ndim != 2 or np.iscomplexobj(arr):
            raise FileFormatError(f"{path}: expected a rank-2 real tensor")
        return arr
    return read_pgm(path)


def write_image(path, matrix, maxval: int = 255) -> None:
    """Write a [0, 1] matrix as binary PGM (the inverse of `read_image` for
    values on the maxval grid)."""
    write_pgm(path, matrix, maxval=maxval)
