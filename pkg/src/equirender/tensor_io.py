"""Binary tensor (TSR) and netpbm (PPM/PGM) codecs.

Tensors are plain numpy arrays. The TSR layout is::

    offset  size  field
    0       4     magic b"TSR1"
    4       1     dtype code (0 = float32, 1 = float64)
    5       1     ndim
    6       10    zero padding
    16      8*nd  dims, little-endian uint64
    ...           values, little-endian, row-major
"""

from __future__ import annotations

import os
import struct

import numpy as np

TSR_MAGIC = b"TSR1"
TSR_PRELUDE = 16

_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}


class TensorFormatError(ValueError):
    """Base class for malformed TSR files."""


class BadMagicError(TensorFormatError):
    pass


class BadDtypeError(TensorFormatError):
    pass


class TruncatedError(TensorFormatError):
    pass


class TrailingDataError(TensorFormatError):
    pass


class NonFiniteError(TensorFormatError):
    pass


class ImageFormatError(ValueError):
    """Malformed or unsupported PPM/PGM file."""


def tsr_encode(t: np.ndarray) -> bytes:
    t = np.asarray(t)
    if t.dtype not in _CODES:
        raise TypeError(f"TSR stores float32/float64 only, got {t.dtype}")
    if t.ndim > 255:
        raise ValueError("too many dimensions for TSR")
    if any(d < 1 for d in t.shape):
        raise ValueError(f"TSR dims must be positive, got {t.shape}")
    head = TSR_MAGIC + bytes([_CODES[t.dtype], t.ndim]) + bytes(10)
    dims = struct.pack(f"<{t.ndim}Q", *t.shape)
    data = np.ascontiguousarray(t, dtype=_DTYPES[_CODES[t.dtype]]).tobytes()
    return head + dims + data


def tsr_decode(buf: bytes) -> np.ndarray:
    if len(buf) < TSR_PRELUDE:
        raise TruncatedError(f"TSR header truncated ({len(buf)} bytes)")
    if buf[:4] != TSR_MAGIC:
        raise BadMagicError(f"bad TSR magic {buf[:4]!r}")
    code, ndim = buf[4], buf[5]
    if code not in _DTYPES:
        raise BadDtypeError(f"unknown TSR dtype code {code}")
    dims_end = TSR_PRELUDE + 8 * ndim
    if len(buf) < dims_end:
        raise TruncatedError("TSR dimension block truncated")
    shape = struct.unpack(f"<{ndim}Q", buf[TSR_PRELUDE:dims_end])
    if any(d == 0 for d in shape):
        raise TensorFormatError(f"zero-sized dimension in {shape}")
    dtype = _DTYPES[code]
    count = int(np.prod(shape, dtype=np.uint64)) if ndim else 1
    need = dims_end + count * dtype.itemsize
    if len(buf) < need:
        raise TruncatedError(f"TSR payload truncated: need {need} bytes, have {len(buf)}")
    if len(buf) > need:
        raise TrailingDataError(f"{len(buf) - need} unexpected bytes after TSR payload")
    t = np.frombuffer(buf, dtype=dtype, count=count, offset=dims_end).reshape(shape)
    if not np.all(np.isfinite(t)):
        raise NonFiniteError("TSR payload contains NaN or Inf")
    return t.astype(dtype.newbyteorder("="), copy=True)


def tsr_write(t: np.ndarray, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(tsr_encode(t))


def tsr_read(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return tsr_decode(fh.read())


def quantize(img: np.ndarray) -> np.ndarray:
    """Map [0, 1] values to bytes, rounding half away from zero."""
    v = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0) * 255.0
    return np.floor(v + 0.5).astype(np.uint8)


def ppm_encode(img: np.ndarray) -> bytes:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[0] not in (1, 3):
        raise ValueError(f"expected 1xHxW or 3xHxW image, got shape {img.shape}")
    c, h, w = img.shape
    magic = b"P6" if c == 3 else b"P5"
    pixels = quantize(img).transpose(1, 2, 0)  # interleaved HxWxC
    return magic + f"\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes()


def _header_tokens(buf: bytes, count: int) -> tuple[list[bytes], int]:
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < count:
        while i < len(buf) and buf[i:i + 1].isspace():
            i += 1
        if i < len(buf) and buf[i:i + 1] == b"#":
            while i < len(buf) and buf[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        start = i
        while i < len(buf) and not buf[i:i + 1].isspace() and buf[i:i + 1] != b"#":
            i += 1
        if start == i:
            raise ImageFormatError("unexpected end of header")
        tokens.append(buf[start:i])
    # exactly one whitespace byte separates maxval from the raster
    if i >= len(buf) or not buf[i:i + 1].isspace():
        raise ImageFormatError("missing whitespace after header")
    return tokens, i + 1


def ppm_decode(buf: bytes) -> np.ndarray:
    tokens, offset = _header_tokens(buf, 4)
    magic = tokens[0]
    if magic not in (b"P5", b"P6"):
        raise ImageFormatError(f"unsupported netpbm magic {magic!r}")
    try:
        w, h, maxval = (int(tok) for tok in tokens[1:])
    except ValueError as exc:
        raise ImageFormatError(f"malformed header: {exc}") from None
    if w < 1 or h < 1:
        raise ImageFormatError(f"bad image size {w}x{h}")
    if maxval != 255:
        raise ImageFormatError(f"only maxval 255 is supported, got {maxval}")
    c = 3 if magic == b"P6" else 1
    n = w * h * c
    raster = buf[offset:offset + n]
    if len(raster) < n:
        raise ImageFormatError(f"short pixel data: need {n} bytes, have {len(raster)}")
    px = np.frombuffer(raster, dtype=np.uint8).reshape(h, w, c)
    return (px.transpose(2, 0, 1).astype(np.float32) / np.float32(255.0))


def ppm_write(img: np.ndarray, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(ppm_encode(img))


def ppm_read(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return ppm_decode(fh.read())
