"""Binary and text formats: KSR k-space volumes, MSK1 masks, PGM previews, CSV metrics.

All binary fields are little-endian.

KSR1 (multi-coil complex arrays, also used for sensitivity maps)::

    offset  size  field
    0       4     magic  b"KSR1"
    4       4     n_c    uint32
    8       4     n_x    uint32
    12      4     n_y    uint32
    16      1     dtype  0 = complex64 (2 x float32), 1 = complex128 (2 x float64)
    17      ...   payload, coil-major, row-major, interleaved (re, im)

MSK1 (sampling masks)::

    0       4     magic        b"MSK1"
    4       4     n_x          uint32
    8       4     n_y          uint32
    12      1     scheme       uint8 (Scheme value)
    13      8     accel        float64, target acceleration
    21      8     seed         uint64
    29      8     acs_radius   float64, 0 for line-based ACS
    37      4     acs_start    uint32, first ACS line (line-based ACS)
    41      4     acs_count    uint32, number of ACS lines (0 for disk ACS)
    45      1     flags        bit 0: ACS plane present, bit 1: ACS degenerate
    46      n     mask plane   one byte per cell, 0 or 1, row-major
    46+n    n     ACS plane    present when flags bit 0 is set
"""

from __future__ import annotations

import math
import os
import struct
from typing import Iterable

import numpy as np

from .core import KspaceBenchError, SamplingMask, Scheme, SensitivityMaps, as_kspace

__all__ = [
    "FormatError",
    "read_ksr",
    "read_mask",
    "read_maps",
    "write_ksr",
    "write_mask",
    "write_maps",
    "write_metrics_csv",
    "write_pgm",
]

KSR_MAGIC = b"KSR1"
MSK_MAGIC = b"MSK1"
_KSR_HEADER = struct.Struct("<4sIIIB")
_MSK_HEADER = struct.Struct("<4sIIBdQdIIB")
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
CSV_HEADER = "case,scheme,R,ssim,psnr,nmse,reported_ssim,reported_nmse"
FAIL_TOKEN = "fail"


class FormatError(KspaceBenchError):
    code = 3


class TruncatedFileError(FormatError):
    pass


def _read_exact(fh, size: int, offset: int, what: str) -> bytes:
    data = fh.read(size)
    if len(data) != size:
        raise TruncatedFileError(
            f"{what} truncated at byte offset {offset}: expected {size} bytes, got {len(data)}"
        )
    return data


def _expect_eof(fh, offset: int) -> None:
    extra = fh.read(1)
    if extra:
        raise FormatError(f"unexpected trailing data at byte offset {offset}")


# --------------------------------------------------------------------- KSR


def write_ksr(path, data, dtype: int = 1) -> None:
    if dtype not in _DTYPES:
        raise FormatError(f"unknown KSR dtype code {dtype}")
    ksp = as_kspace(data)
    n_c, n_x, n_y = ksp.shape
    payload = np.empty(ksp.shape + (2,), dtype=_DTYPES[dtype])
    payload[..., 0] = ksp.real
    payload[..., 1] = ksp.imag
    with open(path, "wb") as fh:
        fh.write(_KSR_HEADER.pack(KSR_MAGIC, n_c, n_x, n_y, dtype))
        fh.write(payload.tobytes(order="C"))


def read_ksr(path, expect_dtype: int | None = None) -> np.ndarray:
    """Read a KSR1 file as complex128 ``(n_c, n_x, n_y)``.

    ``expect_dtype`` rejects files stored at another precision.
    """
    with open(path, "rb") as fh:
        head = _read_exact(fh, _KSR_HEADER.size, 0, "KSR header")
        magic, n_c, n_x, n_y, dtype = _KSR_HEADER.unpack(head)
        if magic != KSR_MAGIC:
            raise FormatError(f"bad magic {magic!r} at byte offset 0, expected {KSR_MAGIC!r}")
        if min(n_c, n_x, n_y) < 1:
            raise FormatError(f"invalid dimensions n_c={n_c}, n_x={n_x}, n_y={n_y} at byte offset 4")
        if dtype not in _DTYPES:
            raise FormatError(f"unknown dtype code {dtype} at byte offset 16")
        if expect_dtype is not None and dtype != expect_dtype:
            raise FormatError(f"dtype code {dtype} at byte offset 16, expected {expect_dtype}")
        item = _DTYPES[dtype]
        size = n_c * n_x * n_y * 2 * item.itemsize
        raw = _read_exact(fh, size, _KSR_HEADER.size, "KSR payload")
        _expect_eof(fh, _KSR_HEADER.size + size)
    arr = np.frombuffer(raw, dtype=item).reshape(n_c, n_x, n_y, 2).astype(np.float64)
    return arr[..., 0] + 1j * arr[..., 1]


def write_maps(path, maps: SensitivityMaps) -> None:
    write_ksr(path, maps.data, dtype=1)


def read_maps(path) -> SensitivityMaps:
    data = read_ksr(path)
    power = np.sum(np.abs(data) ** 2, axis=0)
    support = power > 0
    normalized = bool(support.any() and np.allclose(power[support], 1.0, atol=1e-6))
    return SensitivityMaps(data, normalized=normalized)


# --------------------------------------------------------------------- MSK1


def _mask_plane(bits: np.ndarray) -> bytes:
    return np.ascontiguousarray(bits, dtype=np.uint8).tobytes()


def write_mask(path, mask: SamplingMask) -> None:
    n_x, n_y = mask.bits.shape
    flags = (1 if mask.acs is not None else 0) | (2 if mask.acs is not None and mask.acs.degenerate else 0)
    start, count = mask.acs_line_range
    header = _MSK_HEADER.pack(
        MSK_MAGIC, n_x, n_y, int(mask.scheme), float(mask.accel_target), mask.seed,
        float(mask.acs_radius), int(start), int(count), flags,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(_mask_plane(mask.bits))
        if mask.acs is not None:
            fh.write(_mask_plane(mask.acs.bits))


def _read_plane(fh, n_x: int, n_y: int, offset: int, what: str) -> np.ndarray:
    raw = np.frombuffer(_read_exact(fh, n_x * n_y, offset, what), dtype=np.uint8)
    bad = np.flatnonzero(raw > 1)
    if bad.size:
        raise FormatError(f"{what}: cell value {raw[bad[0]]} at byte offset {offset + int(bad[0])}, expected 0 or 1")
    return raw.reshape(n_x, n_y).astype(bool)


def read_mask(path) -> SamplingMask:
    with open(path, "rb") as fh:
        head = _read_exact(fh, _MSK_HEADER.size, 0, "MSK1 header")
        magic, n_x, n_y, scheme, accel, seed, radius, start, count, flags = _MSK_HEADER.unpack(head)
        if magic != MSK_MAGIC:
            raise FormatError(f"bad magic {magic!r} at byte offset 0, expected {MSK_MAGIC!r}")
        if n_x < 2 or n_y < 2:
            raise FormatError(f"invalid dimensions n_x={n_x}, n_y={n_y} at byte offset 4")
        if scheme not in {s.value for s in Scheme}:
            raise FormatError(f"unknown scheme code {scheme} at byte offset 12")
        if not math.isfinite(accel) or accel < 1.0:
            raise FormatError(f"invalid acceleration {accel} at byte offset 13")
        if flags & ~3:
            raise FormatError(f"unknown flag bits {flags:#x} at byte offset 45")
        offset = _MSK_HEADER.size
        bits = _read_plane(fh, n_x, n_y, offset, "mask plane")
        offset += n_x * n_y
        acs = None
        if flags & 1:
            acs_bits = _read_plane(fh, n_x, n_y, offset, "ACS plane")
            offset += n_x * n_y
            if np.any(acs_bits & ~bits):
                raise FormatError("ACS plane is not contained in the mask plane")
            acs = SamplingMask(
                acs_bits, Scheme(scheme), accel, seed, acs_radius=radius,
                acs_line_range=(start, count), degenerate=bool(flags & 2),
            )
        _expect_eof(fh, offset)
    return SamplingMask(bits, Scheme(scheme), accel, seed, acs=acs, acs_radius=radius, acs_line_range=(start, count))


def write_pgm(path, mask) -> None:
    """Binary PGM (P5) preview: sampled cells 255, others 0; rows are ``n_x``."""
    bits = mask.bits if isinstance(mask, SamplingMask) else np.asarray(mask, dtype=bool)
    n_x, n_y = bits.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{n_y} {n_x}\n255\n".encode("ascii"))
        fh.write((bits.astype(np.uint8) * 255).tobytes())


# --------------------------------------------------------------------- CSV


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def write_metrics_csv(path, records: Iterable) -> None:
    """One row per :class:`~kspacebench.metrics.ReconReport`; failures carry ``fail`` tokens."""
    records = list(records)
    if not records:
        raise ValueError("no records to write")
    lines = [CSV_HEADER]
    for rec in records:
        head = f"{rec.case},{rec.scheme},{_fmt(rec.R)}"
        m = rec.metrics
        if m is None:
            lines.append(head + "," + ",".join([FAIL_TOKEN] * 5))
            continue
        cols = [m.ssim, m.psnr_db, m.nmse, m.reported_ssim, m.reported_nmse]
        lines.append(head + "," + ",".join(_fmt(c) for c in cols))
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def read_metrics_csv(path) -> list[dict]:
    with open(path, encoding="ascii") as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise FormatError(f"unexpected CSV header {header!r}")
        keys = header.split(",")
        return [dict(zip(keys, line.rstrip("\n").split(","))) for line in fh if line.strip()]
