"""Fixed-width bit vectors stored as uint8 arrays, most significant bit first."""

from __future__ import annotations

import numpy as np


def as_bits(values, width: int | None = None) -> np.ndarray:
    bits = np.asarray(values, dtype=np.uint8)
    if bits.ndim != 1:
        raise ValueError("bit vector must be one-dimensional")
    if not np.isin(bits, (0, 1)).all():
        raise ValueError("bit vector entries must be 0 or 1")
    if width is not None and bits.shape[0] != width:
        raise ValueError(f"expected width {width}, got {bits.shape[0]}")
    return bits


def int_to_bits(value: int, width: int) -> np.ndarray:
    if value < 0 or value >= (1 << width):
        raise ValueError(f"value {value} does not fit in {width} bits")
    shifts = np.arange(width - 1, -1, -1)
    return ((value >> shifts) & 1).astype(np.uint8)


def bits_to_int(bits) -> int:
    bits = as_bits(bits)
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def bits_to_str(bits) -> str:
    return "".join(str(int(b)) for b in as_bits(bits))


def str_to_bits(text: str) -> np.ndarray:
    if not text or any(ch not in "01" for ch in text):
        raise ValueError(f"not a bit string: {text!r}")
    return np.frombuffer(text.encode(), dtype=np.uint8) - ord("0")


def hamming(a, b) -> int:
    """Number of differing positions between two equal-width bit vectors."""
    a = as_bits(a)
    b = as_bits(b, width=a.shape[0])
    return int((a != b).sum())


def flip(bits, positions) -> np.ndarray:
    out = as_bits(bits).copy()
    out[np.asarray(positions, dtype=np.intp)] ^= 1
    return out


def random_bits(rng: np.random.Generator, width: int) -> np.ndarray:
    return rng.integers(0, 2, size=width, dtype=np.uint8)


def all_bitvectors(width: int) -> np.ndarray:
    """All 2^width vectors as a (2^width, width) array, ascending integer order."""
    if width > 24:
        raise ValueError(f"refusing to materialize 2^{width} bit vectors")
    values = np.arange(1 << width, dtype=np.int64)
    shifts = np.arange(width - 1, -1, -1)
    return ((values[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
