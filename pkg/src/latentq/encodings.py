"""Handcrafted tour-to-bits encodings sharing one interface with the learned one.

Three baselines operate on the lexicographic rank of a canonical tour's
suffix, so the code space has exactly (L-1)! valid points inside 2^B:

* log: plain B-bit binary of the rank,
* gray: reflected binary of the rank, so adjacent ranks differ in one bit,
* random label: a seeded random bijection between tours and B-bit integers.

Every decode is total. Out-of-range ranks wrap modulo (L-1)!; unknown random
labels snap to the nearest assigned code by Hamming distance. The
``raw_feasible`` flag on a decode records whether any such fixup was needed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import bits as bv
from . import tsp


@dataclass(frozen=True)
class DecodeResult:
    """A decoded (always valid, canonical) tour plus how it was obtained.

    ``raw_feasible`` is true iff the raw bit pattern decoded to a valid tour
    before any post-processing; feasibility statistics are computed from this
    flag, never from the repaired output.
    """

    tour: tsp.Tour
    raw_feasible: bool
    repaired: bool

    def __post_init__(self):
        if self.raw_feasible and self.repaired:
            raise ValueError("a raw-feasible decode cannot also be repaired")


class EncodingScheme:
    """Common surface for all tour encoders: fixed width, total decode."""

    name: str = "base"
    width: int
    n_cities: int

    def encode(self, tour: Sequence[int]) -> np.ndarray:
        raise NotImplementedError

    def decode(self, z) -> DecodeResult:
        raise NotImplementedError

    def encode_batch(self, tours: Sequence[Sequence[int]]) -> np.ndarray:
        return np.stack([self.encode(t) for t in tours])

    def decode_batch(self, codes: np.ndarray) -> list[DecodeResult]:
        return [self.decode(z) for z in codes]


def lehmer_rank(tour: Sequence[int]) -> int:
    """Lexicographic rank of the suffix among permutations of {2..L}.

    The leading city is pinned, so ranks run over [0, (L-1)! - 1].
    """
    tour = tuple(tour)
    if not tsp.is_permutation(tour, len(tour)):
        raise ValueError(f"not a permutation: {tour}")
    if tour[0] != 1:
        raise ValueError(f"tour must be canonical (start with city 1): {tour}")
    suffix = tour[1:]
    rank = 0
    for i, c in enumerate(suffix):
        smaller_after = sum(1 for d in suffix[i + 1:] if d < c)
        rank += smaller_after * math.factorial(len(suffix) - 1 - i)
    return rank


def lehmer_unrank(rank: int, n_cities: int) -> tsp.Tour:
    """Inverse of :func:`lehmer_rank`."""
    n_codes = math.factorial(n_cities - 1)
    if not 0 <= rank < n_codes:
        raise ValueError(f"rank {rank} outside [0, {n_codes})")
    pool = list(range(2, n_cities + 1))
    suffix = []
    r = rank
    for i in range(n_cities - 1):
        f = math.factorial(n_cities - 2 - i)
        digit, r = divmod(r, f)
        suffix.append(pool.pop(digit))
    return (1,) + tuple(suffix)


def code_width(n_cities: int) -> int:
    """Minimum number of bits representing all (L-1)! feasible tours."""
    return max(1, (math.factorial(n_cities - 1) - 1).bit_length())


def gray_from_int(value: int) -> int:
    return value ^ (value >> 1)


def int_from_gray(code: int) -> int:
    out = 0
    while code:
        out ^= code
        code >>= 1
    return out


class _RankEncoding(EncodingScheme):
    """Shared machinery for the rank-based (log / gray) encodings."""

    def __init__(self, n_cities: int):
        self.n_cities = n_cities
        self.n_codes = math.factorial(n_cities - 1)
        self.width = code_width(n_cities)

    def _rank_to_int(self, rank: int) -> int:
        raise NotImplementedError

    def _int_to_rank(self, value: int) -> int:
        raise NotImplementedError

    def encode(self, tour):
        return bv.int_to_bits(self._rank_to_int(lehmer_rank(tour)), self.width)

    def decode(self, z) -> DecodeResult:
        z = bv.as_bits(z, width=self.width)
        rank = self._int_to_rank(bv.bits_to_int(z))
        feasible = rank < self.n_codes
        tour = lehmer_unrank(rank % self.n_codes, self.n_cities)
        return DecodeResult(tour=tour, raw_feasible=feasible, repaired=not feasible)


class LogEncoding(_RankEncoding):
    """Plain binary of the lexicographic rank."""

    name = "log"

    def _rank_to_int(self, rank):
        return rank

    def _int_to_rank(self, value):
        return value


class GrayEncoding(_RankEncoding):
    """Reflected-binary rank: consecutive ranks differ in exactly one bit."""

    name = "gray"

    def _rank_to_int(self, rank):
        return gray_from_int(rank)

    def _int_to_rank(self, value):
        return int_from_gray(value)


TABLE_FORMAT_VERSION = 1


class RandomLabelTable:
    """Seeded bijection between all canonical tours and distinct B-bit labels."""

    def __init__(self, n_cities: int, seed: int, labels: Optional[np.ndarray] = None):
        self.n_cities = n_cities
        self.seed = seed
        self.width = code_width(n_cities)
        tours = list(tsp.enumerate_tours(n_cities))
        if labels is None:
            rng = np.random.default_rng(seed)
            labels = rng.permutation(1 << self.width)[: len(tours)]
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape[0] != len(tours) or len(set(labels.tolist())) != len(tours):
            raise ValueError("labels must be distinct and cover every tour")
        self.labels = labels
        self.tour_to_label = {t: int(l) for t, l in zip(tours, labels)}
        self.label_to_tour = {int(l): t for t, l in zip(tours, labels)}
        # bit matrix of the assigned pool, for vectorized nearest-code lookups
        shifts = np.arange(self.width - 1, -1, -1)
        self.pool_bits = ((labels[:, None] >> shifts[None, :]) & 1).astype(np.uint8)

    def save(self, path) -> None:
        payload = {
            "format_version": TABLE_FORMAT_VERSION,
            "seed": self.seed,
            "width": self.width,
            "n_cities": self.n_cities,
            "entries": [[list(t), int(l)] for t, l in self.tour_to_label.items()],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "RandomLabelTable":
        with open(path) as fh:
            payload = json.load(fh)
        if payload.get("format_version") != TABLE_FORMAT_VERSION:
            raise ValueError(f"unsupported table format: {payload.get('format_version')!r}")
        entries = payload["entries"]
        by_tour = {tuple(t): l for t, l in entries}
        tours = list(tsp.enumerate_tours(payload["n_cities"]))
        labels = np.array([by_tour[t] for t in tours], dtype=np.int64)
        return cls(payload["n_cities"], payload["seed"], labels=labels)


class RandomLabelEncoding(EncodingScheme):
    """Structure-destroying baseline: tours get arbitrary random bit labels."""

    name = "random"

    def __init__(self, table: RandomLabelTable, tie_rng: Optional[np.random.Generator] = None):
        self.table = table
        self.n_cities = table.n_cities
        self.width = table.width
        self.tie_rng = tie_rng if tie_rng is not None else np.random.default_rng(table.seed)

    def encode(self, tour):
        return bv.int_to_bits(self.table.tour_to_label[tsp.canonicalize(tour)], self.width)

    def decode(self, z, rng: Optional[np.random.Generator] = None) -> DecodeResult:
        z = bv.as_bits(z, width=self.width)
        label = bv.bits_to_int(z)
        hit = self.table.label_to_tour.get(label)
        if hit is not None:
            return DecodeResult(tour=hit, raw_feasible=True, repaired=False)
        dists = (self.table.pool_bits != z[None, :]).sum(axis=1)
        nearest = np.flatnonzero(dists == dists.min())
        if len(nearest) > 1:
            rng = rng if rng is not None else self.tie_rng
            choice = int(nearest[rng.integers(len(nearest))])
        else:
            choice = int(nearest[0])
        tour = self.table.label_to_tour[int(self.table.labels[choice])]
        return DecodeResult(tour=tour, raw_feasible=False, repaired=True)


def build_random_label_table(n_cities: int, seed: int) -> RandomLabelTable:
    return RandomLabelTable(n_cities, seed)
