"""Small Euclidean TSP instances, tours, exhaustive enumeration, and local moves.

Cities are 1-indexed everywhere. A tour is a plain tuple of distinct city
indices; the canonical form is rotated so that city 1 comes first, which
removes the rotational symmetry of a cycle. Reversed tours are kept distinct.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

# (L-1)! tours get materialized in several analyses; 10 keeps that under 370k
ENUMERATION_LIMIT = 10

Tour = tuple

INSTANCE_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TspInstance:
    """Cities on the unit square with a precomputed distance matrix.

    Instances are immutable: ``coords`` is an (L, 2) float array and ``dist``
    the full symmetric Euclidean distance matrix, so repeated tour
    evaluations never recompute square roots.
    """

    n_cities: int
    coords: np.ndarray
    dist: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        if self.n_cities < 3:
            raise ValueError(f"need at least 3 cities, got {self.n_cities}")
        if self.coords.shape != (self.n_cities, 2):
            raise ValueError(f"coords shape {self.coords.shape} does not match L={self.n_cities}")
        if self.dist.shape != (self.n_cities, self.n_cities):
            raise ValueError("distance matrix shape mismatch")


def _distance_matrix(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


def instance_from_coords(coords, seed: Optional[int] = None) -> TspInstance:
    """Build an instance from explicit coordinates (bypasses the RNG)."""
    c = np.asarray(coords, dtype=np.float64)
    if c.ndim != 2 or c.shape[1] != 2:
        raise ValueError("coords must be an (L, 2) array")
    return TspInstance(n_cities=c.shape[0], coords=c, dist=_distance_matrix(c), seed=seed)


def generate_instance(n_cities: int, seed: int) -> TspInstance:
    """Sample ``n_cities`` uniform points on [0,1]^2, deterministic per seed."""
    if n_cities < 3:
        raise ValueError(f"need at least 3 cities, got {n_cities}")
    rng = np.random.default_rng(seed)
    coords = rng.random((n_cities, 2))
    return TspInstance(n_cities=n_cities, coords=coords, dist=_distance_matrix(coords), seed=seed)


def save_instance(inst: TspInstance, path) -> None:
    payload = {
        "format_version": INSTANCE_FORMAT_VERSION,
        "n_cities": inst.n_cities,
        "seed": inst.seed,
        "coords": [[float(x), float(y)] for x, y in inst.coords],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_instance(path) -> TspInstance:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format_version") != INSTANCE_FORMAT_VERSION:
        raise ValueError(f"unsupported instance format: {payload.get('format_version')!r}")
    return instance_from_coords(payload["coords"], seed=payload["seed"])


def _check_tour(inst: TspInstance, tour: Sequence[int]) -> None:
    if len(tour) != inst.n_cities:
        raise ValueError(f"tour length {len(tour)} does not match instance L={inst.n_cities}")


def is_permutation(seq: Sequence[int], n_cities: int) -> bool:
    return len(seq) == n_cities and set(seq) == set(range(1, n_cities + 1))


def tour_length(inst: TspInstance, tour: Sequence[int]) -> float:
    """Closed-cycle length: sum of consecutive distances plus the return edge."""
    _check_tour(inst, tour)
    idx = np.asarray(tour, dtype=np.intp) - 1
    return float(inst.dist[idx, np.roll(idx, -1)].sum())


def tour_lengths(inst: TspInstance, tours: np.ndarray) -> np.ndarray:
    """Vectorized ``tour_length`` for an (N, L) array of 1-indexed tours."""
    tours = np.asarray(tours, dtype=np.intp)
    if tours.ndim != 2 or tours.shape[1] != inst.n_cities:
        raise ValueError("tours must be an (N, L) array matching the instance")
    idx = tours - 1
    return inst.dist[idx, np.roll(idx, -1, axis=1)].sum(axis=1)


def enumerate_tours(n_cities: int) -> Iterator[Tour]:
    """Yield all (L-1)! canonical tours in lexicographic order of the suffix.

    City 1 is pinned to the first position; reversed tours appear as separate
    entries.
    """
    if n_cities > ENUMERATION_LIMIT:
        raise ValueError(f"enumeration limited to L <= {ENUMERATION_LIMIT}, got {n_cities}")
    if n_cities < 3:
        raise ValueError(f"need at least 3 cities, got {n_cities}")
    for suffix in itertools.permutations(range(2, n_cities + 1)):
        yield (1,) + suffix


def n_feasible_tours(n_cities: int) -> int:
    return math.factorial(n_cities - 1)


def all_tours_array(n_cities: int) -> np.ndarray:
    """All canonical tours as an ((L-1)!, L) int array, enumeration order."""
    return np.fromiter(
        itertools.chain.from_iterable(enumerate_tours(n_cities)),
        dtype=np.int64,
    ).reshape(-1, n_cities)


def exact_optimum(inst: TspInstance) -> tuple[Tour, float]:
    """Global optimum by exhaustive enumeration (the f-star oracle)."""
    tours = all_tours_array(inst.n_cities)
    lengths = tour_lengths(inst, tours)
    best = int(np.argmin(lengths))
    return tuple(int(c) for c in tours[best]), float(lengths[best])


def edge_set(tour: Sequence[int]) -> frozenset:
    """Undirected edges of the closed cycle, including the wraparound edge."""
    n = len(tour)
    return frozenset(
        (tour[i], tour[(i + 1) % n]) if tour[i] < tour[(i + 1) % n] else (tour[(i + 1) % n], tour[i])
        for i in range(n)
    )


def edge_distance(a: Sequence[int], b: Sequence[int]) -> float:
    """1 minus the fraction of shared undirected edges; in [0, 1], symmetric."""
    if len(a) != len(b):
        raise ValueError(f"tour lengths differ: {len(a)} vs {len(b)}")
    shared = len(edge_set(a) & edge_set(b))
    return 1.0 - shared / len(a)


def canonicalize(tour: Sequence[int]) -> Tour:
    """Rotate a permutation so city 1 leads; cycle length is unchanged."""
    tour = tuple(int(c) for c in tour)
    if not is_permutation(tour, len(tour)):
        raise ValueError(f"not a permutation of 1..{len(tour)}: {tour}")
    k = tour.index(1)
    return tour[k:] + tour[:k]


def _check_positions(n: int, i: int, j: int) -> None:
    if not (1 <= i < j <= n):
        raise IndexError(f"positions must satisfy 1 <= i < j <= {n}, got ({i}, {j})")


def two_opt(tour: Sequence[int], i: int, j: int) -> Tour:
    """Reverse the subpath between 1-based positions i and j (inclusive)."""
    _check_positions(len(tour), i, j)
    t = list(tour)
    t[i - 1:j] = reversed(t[i - 1:j])
    return canonicalize(t)


def city_swap(tour: Sequence[int], i: int, j: int) -> Tour:
    """Exchange the cities at 1-based positions i and j."""
    _check_positions(len(tour), i, j)
    t = list(tour)
    t[i - 1], t[j - 1] = t[j - 1], t[i - 1]
    return canonicalize(t)
