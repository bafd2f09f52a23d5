"""Finite hypercubic lattices, the Manhattan metric, regions, and the
power-law coupling envelope.

Geometry conventions used throughout the package:
  - open boundaries, simple hypercubic unit cell,
  - sites indexed row-major over coordinates (index 0 is the origin corner),
  - distances are shortest-path lengths on the nearest-neighbor graph,
    which for a hypercubic lattice is the Manhattan metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

__all__ = [
    "LatticeGraph",
    "Region",
    "PowerLawEnvelope",
    "manhattan_distance",
    "ball",
    "tail_sum",
    "convolution_sum",
]


class LatticeGraph:
    """A d-dimensional hypercubic lattice with open boundaries.

    Sites are indexed 0..n_sites-1, row-major over coordinates, so index
    and coordinate round-trip exactly.
    """

    def __init__(self, extents):
        extents = tuple(int(e) for e in extents)
        if not extents or any(e < 1 for e in extents):
            raise ValueError(f"extents must be positive, got {extents}")
        self.extents = extents
        self.dimension = len(extents)
        self.n_sites = reduce(lambda a, b: a * b, extents, 1)
        # coordinate table, shape (n_sites, d)
        self._coords = np.stack(
            np.unravel_index(np.arange(self.n_sites), extents), axis=1
        ).astype(np.int64)

    @classmethod
    def chain(cls, n: int) -> "LatticeGraph":
        return cls((n,))

    def coordinate(self, index: int):
        self._check_site(index)
        return tuple(int(c) for c in self._coords[index])

    def index(self, coordinate) -> int:
        coordinate = tuple(int(c) for c in coordinate)
        if len(coordinate) != self.dimension:
            raise ValueError(f"coordinate {coordinate} has wrong dimension")
        if any(c < 0 or c >= e for c, e in zip(coordinate, self.extents)):
            raise ValueError(f"coordinate {coordinate} outside extents {self.extents}")
        return int(np.ravel_multi_index(coordinate, self.extents))

    def coordinates(self) -> np.ndarray:
        """All site coordinates, shape (n_sites, d). Read-only view."""
        v = self._coords.view()
        v.flags.writeable = False
        return v

    def neighbors(self, index: int):
        """Nearest neighbors of a site (at most 2d of them)."""
        c = np.asarray(self.coordinate(index))
        out = []
        for axis in range(self.dimension):
            for step in (-1, 1):
                nc = c.copy()
                nc[axis] += step
                if 0 <= nc[axis] < self.extents[axis]:
                    out.append(self.index(tuple(nc)))
        return out

    def distances_from(self, index: int) -> np.ndarray:
        """Manhattan distance from one site to every site."""
        self._check_site(index)
        return np.abs(self._coords - self._coords[index]).sum(axis=1)

    def diameter(self) -> int:
        return sum(e - 1 for e in self.extents)

    def _check_site(self, index: int) -> None:
        if not (0 <= int(index) < self.n_sites):
            raise ValueError(f"site index {index} outside lattice of {self.n_sites} sites")

    def __repr__(self):
        return f"LatticeGraph(extents={self.extents})"


def manhattan_distance(lattice: LatticeGraph, a: int, b: int) -> int:
    """Shortest-path length between two sites on the nearest-neighbor graph."""
    lattice._check_site(a)
    lattice._check_site(b)
    return int(np.abs(lattice._coords[a] - lattice._coords[b]).sum())


@dataclass(frozen=True)
class Region:
    """A set of lattice sites, stored sorted and deduplicated."""

    sites: tuple = field(default=())

    def __init__(self, sites):
        object.__setattr__(self, "sites", tuple(sorted(set(int(s) for s in sites))))

    def __len__(self):
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    def __contains__(self, site):
        return int(site) in set(self.sites)

    def issubset(self, other: "Region") -> bool:
        return set(self.sites) <= set(other.sites)

    def validate(self, lattice: LatticeGraph) -> None:
        for s in self.sites:
            lattice._check_site(s)


def ball(lattice: LatticeGraph, center: int, radius: int) -> Region:
    """All sites within Manhattan distance `radius` of `center`, clipped to
    the lattice bounds."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    d = lattice.distances_from(center)
    return Region(np.nonzero(d <= radius)[0])


@dataclass(frozen=True)
class PowerLawEnvelope:
    """Coupling envelope h / D(i,j)^alpha for pairwise interactions."""

    alpha: float
    h: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.h <= 0:
            raise ValueError("h must be > 0")

    def bound(self, lattice: LatticeGraph, i: int, j: int) -> float:
        if i == j:
            raise ValueError("envelope is defined for pairs of distinct sites")
        return self.h / manhattan_distance(lattice, i, j) ** self.alpha


def tail_sum(lattice: LatticeGraph, i: int, r: int, alpha: float) -> float:
    """Exact sum of D(i,j)^(-alpha) over all sites j farther than r from i.

    For alpha > dimension this is bounded by C1 / r^(alpha-d) with a finite
    C1; the test suite measures C1 empirically rather than assuming it.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    d = lattice.distances_from(i)
    far = d > r
    if not far.any():
        return 0.0
    return float(np.sum(d[far].astype(float) ** (-alpha)))


def convolution_sum(lattice: LatticeGraph, i: int, j: int, alpha: float) -> float:
    """Exact sum of D(i,k)^(-alpha) D(j,k)^(-alpha) over all k distinct from
    both i and j.  Bounded by C2 / D(i,j)^alpha for alpha > d."""
    if i == j:
        raise ValueError("convolution_sum requires i != j")
    di = lattice.distances_from(i).astype(float)
    dj = lattice.distances_from(j).astype(float)
    mask = np.ones(lattice.n_sites, dtype=bool)
    mask[i] = mask[j] = False
    if not mask.any():
        return 0.0
    return float(np.sum(di[mask] ** (-alpha) * dj[mask] ** (-alpha)))


def ball_volume(dimension: int, radius: int) -> int:
    """Number of sites in an interior Manhattan ball of given radius."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    # sum over k of (number of lattice points at L1 distance exactly k)
    total = 0
    for k in range(radius + 1):
        total += _shell_count(dimension, k)
    return total


def _shell_count(dimension: int, k: int) -> int:
    if k == 0:
        return 1
    total = 0
    for m in range(1, min(dimension, k) + 1):
        total += (
            2**m
            * math.comb(dimension, m)
            * math.comb(k - 1, m - 1)
        )
    return total
