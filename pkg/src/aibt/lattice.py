"""Binary-tree index space for detail coefficients, with local neighbourhoods.

Sites are pairs ``(j, k)``: resolution level ``j`` (0 coarsest) holding
``2**j`` positions, periodic in ``k`` within each level.  Each site has a
nine-site neighbourhood reaching one level up, one level down, and sideways,
truncated at the top and bottom levels and deduplicated on narrow levels.
Configurations are multisets of marked points living on the sites; coverage
of a configuration is the union of neighbourhoods of its occupied sites.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Site",
    "Lattice",
    "Configuration",
    "neighbourhood",
    "coverage_measure",
    "uncovered_measure",
]

Site = tuple[int, int]


def neighbourhood(x: Site, n_levels: int) -> frozenset[Site]:
    """The neighbourhood ``B(x)``: ``x`` plus its clustered relatives.

    Candidates are ``x`` itself; the parent; the parent-level site next
    nearest to ``x``; the two siblings; the two children; and the outer
    neighbours of the two children.  Positions wrap periodically within a
    level, candidates beyond the top or bottom level are dropped, and
    duplicates arising on narrow levels are merged, so the result has at
    most nine sites (exactly nine away from the boundary rows).
    """
    j, k = x
    if not (0 <= j < n_levels and 0 <= k < 2**j):
        raise ValueError(f"site {x!r} outside a {n_levels}-level lattice")
    sites = {x}
    width = 2**j
    sites.add((j, (k - 1) % width))
    sites.add((j, (k + 1) % width))
    if j > 0:
        up = 2 ** (j - 1)
        p = k // 2
        sites.add((j - 1, p))
        step = -1 if k % 2 == 0 else 1
        sites.add((j - 1, (p + step) % up))
    if j + 1 < n_levels:
        down = 2 ** (j + 1)
        sites.add((j + 1, 2 * k))
        sites.add((j + 1, 2 * k + 1))
        sites.add((j + 1, (2 * k - 1) % down))
        sites.add((j + 1, (2 * k + 2) % down))
    return frozenset(sites)


class Lattice:
    """Precomputed site indexing and adjacency for a fixed number of levels.

    Flat site order is level-major: site ``(j, k)`` sits at index
    ``2**j - 1 + k``, so all ``2**n_levels - 1`` sites pack into one vector
    aligned with flattened detail coefficients.
    """

    def __init__(self, n_levels: int):
        if n_levels < 1:
            raise ValueError("n_levels must be at least 1")
        self.n_levels = int(n_levels)
        self.n_sites = 2**self.n_levels - 1
        nbrs = []
        for s in range(self.n_sites):
            b = neighbourhood(self.site_of(s), self.n_levels)
            nbrs.append(tuple(sorted(self.site_index(*v) for v in b)))
        self.neighbours: tuple[tuple[int, ...], ...] = tuple(nbrs)
        self.neighbourhood_sizes = np.array([len(t) for t in nbrs])
        self.max_neighbourhood = int(self.neighbourhood_sizes.max())
        covers: list[list[int]] = [[] for _ in range(self.n_sites)]
        for u, t in enumerate(nbrs):
            for v in t:
                covers[v].append(u)
        # covered_by[v]: sites whose neighbourhood contains v
        self.covered_by: tuple[tuple[int, ...], ...] = tuple(tuple(c) for c in covers)

    def site_index(self, j: int, k: int) -> int:
        if not (0 <= j < self.n_levels and 0 <= k < 2**j):
            raise ValueError(f"site ({j}, {k}) outside a {self.n_levels}-level lattice")
        return 2**j - 1 + k

    def site_of(self, index: int) -> Site:
        if not 0 <= index < self.n_sites:
            raise ValueError(f"flat index {index} out of range")
        j = (index + 1).bit_length() - 1
        return j, index - (2**j - 1)

    def __repr__(self) -> str:
        return f"Lattice(n_levels={self.n_levels})"


@dataclass
class Configuration:
    """A finite point configuration: identified points placed on lattice sites.

    ``counts[s]`` is the multiplicity at flat site ``s`` and always agrees
    with the point registry; several points may share a site.
    """

    lattice: Lattice
    counts: np.ndarray
    points: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (self.lattice.n_sites,):
            raise ValueError("counts must have one entry per lattice site")

    @classmethod
    def empty(cls, lattice: Lattice) -> "Configuration":
        return cls(lattice, np.zeros(lattice.n_sites, dtype=np.int64))

    @classmethod
    def from_counts(cls, lattice: Lattice, counts) -> "Configuration":
        """Build a configuration with synthetic point ids from per-site counts."""
        if isinstance(counts, dict):
            arr = np.zeros(lattice.n_sites, dtype=np.int64)
            for (j, k), c in counts.items():
                arr[lattice.site_index(j, k)] = c
            counts = arr
        counts = np.asarray(counts, dtype=np.int64)
        if counts.shape != (lattice.n_sites,) or (counts < 0).any():
            raise ValueError("counts must be nonnegative with one entry per site")
        points: dict[int, int] = {}
        pid = 0
        for s in np.flatnonzero(counts):
            for _ in range(counts[s]):
                points[pid] = int(s)
                pid += 1
        return cls(lattice, counts, points)

    @property
    def n_points(self) -> int:
        return len(self.points)

    def occupied(self) -> np.ndarray:
        """Boolean occupancy per flat site (multiplicity ignored)."""
        return self.counts > 0

    def validate(self) -> None:
        """Check that counts and the point registry agree."""
        ref = np.zeros(self.lattice.n_sites, dtype=np.int64)
        for s in self.points.values():
            ref[s] += 1
        if not np.array_equal(ref, self.counts):
            raise AssertionError("counts disagree with the point registry")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return (
            self.lattice.n_levels == other.lattice.n_levels
            and self.points == other.points
            and np.array_equal(self.counts, other.counts)
        )


def coverage_measure(xi: Configuration, forced_occupied: np.ndarray | None = None) -> int:
    """Number of sites covered by the neighbourhoods of occupied sites.

    ``forced_occupied`` optionally marks sites treated as occupied whatever
    their count (used when part of the lattice is handled analytically).
    """
    lat = xi.lattice
    occ = xi.occupied()
    if forced_occupied is not None:
        occ = occ | np.asarray(forced_occupied, dtype=bool)
    covered: set[int] = set()
    for s in np.flatnonzero(occ):
        covered.update(lat.neighbours[s])
    return len(covered)


def uncovered_measure(u: Site, xi: Configuration, forced_occupied: np.ndarray | None = None) -> int:
    """Number of sites in ``B(u)`` not covered by any occupied site of ``xi``.

    This is the coverage a new point at ``u`` would add, which is what the
    clustering term of the model prices.
    """
    lat = xi.lattice
    occ = xi.occupied()
    if forced_occupied is not None:
        occ = occ | np.asarray(forced_occupied, dtype=bool)
    n_unc = 0
    for v in lat.neighbours[lat.site_index(*u)]:
        if not any(occ[w] for w in lat.covered_by[v]):
            n_unc += 1
    return n_unc
