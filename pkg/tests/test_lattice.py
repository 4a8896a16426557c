"""Neighbourhood geometry and coverage arithmetic against brute-force oracles."""

import numpy as np
import pytest

from aibt.lattice import (
    Configuration,
    Lattice,
    coverage_measure,
    neighbourhood,
    uncovered_measure,
)
from oracles import brute_coverage

RNG = np.random.default_rng(42)


# --- neighbourhood shape -----------------------------------------------------


def test_neighbourhood_frozen_interior_site():
    # deep interior site: self, two siblings, parent pair, children, flanking children
    got = neighbourhood((3, 4), 6)
    assert got == {
        (3, 4), (3, 3), (3, 5),
        (2, 2), (2, 1),
        (4, 8), (4, 9), (4, 7), (4, 10),
    }
    assert len(got) == 9


def test_neighbourhood_frozen_root():
    assert neighbourhood((0, 0), 2) == {(0, 0), (1, 0), (1, 1)}
    assert neighbourhood((0, 0), 1) == {(0, 0)}


def test_neighbourhood_frozen_small_lattice():
    # level 1 of a 3-level lattice: the sibling wraps, both parent slots merge
    assert neighbourhood((1, 0), 3) == {
        (1, 0), (1, 1), (0, 0), (2, 0), (2, 1), (2, 2), (2, 3),
    }
    # finest level has no children
    assert neighbourhood((2, 1), 3) == {(2, 1), (2, 0), (2, 2), (1, 0), (1, 1)}


def test_neighbourhood_next_nearest_parent_parity():
    # even shift steps one parent left, odd shift one parent right
    assert (2, 1) in neighbourhood((3, 4), 6)
    assert (2, 3) in neighbourhood((3, 5), 6)


def test_neighbourhood_rejects_outside_lattice():
    with pytest.raises(ValueError):
        neighbourhood((3, 0), 3)
    with pytest.raises(ValueError):
        neighbourhood((1, 2), 3)
    with pytest.raises(ValueError):
        neighbourhood((-1, 0), 3)


@pytest.mark.parametrize("n_levels", [1, 2, 3, 4, 5])
def test_neighbourhood_symmetric(n_levels):
    lat = Lattice(n_levels)
    sets = [neighbourhood(lat.site_of(s), n_levels) for s in range(lat.n_sites)]
    for u in range(lat.n_sites):
        for v in range(lat.n_sites):
            u_in_v = lat.site_of(u) in sets[v]
            v_in_u = lat.site_of(v) in sets[u]
            assert u_in_v == v_in_u


@pytest.mark.parametrize("n_levels", [1, 2, 3, 4, 5, 6])
def test_neighbourhood_size_bound(n_levels):
    lat = Lattice(n_levels)
    sizes = lat.neighbourhood_sizes
    assert sizes.max() == lat.max_neighbourhood <= 9
    for s in range(lat.n_sites):
        assert sizes[s] == len(neighbourhood(lat.site_of(s), n_levels))


def test_lattice_indexing_round_trip():
    lat = Lattice(4)
    assert lat.n_sites == 15
    for s in range(lat.n_sites):
        assert lat.site_index(*lat.site_of(s)) == s
    assert lat.site_index(0, 0) == 0
    assert lat.site_index(3, 0) == 7


def test_lattice_validation():
    with pytest.raises(ValueError):
        Lattice(0)


# --- coverage ------------------------------------------------------------------


@pytest.mark.parametrize("n_levels", [2, 3, 4])
def test_coverage_matches_bruteforce(n_levels):
    lat = Lattice(n_levels)
    for _ in range(60):
        counts = RNG.poisson(0.6, lat.n_sites)
        xi = Configuration.from_counts(lat, counts)
        occ = set(np.flatnonzero(counts > 0).tolist())
        assert coverage_measure(xi) == brute_coverage(lat, occ)


@pytest.mark.parametrize("n_levels", [2, 3, 4])
def test_uncovered_matches_bruteforce(n_levels):
    lat = Lattice(n_levels)
    for _ in range(40):
        counts = RNG.poisson(0.5, lat.n_sites)
        xi = Configuration.from_counts(lat, counts)
        occ = set(np.flatnonzero(counts > 0).tolist())
        for u in range(lat.n_sites):
            b = neighbourhood(lat.site_of(u), n_levels)
            uncov = sum(
                1
                for v in b
                if not any(
                    lat.site_index(*w) in occ
                    for w in neighbourhood(v, n_levels)
                )
            )
            assert uncovered_measure(lat.site_of(u), xi) == uncov


def test_coverage_monotone_under_insertion():
    lat = Lattice(4)
    counts = np.zeros(lat.n_sites, dtype=int)
    cov_prev = 0
    order = RNG.permutation(lat.n_sites)
    for s in order:
        counts[s] += 1
        cov = coverage_measure(Configuration.from_counts(lat, counts))
        assert cov >= cov_prev
        cov_prev = cov
    assert cov_prev == lat.n_sites  # everything occupied covers everything


def test_forced_occupied_acts_like_occupancy():
    lat = Lattice(3)
    counts = np.zeros(lat.n_sites, dtype=int)
    counts[2] = 3
    xi = Configuration.from_counts(lat, counts)
    forced = np.zeros(lat.n_sites, dtype=bool)
    forced[5] = True
    both = np.array(counts)
    both[5] = 1
    xi_both = Configuration.from_counts(lat, both)
    assert coverage_measure(xi, forced_occupied=forced) == coverage_measure(xi_both)
    for u in range(lat.n_sites):
        site = lat.site_of(u)
        assert uncovered_measure(site, xi, forced_occupied=forced) == uncovered_measure(
            site, xi_both
        )


def test_uncovered_plus_covered_partitions_neighbourhood():
    lat = Lattice(3)
    xi = Configuration.from_counts(lat, RNG.poisson(0.7, lat.n_sites))
    for u in range(lat.n_sites):
        site = lat.site_of(u)
        assert 0 <= uncovered_measure(site, xi) <= len(neighbourhood(site, 3))


# --- configurations --------------------------------------------------------------


def test_configuration_basics():
    lat = Lattice(3)
    empty = Configuration.empty(lat)
    assert empty.n_points == 0
    assert not empty.occupied().any()

    xi = Configuration.from_counts(lat, {(0, 0): 2, (2, 3): 1})
    assert xi.n_points == 3
    assert set(np.flatnonzero(xi.occupied()).tolist()) == {
        lat.site_index(0, 0),
        lat.site_index(2, 3),
    }
    xi.validate()

    same = Configuration.from_counts(lat, xi.counts.copy())
    assert same == xi


def test_configuration_rejects_bad_counts():
    lat = Lattice(2)
    with pytest.raises(ValueError):
        Configuration.from_counts(lat, np.array([1, -1, 0]))
    with pytest.raises(ValueError):
        Configuration.from_counts(lat, np.array([1, 0]))
