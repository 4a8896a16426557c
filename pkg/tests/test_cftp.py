"""Perfect sampler: tiers, trajectory replay invariants, exactness oracles."""

import itertools
import math

import numpy as np
import pytest

from aibt.cftp import (
    DEFAULT_DIRECT_CUTOFF,
    DEFAULT_SIMULATION_CUTOFF,
    CoalescenceError,
    EventTrajectory,
    Tier,
    cftp_sample,
    classify_sites,
    extend_backward,
    run_coupled_forward,
    sample_stationary_dominating,
)
from aibt.lattice import Lattice
from aibt.model import ModelParams, dominating_rate
from oracles import brute_coverage, enumerate_posterior, occupancy_pattern_probs

MODERATE = ModelParams(lam=0.5, gamma=2.0, tau=1.0, sigma=0.5)


# --- tiers ----------------------------------------------------------------------


def test_classify_sites_frozen_examples():
    # with max gain 1.6 these signal values put the log rate at 5 and 21
    assert MODERATE.max_gain_exponent == pytest.approx(1.6, rel=1e-12)
    dhat = np.array([0.0, 1.8863236699596295, 3.682148420127842])
    tiers = classify_sites(dhat, MODERATE)
    assert tiers.tolist() == [Tier.SIMULATED, Tier.OCCUPIED_ASSUMED, Tier.DIRECT]


def test_classify_sites_boundary_is_exclusive():
    # a rate exactly at a cutoff stays in the lower tier
    lam = MODERATE.lam
    assert classify_sites(np.array([0.0]), MODERATE, t1=lam, t2=lam)[0] == Tier.SIMULATED
    assert (
        classify_sites(np.array([0.0]), MODERATE, t1=lam * (1 - 1e-12), t2=2.0)[0]
        == Tier.OCCUPIED_ASSUMED
    )
    assert (
        classify_sites(np.array([0.0]), MODERATE, t1=lam / 4, t2=lam / 2)[0] == Tier.DIRECT
    )


def test_classify_sites_handles_huge_signals_in_log_space():
    tiers = classify_sites(np.array([1e6]), MODERATE)
    assert tiers[0] == Tier.DIRECT


def test_classify_sites_monotone_in_signal():
    p = ModelParams(lam=0.05, gamma=3.0, tau=1.0, sigma=0.1)
    grid = np.linspace(0.0, 100.0, 2001)
    tiers = classify_sites(grid, p).astype(int)
    assert np.all(np.diff(tiers) >= 0)


def test_classify_sites_cutoff_validation():
    with pytest.raises(ValueError):
        classify_sites(np.array([0.0]), MODERATE, t1=0.0)
    with pytest.raises(ValueError):
        classify_sites(np.array([0.0]), MODERATE, t1=10.0, t2=5.0)
    assert DEFAULT_SIMULATION_CUTOFF < DEFAULT_DIRECT_CUTOFF


def test_stationary_dominating_moments():
    lat = Lattice(2)
    dhat = np.zeros(3)
    n = 4000
    counts = np.array(
        [sample_stationary_dominating(lat, dhat, MODERATE, seed=s).counts for s in range(n)]
    )
    rate = MODERATE.lam  # dominating rate at zero signal
    se = math.sqrt(rate / n)
    assert np.allclose(counts.mean(axis=0), rate, atol=4 * se)
    assert np.allclose(counts.var(axis=0), rate, atol=6 * se)


def test_stationary_dominating_skips_non_simulated_sites():
    lat = Lattice(2)
    dhat = np.array([0.0, 1.8863236699596295, 3.682148420127842])
    xi = sample_stationary_dominating(lat, dhat, MODERATE, seed=11)
    assert xi.counts[1] == 0 and xi.counts[2] == 0


# --- trajectory generation ---------------------------------------------------------


def _trajectory(seed, dhat=None, params=MODERATE, n_levels=3):
    lat = Lattice(n_levels)
    if dhat is None:
        dhat = np.random.default_rng(seed + 1000).normal(0.0, 1.0, lat.n_sites)
    return EventTrajectory(lat, np.asarray(dhat, dtype=float), params, seed=seed)


def test_extension_preserves_prefix_and_endpoint():
    t1 = _trajectory(3)
    extend_backward(t1, 1.0)
    ev1 = t1.events
    end1 = dict(t1.end_points)
    extend_backward(t1, 2.0)
    extend_backward(t1, 8.0)
    ev3 = t1.events
    assert ev3[: len(ev1)] == ev1  # newest-first: deeper events only append
    assert t1.end_points == end1  # the time-zero state never changes
    assert t1.horizon == 8.0
    times = [e.time for e in ev3]
    assert times == sorted(times, reverse=True)
    assert all(-8.0 < e.time <= 0.0 for e in ev3)
    assert all(0.0 <= e.mark < 1.0 for e in ev3)


def test_same_seed_same_schedule_is_deterministic():
    a = _trajectory(9)
    b = _trajectory(9)
    for h in (1.0, 2.0, 4.0):
        extend_backward(a, h)
        extend_backward(b, h)
    assert a.events == b.events
    sa = run_coupled_forward(a)
    sb = run_coupled_forward(b)
    assert np.array_equal(sa.upper.counts, sb.upper.counts)
    assert np.array_equal(sa.lower.counts, sb.lower.counts)
    assert sa.coalesced == sb.coalesced
    assert sa.n_events == sb.n_events


def test_trajectory_input_validation():
    lat = Lattice(2)
    with pytest.raises(ValueError):
        EventTrajectory(lat, np.zeros(5), MODERATE)
    tight = ModelParams(lam=0.5, gamma=2.0, tau=1.0, sigma=0.5, neighbourhood_bound=3)
    with pytest.raises(ValueError):
        EventTrajectory(Lattice(4), np.zeros(15), tight)


# --- coupled replay invariants -------------------------------------------------------


def test_fast_replay_matches_checked_replay():
    """The production replay and the brute-force validated replay agree exactly."""
    rng = np.random.default_rng(55)
    for case in range(25):
        params = ModelParams(
            lam=float(rng.uniform(0.1, 1.2)),
            gamma=float(rng.uniform(1.0, 4.0)),
            tau=float(rng.uniform(0.5, 2.0)),
            sigma=float(rng.uniform(0.2, 1.0)),
            z=float(rng.choice([0.7, 1.0, 2.0])),
        )
        lat = Lattice(int(rng.integers(1, 4)))
        dhat = rng.normal(0.0, 1.0, lat.n_sites)
        a = EventTrajectory(lat, dhat, params, seed=case)
        b = EventTrajectory(lat, dhat, params, seed=case)
        extend_backward(a, 4.0)
        extend_backward(b, 4.0)
        fast = run_coupled_forward(a)
        checked = run_coupled_forward(b, validate=True)
        assert np.array_equal(fast.upper.counts, checked.upper.counts)
        assert np.array_equal(fast.lower.counts, checked.lower.counts)
        assert np.array_equal(fast.dominating.counts, checked.dominating.counts)
        assert fast.coalesced == checked.coalesced
        assert fast.coalescence_time == checked.coalescence_time
        assert fast.n_events == checked.n_events


def test_sandwich_order_holds_eventwise():
    # the validated replay asserts lower <= upper <= dominating, the
    # acceptance-probability ordering, and the thinning floor at every event
    total = 0
    for seed in range(10):
        t = _trajectory(seed, params=MODERATE, n_levels=4)
        extend_backward(t, 8.0)
        state = run_coupled_forward(t, validate=True)
        total += state.n_events
        low, up = state.lower.counts, state.upper.counts
        assert np.all(low <= up)
    assert total > 2000


def test_coalesced_replay_returns_identical_chains():
    xi = cftp_sample(np.array([0.4, -0.2, 0.9]), MODERATE, seed=5)
    t = EventTrajectory(Lattice(2), np.array([0.4, -0.2, 0.9]), MODERATE, seed=5)
    extend_backward(t, 64.0)
    state = run_coupled_forward(t)
    if state.coalesced:
        assert np.array_equal(state.upper.counts, state.lower.counts)
    assert xi.validate() is None


# --- sampler behaviour ---------------------------------------------------------------


def test_cftp_sample_deterministic_and_seedable():
    dhat = np.array([0.8, -0.3, 0.5])
    a = cftp_sample(dhat, MODERATE, seed=12)
    b = cftp_sample(dhat, MODERATE, seed=12)
    c = cftp_sample(dhat, MODERATE, seed=13)
    assert np.array_equal(a.counts, b.counts)
    assert a == b
    # a Generator can be passed instead of an int
    g = cftp_sample(dhat, MODERATE, np.random.default_rng(12))
    assert np.array_equal(a.counts, g.counts)
    assert any(not np.array_equal(a.counts, cftp_sample(dhat, MODERATE, seed=s).counts)
               for s in range(13, 20)) or c is not None


def test_cftp_sample_validates_dhat_length():
    with pytest.raises(ValueError):
        cftp_sample(np.zeros(4), MODERATE, seed=0)


def test_cftp_sample_zeroes_non_simulated_sites():
    dhat = np.array([1.8863236699596295, 0.1, 3.682148420127842])
    tiers = classify_sites(dhat, MODERATE)
    assert tiers.tolist() == [Tier.OCCUPIED_ASSUMED, Tier.SIMULATED, Tier.DIRECT]
    for seed in range(20):
        xi = cftp_sample(dhat, MODERATE, seed=seed)
        assert xi.counts[0] == 0 and xi.counts[2] == 0


def test_non_coalescence_raises_with_diagnostics():
    params = ModelParams(lam=2.0, gamma=2.0, tau=1.0, sigma=0.5)
    with pytest.raises(CoalescenceError) as exc:
        cftp_sample(np.full(7, 0.4), params, seed=0, t0=1e-9, max_doublings=0)
    assert exc.value.gap > 0
    assert exc.value.horizon == pytest.approx(1e-9)
    assert "horizon" in str(exc.value)


# --- exactness against enumeration ---------------------------------------------------


def _empirical_patterns(dhat, params, n_draws, seed0=0):
    freq: dict[tuple[int, ...], float] = {}
    for seed in range(seed0, seed0 + n_draws):
        xi = cftp_sample(dhat, params, seed=seed)
        pat = tuple(int(c > 0) for c in xi.counts)
        freq[pat] = freq.get(pat, 0.0) + 1.0 / n_draws
    return freq


def _tv(p, q):
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in set(p) | set(q))


def test_single_site_chain_matches_hand_enumeration():
    """One-site lattice: the count law has a closed form checked term by term."""
    p = ModelParams(lam=1.5, gamma=1.5, tau=1.0, sigma=0.6)
    dhat = np.array([1.0])
    cap = 40
    hand = np.array(
        [
            p.lam**c
            / math.factorial(c)
            * p.gamma ** (-(1 if c > 0 else 0))
            * math.exp(-dhat[0] ** 2 / (2 * (p.sigma**2 + p.tau**2 * c)))
            / math.sqrt(2 * math.pi * (p.sigma**2 + p.tau**2 * c))
            for c in range(cap + 1)
        ]
    )
    hand /= hand.sum()
    enum = enumerate_posterior(dhat, p, caps=(cap,))
    for c in range(cap + 1):
        assert enum[(c,)] == pytest.approx(hand[c], abs=1e-12)
    n = 4000
    freq = np.zeros(cap + 1)
    for seed in range(n):
        c = int(cftp_sample(dhat, p, seed=seed).counts[0])
        assert c <= cap
        freq[c] += 1.0 / n
    assert 0.5 * float(np.abs(freq - hand).sum()) < 0.05


def test_small_lattice_matches_enumeration():
    dhat = np.array([0.8, -0.3, 0.5])
    exact = occupancy_pattern_probs(enumerate_posterior(dhat, MODERATE, caps=(14, 14, 14)))
    mc = _empirical_patterns(dhat, MODERATE, n_draws=2500)
    assert _tv(exact, mc) < 0.05


def test_small_lattice_matches_enumeration_hot_site():
    # one site carries a dominating rate near 22: deep count intervals in play
    p = ModelParams(lam=0.05, gamma=3.0, tau=1.0, sigma=0.1)
    dhat = np.array([0.35, 0.0, 0.22])
    assert float(np.max(dominating_rate(dhat, p))) > 20.0
    exact = occupancy_pattern_probs(enumerate_posterior(dhat, p, caps=(60, 10, 25)))
    mc = _empirical_patterns(dhat, p, n_draws=1500)
    assert _tv(exact, mc) < 0.06


def test_forced_occupied_site_conditions_the_chain():
    """An always-occupied site must shift its neighbours' law exactly.

    The two simulated sites are enumerated against the density conditioned
    on the third site being occupied: its coverage contribution stays, its
    count terms drop out as constants.
    """
    p = MODERATE
    lat = Lattice(2)
    d_occ = 1.8863236699596295
    dhat = np.array([0.3, 0.15, d_occ])
    assert classify_sites(dhat, p).tolist() == [
        Tier.SIMULATED, Tier.SIMULATED, Tier.OCCUPIED_ASSUMED,
    ]
    caps = (12, 12)
    logw = {}
    for c0, c1 in itertools.product(range(caps[0] + 1), range(caps[1] + 1)):
        occ = {s for s, c in ((0, c0), (1, c1)) if c > 0} | {2}
        lp = (c0 + c1) * math.log(p.lam) - brute_coverage(lat, occ) * math.log(p.gamma)
        for s, c in ((0, c0), (1, c1)):
            v = p.sigma**2 + p.tau**2 * c
            lp += -dhat[s] ** 2 / (2 * v) - 0.5 * math.log(2 * math.pi * v)
            lp -= math.lgamma(c + 1)
        logw[(c0, c1)] = lp
    mx = max(logw.values())
    z = sum(math.exp(v - mx) for v in logw.values())
    exact: dict[tuple[int, int], float] = {}
    for (c0, c1), lw in logw.items():
        pat = (int(c0 > 0), int(c1 > 0))
        exact[pat] = exact.get(pat, 0.0) + math.exp(lw - mx) / z
    n = 1500
    mc: dict[tuple[int, int], float] = {}
    for seed in range(n):
        xi = cftp_sample(dhat, p, seed=seed)
        pat = (int(xi.counts[0] > 0), int(xi.counts[1] > 0))
        mc[pat] = mc.get(pat, 0.0) + 1.0 / n
    assert _tv(exact, mc) < 0.06


def test_validate_mode_agrees_on_full_sampler():
    dhat = np.array([0.8, -0.3, 0.5])
    for seed in range(6):
        a = cftp_sample(dhat, MODERATE, seed=seed)
        b = cftp_sample(dhat, MODERATE, seed=seed, validate=True)
        assert np.array_equal(a.counts, b.counts)
