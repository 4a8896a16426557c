"""Independent reference implementations the tests check the package against.

Everything here is deliberately written from first principles: explicit
basis matrices, brute-force set arithmetic, an exhaustive state enumeration,
and a forward birth-death equilibrium chain.  None of it reuses the
package's incremental or coupled machinery, so agreement is evidence, not
tautology.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from aibt.lattice import Lattice, neighbourhood
from aibt.model import ModelParams


def haar_matrix(n: int) -> np.ndarray:
    """Orthonormal Haar analysis matrix, rows ordered scaling then coarse to fine.

    Row 0 is the constant; the detail row for level ``j``, shift ``k`` is
    positive on the left half of its dyadic block.
    """
    rows = [np.full(n, 1.0 / math.sqrt(n))]
    n_levels = int(math.log2(n))
    for j in range(n_levels):
        block = n >> j
        half = block >> 1
        for k in range(1 << j):
            row = np.zeros(n)
            row[k * block : k * block + half] = 1.0
            row[k * block + half : (k + 1) * block] = -1.0
            rows.append(row / math.sqrt(block))
    return np.array(rows)


def brute_coverage(lattice: Lattice, occupied: set) -> int:
    """Sites whose neighbourhood meets the occupied set, counted one by one."""
    n_levels = lattice.n_levels
    covered = 0
    for s in range(lattice.n_sites):
        b = neighbourhood(lattice.site_of(s), n_levels)
        if any(lattice.site_index(*v) in occupied for v in b):
            covered += 1
    return covered


def log_density(counts, dhat: np.ndarray, params: ModelParams, lattice: Lattice) -> float:
    """Log posterior density of a count vector against unit-rate Poisson per site.

    Written from the model definition: independent Poisson(1) reference per
    site, intensity ``lam`` per point, clustering reward ``gamma`` per
    covered site, and a Gaussian marginal likelihood with variance
    ``sigma^2 + tau^2 c^z`` at each site.
    """
    occ = {s for s, c in enumerate(counts) if c > 0}
    n = int(sum(counts))
    lp = n * math.log(params.lam) - brute_coverage(lattice, occ) * math.log(params.gamma)
    for s, c in enumerate(counts):
        v = params.sigma**2 + params.tau**2 * float(c) ** params.z
        lp += -dhat[s] ** 2 / (2 * v) - 0.5 * math.log(2 * math.pi * v)
        lp -= math.lgamma(c + 1)
    return lp


def enumerate_posterior(
    dhat: np.ndarray, params: ModelParams, caps: tuple[int, ...]
) -> dict[tuple[int, ...], float]:
    """Exhaustive normalized posterior over count vectors up to per-site caps."""
    lattice = Lattice((len(caps) + 1).bit_length() - 1)
    assert lattice.n_sites == len(caps)
    logw = {
        counts: log_density(counts, dhat, params, lattice)
        for counts in itertools.product(*[range(c + 1) for c in caps])
    }
    mx = max(logw.values())
    z = sum(math.exp(v - mx) for v in logw.values())
    return {counts: math.exp(v - mx) / z for counts, v in logw.items()}


def occupancy_pattern_probs(post: dict[tuple[int, ...], float]) -> dict[tuple[int, ...], float]:
    out: dict[tuple[int, ...], float] = {}
    for counts, p in post.items():
        pat = tuple(int(c > 0) for c in counts)
        out[pat] = out.get(pat, 0.0) + p
    return out


def gillespie_occupancy(
    dhat: np.ndarray,
    params: ModelParams,
    lattice: Lattice,
    n_events: int,
    seed: int,
    n_batches: int = 50,
    count_cap: int = 64,
) -> tuple[np.ndarray, np.ndarray]:
    """Time-weighted occupancy of the forward birth-death chain, with batch SE.

    Birth rates are ratios of :func:`log_density` at neighbouring states
    (each point also dies at unit rate), which is detailed balance with the
    target posterior; the chain therefore equilibrates to the same law the
    coupled sampler draws from, by a completely different route.  The first
    5% of events are discarded as burn-in and the rest are split into
    batches whose time-weighted means give the standard error.
    """
    ns = lattice.n_sites
    dhat = np.asarray(dhat, dtype=float)

    def gauss(s: int, c: int) -> float:
        v = params.sigma**2 + params.tau**2 * float(c) ** params.z
        return -dhat[s] ** 2 / (2 * v) - 0.5 * math.log(2 * math.pi * v)

    # birth rate tables: count part per site, coverage part per occupancy pattern
    exp_g = [
        [math.exp(math.log(params.lam) + gauss(s, c + 1) - gauss(s, c)) for c in range(count_cap)]
        for s in range(ns)
    ]
    cov_tab = [
        brute_coverage(lattice, {s for s in range(ns) if pat >> s & 1})
        for pat in range(1 << ns)
    ]
    dcov_pow = [
        [params.gamma ** -(cov_tab[pat | 1 << s] - cov_tab[pat]) for s in range(ns)]
        for pat in range(1 << ns)
    ]

    rng = np.random.default_rng(seed)
    counts = [0] * ns
    pat = 0
    burn = n_events // 20
    per_batch = (n_events - burn) // n_batches
    occ_time = [[0.0] * ns for _ in range(n_batches)]
    t_batch = [0.0] * n_batches
    u = rng.random(1 << 21)
    ui = 0
    for ev in range(n_events):
        if ui + 2 > u.size:
            u = rng.random(1 << 21)
            ui = 0
        rates = []
        tot = 0.0
        row = dcov_pow[pat]
        for s in range(ns):
            c = counts[s]
            b = exp_g[s][c] * (row[s] if c == 0 else 1.0)
            tot += b + c
            rates.append(b)
        dt = -math.log(u[ui]) / tot
        pick = u[ui + 1] * tot
        ui += 2
        if ev >= burn:
            b_idx = min((ev - burn) // per_batch, n_batches - 1)
            t_batch[b_idx] += dt
            ot = occ_time[b_idx]
            for s in range(ns):
                if counts[s] > 0:
                    ot[s] += dt
        site = -1
        birth = True
        acc = 0.0
        for s in range(ns):
            acc += rates[s]
            if pick < acc:
                site = s
                break
        if site < 0:
            birth = False
            for s in range(ns):
                acc += counts[s]
                if pick < acc:
                    site = s
                    break
            if site < 0:
                site = ns - 1
        if birth:
            counts[site] += 1
            if counts[site] == 1:
                pat |= 1 << site
        else:
            counts[site] -= 1
            if counts[site] == 0:
                pat &= ~(1 << site)
    means = np.array(
        [[occ_time[b][s] / t_batch[b] for s in range(ns)] for b in range(n_batches)]
    )
    est = np.average(means, axis=0, weights=np.array(t_batch))
    se = means.std(axis=0, ddof=1) / math.sqrt(n_batches)
    return est, se
