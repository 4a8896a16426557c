"""Orthonormal wavelet transforms on periodic grids, plus standard test signals.

The transform is the classical pyramid algorithm with periodic (circular)
boundary handling, run down to a single scaling coefficient.  Filters are
orthonormal quadrature-mirror pairs, so analysis and synthesis are exact
transposes of each other and the transform preserves energy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "WaveletFilter",
    "WaveletDecomposition",
    "HAAR",
    "DAUB_LA10",
    "get_filter",
    "forward_dwt",
    "inverse_dwt",
    "make_test_signal",
    "add_noise",
    "SIGNAL_NAMES",
]

_IDENTITY_TOL = 1e-12


def _verify_orthonormal(lo: np.ndarray) -> None:
    """Check the three scaling-filter identities that make the pyramid exact."""
    if abs(lo.sum() - np.sqrt(2.0)) > _IDENTITY_TOL:
        raise ValueError("lowpass coefficients must sum to sqrt(2)")
    if abs(np.dot(lo, lo) - 1.0) > _IDENTITY_TOL:
        raise ValueError("lowpass coefficients must have unit energy")
    for k in range(1, lo.size // 2 + 1):
        if abs(np.dot(lo[: lo.size - 2 * k], lo[2 * k :])) > _IDENTITY_TOL:
            raise ValueError(f"lowpass fails even-shift orthogonality at shift {2 * k}")


@dataclass(frozen=True)
class WaveletFilter:
    """An orthonormal two-channel filter pair.

    Only the lowpass half is supplied; the highpass half is its
    quadrature mirror ``g[k] = (-1)^k h[L-1-k]``.  The orthonormality
    identities are verified at construction time.
    """

    name: str
    lowpass: np.ndarray
    highpass: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        lo = np.array(self.lowpass, dtype=float)
        if lo.ndim != 1 or lo.size < 2 or lo.size % 2:
            raise ValueError("filter length must be a positive even number")
        _verify_orthonormal(lo)
        lo.setflags(write=False)
        hi = np.where(np.arange(lo.size) % 2, -1.0, 1.0) * lo[::-1]
        hi.setflags(write=False)
        object.__setattr__(self, "lowpass", lo)
        object.__setattr__(self, "highpass", hi)

    def __len__(self) -> int:
        return self.lowpass.size


HAAR = WaveletFilter("haar", np.array([1.0, 1.0]) / np.sqrt(2.0))

# Least-asymmetric orthonormal filter with 10 vanishing moments (20 taps).
# Obtained by spectral factorization of the degree-9 halfband Daubechies
# polynomial at 60-digit precision, choosing the conjugate-reciprocal root
# subset whose transfer function has the smallest peak deviation from linear
# phase, with the dominant tap oriented into the left half.  Matches the
# standard published table for this family.
DAUB_LA10 = WaveletFilter(
    "la10",
    np.array(
        [
            0.00077015980911445982,
            9.5632670722852731e-05,
            -0.0086412992770221503,
            -0.0014653825813046105,
            0.045927239231091509,
            0.011609893903711318,
            -0.15949427888491061,
            -0.070880535783231572,
            0.47169066693844291,
            0.76951003702109794,
            0.38382676106707633,
            -0.035536740473819586,
            -0.031990056882428114,
            0.049994972077375156,
            0.0057649120335811497,
            -0.020354939812311111,
            -0.0008043589320164513,
            0.0045931735853117919,
            5.7036083618495007e-05,
            -0.00045932942100465204,
        ]
    ),
)

_FILTERS = {"haar": HAAR, "la10": DAUB_LA10}


def get_filter(name: str) -> WaveletFilter:
    """Look up a built-in filter by name (case-insensitive): 'haar' or 'la10'."""
    try:
        return _FILTERS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown wavelet filter {name!r}; choose from {sorted(_FILTERS)}") from None


@dataclass
class WaveletDecomposition:
    """Full multiresolution decomposition of a length ``2**J`` signal.

    ``details[j]`` holds the ``2**j`` detail coefficients at resolution
    level ``j``; level 0 is the coarsest and level ``J-1`` the finest.
    ``scaling`` is the single remaining scaling coefficient, which for an
    orthonormal transform equals ``mean(signal) * sqrt(n)``.
    """

    details: list[np.ndarray]
    scaling: float
    filter: WaveletFilter

    def __post_init__(self) -> None:
        for j, d in enumerate(self.details):
            d = np.asarray(d, dtype=float)
            if d.shape != (2**j,):
                raise ValueError(f"level {j} must hold {2**j} coefficients, got shape {d.shape}")
            self.details[j] = d

    @property
    def n_levels(self) -> int:
        return len(self.details)

    @property
    def n(self) -> int:
        return 2**self.n_levels

    def flat_details(self) -> np.ndarray:
        """All detail coefficients as one vector, coarsest level first."""
        return np.concatenate(self.details) if self.details else np.empty(0)

    def with_details(self, flat: np.ndarray) -> "WaveletDecomposition":
        """Copy of this decomposition with detail coefficients replaced from a flat vector."""
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.n - 1,):
            raise ValueError(f"expected {self.n - 1} detail coefficients, got shape {flat.shape}")
        details = [flat[2**j - 1 : 2 ** (j + 1) - 1].copy() for j in range(self.n_levels)]
        return WaveletDecomposition(details, self.scaling, self.filter)


def _check_signal(signal: np.ndarray) -> np.ndarray:
    signal = np.asarray(signal, dtype=float)
    if signal.ndim != 1:
        raise ValueError("signal must be one-dimensional")
    n = signal.size
    if n < 2 or n & (n - 1):
        raise ValueError(f"signal length must be a power of two >= 2, got {n}")
    if not np.all(np.isfinite(signal)):
        raise ValueError("signal must be finite")
    return signal


def _analysis_step(a: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = a.size
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(lo.size)[None, :]) % n
    win = a[idx]
    return win @ lo, win @ hi


def _synthesis_step(approx: np.ndarray, detail: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    n = 2 * approx.size
    out = np.zeros(n)
    pos = (2 * np.arange(approx.size)[:, None] + np.arange(lo.size)[None, :]) % n
    np.add.at(out, pos, approx[:, None] * lo[None, :] + detail[:, None] * hi[None, :])
    return out


def forward_dwt(signal: np.ndarray, filt: WaveletFilter) -> WaveletDecomposition:
    """Decompose a length ``2**J`` signal into ``n - 1`` details plus one scaling coefficient.

    Args:
        signal: one-dimensional array whose length is a power of two.
        filt: orthonormal filter pair to analyse with.

    Returns:
        The full decomposition, finest level carrying ``n/2`` coefficients.
    """
    a = _check_signal(signal)
    n_levels = a.size.bit_length() - 1
    details: list[np.ndarray] = [np.empty(0)] * n_levels
    for j in reversed(range(n_levels)):
        a, details[j] = _analysis_step(a, filt.lowpass, filt.highpass)
    return WaveletDecomposition(details, float(a[0]), filt)


def inverse_dwt(dec: WaveletDecomposition) -> np.ndarray:
    """Reconstruct the signal from a full decomposition (exact inverse of forward_dwt)."""
    a = np.array([dec.scaling])
    for j in range(dec.n_levels):
        a = _synthesis_step(a, dec.details[j], dec.filter.lowpass, dec.filter.highpass)
    return a


_BLOCKS_KNOTS = np.array([0.1, 0.13, 0.15, 0.23, 0.25, 0.4, 0.44, 0.65, 0.76, 0.78, 0.81])
_BLOCKS_HEIGHTS = np.array([4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2])
_BUMPS_HEIGHTS = np.array([4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2])
_BUMPS_WIDTHS = np.array([0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005])

SIGNAL_NAMES = ("Blocks", "Bumps", "Doppler", "Heavisine")


def _raw_signal(name: str, t: np.ndarray) -> np.ndarray:
    if name == "blocks":
        # each jump joins the right-hand plateau, so a knot that lands exactly
        # on a grid point contributes no intermediate half-height sample
        return ((t[:, None] >= _BLOCKS_KNOTS) * _BLOCKS_HEIGHTS).sum(axis=1)
    if name == "bumps":
        return ((1.0 + np.abs(t[:, None] - _BLOCKS_KNOTS) / _BUMPS_WIDTHS) ** -4.0 * _BUMPS_HEIGHTS).sum(axis=1)
    if name == "heavisine":
        return 4.0 * np.sin(4.0 * np.pi * t) - np.sign(t - 0.3) - np.sign(0.72 - t)
    if name == "doppler":
        return np.sqrt(t * (1.0 - t)) * np.sin(2.0 * np.pi * 1.05 / (t + 0.05))
    raise ValueError(f"unknown test signal {name!r}; choose from {SIGNAL_NAMES}")


def make_test_signal(name: str, n: int, standardize: bool = True) -> np.ndarray:
    """Evaluate a standard piecewise test signal on the grid ``t = k/n``.

    Args:
        name: one of ``SIGNAL_NAMES`` (case-insensitive).
        n: number of samples; a power of two, at least 8.
        standardize: if true (default), shift and scale the samples to zero
            mean and unit sample standard deviation.

    Returns:
        Array of ``n`` samples.
    """
    if n < 8 or n & (n - 1):
        raise ValueError(f"n must be a power of two >= 8, got {n}")
    t = np.arange(n) / n
    f = _raw_signal(name.lower(), t)
    if standardize:
        f = (f - f.mean()) / f.std(ddof=1)
    return f


def add_noise(signal: np.ndarray, sigma: float, seed: int | np.random.Generator) -> np.ndarray:
    """Add i.i.d. centred Gaussian noise with standard deviation ``sigma``."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    signal = np.asarray(signal, dtype=float)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return signal + sigma * rng.standard_normal(signal.size)
