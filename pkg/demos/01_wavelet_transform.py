"""
Orthogonal wavelet analysis of the four classic test signals
============================================================

Builds the standardized test signals, runs the periodized pyramid
transform with both built-in filters, and verifies that the transform
is an exact orthogonal change of basis: perfect reconstruction and
energy preservation.
"""

import numpy as np

from aibt import SIGNAL_NAMES, forward_dwt, get_filter, inverse_dwt, make_test_signal

n = 256
print(f"Test signals at n = {n}, standardized to mean 0 and unit variance\n")

for filt_name in ("haar", "la10"):
    filt = get_filter(filt_name)
    print(f"--- filter: {filt_name} (length {len(filt.lowpass)}) ---")
    for name in SIGNAL_NAMES:
        x = make_test_signal(name, n)
        dec = forward_dwt(x, filt)

        # The decomposition holds one scaling coefficient plus dyadic
        # detail levels of sizes 1, 2, 4, ..., n/2.
        sizes = [d.size for d in dec.details]
        energy_x = float(np.sum(x**2))
        energy_w = float(dec.scaling**2 + np.sum(dec.flat_details() ** 2))
        recon = inverse_dwt(dec)
        err = float(np.max(np.abs(recon - x)))

        # Detail energy concentrates at the levels matching each signal's
        # structure: jumps (Blocks) spread energy into fine levels, smooth
        # pieces (Heavisine) keep it coarse.
        per_level = [float(np.sum(d**2)) for d in dec.details]
        top = int(np.argmax(per_level))
        print(
            f"{name:>9}: levels {sizes[0]}..{sizes[-1]}, "
            f"round-trip error {err:.2e}, "
            f"energy ratio {energy_w / energy_x:.12f}, "
            f"most energetic detail level {top}"
        )
    print()

print("Both filters reconstruct exactly and preserve energy: the transform")
print("is orthogonal, so white noise stays white in the coefficient domain.")
