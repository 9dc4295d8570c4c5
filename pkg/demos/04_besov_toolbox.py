"""Littlewood-Paley bands and Besov norms: sharp and smooth dyadic blocks,
the finite-difference characterization, fractional Bernstein ratios, and the
measured commutator estimates.
"""

import math

import numpy as np

from bq2d.lp import (
    BesovIndex,
    bernstein_check,
    besov_norm,
    besov_norm_fd,
    chain_rule_besov_ratio,
    commutator_estimate_ratio,
    dyadic_blocks,
    interp_inequality_ratio,
)
from bq2d.spectral import (
    GridSpec,
    field_from_function,
    lp_norm,
    random_band_field,
    random_band_spectral,
    to_physical,
    to_spectral,
)

grid = GridSpec(64)
rng = np.random.default_rng(0)

# --- band table for a two-mode field ----------------------------------------
f = field_from_function(grid, lambda x1, x2: np.sin(x1) + np.sin(8 * x1))
print("dyadic band table for sin(x1) + sin(8 x1):")
print(f"{'j':>4} {'||block||_2':>12}")
for band in dyadic_blocks(to_spectral(f)):
    norm = lp_norm(to_physical(band.band), 2)
    if norm > 1e-12:
        print(f"{band.j:4d} {norm:12.6f}")
print("B^1_{2,1} norm (weights 2^j):", besov_norm(f, BesovIndex(1.0, 2, 1)))
print("closed form:", math.sqrt(2 * math.pi**2) * (1 + 8))

# --- sharp vs smooth variants -----------------------------------------------
rough = random_band_field(grid, 1, 20, rng)
for smooth in (False, True):
    v = besov_norm(rough, BesovIndex(0.5, 2, 2), smooth=smooth)
    print(f"besov (s=0.5, p=2, r=2), {'smooth' if smooth else 'sharp'} blocks: {v:.6f}")

# --- finite-difference characterization ---------------------------------------
fd = besov_norm_fd(field_from_function(grid, lambda a, b: np.sin(a)), 0.5, 2, 2)
bl = besov_norm(field_from_function(grid, lambda a, b: np.sin(a)), BesovIndex(0.5, 2, 2))
print(f"\nfinite-difference vs block norm for sin(x1): {fd:.4f} vs {bl:.4f} (ratio {fd/bl:.3f})")

# --- Bernstein ratios ---------------------------------------------------------
print("\nfractional Bernstein ratios on random band-j fields (p = q = 2):")
print("lower >= 1 and upper <= 2^{2a} with band-independent constants")
a = 0.45
for j in (2, 3, 4):
    fh = random_band_spectral(grid, 2.0**j, 2.0 ** (j + 1) * 0.999, rng)
    lo, up = bernstein_check(fh, j, a, 2, 2)
    print(f"   j={j}: lower={lo:.4f}, upper={up:.4f} (cap {2.0**(2*a):.4f})")

# --- measured estimate ratios -------------------------------------------------
u = (random_band_field(grid, 1, 12, rng), random_band_field(grid, 1, 12, rng))
th = random_band_field(grid, 1, 12, rng)
r = commutator_estimate_ratio(u, th, 0.95, 0.2, 0.9, 2.0, 4.0, 4.0, 2.0)
print(f"\nmultiplier-commutator Besov ratio (measured, C unknown): {r:.4f}")
print(f"chain-rule ratio at q=2 (degenerates to 1): "
      f"{chain_rule_besov_ratio(th, 0.3, 0.95, 2.0):.12f}")
print(f"interpolation-inequality ratio for sin(x1): "
      f"{interp_inequality_ratio(field_from_function(grid, lambda a, b: np.sin(a)), 0.5):.6f}")
print(f"(closed form 1/(sqrt(2 pi^2) + 1) = {1/(math.sqrt(2*math.pi**2)+1):.6f})")
