"""Spectral core for scalar fields on the periodic torus [0, L)^2.

Conventions used by every module in this package:

* Grids are n x n; collocation point (i, j) sits at x = (i*L/n, j*L/n),
  axis 0 is the x1 direction.
* Spectral coefficients approximate c(k) = (1/L^2) * integral of
  e^{-i k.x} f(x) over the torus, at k = (2*pi/L) * m with integer
  wavevector m in {-n/2, ..., n/2-1}^2.  Concretely
  ``to_spectral(f) = fft2(f.values) / n**2``, so a constant field c has
  c at the mean mode and the round trip is exact up to rounding.
* Parseval: ||f||_{L^2}^2 = L^2 * sum_m |c_m|^2.
* Fourier multipliers with a negative power of |k| (Lambda^g, g < 0, and
  the inverse Laplacian) zero the mean mode; the operators act on
  mean-free content only.
* Dealiasing zeroes every mode with any |m_i| > dealias_fraction * n/2
  and is applied after each nonlinear product.

All operations are pure: fields in, fresh fields out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GridSpec:
    """Periodic torus discretization: n points per axis on [0, side_length)^2.

    n must be even and at least 8; powers of two give the fastest transforms.
    """

    n: int
    side_length: float = TWO_PI
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"grid needs n >= 8 and even, got n={self.n}")
        if not self.side_length > 0:
            raise ValueError("side_length must be positive")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValueError("dealias_fraction must lie in (0, 1]")

    @property
    def spacing(self) -> float:
        return self.side_length / self.n

    @property
    def cell_weight(self) -> float:
        """Quadrature weight per collocation point, (L/n)^2."""
        return self.spacing ** 2


@dataclass(frozen=True)
class PhysicalField:
    """Real scalar samples at the collocation points of ``grid``."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"values shape {v.shape} does not match grid n={self.grid.n}")
        if not np.isfinite(v).all():
            raise ValueError("non-finite values in physical field")


@dataclass(frozen=True)
class SpectralField:
    """Complex coefficients per integer wavevector, numpy fft2 layout."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = self.coeffs
        if c.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"coeffs shape {c.shape} does not match grid n={self.grid.n}")
        if not np.isfinite(c).all():
            raise ValueError("non-finite coefficients in spectral field")


@dataclass(frozen=True)
class FlowParams:
    """Dissipation coefficients and fractional orders for the coupled system."""

    nu: float
    kappa: float
    alpha: float
    beta: float
    critical: bool = False

    def __post_init__(self):
        if self.nu < 0 or self.kappa < 0:
            raise ValueError("nu and kappa must be nonnegative")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must lie in (0, 1]")
        if self.critical and self.alpha + self.beta != 1.0:
            raise ValueError(
                f"critical flag requires alpha + beta = 1 exactly, got {self.alpha + self.beta!r}"
            )


# ---------------------------------------------------------------------------
# cached grid arrays


@lru_cache(maxsize=64)
def _modes(n: int) -> np.ndarray:
    # integer wavevector components in fft order: 0, 1, ..., n/2-1, -n/2, ..., -1
    return np.fft.fftfreq(n, d=1.0 / n)


@lru_cache(maxsize=64)
def _kgrid(n: int, side_length: float):
    m = _modes(n)
    scale = TWO_PI / side_length
    k1 = scale * m[:, None]
    k2 = scale * m[None, :]
    kmag = np.hypot(k1, k2)
    return k1, k2, kmag


@lru_cache(maxsize=64)
def _dealias_keep(n: int, fraction: float) -> np.ndarray:
    m = np.abs(_modes(n))
    cutoff = fraction * n / 2.0
    keep1 = m <= cutoff
    return keep1[:, None] & keep1[None, :]


def wavevectors(grid: GridSpec):
    """(k1, k2, |k|) arrays in fft layout; do not mutate the returned arrays."""
    return _kgrid(grid.n, grid.side_length)


def coordinates(grid: GridSpec):
    """(x1, x2) meshgrid of collocation points, axis 0 = x1."""
    x = np.arange(grid.n) * grid.spacing
    return np.meshgrid(x, x, indexing="ij")


# ---------------------------------------------------------------------------
# transforms


def to_spectral(f: PhysicalField) -> SpectralField:
    return SpectralField(f.grid, np.fft.fft2(f.values) / f.grid.n**2)


def to_physical(fh: SpectralField) -> PhysicalField:
    # Hermitian input assumed; the imaginary residue of a symmetrized field
    # is at rounding level and is dropped.
    vals = np.fft.ifft2(fh.coeffs).real * fh.grid.n**2
    return PhysicalField(fh.grid, vals)


def hermitian_symmetrize(fh: SpectralField) -> SpectralField:
    """Project onto coefficients of a real field: c(-m) = conj(c(m))."""
    n = fh.grid.n
    rev = (-np.arange(n)) % n
    mirrored = np.conj(fh.coeffs[np.ix_(rev, rev)])
    return SpectralField(fh.grid, 0.5 * (fh.coeffs + mirrored))


# ---------------------------------------------------------------------------
# Fourier multiplier operators


def fractional_laplacian(fh: SpectralField, gamma: float) -> SpectralField:
    """Lambda^gamma: multiply by |k|^gamma; mean mode -> 0 for gamma != 0."""
    if gamma == 0.0:
        return fh
    _, _, kmag = wavevectors(fh.grid)
    with np.errstate(divide="ignore"):
        mult = kmag**gamma
    mult[0, 0] = 0.0
    return SpectralField(fh.grid, fh.coeffs * mult)


def riesz_alpha(fh: SpectralField, alpha: float) -> SpectralField:
    """Lambda^{-alpha} d_1: multiplier i*k1*|k|^{-alpha}, mean mode zero."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("riesz_alpha requires alpha in (0, 1]")
    k1, _, kmag = wavevectors(fh.grid)
    safe = kmag.copy()
    safe[0, 0] = 1.0
    mult = 1j * k1 * safe ** (-alpha)
    mult[0, 0] = 0.0
    return SpectralField(fh.grid, fh.coeffs * mult)


def biot_savart(wh: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Velocity from vorticity: u1 = i k2 w/|k|^2, u2 = -i k1 w/|k|^2."""
    k1, k2, kmag = wavevectors(wh.grid)
    kk = kmag**2
    safe = kk.copy()
    safe[0, 0] = 1.0
    u1 = 1j * k2 / safe * wh.coeffs
    u2 = -1j * k1 / safe * wh.coeffs
    u1[0, 0] = 0.0
    u2[0, 0] = 0.0
    return SpectralField(wh.grid, u1), SpectralField(wh.grid, u2)


def v_from_theta(th: SpectralField, beta: float) -> tuple[SpectralField, SpectralField]:
    """Temperature-driven velocity: multipliers (-k1 k2, k1^2) * |k|^{beta-3}.

    Identical to ``biot_savart(riesz_alpha(th, 1 - beta))``.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("v_from_theta requires beta in (0, 1)")
    k1, k2, kmag = wavevectors(th.grid)
    safe = kmag.copy()
    safe[0, 0] = 1.0
    radial = safe ** (beta - 3.0)
    v1 = -k1 * k2 * radial * th.coeffs
    v2 = k1 * k1 * radial * th.coeffs
    v1[0, 0] = 0.0
    v2[0, 0] = 0.0
    return SpectralField(th.grid, v1), SpectralField(th.grid, v2)


def grad(fh: SpectralField) -> tuple[SpectralField, SpectralField]:
    k1, k2, _ = wavevectors(fh.grid)
    return (
        SpectralField(fh.grid, 1j * k1 * fh.coeffs),
        SpectralField(fh.grid, 1j * k2 * fh.coeffs),
    )


def perp_grad(fh: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Perpendicular gradient (-d2 f, d1 f)."""
    k1, k2, _ = wavevectors(fh.grid)
    return (
        SpectralField(fh.grid, -1j * k2 * fh.coeffs),
        SpectralField(fh.grid, 1j * k1 * fh.coeffs),
    )


def dealias(fh: SpectralField) -> SpectralField:
    keep = _dealias_keep(fh.grid.n, fh.grid.dealias_fraction)
    return SpectralField(fh.grid, np.where(keep, fh.coeffs, 0.0))


def spectral_product(a: PhysicalField, b: PhysicalField) -> SpectralField:
    """Dealiased transform of the pointwise product a*b."""
    if a.grid != b.grid:
        raise ValueError("grid mismatch in spectral_product")
    return dealias(to_spectral(PhysicalField(a.grid, a.values * b.values)))


# ---------------------------------------------------------------------------
# norms


def lp_norm(f: PhysicalField, p: float) -> float:
    """Discrete L^p norm with uniform quadrature weight (L/n)^2; p=inf -> sup."""
    if p < 1:
        raise ValueError("lp_norm requires p >= 1")
    a = np.abs(f.values)
    if math.isinf(p):
        return float(a.max())
    return float((np.sum(a**p) * f.grid.cell_weight) ** (1.0 / p))


def l2_norm_spectral(fh: SpectralField) -> float:
    """L^2 norm via Parseval: L * sqrt(sum |c|^2)."""
    return float(fh.grid.side_length * math.sqrt(np.sum(np.abs(fh.coeffs) ** 2)))


def sobolev_norm(fh: SpectralField, s: float, homogeneous: bool = True) -> float:
    """Multiplier Sobolev norm (L^2 sum of (|k|^2)^s [or (1+|k|^2)^s] |c|^2)^(1/2)."""
    _, _, kmag = wavevectors(fh.grid)
    mag2 = np.abs(fh.coeffs) ** 2
    if homogeneous:
        weight = np.zeros_like(kmag)
        nz = kmag > 0
        weight[nz] = kmag[nz] ** (2.0 * s)
    else:
        weight = (1.0 + kmag**2) ** s
    return float(fh.grid.side_length * math.sqrt(np.sum(weight * mag2)))


# ---------------------------------------------------------------------------
# field constructors


def constant_field(grid: GridSpec, value: float) -> PhysicalField:
    return PhysicalField(grid, np.full((grid.n, grid.n), float(value)))


def field_from_function(grid: GridSpec, fn) -> PhysicalField:
    x1, x2 = coordinates(grid)
    return PhysicalField(grid, np.asarray(fn(x1, x2), dtype=float))


def random_band_spectral(
    grid: GridSpec, kmin: float, kmax: float, rng: np.random.Generator
) -> SpectralField:
    """Mean-free Hermitian field with support in kmin <= |k| <= kmax (dealiased)."""
    n = grid.n
    raw = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    _, _, kmag = wavevectors(grid)
    mask = (kmag >= kmin) & (kmag <= kmax)
    fh = SpectralField(grid, np.where(mask, raw, 0.0))
    fh = hermitian_symmetrize(fh)
    out = dealias(fh).coeffs.copy()
    out[0, 0] = 0.0
    return SpectralField(grid, out)


def random_band_field(
    grid: GridSpec, kmin: float, kmax: float, rng: np.random.Generator, amplitude: float = 1.0
) -> PhysicalField:
    """Physical-space random band field normalized to sup norm = amplitude."""
    f = to_physical(random_band_spectral(grid, kmin, kmax, rng))
    peak = np.abs(f.values).max()
    if peak == 0.0:
        return f
    return PhysicalField(grid, f.values * (amplitude / peak))
