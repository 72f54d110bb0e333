"""Periodic pseudospectral foundation.

Grids and grid functions on the torus of circumference ``length`` (default
2*pi), FFT-based Fourier multipliers, a smooth dyadic Littlewood-Paley
ladder, and the norm functionals (Sobolev, Zygmund, W^{r,inf}) used by every
diagnostic downstream.

Conventions
-----------
* Fourier coefficients use the normalization u_hat[k] = (1/n) sum_j u(x_j)
  e^{-i k x_j}, so a pure mode e^{i k x} has u_hat[k] = 1.
* All integral norms are un-normalized integrals over [0, length]
  (trapezoid quadrature, which is exact for trigonometric polynomials).
* Frequencies are the integers k with |k| <= n/2 scaled by 2*pi/length
  (plain integers for the default torus).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

TAU = 2.0 * math.pi


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on a torus of the given circumference."""

    n_points: int
    length: float = TAU
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        n = self.n_points
        if n < 16 or (n & (n - 1)) != 0:
            raise ValueError(f"n_points must be a power of two >= 16, got {n}")
        if not (self.length > 0):
            raise ValueError("length must be positive")
        if not (0 < self.dealias_fraction <= 1):
            raise ValueError("dealias_fraction must lie in (0, 1]")

    @property
    def dx(self) -> float:
        return self.length / self.n_points

    @property
    def x(self) -> np.ndarray:
        return _grid_x(self.n_points, self.length)

    @property
    def k(self) -> np.ndarray:
        """Representable frequencies in FFT order."""
        return _grid_k(self.n_points, self.length)

    @property
    def nyquist(self) -> float:
        return (self.n_points // 2) * TAU / self.length


@lru_cache(maxsize=64)
def _grid_x(n: int, length: float) -> np.ndarray:
    x = np.arange(n) * (length / n)
    x.setflags(write=False)
    return x


@lru_cache(maxsize=64)
def _grid_k(n: int, length: float) -> np.ndarray:
    k = np.fft.fftfreq(n, d=1.0 / n) * (TAU / length)
    k.setflags(write=False)
    return k


class Field:
    """A grid function with lazily cached spectrum.

    Either ``samples`` (values at grid points) or ``spectrum`` (Fourier
    coefficients in FFT order, mode normalization) may be supplied; the
    other representation is materialized on demand and cached.
    """

    __slots__ = ("grid", "_samples", "_spectrum")

    def __init__(self, grid: GridSpec, samples=None, spectrum=None):
        if samples is None and spectrum is None:
            raise ValueError("need samples or spectrum")
        self.grid = grid
        self._samples = None if samples is None else np.asarray(samples)
        self._spectrum = None if spectrum is None else np.asarray(spectrum, dtype=complex)
        for arr in (self._samples, self._spectrum):
            if arr is not None and arr.shape != (grid.n_points,):
                raise ValueError(f"array shape {arr.shape} != ({grid.n_points},)")

    # -- representations -------------------------------------------------
    @property
    def samples(self) -> np.ndarray:
        if self._samples is None:
            self._samples = np.fft.ifft(self._spectrum * self.grid.n_points)
        return self._samples

    @property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            self._spectrum = np.fft.fft(self._samples) / self.grid.n_points
        return self._spectrum

    @property
    def real_samples(self) -> np.ndarray:
        s = self.samples
        return s.real if np.iscomplexobj(s) else s

    def real(self) -> "Field":
        return Field(self.grid, samples=self.real_samples)

    def conj(self) -> "Field":
        return Field(self.grid, samples=np.conj(self.samples))

    def copy(self) -> "Field":
        return Field(self.grid, samples=None if self._samples is None else self._samples.copy(),
                     spectrum=None if self._spectrum is None else self._spectrum.copy())

    # -- algebra ----------------------------------------------------------
    def _check(self, other: "Field"):
        if other.grid != self.grid:
            raise ValueError("grid mismatch")

    def __add__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, spectrum=self.spectrum + other.spectrum)
        return Field(self.grid, samples=self.samples + other)

    def __sub__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, spectrum=self.spectrum - other.spectrum)
        return Field(self.grid, samples=self.samples - other)

    def __mul__(self, c):
        if isinstance(c, Field):
            # plain pointwise product; use multiply() for the dealiased one
            self._check(c)
            return Field(self.grid, samples=self.samples * c.samples)
        return Field(self.grid, spectrum=self.spectrum * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def __repr__(self):
        return f"Field(n={self.grid.n_points}, length={self.grid.length:.6g})"


def zeros(grid: GridSpec) -> Field:
    return Field(grid, samples=np.zeros(grid.n_points))


def from_function(grid: GridSpec, fn) -> Field:
    return Field(grid, samples=np.asarray(fn(grid.x)))


def mode(grid: GridSpec, k: int, amplitude=1.0) -> Field:
    """The pure mode amplitude * e^{i k (2*pi/length) x}."""
    spec = np.zeros(grid.n_points, dtype=complex)
    spec[k % grid.n_points] = amplitude
    return Field(grid, spectrum=spec)


def fourier_multiplier(u: Field, m) -> Field:
    """Apply the Fourier multiplier m(xi) to u.

    ``m`` is a callable acting on the frequency array (or an array of
    multiplier values in FFT order). Non-finite multiplier values on the
    representable frequencies raise a domain error naming the offender.
    """
    k = u.grid.k
    with np.errstate(all="ignore"):
        mv = np.asarray(m(k) if callable(m) else m, dtype=complex)
    bad = ~np.isfinite(mv)
    if bad.any():
        raise ValueError(f"multiplier not finite at xi={k[bad][0]}")
    return Field(u.grid, spectrum=mv * u.spectrum)


def derivative(u: Field, order: int = 1) -> Field:
    return fourier_multiplier(u, lambda k: (1j * k) ** order)


def dealias(u: Field, fraction: float | None = None) -> Field:
    """Zero the top (1 - fraction) of the spectrum (2/3-rule by default)."""
    frac = u.grid.dealias_fraction if fraction is None else fraction
    cut = frac * u.grid.nyquist
    spec = u.spectrum.copy()
    spec[np.abs(u.grid.k) > cut] = 0.0
    return Field(u.grid, spectrum=spec)


def multiply(u: Field, v: Field, dealiased: bool = True) -> Field:
    """Pointwise product, dealiased by default (for nonlinear RHS use)."""
    w = Field(u.grid, samples=u.samples * v.samples)
    return dealias(w) if dealiased else w


def oversample(u: Field, factor: int) -> np.ndarray:
    """Samples of u on a grid refined by ``factor`` (spectral interpolation)."""
    if factor <= 1:
        return u.samples
    n = u.grid.n_points
    m = n * factor
    spec = np.zeros(m, dtype=complex)
    half = n // 2
    us = u.spectrum
    spec[:half] = us[:half]
    spec[m - half:] = us[half:]
    # split the Nyquist coefficient symmetrically for a real-consistent result
    spec[half] = 0.5 * us[half]
    spec[m - half] += 0.5 * us[half]
    return np.fft.ifft(spec * m)


# ---------------------------------------------------------------------------
# Littlewood-Paley ladder
# ---------------------------------------------------------------------------

def _glue(t):
    """exp(-1/t) glue, vanishing to all orders at t <= 0."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def lp_profile(xi) -> np.ndarray:
    """Smooth cutoff phi: ==1 on {|xi|<=1}, ==0 on {|xi|>=2}.

    Built from the standard exp(-1/(1-t^2))-type bump via the two-sided
    glue f(2-|t|)/(f(2-|t|)+f(|t|-1)).
    """
    a = np.abs(np.asarray(xi, dtype=float))
    up = _glue(2.0 - a)
    dn = _glue(a - 1.0)
    with np.errstate(invalid="ignore"):
        out = up / (up + dn)
    out[a <= 1.0] = 1.0
    out[a >= 2.0] = 0.0
    return out


def lp_band_profile(xi, kappa: float) -> np.ndarray:
    """psi_kappa(xi) = phi(xi/kappa) - phi(2 xi/kappa), support [kappa/2, 2 kappa]."""
    xi = np.asarray(xi, dtype=float)
    return lp_profile(xi / kappa) - lp_profile(2.0 * xi / kappa)


def dyadic_ladder(grid: GridSpec) -> list[int]:
    """The dyadic block frequencies 1, 2, ..., n/2 resolved on the grid."""
    return [2 ** j for j in range(int(math.log2(grid.n_points // 2)) + 1)]


def lp_project(u: Field, kappa: float) -> Field:
    """S_kappa u, the dyadic block at kappa (S_0 = S_{<1} for kappa == 0)."""
    if kappa == 0:
        return lp_low_sharp_zero(u)
    if kappa > u.grid.nyquist:
        raise ValueError(f"kappa={kappa} above Nyquist {u.grid.nyquist}")
    return fourier_multiplier(u, lambda k: lp_band_profile(k, kappa))


def lp_low_sharp_zero(u: Field) -> Field:
    """S_0 u = phi(2 xi) u, the block below frequency 1."""
    return fourier_multiplier(u, lambda k: lp_profile(2.0 * np.asarray(k, dtype=float)))


def lp_low(u: Field, kappa: float) -> Field:
    """S_{<=kappa} u = phi(xi/kappa) u."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return fourier_multiplier(u, lambda k: lp_profile(np.asarray(k, dtype=float) / kappa))


def lp_widened(u: Field, kappa: float) -> Field:
    """S~_kappa u, the widened block summing S_{kappa~} over kappa/4 <= kappa~ <= 4 kappa.

    Satisfies S~_kappa S_kappa = S_kappa. Telescopes to
    phi(xi/(4 kappa)) - phi(8 xi / kappa), plus the S_0 block when the
    lower end drops below 1.
    """
    lo = kappa / 4.0

    def m(k):
        k = np.asarray(k, dtype=float)
        out = lp_profile(k / (4.0 * kappa)) - lp_profile(2.0 * k / lo)
        if lo <= 1.0:
            out = out + lp_profile(2.0 * k)
        return np.clip(out, 0.0, 1.0)

    return fourier_multiplier(u, m)


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------

def l2_norm(u: Field) -> float:
    """Un-normalized L^2 norm over [0, length] via Plancherel."""
    return math.sqrt(u.grid.length * float(np.sum(np.abs(u.spectrum) ** 2)))


def inner(u: Field, v: Field) -> complex:
    """<u, v> = integral of u * conj(v)."""
    return complex(u.grid.length * np.vdot(v.spectrum, u.spectrum))


def linf_norm(u: Field, oversample_factor: int = 1) -> float:
    return float(np.max(np.abs(oversample(u, oversample_factor))))


def sobolev_norm(u: Field, sigma: float) -> float:
    """H^sigma norm ||<D>^sigma u||_{L^2}."""
    k = u.grid.k
    w = (1.0 + k * k) ** (sigma / 2.0)
    return math.sqrt(u.grid.length * float(np.sum((w * np.abs(u.spectrum)) ** 2)))


def zygmund_norm(u: Field, s: float) -> float:
    """Zygmund C_*^s norm: sup over dyadic blocks of kappa^s ||S_kappa u||_inf."""
    best = linf_norm(lp_low_sharp_zero(u))
    for kappa in dyadic_ladder(u.grid):
        block = lp_project(u, kappa)
        best = max(best, kappa ** s * linf_norm(block))
    return best


def wkinf_norm(u: Field, r: float) -> float:
    """W^{r,inf} norm; LP characterization for non-integer r."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    if float(r).is_integer():
        return max(linf_norm(derivative(u, j)) if j else linf_norm(u)
                   for j in range(int(r) + 1))
    return max(linf_norm(u), zygmund_norm(u, r))


def random_field(grid: GridSpec, rng, band=None, real: bool = True,
                 decay: float = 1.0) -> Field:
    """Random field with optional frequency band restriction.

    Coefficients are complex Gaussian with |k|^(-decay) damping; ``band``
    restricts the spectrum to {band[0] <= |k| <= band[1]}.
    """
    n = grid.n_points
    k = grid.k
    coef = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    amp = (1.0 + np.abs(k)) ** (-decay)
    coef *= amp
    coef[0] = coef[0].real
    if band is not None:
        lo, hi = band
        coef[(np.abs(k) < lo) | (np.abs(k) > hi)] = 0.0
    else:
        coef[np.abs(k) > grid.dealias_fraction * grid.nyquist] = 0.0
    u = Field(grid, spectrum=coef)
    if real:
        u = Field(grid, samples=u.samples.real)
    return u
