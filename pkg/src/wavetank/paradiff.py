"""Bony paradifferential calculus.

Paraproducts and their remainder, the paradifferential quantization of
rough (x, xi)-symbols, symbol seminorms, and the moving local-smoothing
weights / gap projections / seminorms used by the dispersive measurements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import spectral as sp
from .spectral import Field, GridSpec

# Low-high cutoff ratio in paraproducts: T_a u sums (S_{<=kappa/8} a)(S_kappa u)
# over dyadic kappa >= 8; lower blocks belong to the remainder.
PARA_LOW_RATIO = 8


def _para_blocks(grid: GridSpec):
    return [kappa for kappa in sp.dyadic_ladder(grid) if kappa >= PARA_LOW_RATIO]


def paraproduct(a: Field, u: Field) -> Field:
    """T_a u = sum over dyadic kappa >= 8 of (S_{<=kappa/8} a)(S_kappa u)."""
    if a.grid != u.grid:
        raise ValueError("grid mismatch")
    out = sp.zeros(u.grid)
    for kappa in _para_blocks(u.grid):
        low = sp.lp_low(a, kappa / PARA_LOW_RATIO)
        block = sp.lp_project(u, kappa)
        out = out + sp.multiply(low, block)
    return out


def remainder(a: Field, u: Field) -> Field:
    """R(a, u) = au - T_a u - T_u a (same dealiasing on all three products)."""
    return sp.multiply(a, u) - paraproduct(a, u) - paraproduct(u, a)


# ---------------------------------------------------------------------------
# Paradifferential quantization of a(x, xi)
# ---------------------------------------------------------------------------

def _step(s):
    """Smooth monotone step: 0 for s <= 0, 1 for s >= 1."""
    s = np.asarray(s, dtype=float)
    up = sp._glue(s)
    dn = sp._glue(1.0 - s)
    with np.errstate(invalid="ignore"):
        out = up / (up + dn)
    out[s <= 0] = 0.0
    out[s >= 1] = 1.0
    return out


@dataclass(frozen=True)
class AdmissibleCutoff:
    """Cutoff pair (chi, psi) for the paradifferential quantization.

    chi(theta, eta) == 1 for |theta| <= eps1 |eta| and == 0 for
    |theta| >= eps2 |eta|; psi vanishes on {|eta| <= 1} and is 1 on
    {|eta| >= 2}.
    """

    eps1: float = 1.0 / 10.0
    eps2: float = 1.0 / 8.0

    def __post_init__(self):
        if not (0 < self.eps1 < self.eps2):
            raise ValueError("need 0 < eps1 < eps2")

    def chi(self, theta, eta):
        theta = np.abs(np.asarray(theta, dtype=float))
        mag = np.abs(float(eta))
        if mag == 0:
            return np.zeros_like(theta)
        return _step((self.eps2 * mag - theta) / ((self.eps2 - self.eps1) * mag))

    def psi(self, eta):
        return 1.0 - sp.lp_profile(eta)


@dataclass
class SymbolGrid:
    """A rough symbol a(x, xi) tabulated over the spatial grid.

    ``func(x_array, xi_scalar)`` returns the samples of a(., xi).  The
    order/regularity metadata feed the seminorm; the independence flags let
    the quantization take cheap paths and the tests cross-check against
    multipliers / paraproducts.
    """

    grid: GridSpec
    func: object  # callable (x, xi) -> array
    order: float = 0.0
    regularity: float = 0.0
    x_independent: bool = False
    xi_independent: bool = False
    _cache: dict = field(default_factory=dict, repr=False)

    def x_field(self, xi: float) -> np.ndarray:
        key = float(xi)
        if key not in self._cache:
            vals = np.asarray(self.func(self.grid.x, key))
            if not np.all(np.isfinite(vals)):
                raise ValueError(f"symbol not finite at xi={xi}")
            self._cache[key] = np.broadcast_to(vals, (self.grid.n_points,))
        return self._cache[key]


def paradiff_op(a: SymbolGrid, u: Field, cutoff: AdmissibleCutoff | None = None) -> Field:
    """Apply the paradifferential operator T_a to u.

    Direct O(n^2) frequency-domain summation: the output spectrum at xi is
    sum over grid frequencies eta of chi(xi - eta, eta) * a_hat(xi - eta, eta)
    * psi(eta) * u_hat(eta), with a_hat the x-transform of a(., eta).
    """
    cutoff = cutoff or AdmissibleCutoff()
    grid = u.grid
    n = grid.n_points
    k = grid.k  # FFT order
    u_spec = u.spectrum
    psi = cutoff.psi(k)
    out = np.zeros(n, dtype=complex)
    nyq = n // 2
    # index of frequency m in FFT order is m mod n
    for j in np.nonzero(np.abs(u_spec) * psi > 0)[0]:
        eta = k[j]
        weight = psi[j] * u_spec[j]
        a_hat = np.fft.fft(a.x_field(eta)) / n
        # thetas limited by the cutoff support |theta| < eps2 |eta|
        tmax = min(int(math.floor(cutoff.eps2 * abs(eta))), nyq - 1)
        thetas = np.arange(-tmax, tmax + 1)
        ch = cutoff.chi(thetas, eta)
        target = int(round(eta)) + thetas  # true (un-aliased) output frequency
        keep = np.abs(target) <= nyq
        idx = target[keep] % n
        out[idx] += ch[keep] * a_hat[thetas[keep] % n] * weight
    return Field(grid, spectrum=out)


def symbol_seminorm(a: SymbolGrid, rho: float, m: float,
                    max_order: int = 3, xi_list=None) -> float:
    """Seminorm M_rho^m(a): sup over xi-derivatives up to ``max_order`` of
    (1 + |xi|)^{|alpha| - m} || d_xi^alpha a(., xi) ||_{W^{rho, inf}}.

    xi-derivatives are 4th-order centered finite differences with step one
    grid frequency; the sup runs over a geometric sample of the
    representable frequencies with |xi| >= 1/2 unless a list is given.
    """
    if rho < 0 or rho > 1.5:
        raise ValueError("rho must lie in [0, 3/2]")
    grid = a.grid
    if xi_list is None:
        nyq = grid.n_points // 2
        pts = {1, 2, 3}
        v = 4
        while v <= nyq - 2 * max_order:
            pts.update({v, (3 * v) // 2})
            v *= 2
        xi_list = sorted(q for q in pts if q <= nyq - 2 * max_order)
        xi_list = [s * q for q in xi_list for s in (+1, -1)]
    # 4th-order first-derivative stencil, applied repeatedly for higher orders
    stencil = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
    offsets = np.arange(-2, 3)
    best = 0.0
    for xi in xi_list:
        if abs(xi) < 0.5:
            continue
        # tabulate a(., xi + j) for |j| <= 2 * max_order
        width = 2 * max_order
        tab = {j: a.x_field(xi + j) for j in range(-width, width + 1)}
        level = {j: tab[j] for j in tab}
        for order in range(max_order + 1):
            center = level[0]
            val = sp.wkinf_norm(Field(grid, samples=np.ascontiguousarray(center)), rho)
            best = max(best, (1.0 + abs(xi)) ** (order - m) * val)
            if order == max_order:
                break
            nxt = {}
            inner = width - 2 * (order + 1)
            for j in range(-inner, inner + 1):
                nxt[j] = sum(c * level[j + o] for c, o in zip(stencil, offsets) if c)
            level = nxt
    return best


# convenience constructors ---------------------------------------------------

def symbol_from_fields(grid: GridSpec, fn, **kw) -> SymbolGrid:
    return SymbolGrid(grid, fn, **kw)


def multiplier_symbol(grid: GridSpec, m_fn, **kw) -> SymbolGrid:
    return SymbolGrid(grid, lambda x, xi: np.full_like(x, float(m_fn(xi))),
                      x_independent=True, **kw)


# ---------------------------------------------------------------------------
# Local smoothing weights and seminorms
# ---------------------------------------------------------------------------

def unit_bump(y):
    """chi: == 1 on [-1/2, 1/2], supported in [-1, 1]."""
    return sp.lp_profile(2.0 * np.asarray(y, dtype=float))


def wide_bump(y):
    """chi~: == 1 on [-1, 1], supported in [-2, 2]."""
    return sp.lp_profile(np.asarray(y, dtype=float))


@dataclass(frozen=True)
class LocalWeight:
    """Band-limited weight w_{x0,kappa}(x) = w(kappa^{3/4}(x - x0)).

    Built by spectrally truncating a periodized Gaussian of width
    kappa^{-3/4} to frequencies |xi| <= kappa^{3/4} (the truncation happens
    in the stored spectrum, so the band limit is exact) and rescaling so
    that w >= 1 on {|x - x0| <= kappa^{-3/4}}.
    """

    x0: float
    kappa: float
    _field: Field

    def field(self) -> Field:
        return self._field

    @property
    def values(self) -> np.ndarray:
        return self._field.real_samples


def ls_weight(grid: GridSpec, x0: float, kappa: float) -> LocalWeight:
    scale = kappa ** 0.75
    x = grid.x
    # signed torus distance to x0
    d = (x - x0 + grid.length / 2.0) % grid.length - grid.length / 2.0
    y = scale * d
    raw = np.exp(-(y * y) / 18.0)  # Gaussian wide enough that truncation is mild
    spec = np.fft.fft(raw) / grid.n_points
    spec[np.abs(grid.k) > scale] = 0.0
    vals = np.fft.ifft(spec * grid.n_points).real
    core = np.abs(y) <= 1.0
    m = float(np.min(vals[core])) if core.any() else float(np.max(vals))
    if m <= 0:
        raise ValueError("weight degenerate: spectral truncation too aggressive")
    return LocalWeight(x0, kappa, Field(grid, spectrum=spec / m))


def gap_projection(u: Field, xi0: float, lam: float, mu: float,
                   c: float = 0.25) -> Field:
    """Symmetric lambda-band projection with a c*mu-width gap at xi0.

    The nominal parameter range is lambda^{3/4} << mu <= c*lambda; values up
    to mu = lambda are accepted (the band profile tolerates bounded-ratio
    rescaling) so that near-threshold scans remain expressible.
    """
    if not (lam ** 0.75 < mu <= lam):
        raise ValueError(f"mu={mu} outside (lambda^(3/4), lambda] = "
                         f"({lam ** 0.75}, {lam}]")

    def p(xi):
        xi = np.asarray(xi, dtype=float)
        return (np.where(xi + lam >= 0, 1.0, 0.0)
                * sp.lp_band_profile(xi + lam, lam)
                * (1.0 - unit_bump(xi / (c * mu))))

    return sp.fourier_multiplier(u, lambda k: p(k - xi0) + p(-k + xi0))


def ls_seminorm(f: Field, x0: float, lam: float, sigma: float,
                c: float = 0.25) -> float:
    """Sum over dyadic kappa <= c*lambda of ||w_{x0,kappa} S_kappa f||_{H^sigma}."""
    total = 0.0
    for kappa in sp.dyadic_ladder(f.grid):
        if kappa > c * lam:
            break
        w = ls_weight(f.grid, x0, kappa)
        total += sp.sobolev_norm(w.field() * sp.lp_project(f, kappa), sigma)
    return total


def ls_seminorm_full(f: Field, x0: float, xi0: float, lam: float, mu: float,
                     sigma: float, c: float = 0.25) -> float:
    """Three-row local-smoothing seminorm collecting low, high, and balanced
    frequency measurements.

    Row 1 (low): dyadic kappa in [c*mu, c*lambda], unweighted blocks scaled by
    kappa^{3/4}/mu plus locally weighted blocks.
    Row 2 (high): the tail above c*lambda scaled by lambda^{3/4}/mu, plus
    blocks kappa >= lambda/c under the lambda-scale weight.
    Row 3 (balanced): the gap-projected lambda band under the lambda-scale
    weight.
    """
    grid = f.grid
    w_lam = ls_weight(grid, x0, lam).field()
    total = 0.0
    for kappa in sp.dyadic_ladder(grid):
        if c * mu <= kappa <= c * lam:
            block = sp.lp_project(f, kappa)
            total += (kappa ** 0.75 / mu) * sp.sobolev_norm(block, sigma)
            w = ls_weight(grid, x0, kappa).field()
            total += sp.sobolev_norm(w * block, sigma)
        if kappa >= lam / c:
            total += sp.sobolev_norm(w_lam * sp.lp_project(f, kappa), sigma)
    tail = sp.fourier_multiplier(
        f, lambda k: 1.0 - sp.lp_profile(np.asarray(k, float) / (c * lam)))
    total += (lam ** 0.75 / mu) * sp.sobolev_norm(tail, sigma)
    total += sp.sobolev_norm(w_lam * gap_projection(f, xi0, lam, mu, c=c), sigma)
    return total
