"""Flattened-strip elliptic solves.

The surface-fitted strip {eta - h < y < eta} is pulled back to the flat
strip T x [-1, 0] by a Lipschitz diffeomorphism rho built from two
smoothing exponentials of eta.  On the flat strip the Laplace problem
becomes

    (d_z^2 + alpha * d_x^2 + beta * d_x d_z - gamma * d_z) theta = F0,
    theta(x, 0) = f,   d_z theta(x, -1) = bottom Neumann data,

which we solve spectrally in x and with 2nd-order finite differences in z.
The solution is split as theta = theta0 + theta_c where theta0 is the
analytic flat-strip harmonic extension of the Dirichlet data (cosh profile
per mode, with analytic z-derivatives) and theta_c is the variable-
coefficient correction, solved iteratively with the flat-coefficient
preconditioner (d_z^2 + h^2 d_x^2 per mode).  The analytic part is what
makes the Dirichlet-to-Neumann trace accurate for wavenumbers far beyond
the z-resolution.

The same machinery solves the pressure problem (interior source from the
velocity-potential Hessian, hydrostatic bottom flux) and yields the Taylor
coefficient a = -(1/d_z rho) d_z P|_{z=0}.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from . import spectral as sp
from .spectral import Field, GridSpec


class DegenerateMapError(ValueError):
    """The flattening map lost injectivity (d_z rho <= 0 somewhere)."""


class EllipticSolveError(RuntimeError):
    """Iterative strip solve failed to reach tolerance."""


class TaylorSignWarning(UserWarning):
    """Taylor coefficient a <= 0 detected somewhere (diagnostic)."""


@dataclass(frozen=True)
class StripGrid:
    x_grid: GridSpec
    n_z: int

    def __post_init__(self):
        if self.n_z < 16:
            raise ValueError("n_z must be >= 16")

    @property
    def z(self) -> np.ndarray:
        return np.linspace(-1.0, 0.0, self.n_z)

    @property
    def dz(self) -> float:
        return 1.0 / (self.n_z - 1)


@dataclass
class FlatteningMap:
    """rho and its derivatives tabulated on the strip grid (z rows, x cols)."""

    strip: StripGrid
    h: float
    delta: float
    rho: np.ndarray
    rho_z: np.ndarray
    rho_x: np.ndarray
    rho_zz: np.ndarray
    rho_xx: np.ndarray
    rho_xz: np.ndarray

    @property
    def min_rho_z(self) -> float:
        return float(np.min(self.rho_z))


def build_flattening(eta: Field, h: float = 1.0, delta: float = 0.1,
                     n_z: int = 64) -> FlatteningMap:
    """Build rho(x,z) = (1+z) e^{delta z <D>} eta - z (e^{-(1+z) delta <D>} eta - h).

    All x-derivatives are spectral; all z-derivatives are analytic (the
    z-dependence of rho is explicit).
    """
    if h <= 0:
        raise ValueError("depth h must be positive")
    if not (0 < delta <= 1):
        raise ValueError("delta must lie in (0, 1]")
    grid = eta.grid
    strip = StripGrid(grid, n_z)
    k = grid.k
    z = strip.z[:, None]
    es = np.fft.fft(np.asarray(eta.samples, dtype=complex))
    d = delta
    bracket = np.sqrt(1.0 + k * k)
    bracket0 = np.where(k == 0, 0.0, bracket)  # identity on constants

    A = _spec_levels(es, bracket0, d * z)              # e^{delta z <D>} eta
    B = _spec_levels(es, bracket0, -(1.0 + z) * d)     # e^{-(1+z) delta <D>} eta
    DA = d * bracket0 * A
    DB = d * bracket0 * B
    D2A = (d * bracket0) ** 2 * A
    D2B = (d * bracket0) ** 2 * B

    rho_s = (1 + z) * A - z * B
    rho_z_s = A + (1 + z) * DA - B + z * DB
    rho_zz_s = 2 * DA + (1 + z) * D2A + 2 * DB - z * D2B

    ik = 1j * k

    rho = np.fft.ifft(rho_s, axis=1).real
    rho += strip.z[:, None] * h  # the -z*(-h) term, zero mode exact
    rho_z = np.fft.ifft(rho_z_s, axis=1).real + h
    rho_zz = np.fft.ifft(rho_zz_s, axis=1).real
    rho_x = np.fft.ifft(ik * rho_s, axis=1).real
    rho_xx = np.fft.ifft((ik ** 2) * rho_s, axis=1).real
    rho_xz = np.fft.ifft(ik * rho_z_s, axis=1).real

    if np.min(rho_z) <= 0.0:
        j, i = np.unravel_index(int(np.argmin(rho_z)), rho_z.shape)
        raise DegenerateMapError(
            f"d_z rho = {rho_z[j, i]:.3e} <= 0 at x={grid.x[i]:.4f}, z={strip.z[j]:.4f}")

    return FlatteningMap(strip, h, delta, rho, rho_z, rho_x, rho_zz, rho_xx, rho_xz)


def _spec_levels(es: np.ndarray, bracket0: np.ndarray, tau) -> np.ndarray:
    """Spectra of e^{tau <D>} eta per z level; tau is (n_z, 1)-shaped."""
    return np.exp(np.asarray(tau) * bracket0[None, :]) * es[None, :]


@dataclass
class EllipticCoeffs:
    map: FlatteningMap
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray


def coefficients(fmap: FlatteningMap) -> EllipticCoeffs:
    denom = 1.0 + fmap.rho_x ** 2
    alpha = fmap.rho_z ** 2 / denom
    beta = -2.0 * fmap.rho_z * fmap.rho_x / denom
    gamma = (fmap.rho_zz + alpha * fmap.rho_xx + beta * fmap.rho_xz) / fmap.rho_z
    return EllipticCoeffs(fmap, alpha, beta, gamma)


@dataclass
class StripField:
    """Values on the strip grid plus an accurate surface z-derivative."""

    strip: StripGrid
    values: np.ndarray          # (n_z, n_x)
    dz_surface: np.ndarray      # d_z at z = 0 (analytic part + FD correction)
    dz_values: np.ndarray       # d_z everywhere (same split)

    def surface(self) -> np.ndarray:
        return self.values[-1]

    def bottom(self) -> np.ndarray:
        return self.values[0]


# ---------------------------------------------------------------------------
# discrete operators
# ---------------------------------------------------------------------------

def _dx(arr: np.ndarray, k: np.ndarray, power: int = 1) -> np.ndarray:
    return np.fft.ifft((1j * k) ** power * np.fft.fft(arr, axis=1), axis=1)


def _dz_interior(arr: np.ndarray, dz: float) -> np.ndarray:
    """Centered d_z in the interior, one-sided 2nd order at the ends."""
    out = np.empty_like(arr)
    out[1:-1] = (arr[2:] - arr[:-2]) / (2 * dz)
    out[0] = (-3 * arr[0] + 4 * arr[1] - arr[2]) / (2 * dz)
    out[-1] = (3 * arr[-1] - 4 * arr[-2] + arr[-3]) / (2 * dz)
    return out


def _apply_operator(coeffs: EllipticCoeffs, theta: np.ndarray) -> np.ndarray:
    """The strip operator with Dirichlet top row and ghost-node Neumann bottom.

    Row 0 (z=-1) uses the ghost elimination for homogeneous Neumann data;
    inhomogeneous data enters through the right-hand side (see _solve_correction).
    Row -1 (z=0) is the Dirichlet identity row.
    """
    strip = coeffs.map.strip
    dz = strip.dz
    k = strip.x_grid.k
    out = np.empty_like(theta, dtype=complex)

    ts = np.fft.fft(theta, axis=1)
    theta_xx = np.fft.ifft(-(k ** 2) * ts, axis=1)
    theta_z = np.zeros_like(theta, dtype=complex)
    theta_z[1:-1] = (theta[2:] - theta[:-2]) / (2 * dz)
    theta_zz = np.zeros_like(theta, dtype=complex)
    theta_zz[1:-1] = (theta[2:] - 2 * theta[1:-1] + theta[:-2]) / dz ** 2
    theta_xz = _dx(theta_z, k)

    out[1:-1] = (theta_zz[1:-1]
                 + coeffs.alpha[1:-1] * theta_xx[1:-1]
                 + coeffs.beta[1:-1] * theta_xz[1:-1]
                 - coeffs.gamma[1:-1] * theta_z[1:-1])
    # bottom row: ghost theta_{-1} = theta_1 for homogeneous Neumann;
    # theta_z = 0 there, so the beta and gamma terms vanish from the operator
    out[0] = (2 * theta[1] - 2 * theta[0]) / dz ** 2 + coeffs.alpha[0] * theta_xx[0]
    out[-1] = theta[-1]
    return out


_THOMAS_CACHE: dict = {}


def _thomas_factors(strip: StripGrid, h: float):
    """Cached forward-elimination factors of the flat tridiagonal operator."""
    key = (strip.n_z, strip.x_grid.n_points, strip.x_grid.length, h)
    hit = _THOMAS_CACHE.get(key)
    if hit is not None:
        return hit
    n_z = strip.n_z
    dz = strip.dz
    k = strip.x_grid.k
    h2k2 = (h * k) ** 2

    sub = np.zeros((n_z, len(k)))       # coefficient of theta_{j-1}
    diag = np.zeros((n_z, len(k)))
    sup = np.zeros((n_z, len(k)))       # coefficient of theta_{j+1}
    diag[1:-1] = -2.0 / dz ** 2 - h2k2
    sub[1:-1] = 1.0 / dz ** 2
    sup[1:-1] = 1.0 / dz ** 2
    diag[0] = -2.0 / dz ** 2 - h2k2
    sup[0] = 2.0 / dz ** 2
    diag[-1] = 1.0

    cp = np.zeros((n_z, len(k)))
    inv_m = np.zeros((n_z, len(k)))
    inv_m[0] = 1.0 / diag[0]
    cp[0] = sup[0] * inv_m[0]
    for j in range(1, n_z):
        inv_m[j] = 1.0 / (diag[j] - sub[j] * cp[j - 1])
        cp[j] = sup[j] * inv_m[j]
    if len(_THOMAS_CACHE) > 16:
        _THOMAS_CACHE.clear()
    _THOMAS_CACHE[key] = (sub, cp, inv_m)
    return sub, cp, inv_m


def _flat_solve(strip: StripGrid, h: float, rhs: np.ndarray) -> np.ndarray:
    """Exact solve of the flat operator (same BC rows) by vectorized Thomas."""
    n_z = strip.n_z
    sub, cp, inv_m = _thomas_factors(strip, h)
    r = np.fft.fft(rhs, axis=1)

    dp = np.empty_like(r)
    dp[0] = r[0] * inv_m[0]
    for j in range(1, n_z):
        dp[j] = (r[j] - sub[j] * dp[j - 1]) * inv_m[j]
    out = np.empty_like(r)
    out[-1] = dp[-1]
    for j in range(n_z - 2, -1, -1):
        out[j] = dp[j] - cp[j] * out[j + 1]
    return np.fft.ifft(out, axis=1)


def _flat_extension(strip: StripGrid, h: float, f: Field):
    """Analytic flat-strip harmonic extension of Dirichlet data f.

    Returns (theta0, theta0_z, theta0_zz) with analytic z-derivatives.
    The per-mode profile cosh(h k (z+1))/cosh(h k) satisfies the Dirichlet
    top / Neumann bottom conditions exactly.
    """
    k = np.abs(strip.x_grid.k)
    z = strip.z[:, None]
    fs = np.fft.fft(np.asarray(f.samples, dtype=complex))[None, :]
    hk = h * k[None, :]
    # stable evaluation: cosh(hk(z+1))/cosh(hk) = (e^{hk z} + e^{-hk(z+2)})/(1+e^{-2hk})
    e1 = np.exp(hk * z)
    e2 = np.exp(-hk * (z + 2.0))
    den = 1.0 + np.exp(-2.0 * hk)
    prof = (e1 + e2) / den
    prof_z = hk * (e1 - e2) / den
    prof_zz = hk ** 2 * prof
    theta0 = np.fft.ifft(prof * fs, axis=1)
    theta0_z = np.fft.ifft(prof_z * fs, axis=1)
    theta0_zz = np.fft.ifft(prof_zz * fs, axis=1)
    return theta0, theta0_z, theta0_zz


def solve_strip(coeffs: EllipticCoeffs, f: Field, F0: np.ndarray | None = None,
                bottom_neumann: np.ndarray | None = None,
                tol: float = 1e-10, maxiter: int = 400) -> StripField:
    """Solve the flattened Dirichlet problem on the strip.

    ``F0`` is the interior source (n_z, n_x); ``bottom_neumann`` is
    d_z theta at z=-1 (default homogeneous).  The returned StripField
    carries the solution and its z-derivative, with the flat harmonic part
    differentiated analytically.
    """
    strip = coeffs.map.strip
    grid = strip.x_grid
    n_z, n_x = strip.n_z, grid.n_points
    dz = strip.dz
    k = grid.k
    h = coeffs.map.h

    theta0, theta0_z, theta0_zz = _flat_extension(strip, h, f)
    theta0_xx = _dx(theta0, k, 2)
    theta0_xz = _dx(theta0_z, k)

    # residual source for the correction (analytic derivatives of theta0)
    b = np.zeros((n_z, n_x), dtype=complex)
    if F0 is not None:
        b += F0
    b[1:-1] -= (theta0_zz[1:-1]
                + coeffs.alpha[1:-1] * theta0_xx[1:-1]
                + coeffs.beta[1:-1] * theta0_xz[1:-1]
                - coeffs.gamma[1:-1] * theta0_z[1:-1])
    # bottom row: theta0 has exact homogeneous Neumann trace, so only its
    # zz and xx terms contribute; the correction carries any inhomogeneous
    # bottom flux g_b through the ghost elimination
    b[0] -= theta0_zz[0] + coeffs.alpha[0] * theta0_xx[0]
    if bottom_neumann is not None:
        g_b = np.asarray(bottom_neumann, dtype=complex)
        g_b_x = np.fft.ifft(1j * k * np.fft.fft(g_b))
        b[0] += (2.0 / dz) * g_b + coeffs.gamma[0] * g_b - coeffs.beta[0] * g_b_x
    b[-1] = 0.0  # Dirichlet data carried entirely by theta0

    theta_c = np.zeros((n_z, n_x), dtype=complex)
    bnorm = float(np.linalg.norm(b))
    if bnorm > 0:
        shape = (n_z * n_x,)

        def mv(v):
            return _apply_operator(coeffs, v.reshape(n_z, n_x)).ravel()

        def pc(v):
            return _flat_solve(strip, h, v.reshape(n_z, n_x)).ravel()

        A = LinearOperator((n_z * n_x, n_z * n_x), matvec=mv, dtype=complex)
        M = LinearOperator((n_z * n_x, n_z * n_x), matvec=pc, dtype=complex)
        try:
            sol, info = gmres(A, b.ravel(), M=M, rtol=tol, atol=tol * bnorm,
                              maxiter=maxiter)
        except TypeError:  # older scipy spelling
            sol, info = gmres(A, b.ravel(), M=M, tol=tol, atol=tol * bnorm,
                              maxiter=maxiter)
        theta_c = sol.reshape(n_z, n_x)
        resid = float(np.linalg.norm(mv(sol) - b.ravel())) / bnorm
        if info != 0 or resid > 100 * tol:
            raise EllipticSolveError(f"strip solve stalled: info={info}, "
                                     f"relative residual {resid:.3e}")

    theta_c_z = _dz_interior(theta_c, dz)
    if bottom_neumann is not None:
        theta_c_z[0] = np.asarray(bottom_neumann, dtype=complex)
    values = theta0 + theta_c
    dz_values = theta0_z + theta_c_z
    return StripField(strip, values, dz_values[-1].copy(), dz_values)


# ---------------------------------------------------------------------------
# Dirichlet-to-Neumann map and paralinearization residual
# ---------------------------------------------------------------------------

def dtn(eta: Field, f: Field, h: float = 1.0, delta: float = 0.1,
        n_z: int = 64, fmap: FlatteningMap | None = None,
        coeffs: EllipticCoeffs | None = None) -> Field:
    """G(eta) f = ((1 + rho_x^2)/rho_z * d_z theta - rho_x * d_x theta)|_{z=0}."""
    if fmap is None:
        fmap = build_flattening(eta, h, delta, n_z)
    if coeffs is None:
        coeffs = coefficients(fmap)
    theta = solve_strip(coeffs, f)
    grid = eta.grid
    surf_x = _dx(theta.values[-1][None, :], grid.k)[0]
    g = ((1.0 + fmap.rho_x[-1] ** 2) / fmap.rho_z[-1] * theta.dz_surface
         - fmap.rho_x[-1] * surf_x)
    if np.iscomplexobj(f.samples) and np.max(np.abs(f.samples.imag)) > 0:
        return Field(grid, samples=g)
    return Field(grid, samples=g.real)


def paralin_residual(eta: Field, f: Field, h: float = 1.0, delta: float = 0.1,
                     n_z: int = 64) -> Field:
    """G(eta) f - T_Lambda f with Lambda = |xi| (pure multiplier in d=1)."""
    from .paradiff import AdmissibleCutoff

    g = dtn(eta, f, h=h, delta=delta, n_z=n_z)
    cut = AdmissibleCutoff()
    t_lambda = sp.fourier_multiplier(f, lambda k: np.abs(k) * cut.psi(k))
    return g - t_lambda


# ---------------------------------------------------------------------------
# Pressure problem and Taylor coefficient
# ---------------------------------------------------------------------------

def _physical_gradients(fmap: FlatteningMap, u: StripField):
    """Chain-rule physical derivatives (d_x u, d_y u) of a strip field."""
    k = fmap.strip.x_grid.k
    u_z = u.dz_values
    u_x = _dx(u.values, k)
    dy = u_z / fmap.rho_z
    dx = u_x - (fmap.rho_x / fmap.rho_z) * u_z
    return dx, dy


def hessian_source(fmap: FlatteningMap, phi: StripField) -> np.ndarray:
    """F = -(phi_xx^2 + 2 phi_xy^2 + phi_yy^2) on the strip (d=1 Hessian square)."""
    k = fmap.strip.x_grid.k
    phi_x, phi_y = _physical_gradients(fmap, phi)
    # differentiate the first derivatives again through the chain rule
    phi_y_z = _dz_interior(phi_y, fmap.strip.dz)
    phi_x_z = _dz_interior(phi_x, fmap.strip.dz)
    phi_yy = phi_y_z / fmap.rho_z
    phi_xy = _dx(phi_y, k) - (fmap.rho_x / fmap.rho_z) * phi_y_z
    phi_xx = _dx(phi_x, k) - (fmap.rho_x / fmap.rho_z) * phi_x_z
    return -(phi_xx ** 2 + 2.0 * phi_xy ** 2 + phi_yy ** 2)


def solve_pressure(eta: Field, psi: Field, g: float = 9.81, h: float = 1.0,
                   delta: float = 0.1, n_z: int = 64,
                   fmap: FlatteningMap | None = None,
                   coeffs: EllipticCoeffs | None = None,
                   phi: StripField | None = None) -> StripField:
    """Solve for the pressure on the strip.

    Delta_{x,y} P = -(nabla^2 phi . nabla^2 phi) with P = 0 at the surface
    and the flat-bottom closure d_z P(x,-1) = -g d_z rho(x,-1) (vertical
    Euler equation on a solid flat bottom).
    """
    if fmap is None:
        fmap = build_flattening(eta, h, delta, n_z)
    if coeffs is None:
        coeffs = coefficients(fmap)
    if phi is None:
        phi = solve_strip(coeffs, psi)
    F = hessian_source(fmap, phi)
    F0 = coeffs.alpha * F
    grid = eta.grid
    zero = Field(grid, samples=np.zeros(grid.n_points))
    g_b = -g * fmap.rho_z[0]
    return solve_strip(coeffs, zero, F0=F0, bottom_neumann=g_b)


def taylor_coefficient(eta: Field, psi: Field, g: float = 9.81, h: float = 1.0,
                       delta: float = 0.1, n_z: int = 64,
                       fmap: FlatteningMap | None = None,
                       coeffs: EllipticCoeffs | None = None,
                       phi: StripField | None = None) -> Field:
    """Taylor coefficient a = -(1/d_z rho) d_z P at the surface (a > 0 expected)."""
    if fmap is None:
        fmap = build_flattening(eta, h, delta, n_z)
    if coeffs is None:
        coeffs = coefficients(fmap)
    P = solve_pressure(eta, psi, g=g, h=h, delta=delta, n_z=n_z,
                       fmap=fmap, coeffs=coeffs, phi=phi)
    a = -(P.dz_surface / fmap.rho_z[-1]).real
    if np.min(a) <= 0:
        warnings.warn(f"Taylor sign violated: min a = {np.min(a):.3e}",
                      TaylorSignWarning)
    return Field(eta.grid, samples=a)
