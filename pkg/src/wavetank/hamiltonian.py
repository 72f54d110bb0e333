"""Hamilton flow of the truncated dispersion relation.

The half-wave part of the linearized system at frequency lambda moves
along the flow of

    H(t, x, xi) = V_lam(t, x) xi + sqrt(a_lam(t, x) |xi|),

where V_lam = S_{<= c1 lam} V and a_lam = S_{<= c1 lam} a are the
coefficient fields truncated at the low scale c1 lam.  This module
builds the truncated coefficients from evolution snapshots (or
constants), integrates rays and their linearization, selects the
reference time s0 from the F1-correction size, measures the flow
integration residual G_V, checks bilipschitz/spreading behavior, and
transports the eikonal phase along ray tubes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import paradiff as pdc
from . import spectral as sp
from .spectral import Field, GridSpec


class FlowBandError(RuntimeError):
    """A ray left the admissible frequency band [lam/4, 4 lam]."""


class RayCrossingError(RuntimeError):
    """Rays crossed inside a tube (caustic) at the reported time."""


@dataclass(frozen=True)
class FrequencyConstants:
    lam: float
    c: float = 0.25
    c1: float = 1.0 / 32.0

    def __post_init__(self):
        if self.lam < 2 or 2 ** round(math.log2(self.lam)) != self.lam:
            raise ValueError("lam must be a dyadic integer >= 2")
        if not (0 < self.c1 < self.c < 1):
            raise ValueError("need 0 < c1 < c < 1")
        if self.c1 * self.lam < 1:
            raise ValueError("c1 lam must be >= 1")


class TruncatedCoeffs:
    """Low-frequency truncations of (V, a) with linear time interpolation.

    Stores per-snapshot compact spectra of V_lam and a_lam and evaluates
    them (and their x-derivatives) at arbitrary points by direct Fourier
    summation — the truncation keeps only O(c1 lam) modes.
    """

    def __init__(self, times, V_fields, a_fields, constants: FrequencyConstants,
                 a_min: float | None = None):
        if len(times) != len(V_fields) or len(times) != len(a_fields):
            raise ValueError("times and snapshot lists must align")
        self.constants = constants
        self.times = np.asarray([float(t) for t in times])
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        cutoff = constants.c1 * constants.lam
        self._V = [self._compact(sp.lp_low(v, cutoff)) for v in V_fields]
        self._a = [self._compact(sp.lp_low(a, cutoff)) for a in a_fields]
        self.grid = V_fields[0].grid

        floor = 0.5 * (a_min if a_min is not None
                       else min(float(np.min(np.asarray(
                           sp.lp_low(a, cutoff).samples).real))
                           for a in a_fields))
        for a in a_fields:
            trunc = sp.lp_low(a, cutoff)
            m = float(np.min(np.asarray(trunc.samples).real))
            if m < floor or m <= 0:
                raise ValueError(f"truncated a dips to {m:.3e}; flow refused")

    @staticmethod
    def _compact(u: Field):
        spec = u.spectrum
        sel = np.nonzero(np.abs(spec) > 1e-15 * max(np.max(np.abs(spec)), 1e-300))[0]
        return u.grid.k[sel], spec[sel]

    @classmethod
    def constant(cls, grid: GridSpec, V0: float, a0: float,
                 constants: FrequencyConstants,
                 times=(0.0, 1.0)) -> "TruncatedCoeffs":
        V = sp.from_function(grid, lambda x: V0 + 0 * x)
        a = sp.from_function(grid, lambda x: a0 + 0 * x)
        n = len(times)
        return cls(list(times), [V] * n, [a] * n, constants)

    def _weights(self, t: float):
        ts = self.times
        if len(ts) == 1 or t <= ts[0]:
            return 0, 0, 1.0
        if t >= ts[-1]:
            return len(ts) - 1, len(ts) - 1, 1.0
        j = int(np.searchsorted(ts, t, side="right")) - 1
        w = (ts[j + 1] - t) / (ts[j + 1] - ts[j])
        return j, j + 1, float(w)

    @staticmethod
    def _eval(compact, x, deriv: int = 0):
        k, coef = compact
        if deriv:
            coef = coef * (1j * k) ** deriv
        phase = np.exp(1j * np.multiply.outer(np.asarray(x, dtype=float), k))
        return (phase @ coef).real

    def _field_at(self, which, t, x, deriv=0):
        j0, j1, w = self._weights(t)
        snaps = self._V if which == "V" else self._a
        v = self._eval(snaps[j0], x, deriv)
        if j1 != j0:
            v = w * v + (1 - w) * self._eval(snaps[j1], x, deriv)
        return v

    def V(self, t, x, deriv: int = 0):
        return self._field_at("V", t, x, deriv)

    def a(self, t, x, deriv: int = 0):
        return self._field_at("a", t, x, deriv)


def coeffs_from_trajectory(traj, constants: FrequencyConstants,
                           a_min: float | None = None) -> TruncatedCoeffs:
    """Truncated coefficients from the traces of evolution snapshots."""
    from . import zakharov as zk

    times, Vs, As = [], [], []
    for st in traj.states:
        tr = zk.traces(st)
        times.append(st.t)
        Vs.append(tr.V)
        As.append(tr.a)
    return TruncatedCoeffs(times, Vs, As, constants, a_min=a_min)


def hamiltonian_eval(coeffs: TruncatedCoeffs, t, x, xi):
    """H = V xi + sqrt(a |xi|) and its partials (H_xi, H_x)."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if np.any(xi == 0):
        raise ValueError("xi = 0 is singular for the half-wave symbol")
    V = coeffs.V(t, x)
    a = coeffs.a(t, x)
    V_x = coeffs.V(t, x, deriv=1)
    a_x = coeffs.a(t, x, deriv=1)
    sqrt_a = np.sqrt(a)
    abs_xi = np.abs(xi)
    H = V * xi + sqrt_a * np.sqrt(abs_xi)
    H_xi = V + 0.5 * sqrt_a * abs_xi ** (-1.5) * xi
    H_x = V_x * xi + (a_x / (2.0 * sqrt_a)) * np.sqrt(abs_xi)
    return H, H_xi, H_x


@dataclass
class FlowState:
    """Rays (x^t, xi^t) sampled at stored times, integrated from base time s."""

    s: float
    times: np.ndarray           # (n_t,)
    x: np.ndarray               # (n_t, n_rays)
    xi: np.ndarray              # (n_t, n_rays)
    lam: float


def _flow_rhs(coeffs, t, x, xi):
    _, H_xi, H_x = hamiltonian_eval(coeffs, t, x, xi)
    return H_xi, -H_x


def flow_integrate(coeffs: TruncatedCoeffs, x0, xi0, s: float, t_list,
                   dt: float = 1e-3) -> FlowState:
    """RK4 integration of the Hamilton equations from time s.

    t_list may extend to either side of s; each branch is marched with
    steps of at most dt and the ray positions stored at the requested
    times.  Leaving the band |xi| in [lam/4, 4 lam] aborts.
    """
    lam = coeffs.constants.lam
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    xi0 = np.atleast_1d(np.asarray(xi0, dtype=float))
    if x0.shape != xi0.shape:
        raise ValueError("x0 and xi0 must have matching shapes")
    t_list = np.asarray([float(t) for t in t_list])
    n_t = len(t_list)
    X = np.empty((n_t, len(x0)))
    XI = np.empty((n_t, len(x0)))

    def band_check(xi, t):
        mag = np.abs(xi)
        if np.any(mag < lam / 4) or np.any(mag > 4 * lam):
            raise FlowBandError(f"ray left [lam/4, 4 lam] at t = {t:.6f}")

    def march(targets, idx):
        x, xi = x0.copy(), xi0.copy()
        t = s
        for target, j in zip(targets, idx):
            while not math.isclose(t, target, abs_tol=1e-14):
                step = math.copysign(min(dt, abs(target - t)), target - t)
                k1x, k1xi = _flow_rhs(coeffs, t, x, xi)
                k2x, k2xi = _flow_rhs(coeffs, t + step / 2,
                                      x + step / 2 * k1x, xi + step / 2 * k1xi)
                k3x, k3xi = _flow_rhs(coeffs, t + step / 2,
                                      x + step / 2 * k2x, xi + step / 2 * k2xi)
                k4x, k4xi = _flow_rhs(coeffs, t + step,
                                      x + step * k3x, xi + step * k3xi)
                x = x + (step / 6) * (k1x + 2 * k2x + 2 * k3x + k4x)
                xi = xi + (step / 6) * (k1xi + 2 * k2xi + 2 * k3xi + k4xi)
                t = t + step
                band_check(xi, t)
            X[j] = x
            XI[j] = xi

    band_check(xi0, s)
    fwd = [(t, j) for j, t in enumerate(t_list) if t >= s]
    bwd = [(t, j) for j, t in enumerate(t_list) if t < s]
    fwd.sort(key=lambda p: p[0])
    bwd.sort(key=lambda p: -p[0])
    march([p[0] for p in fwd], [p[1] for p in fwd])
    march([p[0] for p in bwd], [p[1] for p in bwd])
    return FlowState(s, t_list, X, XI, lam)


@dataclass
class LinearizedFlow:
    """Centered-difference Jacobian of the flow map along stored times."""

    times: np.ndarray
    dx_x: np.ndarray            # d x^t / d x
    dx_xi: np.ndarray           # d x^t / d xi
    dxi_x: np.ndarray           # d xi^t / d x
    dxi_xi: np.ndarray          # d xi^t / d xi


def linearized_flow(coeffs: TruncatedCoeffs, x0, xi0, s: float, t_list,
                    dx: float | None = None, dxi: float | None = None,
                    dt: float = 1e-3) -> LinearizedFlow:
    """Jacobian of (x, xi) -> (x^t, xi^t) by finite differences of
    neighboring rays; spacings default to the lattice quarters
    lam^{-3/4}/4 and lam^{3/4}/4."""
    lam = coeffs.constants.lam
    if dx is None:
        dx = lam ** -0.75 / 4.0
    if dxi is None:
        dxi = lam ** 0.75 / 4.0
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    xi0 = np.atleast_1d(np.asarray(xi0, dtype=float))
    n = len(x0)
    xs = np.concatenate([x0 + dx, x0 - dx, x0, x0])
    xis = np.concatenate([xi0, xi0, xi0 + dxi, xi0 - dxi])
    fl = flow_integrate(coeffs, xs, xis, s, t_list, dt=dt)
    xp, xm = fl.x[:, :n], fl.x[:, n:2 * n]
    xip, xim = fl.xi[:, :n], fl.xi[:, n:2 * n]
    xe_p, xe_m = fl.x[:, 2 * n:3 * n], fl.x[:, 3 * n:]
    xie_p, xie_m = fl.xi[:, 2 * n:3 * n], fl.xi[:, 3 * n:]
    return LinearizedFlow(
        fl.times,
        dx_x=(xp - xm) / (2 * dx),
        dx_xi=(xe_p - xe_m) / (2 * dxi),
        dxi_x=(xip - xim) / (2 * dx),
        dxi_xi=(xie_p - xie_m) / (2 * dxi),
    )


# ---------------------------------------------------------------------------
# F1 correction, s0 selection, integration residual
# ---------------------------------------------------------------------------

def compute_F1(eta: Field, lam: float, c1: float = 1.0 / 32.0) -> Field:
    """F1 = T_{1/q} d_x^2 grad(eta_lam) with q = |xi| - i eta_x xi.

    The paradifferential division is guarded by |q| >= |xi|/2, valid for
    the small slopes exercised here (asserted).
    """
    grid = eta.grid
    eta_lam = sp.lp_low(eta, c1 * lam)
    eta_x = np.asarray(sp.derivative(eta).samples).real
    slope = float(np.max(np.abs(eta_x)))
    if slope >= 0.5:
        raise ValueError(f"surface slope {slope:.3f} too large for 1/q symbol")

    def inv_q(x, xi):
        ex = np.interp(x, grid.x, eta_x, period=grid.length)
        q = abs(xi) - 1j * ex * xi
        assert np.all(np.abs(q) >= abs(xi) / 2)
        return 1.0 / q

    sym = pdc.SymbolGrid(grid, inv_q, order=-1.0)
    u = sp.derivative(eta_lam, 3)
    return pdc.paradiff_op(sym, u)


def select_s0(traj, lam: float, c1: float = 1.0 / 32.0) -> float:
    """Snapshot time minimizing ||lam^{-3/2} F1 xi||_inf at xi = lam.

    Ties break to the earliest snapshot.  The F_{1/2} dispersive term is
    omitted by design (recorded in reports as "omitted").
    """
    best_t, best_v = None, None
    for st in traj.states:
        f1 = compute_F1(st.eta, lam, c1)
        val = lam ** -0.5 * sp.linf_norm(f1)
        if best_v is None or val < best_v - 1e-15:
            best_t, best_v = st.t, val
    return float(best_t)


def integration_residual(traj, lam: float, c1: float = 1.0 / 32.0) -> dict:
    """G_V = d_x^2 V_lam - (d_t + V_lam d_x) F1 by centered time differences.

    Returns sup norms of both sides of the flow-integration gap along with
    the bookkeeping entry for the omitted half-derivative term.
    """
    from . import zakharov as zk

    if len(traj.states) < 3:
        raise ValueError("need at least 3 snapshots")
    dt = traj.snapshot_dt
    f1 = [compute_F1(st.eta, lam, c1) for st in traj.states]
    norm_gv, norm_v2 = 0.0, 0.0
    for i in range(1, len(traj.states) - 1):
        st = traj.states[i]
        tr = zk.traces(st, with_taylor=False)
        V_lam = sp.lp_low(tr.V, c1 * lam)
        dF1 = (1.0 / (2 * dt)) * (f1[i + 1] - f1[i - 1]) \
            + sp.multiply(V_lam, sp.derivative(f1[i]))
        V2 = sp.derivative(V_lam, 2)
        gv = V2 - dF1
        norm_gv = max(norm_gv, sp.linf_norm(gv))
        norm_v2 = max(norm_v2, sp.linf_norm(V2))
    return {"lam": lam, "G_V_inf": norm_gv, "d2x_V_inf": norm_v2,
            "f_half_term": "omitted"}


def spreading_check(lin: LinearizedFlow, coeffs: TruncatedCoeffs, s0: float,
                    xi_ref: float | None = None) -> dict:
    """Spreading of characteristics: -d_xi x^t grows linearly in t - s0.

    Returns the per-time ratio against (t-s0)/4 * mean sqrt(a_lam) *
    lam^{-3/2} and the R^2 of the straight-line fit of -d_xi x^t in t.
    """
    from .fits import fit_linear

    lam = coeffs.constants.lam
    a_mean = float(np.mean(coeffs.a(s0, coeffs.grid.x)))
    rate = 0.25 * math.sqrt(a_mean) * lam ** -1.5
    times = lin.times
    spread = -lin.dx_xi.mean(axis=1)
    ratios = {}
    for t, v in zip(times, spread):
        if abs(t - s0) > 1e-12:
            ratios[float(t)] = float(v / ((t - s0) * rate))
    fit = fit_linear(times, spread)
    return {"ratios": ratios, "slope": fit.slope, "intercept": fit.intercept,
            "r2": fit.r2, "reference_rate": rate}


# ---------------------------------------------------------------------------
# eikonal phase transport
# ---------------------------------------------------------------------------

@dataclass
class EikonalPhase:
    """Phase and slope interpolants over a moving ray tube."""

    times: np.ndarray           # (n_t,)
    positions: np.ndarray       # (n_t, n_rays) ray positions x^t(z)
    xi: np.ndarray              # (n_t, n_rays) ray frequencies
    phase: np.ndarray           # (n_t, n_rays) psi along each ray
    center: np.ndarray          # (n_t,) central ray position

    def _interp(self, t_index: int, values: np.ndarray, y):
        xs = self.positions[t_index]
        return PchipInterpolator(xs, values)(y)

    def psi(self, t_index: int, y):
        return self._interp(t_index, self.phase[t_index], y)

    def dpsi(self, t_index: int, y):
        return self._interp(t_index, self.xi[t_index], y)


def eikonal_solve(coeffs: TruncatedCoeffs, x: float, xi: float, s0: float,
                  t_list, tube_width: float | None = None, n_rays: int = 33,
                  dt: float = 1e-3) -> EikonalPhase:
    """Transport the packet phase along the tube around the (x, xi) ray.

    Initial data psi(s0, y) = xi (y - x); each characteristic carries
    dpsi/dt = xi^t H_xi - H (the Legendre integrand), integrated with the
    same RK4 steps as the flow.  Ray crossings raise RayCrossingError.
    """
    lam = coeffs.constants.lam
    if tube_width is None:
        tube_width = 4.0 * lam ** -0.75
    if n_rays < 33:
        raise ValueError("tube needs at least 33 rays")
    z = np.linspace(x - tube_width, x + tube_width, n_rays)
    t_list = np.asarray([float(t) for t in t_list])

    # augmented RK4: state (y, xi, phi)
    def rhs(t, y, xi_v, _phi):
        H, H_xi, H_x = hamiltonian_eval(coeffs, t, y, xi_v)
        return H_xi, -H_x, xi_v * H_xi - H

    def march(targets, idx, Y, XI, PHI):
        y = z.copy()
        xi_v = np.full(n_rays, float(xi))
        phi = xi * (z - x)
        t = s0
        for target, j in zip(targets, idx):
            while not math.isclose(t, target, abs_tol=1e-14):
                step = math.copysign(min(dt, abs(target - t)), target - t)
                k1 = rhs(t, y, xi_v, phi)
                k2 = rhs(t + step / 2, y + step / 2 * k1[0],
                         xi_v + step / 2 * k1[1], phi + step / 2 * k1[2])
                k3 = rhs(t + step / 2, y + step / 2 * k2[0],
                         xi_v + step / 2 * k2[1], phi + step / 2 * k2[2])
                k4 = rhs(t + step, y + step * k3[0],
                         xi_v + step * k3[1], phi + step * k3[2])
                y = y + (step / 6) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
                xi_v = xi_v + (step / 6) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
                phi = phi + (step / 6) * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
                t = t + step
                if np.any(np.diff(y) <= 0):
                    raise RayCrossingError(f"caustic in tube at t = {t:.6f}")
            Y[j], XI[j], PHI[j] = y, xi_v, phi

    n_t = len(t_list)
    Y = np.empty((n_t, n_rays))
    XI = np.empty((n_t, n_rays))
    PHI = np.empty((n_t, n_rays))
    fwd = sorted(((t, j) for j, t in enumerate(t_list) if t >= s0))
    bwd = sorted(((t, j) for j, t in enumerate(t_list) if t < s0),
                 key=lambda p: -p[0])
    march([p[0] for p in fwd], [p[1] for p in fwd], Y, XI, PHI)
    march([p[0] for p in bwd], [p[1] for p in bwd], Y, XI, PHI)
    center = Y[:, n_rays // 2]
    return EikonalPhase(t_list, Y, XI, PHI, center)
