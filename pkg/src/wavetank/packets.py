"""Wave-packet lattice, tight-frame analysis/synthesis, and matching.

Phase space is tiled by tubes T = (x, xi): x on a lattice of spacing
~lam^{-3/4} (the packet scale), xi on the integer lattice of spacing
Xi ~ lam^{3/4}, with the packet band |xi| in [lam/4, 4*lam].  A packet is

    u_T(t, y) = lam^{3/8} chi((y - x^t)/delta) e^{i psi_T(t, y)},

with chi an even C-infinity window supported in [-1, 1] satisfying the
partition of squares sum_m chi(v - m)^2 = 1.

Analysis and synthesis are evaluated exactly: fields are trigonometric
polynomials, so every inner product with a packet reduces to the window
transform ghat(omega) = int chi(v) e^{-i omega v} dv at known offsets, and
the lattice sums collapse to one FFT per frequency column.  Two internal
choices make the frame numerically tight (identity up to one measured
constant) instead of approximately tight:

* the analysis x-lattice is oversampled by an integer factor sigma chosen
  so that sigma*M exceeds the grid bandwidth; frequency couplings between
  distinct modes congruent mod the lattice size then cannot occur at all;
* the frequency columns retained internally extend past the packet band
  (including xi = 0) far enough that every omitted column sees the input
  band only through ghat beyond its stopband, where |ghat| < 4e-6.

With those two choices the frame operator on band-limited data is a
Fourier multiplier that is constant to ~1e-10 relative, which is what the
reconstruction and Parseval guarantees require.  The public packet lattice
(used for packet construction, residuals, and overlap counting) remains
the coarse one with spacing ~lam^{-3/4} and the band |xi| in [lam/4, 4*lam].
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import fits
from . import spectral as sp
from .hamiltonian import EikonalPhase, TruncatedCoeffs, hamiltonian_eval
from .spectral import Field, GridSpec


# Offsets past this point see |ghat| < 4e-6 (the window stopband); internal
# frequency columns are retained until omitted ones are this far away.
STOPBAND = 70.0


# ---------------------------------------------------------------------------
# Window
# ---------------------------------------------------------------------------

class FrameCutoff:
    """Even window chi supported in [-1, 1] with sum_m chi(v-m)^2 = 1.

    chi(v) = cos(pi/2 * s(|v|)) with s the normalized primitive of the
    Gevrey bump exp(-tau/(u(1-u))).  The symmetry s(v) + s(1-v) = 1 makes
    the partition of squares exact at every point, and the C-infinity
    (Gevrey) transition gives the transform ghat sub-exponential decay:
    |ghat| < 4e-6 beyond |omega| ~ 60 for tau = 1.
    """

    _QUAD = 4096
    _CDF_POINTS = 20001

    def __init__(self, tau: float = 1.0):
        self.tau = float(tau)
        # s on [0, 1/2]; the other half by reflection keeps the partition
        # identity exact to rounding.
        u = np.linspace(0.0, 0.5, self._CDF_POINTS)
        ui = u[1:]
        phi = np.zeros_like(u)
        phi[1:] = np.exp(-self.tau / (ui * (1.0 - ui)))
        half = cumulative_trapezoid(phi, u, initial=0.0)
        # full integral = 2 * half integral by symmetry of phi about 1/2
        self._s_grid = u
        self._s_half = half / (2.0 * half[-1])
        nodes, wts = np.polynomial.legendre.leggauss(self._QUAD)
        self._nodes = nodes
        self._wts = wts
        self._chi_quad = self(nodes)
        self._transform_cache: dict = {}

    def _s(self, t: np.ndarray) -> np.ndarray:
        lo = t <= 0.5
        out = np.empty_like(t)
        out[lo] = np.interp(t[lo], self._s_grid, self._s_half)
        out[~lo] = 1.0 - np.interp(1.0 - t[~lo], self._s_grid, self._s_half)
        return out

    def __call__(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        out = np.zeros_like(v)
        inside = np.abs(v) < 1.0
        out[inside] = np.cos(0.5 * np.pi * self._s(np.abs(v[inside])))
        return out

    def partition_error(self, n_check: int = 4096) -> float:
        v = np.linspace(0.0, 1.0, n_check)
        total = sum(self(v + m) ** 2 for m in (-1, 0, 1))
        return float(np.max(np.abs(total - 1.0)))

    def transform(self, omega) -> np.ndarray:
        """ghat(omega) = int chi e^{-i omega v} dv (real and even)."""
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        out = np.empty_like(omega)
        block = 1024
        cw = self._chi_quad * self._wts
        for i in range(0, len(omega), block):
            out[i:i + block] = np.cos(np.outer(omega[i:i + block],
                                               self._nodes)) @ cw
        return out

    def transform_integers(self, delta: float, n_offsets: int) -> np.ndarray:
        """ghat(d * delta) for d = 0 .. n_offsets-1, cached per delta."""
        key = round(delta, 15)
        hit = self._transform_cache.get(key)
        if hit is None or len(hit) < n_offsets:
            hit = self.transform(delta * np.arange(n_offsets))
            self._transform_cache[key] = hit
        return hit[:n_offsets]


@lru_cache(maxsize=1)
def default_cutoff() -> FrameCutoff:
    return FrameCutoff()


# ---------------------------------------------------------------------------
# Lattice geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrameGeometry:
    """Phase-space lattice for a dyadic frequency lam on a given grid.

    Public lattice: n_x = round(L * lam^{3/4}) positions of spacing
    delta = L / n_x (the torus-closing rounding of lam^{-3/4}) and
    frequencies xi = j * xi_step, xi_step = 2^{round(3/4 log2 lam)}, with
    |xi| in [lam/4, 4 lam].  Analysis lattice: positions oversampled by
    sigma (sigma * n_x >= grid size, so mod-lattice couplings vanish) and
    columns |j| <= j_half sized so omitted columns sit beyond the window
    stopband for every mode of the widened band.
    """

    lam: float
    grid: GridSpec
    n_x: int
    xi_step: int
    sigma: int
    j_half: int

    @classmethod
    def for_lambda(cls, lam: float, grid: GridSpec) -> "FrameGeometry":
        lg = math.log2(lam)
        if abs(lg - round(lg)) > 1e-12 or lam < 2 ** 4:
            raise ValueError(f"lam = {lam} must be dyadic and >= 16")
        if grid.n_points < 8 * lam:
            raise ValueError(f"grid with n = {grid.n_points} cannot resolve "
                             f"the widened band of lam = {lam} (need >= 8 lam)")
        n_x = int(round(grid.length * lam ** 0.75))
        xi_step = 2 ** int(round(0.75 * lg))
        sigma = -(-grid.n_points // n_x)            # ceil
        delta = grid.length / n_x
        step_w = xi_step * delta
        j_half = int(math.ceil((4 * lam * delta + STOPBAND) / step_w)) + 1
        return cls(lam, grid, n_x, xi_step, sigma, j_half)

    @property
    def spacing(self) -> float:
        """Public x-lattice spacing (the packet scale ~lam^{-3/4})."""
        return self.grid.length / self.n_x

    @property
    def tube_radius(self) -> float:
        """Half the spacing: per frequency column the tubes tile the torus."""
        return 0.5 * self.spacing

    @property
    def n_x_analysis(self) -> int:
        return self.sigma * self.n_x

    @property
    def analysis_spacing(self) -> float:
        return self.grid.length / self.n_x_analysis

    def x_centers(self) -> np.ndarray:
        return self.spacing * np.arange(self.n_x)

    def analysis_x(self) -> np.ndarray:
        return self.analysis_spacing * np.arange(self.n_x_analysis)

    def analysis_j(self) -> np.ndarray:
        return np.arange(-self.j_half, self.j_half + 1)

    def analysis_xi(self) -> np.ndarray:
        return self.analysis_j() * self.xi_step

    def core_j_values(self) -> np.ndarray:
        j = self.analysis_j()
        xi = np.abs(j) * self.xi_step
        return j[(xi >= self.lam / 4) & (xi <= 4 * self.lam)]

    def j_values(self) -> np.ndarray:
        return self.core_j_values()

    def xi_values(self) -> np.ndarray:
        """Packet-band frequencies |xi| in [lam/4, 4 lam]."""
        return self.core_j_values() * self.xi_step


@dataclass(frozen=True)
class PacketIndex:
    """Tube index T = (x, xi) as analysis-lattice coordinates (m, j)."""

    m: int
    j: int
    geometry: FrameGeometry

    def __post_init__(self):
        g = self.geometry
        if not 0 <= self.m < g.n_x_analysis:
            raise ValueError(f"m = {self.m} outside the x-lattice")
        if not abs(self.j) <= g.j_half:
            raise ValueError(f"j = {self.j} outside the retained columns")

    @property
    def x(self) -> float:
        return self.m * self.geometry.analysis_spacing

    @property
    def xi(self) -> float:
        return float(self.j * self.geometry.xi_step)

    @property
    def is_core(self) -> bool:
        g = self.geometry
        return g.lam / 4 <= abs(self.xi) <= 4 * g.lam


def packet_lattice(lam: float, grid: GridSpec) -> list[PacketIndex]:
    """The packet-band lattice: coarse positions, |xi| in [lam/4, 4 lam]."""
    g = FrameGeometry.for_lambda(lam, grid)
    return [PacketIndex(m * g.sigma, int(j), g)
            for j in g.core_j_values() for m in range(g.n_x)]


# ---------------------------------------------------------------------------
# Frame analysis / synthesis
# ---------------------------------------------------------------------------

class FrameCoeffs:
    """Coefficients c_T on the analysis lattice: array (n_columns, n_x_analysis)
    with rows ordered like geometry.analysis_j()."""

    def __init__(self, geometry: FrameGeometry, values: np.ndarray | None = None):
        self.geometry = geometry
        shape = (2 * geometry.j_half + 1, geometry.n_x_analysis)
        if values is None:
            values = np.zeros(shape, dtype=complex)
        if values.shape != shape:
            raise ValueError("coefficient array shape mismatch")
        self.values = values

    def __getitem__(self, index: PacketIndex) -> complex:
        return complex(self.values[index.j + self.geometry.j_half, index.m])

    def l2(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)))

    def rows(self):
        """(x, xi, re, im) rows for CSV serialization."""
        g = self.geometry
        dx = g.analysis_spacing
        step = g.xi_step
        for row, j in enumerate(g.analysis_j()):
            for m in range(g.n_x_analysis):
                c = self.values[row, m]
                yield (m * dx, float(j * step), c.real, c.imag)


def _offset_transform(cutoff: FrameCutoff, geometry: FrameGeometry) -> np.ndarray:
    """ghat((k - xi_j) * delta) as an (n_columns, n) array on fft-ordered k."""
    k = geometry.grid.k.astype(int)
    delta = geometry.spacing
    xis = geometry.analysis_xi()
    max_off = int(np.max(np.abs(k))) + int(abs(xis).max()) + 1
    table = cutoff.transform_integers(delta, max_off + 1)
    return np.stack([table[np.abs(k - int(xi))] for xi in xis])


def _amplitude(geometry: FrameGeometry) -> float:
    return geometry.lam ** 0.375


def _analysis(u0: Field, geometry: FrameGeometry,
              cutoff: FrameCutoff) -> np.ndarray:
    """c[j, m] = A delta_w sum_k fhat(k) ghat((k - xi_j) delta_w)
    e^{i(k - xi_j) x_m}, via one length-M FFT per frequency column
    (M = n_x_analysis; exact because fields are trigonometric polynomials)."""
    g = geometry
    M = g.n_x_analysis
    fhat = u0.spectrum
    k = g.grid.k.astype(int)
    kmod = np.mod(k, M)
    G = _offset_transform(cutoff, g)
    A = _amplitude(g)
    ms = np.arange(M)
    out = np.empty((G.shape[0], M), dtype=complex)
    for row, xi in enumerate(g.analysis_xi()):
        w = np.zeros(M, dtype=complex)
        np.add.at(w, kmod, fhat * G[row])
        s = M * np.fft.ifft(w)                     # sum_k (...) e^{i k x_m}
        out[row] = A * g.spacing * s * np.exp(-2j * np.pi * int(xi) * ms / M)
    return out


def _synthesis(coeffs_values: np.ndarray, geometry: FrameGeometry,
               cutoff: FrameCutoff,
               shifts: np.ndarray | None = None,
               phases: np.ndarray | None = None) -> Field:
    """uhat(k) = (A delta_w / L) sum_j ghat((k - xi_j) delta_w)
    sum_m c[j,m] e^{-i(k - xi_j)(x_m + shift_j)} e^{i phase_j}.

    Per-column shifts/phases realize rigid packet transport (constant
    coefficients): x_m -> x_m + v_j dt, overall phase -omega_j dt.
    """
    g = geometry
    n = g.grid.n_points
    M = g.n_x_analysis
    k = g.grid.k.astype(int)
    kmod = np.mod(k, M)
    G = _offset_transform(cutoff, g)
    A = _amplitude(g)
    ms = np.arange(M)
    uhat = np.zeros(n, dtype=complex)
    for row, xi in enumerate(g.analysis_xi()):
        d = coeffs_values[row] * np.exp(2j * np.pi * int(xi) * ms / M)
        S = np.fft.fft(d)                          # sum_m d_m e^{-i k x_m}
        term = G[row] * S[kmod]
        if shifts is not None:
            term = term * np.exp(-1j * (k - xi) * shifts[row])
        if phases is not None:
            term = term * np.exp(1j * phases[row])
        uhat += term
    uhat *= A * g.spacing / g.grid.length
    return Field(g.grid, spectrum=uhat)


_FRAME_CONSTANTS: dict = {}


def frame_constant(lam: float, grid: GridSpec,
                   cutoff: FrameCutoff | None = None) -> float:
    """Measured once per (lam, grid, cutoff) by applying the frame operator
    to the reference mode e^{i lam x}."""
    cutoff = cutoff or default_cutoff()
    key = (float(lam), grid.n_points, round(grid.length, 12), id(cutoff))
    hit = _FRAME_CONSTANTS.get(key)
    if hit is None:
        g = FrameGeometry.for_lambda(lam, grid)
        ref = sp.mode(grid, int(lam))
        out = _synthesis(_analysis(ref, g, cutoff), g, cutoff)
        hit = float(out.spectrum[int(lam)].real)
        if hit <= 0:
            raise RuntimeError("frame constant measurement degenerate")
        _FRAME_CONSTANTS[key] = hit
    return hit


def band_mass_outside(u0: Field, lam: float) -> float:
    spec = u0.spectrum
    k = np.abs(u0.grid.k)
    outside = (k < lam / 4) | (k > 4 * lam)
    total = float(np.sum(np.abs(spec) ** 2))
    if total == 0.0:
        return 0.0
    return math.sqrt(float(np.sum(np.abs(spec[outside]) ** 2)) / total)


def _band_project(u: Field, lam: float) -> Field:
    spec = u.spectrum.copy()
    k = np.abs(u.grid.k)
    spec[(k < lam / 4) | (k > 4 * lam)] = 0.0
    return Field(u.grid, spectrum=spec)


def frame_decompose(u0: Field, lam: float,
                    cutoff: FrameCutoff | None = None) -> FrameCoeffs:
    """Analysis coefficients c_T = int u0 conj(v_T) on the analysis lattice."""
    cutoff = cutoff or default_cutoff()
    g = FrameGeometry.for_lambda(lam, u0.grid)
    leak = band_mass_outside(u0, lam)
    if leak > 1e-10:
        warnings.warn(f"input has relative spectral mass {leak:.3e} outside "
                      f"the widened band [lam/4, 4 lam]; reconstruction "
                      f"error will reflect it", stacklevel=2)
    return FrameCoeffs(g, _analysis(u0, g, cutoff))


def frame_reconstruct(coeffs: FrameCoeffs,
                      cutoff: FrameCutoff | None = None,
                      normalized: bool = True) -> Field:
    """Synthesis sum c_T v_T; when normalized, divided by the measured frame
    constant and projected to the widened band [lam/4, 4 lam]."""
    cutoff = cutoff or default_cutoff()
    g = coeffs.geometry
    out = _synthesis(coeffs.values, g, cutoff)
    if normalized:
        C = frame_constant(g.lam, g.grid, cutoff)
        out = _band_project((1.0 / C) * out, g.lam)
    return out


# ---------------------------------------------------------------------------
# Packets
# ---------------------------------------------------------------------------

@dataclass
class Packet:
    """A single wave packet sampled on the stored time grid."""

    index: PacketIndex
    times: np.ndarray
    fields: list[Field]
    centers: np.ndarray
    phase_mode: str
    cutoff: FrameCutoff

    @property
    def grid(self) -> GridSpec:
        return self.index.geometry.grid

    def field_at(self, i: int) -> Field:
        return self.fields[i]


def _wrap(d: np.ndarray, L: float) -> np.ndarray:
    return (d + L / 2) % L - L / 2


def build_packet(index: PacketIndex, coeffs: TruncatedCoeffs,
                 times=None, s0: float = 0.0,
                 phases: EikonalPhase | None = None,
                 cutoff: FrameCutoff | None = None,
                 phase_mode: str = "eikonal") -> Packet:
    """u_T(t, y) = lam^{3/8} chi((y - x^t)/delta) e^{i psi_T(t, y)}.

    With phases given and phase_mode="eikonal", psi_T is the transported
    eikonal phase and x^t follows its central ray; phase_mode="frozen"
    keeps the same moving envelope but carries the rigid linear phase
    xi (y - x) - H(x, xi)(t - s0) a constant-coefficient packet would have.
    Without phases the frozen form around the Hamilton ray of (x, xi) is
    used (exact for constant coefficients: v = H_xi, omega = H).
    """
    if not index.is_core:
        raise ValueError("packets are built for |xi| in [lam/4, 4 lam]")
    cutoff = cutoff or default_cutoff()
    g = index.geometry
    grid = g.grid
    y = grid.x
    L = grid.length
    A = _amplitude(g)
    delta = g.spacing
    s_base = float(s0)
    Hval, H_xi, _ = hamiltonian_eval(coeffs, s_base, np.array([index.x]),
                                     np.array([index.xi]))
    omega = Hval[0]

    if phases is not None:
        times = np.asarray(phases.times, dtype=float)
        centers = np.asarray(phases.center, dtype=float)
    else:
        if times is None:
            raise ValueError("either phases or explicit times are required")
        times = np.asarray([float(t) for t in times])
        centers = index.x + H_xi[0] * (times - s_base)
        phase_mode = "frozen"

    fields = []
    for i, t in enumerate(times):
        d = _wrap(y - centers[i], L)
        env = A * cutoff(d / delta)
        if phases is not None and phase_mode == "eikonal":
            # lift grid points to the chart around the (unwrapped) center
            ph = np.where(env > 0,
                          phases.psi(i, centers[i] + d), 0.0)
        else:
            ph = index.xi * (d + centers[i] - index.x) - omega * (t - s_base)
        fields.append(Field(grid, samples=env * np.exp(1j * ph)))
    return Packet(index, times, fields, np.asarray(centers, dtype=float),
                  phase_mode, cutoff)


def packet_l2_history(packet: Packet, oversample: int = 16) -> np.ndarray:
    """Continuum L^2 norm of the packet at each stored time.

    |u_T| is the translated window envelope (the phase is unimodular), so
    the norm is integrated from the analytic envelope on an oversampled
    grid; the simulation grid resolves the band but not the envelope's
    full spectral tail, so the FFT norm of the samples is ~1e-5 accurate
    while this quadrature is accurate (and center-independent) to <1e-10.
    """
    g = packet.index.geometry
    grid = g.grid
    L = grid.length
    n_fine = oversample * grid.n_points
    y = L / n_fine * np.arange(n_fine)
    A = _amplitude(g)
    out = []
    for c in packet.centers:
        env = A * packet.cutoff(_wrap(y - c, L) / g.spacing)
        out.append(math.sqrt(float(np.sum(env ** 2)) * L / n_fine))
    return np.asarray(out)


# ---------------------------------------------------------------------------
# Matching
# ---------------------------------------------------------------------------

@dataclass
class MatchReport:
    coeffs: FrameCoeffs
    residuals: list[float]
    contraction: float
    iterations: int
    s0: float


class NonContractionError(RuntimeError):
    """The matching iteration failed to contract (rho_c >= 0.9): the frame
    and the packet phases are inconsistent."""


def match_data(u0: Field, lam: float, s0: float = 0.0, tol: float = 1e-6,
               max_iter: int = 20,
               cutoff: FrameCutoff | None = None) -> MatchReport:
    """Iterative matching a <- a + decompose(residual)/C at the base time,
    where the packets at s0 coincide with the frame elements.  The residual
    is measured after band projection (the reconstruction guarantee is for
    the widened band)."""
    cutoff = cutoff or default_cutoff()
    g = FrameGeometry.for_lambda(lam, u0.grid)
    C = frame_constant(lam, u0.grid, cutoff)
    norm0 = sp.l2_norm(u0)
    coeffs = FrameCoeffs(g)
    if norm0 == 0.0:
        return MatchReport(coeffs, [0.0], 0.0, 0, s0)
    residual = u0
    residuals = [1.0]
    rho = 0.0
    for it in range(1, max_iter + 1):
        delta = _analysis(residual, g, cutoff)
        coeffs = FrameCoeffs(g, coeffs.values + delta)
        residual = u0 - _band_project(
            (1.0 / C) * _synthesis(coeffs.values, g, cutoff), g.lam)
        r = sp.l2_norm(residual) / norm0
        if residuals[-1] > 0:
            rho = max(rho, r / residuals[-1])
        residuals.append(r)
        if r <= tol:
            return MatchReport(coeffs, residuals, rho, it, s0)
        if rho >= 0.9:
            raise NonContractionError(
                f"matching iteration is not contracting (rho_c = {rho:.3f})")
    return MatchReport(coeffs, residuals, rho, max_iter, s0)


def match_source(f_slices, lam: float, tol: float = 1e-8,
                 cutoff: FrameCutoff | None = None) -> list[tuple[float, MatchReport]]:
    """Per-slice matching of a time-tagged source [(s, field), ...];
    zero slices are dropped (f = 0 gives an empty family)."""
    family = []
    for s, f in f_slices:
        if sp.l2_norm(f) == 0.0:
            continue
        family.append((float(s), match_data(f, lam, s0=s, tol=tol,
                                            cutoff=cutoff)))
    return family


def duhamel_superpose(family, lam: float, grid: GridSpec, V0: float, a0: float,
                      t: float, cutoff: FrameCutoff | None = None) -> Field:
    """Trapezoid Duhamel superposition for constant coefficients:
    u(t) = int_0^t e^{-i(t-s)(V0 D + sqrt(a0 |D|))} f(s) ds with each f(s)
    realized as its matched packet superposition."""
    cutoff = cutoff or default_cutoff()
    out = np.zeros(grid.n_points, dtype=complex)
    k = grid.k
    omega = V0 * k + np.sqrt(a0 * np.abs(k))
    C = frame_constant(lam, grid, cutoff)
    times = [s for s, _ in family]
    for i, (s, rep) in enumerate(family):
        if s > t + 1e-14:
            continue
        lo = times[i - 1] if i > 0 else times[i]
        hi = min(times[i + 1] if i + 1 < len(times) else t, t)
        w = 0.5 * (hi - lo) if len(times) > 1 else float(t - s)
        if w <= 0:
            continue
        slice_f = _synthesis(rep.coeffs.values, rep.coeffs.geometry,
                             cutoff).spectrum / C
        out += w * slice_f * np.exp(-1j * omega * (t - s))
    return Field(grid, spectrum=out)


# ---------------------------------------------------------------------------
# Residual and orthogonality measurement
# ---------------------------------------------------------------------------

def packet_residual(packet: Packet, coeffs: TruncatedCoeffs,
                    lam: float) -> dict:
    """|| (d_t + H) S_lam u_T ||_{L^2(I;L^2)} (left quantization, d_t by
    centered differences over the stored times) and its ratio to
    || sqrt(a_lam) |D|^{1/2} u_T ||_{L^2(I;L^2)}."""
    from . import dispersive as dsp

    times = packet.times
    if len(times) < 3:
        raise ValueError("need at least 3 stored times for d_t")
    grid = packet.grid
    res_norms = []
    disp_norms = []
    mid_times = []
    proj = [sp.lp_widened(u, lam) for u in packet.fields]
    for i in range(1, len(times) - 1):
        dt = times[i + 1] - times[i - 1]
        du = (1.0 / dt) * (proj[i + 1] - proj[i - 1])
        Hu = dsp.apply_H(coeffs, times[i], proj[i], quantization="left")
        res_norms.append(sp.l2_norm(du + Hu))
        half = sp.fourier_multiplier(proj[i], lambda k: np.sqrt(np.abs(k)))
        disp = Field(grid, samples=np.sqrt(coeffs.a(times[i], grid.x))
                     * np.asarray(half.samples))
        disp_norms.append(sp.l2_norm(disp))
        mid_times.append(times[i])
    mid_times = np.asarray(mid_times)
    num = fits.l2_in_time(mid_times, np.asarray(res_norms))
    den = fits.l2_in_time(mid_times, np.asarray(disp_norms))
    return {"residual_l2l2": num, "dispersive_l2l2": den,
            "ratio": num / den if den > 0 else float("nan")}


def superposition_norm(coeff_values: np.ndarray, geometry: FrameGeometry,
                       t: float, s0: float, coeffs: TruncatedCoeffs,
                       cutoff: FrameCutoff | None = None) -> float:
    """||sum_T c_T u_T(t)||^2 / sum |c_T|^2 for rigidly transported packets
    (each frequency column translates at its group velocity; exact for
    constant coefficients).  coeff_values has the analysis-lattice shape;
    rows outside the packet band must be zero."""
    cutoff = cutoff or default_cutoff()
    g = geometry
    xis = g.analysis_xi().astype(float)
    core = (np.abs(xis) >= g.lam / 4) & (np.abs(xis) <= 4 * g.lam)
    if np.any(np.abs(coeff_values[~core]) > 0):
        raise ValueError("superposition coefficients must live on the "
                         "packet band")
    shifts = np.zeros(len(xis))
    phases = np.zeros(len(xis))
    H, H_xi, _ = hamiltonian_eval(coeffs, s0, np.zeros(int(core.sum())),
                                  xis[core])
    dt = t - s0
    shifts[core] = H_xi * dt
    phases[core] = -H * dt
    u = _synthesis(coeff_values, g, cutoff, shifts=shifts, phases=phases)
    denom = float(np.sum(np.abs(coeff_values) ** 2))
    return sp.l2_norm(u) ** 2 / denom if denom > 0 else 0.0


def frame_bound_scan(lams, rng, t: float = 0.1, V0: float = 0.02,
                     a0: float = 9.81, n_trials: int = 20,
                     cutoff: FrameCutoff | None = None) -> dict:
    """Monte-Carlo ratio ||sum c_T u_T(t)||^2 / sum|c_T|^2 over random
    unit-ell^2 packet coefficients; reports the worst ratio per lam and
    the constant against log2 lam."""
    from .hamiltonian import FrequencyConstants

    rows = []
    for lam in lams:
        grid = GridSpec(int(8 * lam))
        g = FrameGeometry.for_lambda(lam, grid)
        co = TruncatedCoeffs.constant(grid, V0, a0, FrequencyConstants(lam))
        xis = g.analysis_xi()
        core = (np.abs(xis) >= lam / 4) & (np.abs(xis) <= 4 * lam)
        shape = (int(core.sum()), g.n_x_analysis)
        worst = 0.0
        for _ in range(n_trials):
            c = np.zeros((len(xis), g.n_x_analysis), dtype=complex)
            block = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
            c[core] = block / np.sqrt(np.sum(np.abs(block) ** 2))
            worst = max(worst, superposition_norm(c, g, t, 0.0, co, cutoff))
        rows.append([float(lam), worst, worst / math.log2(lam)])
    return {"rows": rows, "C": max(r[2] for r in rows)}
