"""Evolution, trace, energy and identity-residual tests."""

import math

import numpy as np
import pytest

from wavetank import spectral as sp
from wavetank import zakharov as zk

GRID = sp.GridSpec(128)
PARAMS = zk.WaveParams(n_z=32)


def _state(eta_fn, psi_fn, grid=GRID, params=PARAMS):
    return zk.WaveState(sp.from_function(grid, eta_fn),
                        sp.from_function(grid, psi_fn), 0.0, params)


def _rest(grid=GRID, params=PARAMS):
    return zk.WaveState(sp.zeros(grid), sp.zeros(grid), 0.0, params)


def test_rhs_flat_rest():
    de, dp = zk.rhs(_rest())
    assert sp.linf_norm(de) < 1e-14
    assert sp.linf_norm(dp) < 1e-14


def test_rhs_linear_wave_oracle():
    # eta = 0, psi = eps cos(kx): d_t eta = eps |k| tanh(hk) cos(kx) + O(eps^2)
    eps, k0, h = 1e-4, 4, 1.0
    st = _state(lambda x: 0 * x, lambda x: eps * np.cos(k0 * x))
    de, _ = zk.rhs(st)
    ref = eps * k0 * math.tanh(h * k0) * np.cos(k0 * GRID.x)
    assert np.max(np.abs(np.asarray(de.samples).real - ref)) < 1e-6 * eps


def test_rhs_translation_equivariance():
    rng = np.random.default_rng(0)
    eta = 1e-3 * sp.random_field(GRID, rng, band=(1, 8), real=True)
    psi = 1e-3 * sp.random_field(GRID, rng, band=(1, 8), real=True)
    st = zk.WaveState(eta, psi, 0.0, PARAMS)
    de, dp = zk.rhs(st)
    shift = GRID.n_points // 4

    def roll(u):
        return sp.Field(GRID, samples=np.roll(np.asarray(u.samples), shift))

    de2, dp2 = zk.rhs(zk.WaveState(roll(eta), roll(psi), 0.0, PARAMS))
    assert sp.l2_norm(de2 - roll(de)) < 1e-10 * max(sp.l2_norm(de), 1e-30)
    assert sp.l2_norm(dp2 - roll(dp)) < 1e-10 * sp.l2_norm(dp)


def test_energy_flat_and_oracle():
    assert zk.energy(_rest()) == pytest.approx(0.0, abs=1e-14)
    eps, k0, h = 1e-3, 4, 1.0
    st = _state(lambda x: 0 * x, lambda x: eps * np.cos(k0 * x))
    ref = 0.5 * eps ** 2 * math.pi * k0 * math.tanh(h * k0)
    assert zk.energy(st) == pytest.approx(ref, rel=1e-8)


def test_traces_flat_rest():
    tr = zk.traces(_rest())
    assert sp.linf_norm(tr.V) < 1e-12
    assert sp.linf_norm(tr.B) < 1e-12
    assert np.max(np.abs(np.asarray(tr.a.samples) - PARAMS.g)) < 1e-8 * PARAMS.g


def test_traces_zero_eta_collapse():
    eps, k0 = 1e-3, 3
    st = _state(lambda x: 0 * x, lambda x: eps * np.sin(k0 * x))
    tr = zk.traces(st, with_taylor=False)
    ref_B = eps * k0 * math.tanh(k0) * np.sin(k0 * GRID.x)
    ref_V = eps * k0 * np.cos(k0 * GRID.x)
    assert np.max(np.abs(np.asarray(tr.B.samples) - ref_B)) < 1e-10 * eps * k0
    assert np.max(np.abs(np.asarray(tr.V.samples) - ref_V)) < 1e-12 * eps * k0


def test_traces_gradient_identity():
    rng = np.random.default_rng(1)
    eta = 5e-3 * sp.random_field(GRID, rng, band=(1, 10), real=True)
    psi = 5e-3 * sp.random_field(GRID, rng, band=(1, 10), real=True)
    st = zk.WaveState(eta, psi, 0.0, PARAMS)
    tr = zk.traces(st, with_taylor=False)
    resid = sp.derivative(psi) - tr.V - sp.Field(
        GRID, samples=np.asarray(tr.B.samples)
        * np.asarray(sp.derivative(eta).samples))
    assert sp.linf_norm(resid) < 1e-12 * max(sp.linf_norm(tr.V), 1e-30)


def test_step_flat_rest_fixed_point():
    st = zk.step(_rest(), 1e-3)
    assert sp.linf_norm(st.eta) < 1e-14
    assert sp.linf_norm(st.psi) < 1e-14
    assert st.t == pytest.approx(1e-3)


def test_step_time_reversible():
    eps, k0 = 1e-4, 3
    st = _state(lambda x: 0 * x, lambda x: eps * np.cos(k0 * x))
    fwd = zk.step(st, 1e-3)
    back = zk.step(fwd, -1e-3)
    assert sp.l2_norm(back.eta - st.eta) < 1e-10 * eps
    assert sp.l2_norm(back.psi - st.psi) < 1e-10 * eps


def test_evolve_linear_dispersion():
    # frequency of the k=4 elevation mode matches sqrt(g k tanh(k h)) to 0.5%
    eps, k0 = 1e-4, 4
    st = _state(lambda x: 0 * x, lambda x: eps * np.cos(k0 * x))
    dt = 2e-3
    traj = zk.evolve(st, 0.5, dt)
    assert not traj.aborted
    y = np.array([s.eta.spectrum[k0].real for s in traj.states])
    # harmonic oscillator: omega^2 = -y'' / y, averaged where |y| is large
    sel = np.abs(y[1:-1]) > 0.5 * np.max(np.abs(y))
    ydd = (y[2:] - 2 * y[1:-1] + y[:-2]) / dt ** 2
    omega = math.sqrt(np.median(-ydd[sel] / y[1:-1][sel]))
    ref = math.sqrt(PARAMS.g * k0 * math.tanh(k0 * PARAMS.h))
    assert abs(omega - ref) < 5e-3 * ref


def test_evolve_conserves_mean_and_energy():
    rng = np.random.default_rng(2)
    eta = 1e-3 * sp.random_field(GRID, rng, band=(1, 6), real=True)
    psi = 1e-3 * sp.random_field(GRID, rng, band=(1, 6), real=True)
    st = zk.WaveState(eta, psi, 0.0, PARAMS)
    mean0 = st.eta.spectrum[0].real
    e0 = zk.energy(st)
    traj = zk.evolve(st, 0.1, 1e-3)
    mean1 = traj.states[-1].eta.spectrum[0].real
    e1 = zk.energy(traj.states[-1])
    assert abs(mean1 - mean0) < 1e-12
    assert abs(e1 - e0) < 1e-5 * e0  # RK4 drift ~ dt^4; tighter at smaller dt


def test_evolve_aborts_on_blowup():
    # absurd dt far above the CFL limit blows up; evolve flags and stops
    st = _state(lambda x: 0.02 * np.sin(x), lambda x: 0.02 * np.cos(x))
    traj = zk.evolve(st, 50.0, 1.0)
    assert traj.aborted
    assert np.all(np.isfinite(traj.states[-1].eta.samples))


def test_cfl_limit_scale():
    st = _rest()
    ref = PARAMS.c_cfl / math.sqrt(PARAMS.g * GRID.n_points / 2)
    assert zk.cfl_limit(st) == pytest.approx(ref, rel=1e-12)


def test_identity_residuals_flat_rest():
    sts = [zk.WaveState(sp.zeros(GRID), sp.zeros(GRID), i * 1e-3, PARAMS)
           for i in range(3)]
    res = zk.identity_residuals(zk.Trajectory(sts, 1e-3, 1))
    # everything zero except the a - g row, which reads at the floor of the
    # pressure-solver resolution
    assert all(v < 1e-3 for v in res.values())


def test_identity_residuals_requires_three():
    sts = [_rest(), _rest()]
    with pytest.raises(ValueError):
        zk.identity_residuals(zk.Trajectory(sts, 1e-3, 1))


def test_identity_residuals_small_wave_second_order():
    # L eta = B residual small and quartering under snapshot-dt halving.
    # Deep water (h = 3) keeps the accepted bottom-flux error of the DtN
    # construction exponentially below the differencing error being measured.
    eps = 5e-3
    params = zk.WaveParams(h=3.0, n_z=32)
    st = _state(lambda x: eps * np.sin(2 * x), lambda x: eps * np.cos(x),
                params=params)
    dt = 1e-3
    traj = zk.evolve(st, 16 * dt, dt)
    S = traj.states

    def residuals(stride):
        sub = zk.Trajectory([S[8 - stride], S[8], S[8 + stride]], dt, stride)
        return zk.identity_residuals(sub)

    res_coarse = residuals(8)
    res_fine = residuals(4)
    assert res_coarse["L_eta_minus_B"] < 5e-3
    assert res_fine["L_eta_minus_B"] < 0.35 * res_coarse["L_eta_minus_B"]
    # the full identity set is measured and finite
    assert all(np.isfinite(v) for v in res_fine.values())
