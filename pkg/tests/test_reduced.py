import math

import numpy as np
import pytest
from scipy.linalg import expm

from flobloch import (
    AngularState,
    ReducedModel,
    bloch_state,
    drift_per_period,
    evolve_reduced,
    init_gaussian,
    solve_bands,
    to_lab_frame,
)
from flobloch.errors import CoverageError, DomainError, ParameterError
from flobloch.reduced import LAB, ROTATING, EvolutionLog, circular_mean

TWO_PI = 2.0 * math.pi


def small_model(V_n=2.0, f=0.0):
    return ReducedModel(M=1.0, n=5, V_n=V_n, f=f, hbar=1.0)


def test_init_gaussian_basics():
    state = init_gaussian(center=math.pi, width=0.2, N=256)
    rho = np.abs(state.amps) ** 2
    assert state.theta[int(np.argmax(rho))] == pytest.approx(math.pi, abs=0.03)
    assert state.norm() == pytest.approx(1.0, abs=1e-12)
    assert circular_mean(state.theta, rho * (TWO_PI / 256)) == pytest.approx(
        math.pi, abs=1e-10)


def test_init_gaussian_width_guard():
    with pytest.raises(ParameterError):
        init_gaussian(center=0.0, width=1.2, N=128)
    with pytest.raises(ParameterError):
        init_gaussian(center=0.0, width=-0.1, N=128)


def test_stationary_bloch_state():
    # split-step density wiggle on an eigenstate scales as dt^2; at this dt
    # it sits below the 1e-8 stationarity tolerance
    model = small_model()
    bands = solve_bands(model, [0.0], B=1)
    phi = bloch_state(bands, 0, 0.0, 256)
    state = AngularState(N=256, amps=phi)
    log = evolve_reduced(state, model, dt=2e-5, t_end=0.5, snapshot_every=5000)
    drift = np.max(np.abs(log.density_snapshots - log.density_snapshots[0]))
    assert drift < 1e-8 * np.max(log.density_snapshots[0])


def test_free_acceleration_gauge_bookkeeping():
    model = ReducedModel(M=1.0, n=5, V_n=0.0, f=0.7, hbar=1.0)
    state = init_gaussian(center=2.0, width=0.3, N=128)
    log = evolve_reduced(state, model, dt=1e-2, t_end=5.0, snapshot_every=50)
    expect = log.mean_momentum[0] - model.f * log.times
    assert np.max(np.abs(log.mean_momentum - expect)) < 1e-12


def test_unitarity_ten_thousand_steps():
    model = small_model(V_n=2.0, f=0.4)
    state = init_gaussian(center=math.pi / 5.0, width=0.3, N=128)
    log = evolve_reduced(state, model, dt=5e-4, t_end=5.0, snapshot_every=10000)
    assert log.norm_drift < 1e-10


def test_energy_conservation_without_tilt():
    model = small_model(V_n=2.0)
    state = init_gaussian(center=math.pi / 5.0, width=0.3, N=256)

    def energy(s):
        k = np.fft.fftfreq(s.N, d=1.0 / s.N)
        c = np.fft.fft(s.amps)
        kin = np.sum(np.abs(c) ** 2 * k**2) / np.sum(np.abs(c) ** 2)
        kin *= model.hbar**2 / (2.0 * model.M)
        rho = np.abs(s.amps) ** 2 * (TWO_PI / s.N)
        pot = np.sum(rho * model.V_n * np.cos(model.n * s.theta))
        return kin + pot

    e0 = energy(state)
    log = evolve_reduced(state, model, dt=1e-4, t_end=2.0, snapshot_every=20000)
    e1 = energy(log.final_state)
    assert abs(e1 - e0) < 1e-8 * abs(e0)


def test_time_reversal_fidelity():
    model = small_model(V_n=2.0, f=0.5)
    state = init_gaussian(center=1.0, width=0.25, N=128)
    fwd = evolve_reduced(state, model, dt=1e-3, t_end=3.0, snapshot_every=3000)
    back = evolve_reduced(fwd.final_state, model, dt=-1e-3, t_end=-3.0,
                          snapshot_every=3000)
    overlap = np.vdot(state.amps, back.final_state.amps) * TWO_PI / state.N
    assert abs(1.0 - abs(overlap)) < 1e-8


def test_grid_convergence():
    model = small_model(V_n=2.0, f=0.3)
    logs = []
    for n_grid in (128, 256):
        state = init_gaussian(center=1.0, width=0.25, N=n_grid)
        logs.append(evolve_reduced(state, model, dt=1e-3, t_end=2.0,
                                   snapshot_every=200))
    assert np.max(np.abs(logs[0].circ_mean_theta - logs[1].circ_mean_theta)) < 1e-8


def test_dt_bound_enforced():
    model = small_model(V_n=2.0)
    state = init_gaussian(center=1.0, width=0.25, N=128)
    with pytest.raises(ParameterError):
        evolve_reduced(state, model, dt=1.0, t_end=2.0, snapshot_every=10)


def test_grid_size_floor():
    model = ReducedModel(M=1.0, n=20, V_n=1.0, hbar=1.0)
    state = init_gaussian(center=1.0, width=0.25, N=128)  # < 16*n = 320
    with pytest.raises(ParameterError):
        evolve_reduced(state, model, dt=1e-3, t_end=1.0, snapshot_every=10)


def _dense_oracle_evolution(model, psi0, k, t_end, centered_tilt):
    """Exact expm evolution in the plane-wave basis with the sawtooth tilt.

    Matrix elements of theta on (0, 2*pi): <k|theta|k'> = pi on the diagonal
    and -i/(k - k') off it.  centered_tilt subtracts pi (the Eq.-style
    f*(theta - pi) probe).
    """
    dim = len(k)
    kin = np.diag(model.hbar**2 * k**2 / (2.0 * model.M))
    pot = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            if k[i] - k[j] == model.n:
                pot[i, j] = model.V_n / 2.0
            elif k[j] - k[i] == model.n:
                pot[i, j] = model.V_n / 2.0
    tilt = np.full((dim, dim), 0.0, dtype=complex)
    for i in range(dim):
        for j in range(dim):
            tilt[i, j] = math.pi if i == j else -1j / (k[i] - k[j])
    if centered_tilt:
        tilt -= math.pi * np.eye(dim)
    h = kin + pot + model.f * tilt
    u = expm(-1j * h * t_end / model.hbar)
    return u @ psi0


def _packet_in_plane_wave_basis(state, kmax):
    k_full = np.fft.fftfreq(state.N, d=1.0 / state.N).astype(int)
    c = np.fft.fft(state.amps) / state.N  # amplitude of e^{ik theta}
    sel = np.abs(k_full) <= kmax
    return k_full[sel], c[sel] * math.sqrt(TWO_PI), sel


def test_offset_invariance_dense_sawtooth():
    # the paper-style probe is f*(theta - pi); the constant -pi*f term must
    # only contribute a global phase, checked on the exact sawtooth matrix
    model = ReducedModel(M=1.0, n=4, V_n=1.0, f=0.3, hbar=1.0)
    state = init_gaussian(center=math.pi, width=0.35, N=128)
    k, psi0, _ = _packet_in_plane_wave_basis(state, kmax=24)
    assert np.sum(np.abs(psi0) ** 2) == pytest.approx(1.0, abs=1e-10)
    t_end = 1.5
    ref = _dense_oracle_evolution(model, psi0, k, t_end, centered_tilt=False)
    ref_centered = _dense_oracle_evolution(model, psi0, k, t_end,
                                           centered_tilt=True)
    assert np.max(np.abs(np.abs(ref) ** 2 - np.abs(ref_centered) ** 2)) < 1e-12
    phase = ref_centered / ref
    phase = phase[np.abs(ref) > 1e-8]
    assert np.max(np.abs(phase - np.exp(1j * math.pi * model.f * t_end
                                        / model.hbar))) < 1e-9


def _dense_gauge_evolution(model, psi0, k, t_end, steps):
    """Time-ordered dense evolution of (hbar*k - f*t)^2/2M + V_n/2 couplings.

    Independent route to the same dynamics as the split-step gauge
    propagator: midpoint-sampled eigendecomposition per sub-step.
    """
    dim = len(k)
    off = np.zeros((dim, dim))
    for i in range(dim):
        for j in range(dim):
            if abs(k[i] - k[j]) == model.n:
                off[i, j] = model.V_n / 2.0
    psi = psi0.astype(complex)
    dt = t_end / steps
    for s in range(steps):
        tm = (s + 0.5) * dt
        diag = (model.hbar * k - model.f * tm) ** 2 / (2.0 * model.M)
        w, v = np.linalg.eigh(off + np.diag(diag))
        psi = v @ (np.exp(-1j * w * dt / model.hbar) * (v.conj().T @ psi))
    return psi


def test_gauge_propagator_matches_dense_oracle():
    model = ReducedModel(M=1.0, n=4, V_n=1.0, f=0.3, hbar=1.0)
    state = init_gaussian(center=math.pi, width=0.35, N=128)
    k, psi0, sel = _packet_in_plane_wave_basis(state, kmax=24)
    t_end = 1.5
    ref = _dense_gauge_evolution(model, psi0, k, t_end, steps=3000)
    log = evolve_reduced(state, model, dt=2.5e-4, t_end=t_end,
                         snapshot_every=6000)
    c_t = np.fft.fft(log.final_state.amps)[sel] / state.N * math.sqrt(TWO_PI)
    overlap = abs(np.vdot(ref, c_t))
    assert overlap > 1.0 - 1e-5


def test_to_lab_frame_identity_and_full_turn():
    model = small_model(V_n=2.0, f=0.2)
    state = init_gaussian(center=1.0, width=0.25, N=128)
    log = evolve_reduced(state, model, dt=1e-3, t_end=1.0, snapshot_every=100)
    lab0 = to_lab_frame(log, Omega=0.0)
    assert np.allclose(lab0.circ_mean_theta, log.circ_mean_theta)
    assert np.allclose(lab0.density_snapshots, log.density_snapshots, atol=1e-12)
    assert lab0.frame == LAB
    with pytest.raises(DomainError):
        to_lab_frame(lab0, Omega=1.0)
    # a snapshot at t = 2*pi/Omega shifts by a full turn, i.e. not at all
    omega = TWO_PI / log.times[-1]
    lab = to_lab_frame(log, Omega=omega)
    assert np.max(np.abs(lab.density_snapshots[-1] - log.density_snapshots[-1])) < 1e-10


def test_drift_per_period_on_synthetic_log():
    times = np.linspace(0.0, 40.0, 4001)
    t_b = 10.0
    slope = 0.025 * TWO_PI / t_b
    means = np.mod(slope * times + 0.3 * np.sin(TWO_PI * times / t_b), TWO_PI)
    log = EvolutionLog(times=times, circ_mean_theta=means,
                       mean_momentum=np.zeros_like(times),
                       norms=np.ones_like(times),
                       density_snapshots=np.zeros((len(times), 4)),
                       theta_grid=np.zeros(4), frame=LAB)
    assert drift_per_period(log, t_b) == pytest.approx(slope * t_b, rel=1e-6)
    with pytest.raises(CoverageError):
        drift_per_period(log, math.inf)
    with pytest.raises(CoverageError):
        drift_per_period(log, 20.0)


def test_halving_f_doubles_drift_period_scaling():
    # doubling f halves both T_B and the per-period drift (Eqs. scale as 1/f)
    base = dict(M=5.0, n=10, V_n=5.0, hbar=1.0)
    omega = 1.0
    periods, drifts = [], []
    for f in (TWO_PI / 40.0, TWO_PI / 20.0):
        model = ReducedModel(f=f, **base)
        t_b = model.bloch_period()
        state = init_gaussian(center=math.pi / 10.0, width=0.25, N=256)
        log = evolve_reduced(state, model, dt=2e-3, t_end=3.4 * t_b,
                             snapshot_every=25)
        lab = to_lab_frame(log, Omega=omega / model.n)
        periods.append(t_b)
        drifts.append(drift_per_period(lab, t_b))
    assert periods[0] == pytest.approx(2.0 * periods[1], rel=1e-12)
    assert drifts[0] == pytest.approx(2.0 * drifts[1], rel=0.05)
