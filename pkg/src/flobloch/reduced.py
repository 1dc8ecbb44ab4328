"""Wavepacket evolution on the angle circle under the tilted phase lattice.

The Hamiltonian P**2/(2M) + V_n*cos(n*theta) + f*theta is propagated with a
second-order split step.  The non-periodic tilt f*theta is never applied as
a multiplier (it would be discontinuous at theta = 0); it enters exclusively
through the time-dependent momentum shift of the kinetic factor,

    exp(-(i/hbar) * integral_t^{t+dt} (hbar*k - f*t')**2 / (2M) dt'),

which realizes the acceleration theorem q(t) = q(0) - f*t/hbar exactly.  The
reported mean momentum includes the accumulated gauge offset -f*t, so it is
the physical quantity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.fft as sfft

from .errors import CoverageError, DomainError, ParameterError, StabilityError
from .secular import ReducedModel

_TWO_PI = 2.0 * math.pi

ROTATING = "rotating"
LAB = "lab"


@dataclass(frozen=True)
class AngularState:
    """Wavefunction on N uniform angle nodes theta_j = 2*pi*j/N."""

    N: int
    amps: np.ndarray
    t: float = 0.0
    frame: str = ROTATING
    gauge_momentum_offset: float = 0.0

    def __post_init__(self):
        if self.N & (self.N - 1) or self.N < 2:
            raise ParameterError("grid size N must be a power of two")
        if len(self.amps) != self.N:
            raise ParameterError("amps length must equal N")

    @property
    def theta(self) -> np.ndarray:
        return _TWO_PI * np.arange(self.N) / self.N

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2) * (_TWO_PI / self.N))


@dataclass(frozen=True)
class EvolutionLog:
    """Observables and density snapshots recorded during one evolution."""

    times: np.ndarray
    circ_mean_theta: np.ndarray
    mean_momentum: np.ndarray
    norms: np.ndarray
    density_snapshots: np.ndarray
    theta_grid: np.ndarray
    frame: str
    final_state: AngularState | None = None

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(1.0 - self.norms)))


def init_gaussian(center: float, width: float, N: int) -> AngularState:
    """Wrapped Gaussian packet exp(-(theta-center)^2 / (4 width^2)) on the circle.

    Image sum over one wrap on each side; widths where the first neglected
    image exceeds 1e-12 of the peak are rejected.
    """
    if not 0 < width < math.pi / 2:
        raise ParameterError("width must lie in (0, pi/2)")
    wrap_tail = math.exp(-math.pi**2 / width**2)
    if wrap_tail > 1e-12:
        raise ParameterError(
            f"width={width:.3g} too large to wrap accurately "
            f"(neglected image at {wrap_tail:.2e} of peak)")
    theta = _TWO_PI * np.arange(N) / N
    amps = np.zeros(N, dtype=complex)
    for k in (-1, 0, 1):
        amps += np.exp(-((theta - center - _TWO_PI * k) ** 2) / (4.0 * width**2))
    amps /= math.sqrt(np.sum(np.abs(amps) ** 2) * (_TWO_PI / N))
    return AngularState(N=N, amps=amps)


def circular_mean(theta: np.ndarray, density: np.ndarray) -> float:
    """Argument of the first angular moment, wrapped into [0, 2*pi)."""
    z = np.sum(density * np.exp(1j * theta))
    return float(np.mod(np.angle(z), _TWO_PI))


def max_stable_dt(model: ReducedModel) -> float:
    """Spec bound 0.02*min(2*pi/omega_h, hbar/V_n) on the split-step dt."""
    omega_h = model.harmonic_frequency()
    limits = []
    if omega_h > 0:
        limits.append(_TWO_PI / omega_h)
    if model.V_n > 0:
        limits.append(model.hbar / model.V_n)
    return 0.02 * min(limits) if limits else math.inf


def evolve_reduced(state: AngularState, model: ReducedModel, dt: float,
                   t_end: float, snapshot_every: int) -> EvolutionLog:
    """Propagate and log every ``snapshot_every`` steps (plus t = 0).

    The kinetic phase uses the exact time integral of the shifted momentum
    over each step; the f^2 piece is a global phase and is dropped.
    """
    if dt == 0 or t_end == 0 or (dt > 0) != (t_end > 0):
        raise ParameterError("dt and t_end must be nonzero with matching signs")
    if abs(dt) > max_stable_dt(model) * (1.0 + 1e-12):
        raise ParameterError(
            f"dt={dt:.3g} exceeds the stability bound {max_stable_dt(model):.3g}")
    if snapshot_every < 1:
        raise ParameterError("snapshot_every must be >= 1")
    n_grid = state.N
    if n_grid < 16 * model.n:
        raise ParameterError(f"grid N={n_grid} below 16*n={16 * model.n}")

    hbar, mass, f = model.hbar, model.M, model.f
    theta = state.theta
    k = np.fft.fftfreq(n_grid, d=1.0 / n_grid)  # integer wavenumbers

    pot = model.V_n * np.cos(model.n * theta)
    exp_v_half = np.exp(-0.5j * dt * pot / hbar)
    exp_v_full = exp_v_half * exp_v_half

    # kinetic factor at step j: exp(-i*dt*hbar*k^2/(2M)) * W^(j+1/2),
    # W = exp(i*k*f*dt^2/(M*hbar)); evaluated via a running product.
    base = np.exp(-0.5j * dt * hbar * k**2 / mass)
    w_step = np.exp(1j * k * f * dt**2 / (mass * hbar))
    t0 = state.t
    if t0:
        base = base * np.exp(1j * k * f * dt * t0 / (mass * hbar))
    kin = base * np.exp(0.5j * k * f * dt**2 / (mass * hbar))

    n_steps = int(round(t_end / dt))
    if abs(n_steps * dt - t_end) > 1e-9 * abs(t_end):
        n_steps = int(math.ceil(t_end / dt))

    psi = state.amps.astype(complex).copy()
    d_theta = _TWO_PI / n_grid
    exp_itheta = np.exp(1j * theta)

    times, means, moms, norms, dens = [], [], [], [], []

    def record(step):
        t = t0 + step * dt
        rho = np.abs(psi) ** 2
        nrm = float(np.sum(rho) * d_theta)
        c = sfft.fft(psi)
        occ = np.abs(c) ** 2
        k_mean = float(np.sum(k * occ) / np.sum(occ))
        times.append(t)
        norms.append(nrm)
        means.append(float(np.mod(np.angle(np.sum(rho * exp_itheta)), _TWO_PI)))
        moms.append(hbar * k_mean - f * t)
        dens.append(rho * (1.0 / nrm))

    record(0)
    step = 0
    while step < n_steps:
        chunk = min(snapshot_every, n_steps - step)
        psi *= exp_v_half
        for j in range(chunk):
            c = sfft.fft(psi, overwrite_x=True)
            c *= kin
            psi = sfft.ifft(c, overwrite_x=True)
            # running product; renormalized each step so magnitude errors
            # cannot compound into a norm drift
            kin = kin * w_step
            kin /= np.abs(kin)
            if j < chunk - 1:
                psi *= exp_v_full
        psi *= exp_v_half
        step += chunk
        if step % snapshot_every == 0:
            record(step)

    log = EvolutionLog(
        times=np.asarray(times),
        circ_mean_theta=np.asarray(means),
        mean_momentum=np.asarray(moms),
        norms=np.asarray(norms),
        density_snapshots=np.asarray(dens),
        theta_grid=theta,
        frame=state.frame,
        final_state=AngularState(N=n_grid, amps=psi, t=t0 + n_steps * dt,
                                 frame=state.frame,
                                 gauge_momentum_offset=f * (t0 + n_steps * dt) / hbar),
    )
    if log.norm_drift > 1e-8:
        raise StabilityError(
            f"norm drifted by {log.norm_drift:.3g} (> 1e-8); reduce dt")
    return log


def to_lab_frame(log: EvolutionLog, Omega: float) -> EvolutionLog:
    """Shift a rotating-frame log by +Omega*t: theta_lab = theta_rot + Omega*t.

    Density rows are rotated spectrally (they are periodic and smooth), the
    circular means shift exactly.
    """
    if log.frame != ROTATING:
        raise DomainError("log is not in the rotating frame")
    n_grid = len(log.theta_grid)
    k = np.fft.fftfreq(n_grid, d=1.0 / n_grid)
    shifts = Omega * log.times
    rho_hat = np.fft.fft(log.density_snapshots, axis=1)
    rho_hat *= np.exp(-1j * np.outer(shifts, k))
    dens = np.fft.ifft(rho_hat, axis=1).real
    means = np.mod(log.circ_mean_theta + shifts, _TWO_PI)
    return replace(log, circ_mean_theta=means, density_snapshots=dens,
                   frame=LAB, final_state=None)


def drift_per_period(log: EvolutionLog, T_B: float) -> float:
    """Average lab-frame angle advance over one Bloch period.

    Uses the unwrapped circular-mean series; every sample t with t + T_B in
    range contributes u(t + T_B) - u(t).
    """
    if log.frame != LAB:
        raise DomainError("drift is defined on a lab-frame log")
    if not math.isfinite(T_B) or T_B <= 0:
        raise CoverageError("Bloch period is not finite; no drift defined")
    t = log.times
    span = t[-1] - t[0]
    if span < 3.0 * T_B:
        raise CoverageError(
            f"log spans {span:.3g}, need >= 3*T_B = {3.0 * T_B:.3g}")
    u = np.unwrap(log.circ_mean_theta)
    mask = t + T_B <= t[-1]
    shifted = np.interp(t[mask] + T_B, t, u)
    return float(np.mean(shifted - u[mask]))
