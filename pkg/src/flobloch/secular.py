"""Reduction of the driven trap to the secular phase-lattice model.

A weak drive V(x)*cos(omega*t) resonant at omega = n*Omega keeps, after
averaging out the fast terms, only V_n*cos(n*theta') where V_n is the n-th
Fourier coefficient of V along the unperturbed orbit and theta' = Theta -
Omega*t is the slow angle.  A kick train spaced by the orbital period T_D =
2*pi/Omega adds an effective tilt f*theta', so the reduced Hamiltonian is

    H = P**2/(2*M) + V_n*cos(n*theta') + f*theta'

with M the effective mass of the well at the reference energy.  This module
computes the trajectory Fourier coefficients, builds the reduced model, and
converts each instrument's kick scheme into the effective force f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateLatticeError,
    DomainError,
    ParameterError,
    ResolutionError,
    ResonanceError,
)
from .wells import ActionAngleMap, WellKind, from_angle

_TWO_PI = 2.0 * math.pi

# Relative aliasing level tolerated on the kept Fourier coefficients.
ALIAS_TOL = 1e-8
# Coefficients at or below this fraction of the largest one count as zero.
DEGENERATE_TOL = 1e-12
_MAX_NODES = 1 << 21


@dataclass(frozen=True)
class DriveSpec:
    """Single-frequency perturbation V(x)*cos(omega*t) at harmonic n.

    Exactly one of ``amplitude`` (the resonant coefficient V_n directly) or
    ``profile`` (a callable V(x) sampled along the orbit) must be given.
    ``omega=None`` means exact resonance n*Omega of the bound map.
    """

    n: int
    omega: float | None = None
    amplitude: float | None = None
    profile: Callable | None = None

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("drive harmonic n must be >= 1")
        if (self.amplitude is None) == (self.profile is None):
            raise DomainError("give exactly one of amplitude or profile")


@dataclass(frozen=True)
class FourierSpectrum:
    """Fourier coefficients V_l of V(x(Theta)) for |l| <= l_max."""

    ells: np.ndarray
    coeffs: np.ndarray
    alias_estimate: float

    def get(self, ell: int) -> complex:
        idx = int(ell) + (len(self.ells) - 1) // 2
        if idx < 0 or idx >= len(self.ells):
            raise DomainError(f"coefficient l={ell} outside computed range")
        return complex(self.coeffs[idx])

    def as_dict(self) -> dict[int, complex]:
        return {int(l): complex(c) for l, c in zip(self.ells, self.coeffs)}


@dataclass(frozen=True)
class ReducedModel:
    """Parameters of the phase-lattice Hamiltonian P^2/2M + V_n*cos(n*theta) + f*theta.

    ``V_n`` is real and non-negative; any phase of the raw coefficient has
    been rotated into the angle origin and is recorded in ``phase_shift``.
    """

    M: float
    n: int
    V_n: float
    f: float = 0.0
    hbar: float = 1.0
    phase_shift: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("n must be >= 1")
        if self.M == 0:
            raise DomainError("effective mass must be nonzero")
        if self.hbar <= 0:
            raise DomainError("hbar must be positive")
        if self.V_n < 0:
            raise DomainError("V_n is stored rotated to be non-negative")

    def recoil_energy(self) -> float:
        """Kinetic scale hbar**2 n**2 / (2|M|) of one Brillouin zone."""
        return self.hbar**2 * self.n**2 / (2.0 * abs(self.M))

    def harmonic_frequency(self) -> float:
        """Small-oscillation frequency n*sqrt(V_n/|M|) at a lattice minimum."""
        return self.n * math.sqrt(self.V_n / abs(self.M)) if self.V_n > 0 else 0.0

    def bloch_period(self) -> float:
        """T_B = hbar*n/|f|; infinite when the tilt vanishes."""
        return math.inf if self.f == 0 else self.hbar * self.n / abs(self.f)


# --------------------------------------------------------------------------
# instruments / kick schemes


@dataclass(frozen=True)
class ForceMeter:
    """Constant-force probe: kicks of strength F0 opposite to the motion."""

    F0: float
    tau: float


@dataclass(frozen=True)
class Tachometer:
    """Rotation probe: the y coordinate clamped to a comb of height y0."""

    w_z: float
    y0: float
    tau: float


@dataclass(frozen=True)
class Magnetometer:
    """Magnetic probe: tachometer scheme with w_z -> Q*B_z/(2m)."""

    B_z: float
    Q: float
    y0: float
    tau: float


@dataclass(frozen=True)
class SingularAmplitude:
    """Inverse-x potential probe -a/x realized on the quartic-bottom well."""

    a: float
    b: float
    tau: float


Instrument = ForceMeter | Tachometer | Magnetometer | SingularAmplitude

_COMPATIBLE = {
    ForceMeter: WellKind.INFINITE_SQUARE,
    Tachometer: WellKind.TRIANGULAR,
    Magnetometer: WellKind.TRIANGULAR,
    SingularAmplitude: WellKind.QUARTIC_BOTTOM,
}


@dataclass(frozen=True)
class ProbeSpec:
    """An instrument plus its kick spacing T_D = 2*pi/Omega."""

    instrument: Instrument
    T_D: float

    def __post_init__(self):
        tau = self.instrument.tau
        if tau <= 0:
            raise ParameterError("kick duration tau must be positive")
        if self.T_D <= 0:
            raise ParameterError("kick spacing T_D must be positive")
        if tau > self.T_D / 10.0 * (1.0 + 1e-12):
            raise ParameterError(
                f"tau={tau:.3g} breaks the comb approximation (tau <= T_D/10, "
                f"T_D={self.T_D:.3g})")


@dataclass(frozen=True)
class ProbeReduction:
    """Effective tilt produced by a kick scheme, with modeling diagnostics.

    ``f`` is the total secular force.  For the rotating-frame instruments the
    clamp that holds y on the comb contributes recoil impulses whose secular
    effect exactly matches the direct y*p_x term, so half of ``f`` comes from
    that recoil channel; ``constraint_recoil_share`` records the fraction.
    ``dirac_correction`` is the leading error tau/T_D of treating the square
    pulses as delta kicks.
    """

    f: float
    dirac_correction: float
    constraint_recoil_share: float = 0.0

    def __float__(self):
        return self.f


def trajectory_fourier_components(
    aamap: ActionAngleMap,
    V_sampler: Callable,
    l_max: int,
    nodes: int | None = None,
) -> FourierSpectrum:
    """Fourier coefficients of V(x) along the unperturbed orbit.

    V_l = (1/2pi) * integral of V(x(Theta)) e^{-i l Theta} dTheta, evaluated
    by the periodic trapezoid rule (an FFT over uniform angle nodes).  When
    ``nodes`` is omitted the grid starts at 64*l_max points and doubles until
    the kept coefficients are aliasing-converged to ALIAS_TOL relative.
    """
    if l_max < 1:
        raise DomainError("l_max must be >= 1")
    min_nodes = 64 * l_max
    auto = nodes is None
    n_nodes = min_nodes if auto else int(nodes)
    if n_nodes < min_nodes:
        raise ResolutionError(f"need at least {min_nodes} quadrature nodes")

    def kept(n_grid: int) -> np.ndarray:
        theta = _TWO_PI * np.arange(n_grid) / n_grid
        x, _ = from_angle(aamap, theta)
        samples = np.asarray(V_sampler(x), dtype=float)
        if not np.all(np.isfinite(samples)):
            raise DomainError("V(x) not finite on the trajectory range")
        c = np.fft.fft(samples) / n_grid
        pos = c[: l_max + 1]
        neg = c[n_grid - l_max:]
        return np.concatenate([neg, pos])

    coeffs = kept(n_nodes)
    while True:
        refined = kept(2 * n_nodes)
        err = float(np.max(np.abs(refined - coeffs)))
        scale = float(np.max(np.abs(refined)))
        if scale == 0.0 or err <= ALIAS_TOL * scale:
            coeffs = refined
            break
        if not auto or 2 * n_nodes >= _MAX_NODES:
            raise ResolutionError(
                f"aliasing {err:.3g} above {ALIAS_TOL:g}*max|V_l| at "
                f"{2 * n_nodes} nodes")
        coeffs, n_nodes = refined, 2 * n_nodes
    ells = np.arange(-l_max, l_max + 1)
    return FourierSpectrum(ells=ells, coeffs=coeffs, alias_estimate=err)


def secular_reduce(aamap: ActionAngleMap, drive: DriveSpec,
                   hbar: float = 1.0) -> ReducedModel:
    """Build the resonant phase-lattice model for a drive bound to a map.

    The drive frequency must satisfy omega = n*Omega to 1e-9 relative.  The
    complex V_n is rotated real-positive and the rotation recorded, so the
    lattice minima sit at theta = (2k+1)*pi/n.
    """
    omega_res = drive.n * aamap.Omega
    omega = drive.omega if drive.omega is not None else omega_res
    if abs(omega - omega_res) > 1e-9 * omega_res:
        raise ResonanceError(
            f"omega={omega!r} is not n*Omega={omega_res!r} (n={drive.n})")
    if drive.amplitude is not None:
        v_n = complex(drive.amplitude)
        if v_n == 0:
            raise DegenerateLatticeError("drive amplitude V_n is zero")
    else:
        spectrum = trajectory_fourier_components(aamap, drive.profile,
                                                 l_max=8 * drive.n)
        v_n = spectrum.get(drive.n)
        vmax = float(np.max(np.abs(spectrum.coeffs)))
        if abs(v_n) <= DEGENERATE_TOL * vmax:
            raise DegenerateLatticeError(
                f"V_n vanishes at n={drive.n} (|V_n|={abs(v_n):.3g}, "
                f"max|V_l|={vmax:.3g}); no lattice forms")
    return ReducedModel(M=aamap.M_eff, n=drive.n, V_n=abs(v_n),
                        f=0.0, hbar=hbar, phase_shift=math.atan2(v_n.imag, v_n.real))


def probe_to_force(probe: ProbeSpec, aamap: ActionAngleMap) -> ProbeReduction:
    """Effective tilt f of an instrument's kick train on a given well.

    Closed forms per instrument (kick weight tau, spacing T_D = 2*pi/Omega):

    * force meter on the square well:   f =  L*F0*tau/(pi*T_D)
    * tachometer on the triangular:     f = -w_z*eta*y0*tau/pi
    * magnetometer on the triangular:   f = -Q*B_z*eta*y0*tau/(2*pi*m)
    * inverse-x probe on the quartic:   f =  a*tau*Omega/(2*pi*b)

    The rotating-frame instruments include the clamp-recoil channel, which
    doubles the bare y*p_x contribution (see ProbeReduction).
    """
    inst = probe.instrument
    want = _COMPATIBLE[type(inst)]
    if aamap.well.kind is not want:
        raise ConfigurationError(
            f"{type(inst).__name__} requires a {want.value} well, got "
            f"{aamap.well.kind.value}")
    t_d = _TWO_PI / aamap.Omega
    if abs(probe.T_D - t_d) > 1e-9 * t_d:
        raise ConfigurationError(
            f"probe T_D={probe.T_D!r} does not match 2*pi/Omega={t_d!r}")
    tau = inst.tau
    corr = tau / t_d
    if isinstance(inst, ForceMeter):
        f = aamap.well.L * inst.F0 * tau / (math.pi * t_d)
        return ProbeReduction(f=f, dirac_correction=corr)
    if isinstance(inst, Tachometer):
        f = -inst.w_z * aamap.well.eta * inst.y0 * tau / math.pi
        return ProbeReduction(f=f, dirac_correction=corr,
                              constraint_recoil_share=0.5)
    if isinstance(inst, Magnetometer):
        f = -inst.Q * inst.B_z * aamap.well.eta * inst.y0 * tau / (
            _TWO_PI * aamap.well.m)
        return ProbeReduction(f=f, dirac_correction=corr,
                              constraint_recoil_share=0.5)
    f = inst.a * tau * aamap.Omega / (_TWO_PI * inst.b)
    return ProbeReduction(f=f, dirac_correction=corr)


def comb_partial_sum(theta: float, t: float, K: int, Omega: float,
                     centered: bool = False) -> float:
    """Doubly truncated Fourier representation of the kicked linear probe.

    Keeps the first K harmonics of the sawtooth series of Theta (its Fourier
    series on (0, 2*pi) is pi - sum_k 2*sin(k*Theta)/k) and the first K
    harmonics of the Dirac comb (Dirichlet kernel in Omega*t).  With
    ``centered=True`` the constant pi is dropped, matching the probe written
    against the trajectory midpoint.  Averaging over one fast period leaves
    the sawtooth partial sum, which converges to the linear-in-angle secular
    potential as K grows.
    """
    if K < 1:
        raise DomainError("K must be >= 1")
    k = np.arange(1, K + 1)
    saw = -2.0 * np.sum(np.sin(k * theta) / k)
    if not centered:
        saw += math.pi
    comb = 1.0 + 2.0 * np.sum(np.cos(k * Omega * t))
    return float(saw * comb)


def comb_secular_average(theta: float, K: int, centered: bool = False) -> float:
    """Time average of :func:`comb_partial_sum` over one fast period."""
    if K < 1:
        raise DomainError("K must be >= 1")
    k = np.arange(1, K + 1)
    saw = -2.0 * np.sum(np.sin(k * theta) / k)
    if not centered:
        saw += math.pi
    return float(saw)
