"""Closed-form action-angle transformations for the supported trap shapes.

Three one-dimensional traps are supported:

* infinite square well of width ``L``: the angle is linear in position,
  ``x = L|pi - Theta|/pi``, and the momentum has constant magnitude with a
  direction set by the half-cycle.
* triangular well ``U(x) = eta*x`` (hard wall at ``x = 0``): the momentum is
  linear in the angle, ``p = eta*(pi - Theta)/Omega``, and the position is a
  parabola ``x = eta*(2*pi*Theta - Theta**2)/(2*m*Omega**2)``.
* quartic-bottom well ``U(x) = -m*Omega**2*x**4/(2*b**2)`` on ``(b/pi, L)``
  with hard walls: the angle map is ``|Theta - pi| = b/x``, exact inside
  the open range and clamped at the outer wall.

Conventions: ``Theta = 0`` sits at the ``x = L`` wall for the square well and
at the ``x = 0`` wall with maximal positive momentum for the triangular well.
The action returned by :func:`action` is the loop integral of ``p dx`` over
one period (no ``1/2pi``), so ``dJ/dE = 2*pi/Omega``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, ShellError, ValidityError

_TWO_PI = 2.0 * math.pi

# Fraction of the quartic validity bound m*Omega**2*b**2/(2*pi**4) that |E0|
# may use before the angle map is considered broken.
QUARTIC_ENERGY_FRACTION = 0.1


class WellKind(enum.Enum):
    INFINITE_SQUARE = "infinite_square"
    TRIANGULAR = "triangular"
    QUARTIC_BOTTOM = "quartic_bottom"


@dataclass(frozen=True)
class WellSpec:
    """Geometry and mass of a conservative trap.

    Only the fields relevant to ``kind`` are set; the rest stay ``None``.
    """

    kind: WellKind
    m: float
    L: float | None = None
    eta: float | None = None
    b: float | None = None
    Omega_target: float | None = None

    def __post_init__(self):
        if self.m <= 0:
            raise DomainError("mass must be positive")
        if self.kind is WellKind.INFINITE_SQUARE:
            if self.L is None or self.L <= 0:
                raise DomainError("square well needs L > 0")
        elif self.kind is WellKind.TRIANGULAR:
            if self.eta is None or self.eta <= 0:
                raise DomainError("triangular well needs eta > 0")
        elif self.kind is WellKind.QUARTIC_BOTTOM:
            if self.b is None or self.b <= 0:
                raise DomainError("quartic well needs b > 0")
            if self.Omega_target is None or self.Omega_target <= 0:
                raise DomainError("quartic well needs Omega_target > 0")
            if self.L is None or self.L <= 10.0 * self.b / math.pi:
                raise DomainError("quartic well needs L > 10*b/pi")

    @classmethod
    def square(cls, L, m=1.0):
        return cls(kind=WellKind.INFINITE_SQUARE, m=m, L=L)

    @classmethod
    def triangular(cls, eta, m=1.0):
        return cls(kind=WellKind.TRIANGULAR, m=m, eta=eta)

    @classmethod
    def quartic(cls, b, Omega, L, m=1.0):
        return cls(kind=WellKind.QUARTIC_BOTTOM, m=m, b=b, Omega_target=Omega, L=L)

    def potential(self, x):
        """Trap potential U(x) inside the allowed range (walls not included)."""
        x = np.asarray(x, dtype=float)
        if self.kind is WellKind.INFINITE_SQUARE:
            return np.zeros_like(x)
        if self.kind is WellKind.TRIANGULAR:
            return self.eta * x
        return -self.m * self.Omega_target**2 * x**4 / (2.0 * self.b**2)

    def quartic_energy_bound(self):
        """Validity scale m*Omega**2*b**2/(2*pi**4) of the quartic angle map."""
        if self.kind is not WellKind.QUARTIC_BOTTOM:
            raise DomainError("energy bound defined for the quartic well only")
        return self.m * self.Omega_target**2 * self.b**2 / (2.0 * math.pi**4)


@dataclass(frozen=True)
class PhasePoint:
    x: float
    p: float
    Theta: float


@dataclass(frozen=True)
class ActionAngleMap:
    """Reference-trajectory data (J0, Omega, M_eff) for a well at energy E0.

    Built with :func:`make_map`; immutable and safe to share across threads.
    """

    well: WellSpec
    E0: float
    J0: float
    Omega: float
    M_eff: float


def _check_energy(well: WellSpec, E0: float) -> None:
    if well.kind is WellKind.QUARTIC_BOTTOM:
        bound = well.quartic_energy_bound()
        if abs(E0) > QUARTIC_ENERGY_FRACTION * bound:
            raise ValidityError(
                f"|E0|={abs(E0):.3g} exceeds {QUARTIC_ENERGY_FRACTION}*bound "
                f"(bound={bound:.3g}); quartic angle map invalid",
                bound=bound,
            )
    elif E0 <= 0:
        raise DomainError(f"E0 must be positive for {well.kind.value}, got {E0}")


def angular_frequency(well: WellSpec, E0: float) -> float:
    """Orbital angular frequency Omega(E0) of the unperturbed trap."""
    _check_energy(well, E0)
    if well.kind is WellKind.INFINITE_SQUARE:
        return math.sqrt(2.0 * math.pi**2 * E0 / (well.m * well.L**2))
    if well.kind is WellKind.TRIANGULAR:
        return well.eta * math.pi / math.sqrt(2.0 * well.m * E0)
    return well.Omega_target


def _quartic_momentum(well: WellSpec, E0: float, x):
    return np.sqrt(2.0 * well.m * (E0 - well.potential(x)))


def action(well: WellSpec, E0: float) -> float:
    """Loop integral of p dx over one period of the E0 orbit."""
    _check_energy(well, E0)
    m = well.m
    if well.kind is WellKind.INFINITE_SQUARE:
        return 2.0 * well.L * math.sqrt(2.0 * m * E0)
    if well.kind is WellKind.TRIANGULAR:
        return (4.0 / 3.0) * math.sqrt(2.0 * m) * E0**1.5 / well.eta
    lo = well.b / math.pi
    val, _ = quad(lambda x: _quartic_momentum(well, E0, x), lo, well.L,
                  epsabs=0.0, epsrel=1e-9, limit=200)
    return 2.0 * val


def action_derivative(well: WellSpec, E0: float) -> float:
    """dJ/dE at E0; equals the orbital period 2*pi/Omega."""
    _check_energy(well, E0)
    m = well.m
    if well.kind is WellKind.INFINITE_SQUARE:
        return well.L * math.sqrt(2.0 * m / E0)
    if well.kind is WellKind.TRIANGULAR:
        return 2.0 * math.sqrt(2.0 * m * E0) / well.eta
    lo = well.b / math.pi
    val, _ = quad(lambda x: m / _quartic_momentum(well, E0, x), lo, well.L,
                  epsabs=0.0, epsrel=1e-9, limit=200)
    return 2.0 * val


def effective_mass(well: WellSpec, E0: float) -> float:
    """Inverse curvature (d^2 H0/dJ^2)^-1 of the trap Hamiltonian in action space.

    Positive for the square well (4*m*L**2), negative for the triangular well
    where H0 grows like J**(2/3).  The quartic value comes from quadrature
    derivatives of J(E): M = -J'(E)**3 / J''(E).
    """
    _check_energy(well, E0)
    m = well.m
    if well.kind is WellKind.INFINITE_SQUARE:
        return 4.0 * m * well.L**2
    if well.kind is WellKind.TRIANGULAR:
        c = (3.0 * well.eta / (4.0 * math.sqrt(2.0 * m))) ** (2.0 / 3.0)
        j0 = action(well, E0)
        return -4.5 * j0 ** (4.0 / 3.0) / c
    lo = well.b / math.pi
    jp = action_derivative(well, E0)
    val, _ = quad(lambda x: -(m**2) / _quartic_momentum(well, E0, x) ** 3,
                  lo, well.L, epsabs=0.0, epsrel=1e-9, limit=200)
    jpp = 2.0 * val
    return -(jp**3) / jpp


def make_map(well: WellSpec, E0: float) -> ActionAngleMap:
    """Assemble the ActionAngleMap for a well at reference energy E0."""
    omega = angular_frequency(well, E0)
    j0 = action(well, E0)
    meff = effective_mass(well, E0)
    if omega <= 0 or j0 <= 0:
        raise DomainError("Omega and J0 must be positive")
    if well.kind is WellKind.INFINITE_SQUARE and meff <= 0:
        raise DomainError("square-well effective mass must be positive")
    if well.kind is WellKind.TRIANGULAR and meff >= 0:
        raise DomainError("triangular-well effective mass must be negative")
    return ActionAngleMap(well=well, E0=E0, J0=j0, Omega=omega, M_eff=meff)


def from_angle(aamap: ActionAngleMap, theta):
    """Phase-space point(s) (x, p) on the E0 shell at angle(s) theta.

    Accepts scalars or arrays; scalars return a :class:`PhasePoint`.
    """
    scalar = np.isscalar(theta)
    th = np.mod(np.asarray(theta, dtype=float), _TWO_PI)
    well, e0 = aamap.well, aamap.E0
    m, omega = well.m, aamap.Omega
    if well.kind is WellKind.INFINITE_SQUARE:
        x = well.L * np.abs(math.pi - th) / math.pi
        pmag = m * well.L * omega / math.pi
        p = np.where((th > 0) & (th <= math.pi), -pmag, pmag)
    elif well.kind is WellKind.TRIANGULAR:
        x = well.eta * (_TWO_PI * th - th**2) / (2.0 * m * omega**2)
        p = well.eta * (math.pi - th) / omega
    else:
        dist = np.abs(th - math.pi)
        x = np.clip(well.b / np.maximum(dist, well.b / well.L),
                    well.b / math.pi, well.L)
        p = np.where(th <= math.pi, 1.0, -1.0) * _quartic_momentum(well, e0, x)
    if scalar:
        return PhasePoint(x=float(x), p=float(p), Theta=float(th))
    return x, p


def to_angle(aamap: ActionAngleMap, x, p):
    """Angle(s) in [0, 2*pi) of on-shell phase-space point(s) (x, p)."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    well, e0 = aamap.well, aamap.E0
    energy = p**2 / (2.0 * well.m) + well.potential(x)
    scale = np.maximum(np.abs(e0), np.abs(p**2 / (2.0 * well.m)) + np.abs(well.potential(x)))
    mism = np.abs(energy - e0)
    if np.any(mism > 1e-9 * scale):
        raise ShellError(
            f"point off the E0 shell: |H0 - E0| up to {float(np.max(mism)):.3g}",
            mismatch=float(np.max(mism)),
        )
    if well.kind is WellKind.INFINITE_SQUARE:
        th = np.where(p < 0,
                      math.pi * (1.0 - x / well.L),
                      math.pi * (1.0 + x / well.L))
    elif well.kind is WellKind.TRIANGULAR:
        th = math.pi - aamap.Omega * p / well.eta
    else:
        dist = well.b / x
        th = np.where(p >= 0, math.pi - dist, math.pi + dist)
    th = np.mod(th, _TWO_PI)
    return float(th) if th.ndim == 0 else th
