"""Bloch bands of the phase lattice by the central-equation method.

Eigenfunctions of P**2/(2M) + V_n*cos(n*theta) are Bloch-like,
phi_q(theta) = U_q(theta)*exp(i*q*theta) with U_q of period 2*pi/n.  In the
plane-wave basis exp(i*(q + m*n)*theta), m = -m_max..m_max, the Hamiltonian
is symmetric tridiagonal: diagonal hbar^2 (q + m n)^2 / (2M), off-diagonal
V_n/2.  States on the full circle require integer q; the continuous q is the
band parameter driven by the acceleration theorem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import (
    DomainError,
    NumericsError,
    RepresentabilityError,
    ResolutionError,
)
from .secular import ReducedModel

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class BandStructure:
    """Band energies and plane-wave coefficients over a quasi-momentum grid.

    ``energies[i, b]`` is band b at ``q_grid[i]``; bands are sorted ascending
    for M > 0 and descending for M < 0 (``descending`` records which).
    ``coeffs[i, b, :]`` are the amplitudes on exp(i*(q + m*n)*theta).
    """

    model: ReducedModel
    q_grid: np.ndarray
    energies: np.ndarray
    coeffs: np.ndarray
    m_max: int
    descending: bool

    @property
    def n_bands(self) -> int:
        return self.energies.shape[1]


def _solve_single_q(model: ReducedModel, q: float, B: int, m_max: int):
    m = np.arange(-m_max, m_max + 1)
    diag = model.hbar**2 * (q + m * model.n) ** 2 / (2.0 * model.M)
    off = np.full(2 * m_max, model.V_n / 2.0)
    try:
        w, v = eigh_tridiagonal(diag, off)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericsError(
            f"tridiagonal eigensolver failed at q={q}: diag={diag!r}, "
            f"off=V_n/2={model.V_n / 2.0!r}") from exc
    if model.M > 0:
        sel = slice(0, B)
        return w[sel], v[:, sel]
    sel = slice(2 * m_max, 2 * m_max - B, -1)
    return w[sel], v[:, sel]


def solve_bands(model: ReducedModel, q_grid, B: int,
                m_max: int | None = None) -> BandStructure:
    """Diagonalize the central equation on a quasi-momentum grid.

    ``m_max`` defaults to B + 12; convergence is asserted by re-solving at
    m_max + 4 and demanding 1e-10 relative agreement on the kept bands.
    """
    q_grid = np.atleast_1d(np.asarray(q_grid, dtype=float))
    if B < 1:
        raise DomainError("need at least one band")
    if m_max is None:
        m_max = B + 12
    if m_max < B + 4:
        raise DomainError("m_max must be at least B + 4")
    n_q = len(q_grid)
    energies = np.empty((n_q, B))
    coeffs = np.empty((n_q, B, 2 * m_max + 1), dtype=complex)
    scale = max(model.V_n, model.recoil_energy(), 1e-300)
    for i, q in enumerate(q_grid):
        w, v = _solve_single_q(model, q, B, m_max)
        w_chk, _ = _solve_single_q(model, q, B, m_max + 4)
        if np.max(np.abs(w - w_chk)) > 1e-10 * max(scale, np.max(np.abs(w))):
            raise ResolutionError(
                f"bands not converged at m_max={m_max} for q={q}")
        energies[i] = w
        coeffs[i] = v.T
    return BandStructure(model=model, q_grid=q_grid, energies=energies,
                         coeffs=coeffs, m_max=m_max, descending=model.M < 0)


def _uniform_spacing(q_grid: np.ndarray) -> float:
    dq = np.diff(q_grid)
    if len(dq) == 0 or np.max(np.abs(dq - dq[0])) > 1e-9 * abs(dq[0]):
        raise DomainError("derivatives need a uniform q grid")
    return float(dq[0])


def group_velocity_and_mass(bands: BandStructure, b: int, q: float):
    """Group velocity d(eps)/dq and band mass (d2(eps)/dq2)^-1 at q.

    Central finite differences on the tabulated band, using Brillouin-zone
    periodicity to wrap the stencil when the grid covers one full zone.
    Raises ResolutionError when a doubled-spacing stencil disagrees beyond
    1e-3 relative, i.e. the grid is too coarse for trustworthy derivatives.
    """
    q_grid = bands.q_grid
    dq = _uniform_spacing(q_grid)
    eps = bands.energies[:, b]
    n = bands.model.n
    periodic = abs(len(q_grid) * dq - n) < 1e-9 * n

    idx = int(round((q - q_grid[0]) / dq))
    if abs(q_grid[0] + idx * dq - q) > 1e-9 * max(abs(q), dq):
        raise DomainError(f"q={q} is not a grid point")

    def value(k, shift):
        j = k + shift
        if periodic:
            return eps[j % len(q_grid)]
        if j < 0 or j >= len(q_grid):
            raise DomainError("q too close to the grid boundary")
        return eps[j]

    def stencil(h):
        vp, vm = value(idx, h), value(idx, -h)
        v0 = eps[idx]
        vel = (vp - vm) / (2.0 * h * dq)
        curv = (vp - 2.0 * v0 + vm) / (h * dq) ** 2
        return vel, curv

    v1, c1 = stencil(1)
    if (not periodic) and (idx < 2 or idx > len(q_grid) - 3):
        raise DomainError("q too close to the grid boundary")
    v2, c2 = stencil(2)
    scale_v = max(abs(v1), abs(v2), np.max(np.abs(eps)) / n)
    if abs(v1 - v2) > 3e-3 * scale_v:
        raise ResolutionError(
            f"q grid too coarse: velocity stencils differ by "
            f"{abs(v1 - v2) / scale_v:.2e} relative")
    # Richardson extrapolation of the two stencils.
    vel = (4.0 * v1 - v2) / 3.0
    curv = (4.0 * c1 - c2) / 3.0
    mass = math.inf if curv == 0 else 1.0 / curv
    return vel, mass


def bloch_state(bands: BandStructure, b: int, q: float, N: int) -> np.ndarray:
    """Sample the Bloch state phi_q of band b on N uniform circle nodes.

    Only integer q is single-valued on the circle; anything else raises
    RepresentabilityError.  Normalized so that sum |phi|^2 * (2*pi/N) = 1.
    """
    if abs(q - round(q)) > 1e-9:
        raise RepresentabilityError(
            f"q={q} is not an integer; state not single-valued on the circle")
    q = int(round(q))
    model, m_max = bands.model, bands.m_max
    if N <= 2 * (abs(q) + m_max * model.n):
        raise ResolutionError(
            f"N={N} cannot hold wavenumbers up to {abs(q) + m_max * model.n}")
    _, v = _solve_single_q(model, float(q), b + 1, m_max)
    c = v[:, b]
    theta = _TWO_PI * np.arange(N) / N
    m = np.arange(-m_max, m_max + 1)
    phi = (c[None, :] * np.exp(1j * np.outer(theta, q + m * model.n))).sum(axis=1)
    return phi / math.sqrt(_TWO_PI)


def band_table(bands: BandStructure):
    """Rows (q, band, energy, v_g, m_g) for CSV export.

    Derivative columns are NaN where the stencil is unavailable or the grid
    is too coarse.
    """
    rows = []
    for i, q in enumerate(bands.q_grid):
        for b in range(bands.n_bands):
            try:
                vel, mass = group_velocity_and_mass(bands, b, float(q))
            except (DomainError, ResolutionError):
                vel, mass = math.nan, math.nan
            rows.append((float(q), b, float(bands.energies[i, b]), vel, mass))
    return rows
