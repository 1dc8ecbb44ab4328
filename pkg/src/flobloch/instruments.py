"""Bloch-period extraction from time series and instrument inversions.

Every instrument reduces to the same chain: a time series whose slow
envelope has the Bloch period T_B = hbar*n/|f|, a periodogram-based period
estimate, and a closed-form inversion of T_B into the physical quantity.

When the observable carries the fast orbital oscillation at Omega (mean
position in the square well, mean momentum in the triangular well), the
Bloch signal lives in the amplitude of that carrier: the period-averaged
series is constant by symmetry.  Carrier removal is therefore implemented
as boxcar demodulation: mix with exp(-i*Omega*t), average over one fast
period, and take the magnitude.  Pure envelope series (e.g. the rotating-
frame circular mean of the reduced model) skip that stage.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    ConfigurationError,
    CoverageError,
    DesignError,
    DetectionError,
    DomainError,
    ParameterError,
)
from .secular import (
    ForceMeter,
    Instrument,
    Magnetometer,
    SingularAmplitude,
    Tachometer,
)

_TWO_PI = 2.0 * math.pi

PERIODOGRAM = "periodogram"
SINUSOID_FIT = "sinusoid_fit"

# A peak must exceed this multiple of the median spectral floor.
PEAK_SIGNIFICANCE = 5.0
# Power ratio at which a subharmonic of the top peak is taken as fundamental.
SUBHARMONIC_RATIO = 0.25


@dataclass(frozen=True)
class PeriodEstimate:
    T_B: float
    sigma: float
    method: str
    spectrum_peak_bin: int

    def __post_init__(self):
        if self.T_B <= 0:
            raise DomainError("estimated period must be positive")
        if not 0.0 <= self.sigma < self.T_B:
            raise DomainError("sigma must satisfy 0 <= sigma < T_B")


@dataclass(frozen=True)
class InstrumentReading:
    """Inverted physical value together with the chain that produced it."""

    instrument: str
    value: float
    unit: str
    f_effective: float
    T_B: float
    relative_uncertainty: float

    def to_json(self) -> str:
        payload = {
            "instrument": self.instrument,
            "value": self.value,
            "unit": self.unit,
            "f_effective": self.f_effective,
            "T_B": self.T_B,
            "relative_uncertainty": self.relative_uncertainty,
        }
        return json.dumps(payload, sort_keys=True)


@dataclass(frozen=True)
class QuarticDesign:
    b: float
    L: float
    Omega: float
    m: float
    E0_bound: float


def _demodulate(times, values, carrier_omega):
    """Boxcar lock-in: amplitude of the carrier_omega component vs time."""
    dt = times[1] - times[0]
    period = _TWO_PI / carrier_omega
    win = max(int(round(period / dt)), 1)
    if win >= len(values) // 3:
        raise CoverageError("series too short to average out the carrier")
    mixed = values * np.exp(-1j * carrier_omega * times)
    kernel = np.full(win, 1.0 / win)
    z = np.convolve(mixed, kernel, mode="valid")
    t = times[win - 1:] - 0.5 * (win - 1) * dt
    return t, 2.0 * np.abs(z)


def _quadratic_peak(power, k):
    if 0 < k < len(power) - 1 and power[k - 1] > 0 and power[k + 1] > 0:
        la, lb, lc = np.log(power[k - 1: k + 2])
        denom = la - 2.0 * lb + lc
        if denom < 0:
            return k + 0.5 * (la - lc) / denom
    return float(k)


def _sinusoid_fit(times, values, f_seed, df):
    """Least-squares single sinusoid a*cos + b*sin + c with free frequency."""
    t = times - times[0]

    def residual_ss(freq):
        w = _TWO_PI * freq
        basis = np.column_stack([np.cos(w * t), np.sin(w * t), np.ones_like(t)])
        coef, *_ = np.linalg.lstsq(basis, values, rcond=None)
        r = values - basis @ coef
        return float(r @ r)

    res = minimize_scalar(residual_ss, bounds=(f_seed - df, f_seed + df),
                          method="bounded", options={"xatol": df * 1e-10})
    f_hat = float(res.x)
    # 1-sigma via the numeric Jacobian of the full model at the optimum.
    w = _TWO_PI * f_hat
    basis = np.column_stack([np.cos(w * t), np.sin(w * t), np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(basis, values, rcond=None)
    r = values - basis @ coef
    dof = max(len(t) - 4, 1)
    s2 = float(r @ r) / dof
    dmodel_df = _TWO_PI * t * (-coef[0] * np.sin(w * t) + coef[1] * np.cos(w * t))
    jac = np.column_stack([basis, dmodel_df])
    jtj = jac.T @ jac
    try:
        cov = s2 * np.linalg.inv(jtj)
        sigma_f = math.sqrt(max(cov[3, 3], 0.0))
    except np.linalg.LinAlgError:
        sigma_f = df / 2.0
    return f_hat, sigma_f


def estimate_period(times, values, window: str = "hann", refine: bool = True,
                    carrier_omega: float | None = None) -> PeriodEstimate:
    """Estimate the slow period of a uniformly sampled series.

    Steps: optional carrier demodulation, mean/linear detrend, windowed
    periodogram, significance test against the median floor, subharmonic
    check, quadratic peak interpolation, and (with ``refine``) a single-
    sinusoid least-squares fit seeded by the peak.  ``sigma`` comes from the
    fit covariance, or half a frequency bin otherwise.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) != len(values) or len(times) < 8:
        raise DomainError("need matching series with at least 8 samples")
    dt = np.diff(times)
    if np.max(np.abs(dt - dt[0])) > 1e-6 * abs(dt[0]):
        raise DomainError("sampling must be uniform")
    if carrier_omega is not None:
        times, values = _demodulate(times, values, carrier_omega)
    step = times[1] - times[0]
    span = times[-1] - times[0]

    coef = np.polyfit(times, values, 1)
    detrended = values - np.polyval(coef, times)
    if window == "hann":
        win = np.hanning(len(detrended))
    elif window == "rect":
        win = np.ones(len(detrended))
    else:
        raise ParameterError(f"unknown window {window!r}")
    spec = np.fft.rfft(detrended * win)
    power = np.abs(spec) ** 2
    if len(power) < 4:
        raise CoverageError("series too short for a periodogram")
    power[0] = 0.0
    k_peak = int(np.argmax(power))
    floor = float(np.median(power[1:]))
    # white-noise periodograms reach ~log2(bins) times the median by extreme-
    # value statistics, so the 5x gate is raised with the bin count
    gate = max(PEAK_SIGNIFICANCE, 2.0 * math.log2(len(power)))
    if floor <= 0 or power[k_peak] < gate * floor:
        raise DetectionError(
            "no significant spectral peak "
            f"(peak/floor = {power[k_peak] / floor if floor > 0 else math.inf:.2f}, "
            f"gate = {gate:.1f})")
    for div in (2, 3):
        k_sub = int(round(k_peak / div))
        if k_sub >= 1 and abs(k_sub * div - k_peak) <= 1:
            if power[k_sub] >= SUBHARMONIC_RATIO * power[k_peak] \
                    and power[k_sub] >= PEAK_SIGNIFICANCE * floor:
                k_peak = k_sub
                break
    df_bin = 1.0 / (len(values) * step)
    f_hat = _quadratic_peak(power, k_peak) * df_bin
    method = PERIODOGRAM
    sigma_f = 0.5 * df_bin
    if refine:
        f_hat, sigma_f = _sinusoid_fit(times, detrended, f_hat, df_bin)
        method = SINUSOID_FIT
    period = 1.0 / f_hat
    if span < 3.0 * period:
        raise CoverageError(
            f"series spans {span:.3g} < 3 estimated periods ({3 * period:.3g})")
    sigma_t = sigma_f * period**2
    return PeriodEstimate(T_B=period, sigma=min(sigma_t, math.nextafter(period, 0.0)),
                          method=method, spectrum_peak_bin=k_peak)


def infer_force(T_B: float, n: int, hbar: float,
                drift_per_period: float | None = None,
                omega: float | None = None) -> float:
    """Tilt magnitude |f| = hbar*n/T_B; signed when a lab drift is supplied.

    The lab-frame drift per period equals hbar*omega/f, so its sign is the
    sign of f.
    """
    if T_B <= 0:
        raise DomainError("T_B must be positive")
    f_mag = hbar * n / T_B
    if drift_per_period is not None:
        if omega is None or omega <= 0:
            raise DomainError("sign resolution needs the drive frequency")
        return math.copysign(f_mag, drift_per_period)
    return f_mag


def invert_instrument(instrument: Instrument, T_B: float, n: int, hbar: float,
                      m: float | None = None, E0: float | None = None,
                      Omega: float | None = None, eta: float | None = None,
                      sigma: float = 0.0) -> InstrumentReading:
    """Invert a measured Bloch period into the instrument's physical value.

    Closed forms:

    * force meter:   F0  = (hbar*n*pi/tau) * sqrt(2m/E0) / T_B
    * tachometer:    w_z = (hbar*n/(2*eta*y0*tau)) * (2*pi/T_B)
    * magnetometer:  B_z = (m*hbar*n/(eta*y0*tau*Q)) * (2*pi/T_B)
    * inverse-x:     a   = (hbar*n*b/(tau*Omega)) * (2*pi/T_B)

    Well parameters not carried by the instrument itself (m, E0, eta, Omega)
    are passed explicitly.  The relative uncertainty is sigma/T_B, propagated
    linearly (every form scales as 1/T_B).
    """
    if T_B <= 0:
        raise DomainError("T_B must be positive")
    rel = sigma / T_B
    if isinstance(instrument, ForceMeter):
        if m is None or E0 is None or m <= 0 or E0 <= 0:
            raise ConfigurationError("force meter inversion needs m and E0")
        value = (hbar * n * math.pi / instrument.tau) * math.sqrt(2.0 * m / E0) / T_B
        f_eff = hbar * n / T_B
        return InstrumentReading("force_meter", value, "force", f_eff, T_B, rel)
    if isinstance(instrument, Tachometer):
        if eta is None or eta <= 0:
            raise ConfigurationError("tachometer inversion needs the slope eta")
        value = (hbar * n / (2.0 * eta * instrument.y0 * instrument.tau)) * (_TWO_PI / T_B)
        f_eff = -hbar * n / T_B
        return InstrumentReading("tachometer", value, "rad/time", f_eff, T_B, rel)
    if isinstance(instrument, Magnetometer):
        if m is None or m <= 0:
            raise ConfigurationError("magnetometer inversion needs the mass m")
        if eta is None or eta <= 0:
            raise ConfigurationError("magnetometer inversion needs the slope eta")
        value = (m * hbar * n / (eta * instrument.y0 * instrument.tau * instrument.Q)) \
            * (_TWO_PI / T_B)
        f_eff = -hbar * n / T_B
        return InstrumentReading("magnetometer", value, "magnetic-field", f_eff, T_B, rel)
    if isinstance(instrument, SingularAmplitude):
        if Omega is None or Omega <= 0:
            raise ConfigurationError("inverse-x inversion needs Omega")
        value = (hbar * n * instrument.b / (instrument.tau * Omega)) * (_TWO_PI / T_B)
        f_eff = hbar * n / T_B
        return InstrumentReading("singular_amplitude", value, "energy*length",
                                 f_eff, T_B, rel)
    raise ConfigurationError(f"unknown instrument {type(instrument).__name__}")


def design_quartic_well(b: float, Omega: float, m: float, L: float) -> QuarticDesign:
    """Quartic-bottom well realizing |Theta - pi| = b/x at design frequency Omega.

    The angle map holds while the quartic energy dominates, |E0| much less
    than E0_bound = m*Omega^2*b^2/(2*pi^4); downstream code enforces
    |E0| <= 0.1*E0_bound.
    """
    if min(b, Omega, m, L) <= 0:
        raise DesignError("all design inputs must be positive")
    if L <= 10.0 * b / math.pi:
        raise DesignError(
            f"L={L:.3g} too small: need L > 10*b/pi = {10.0 * b / math.pi:.3g}")
    bound = m * Omega**2 * b**2 / (2.0 * math.pi**4)
    return QuarticDesign(b=b, L=L, Omega=Omega, m=m, E0_bound=bound)
