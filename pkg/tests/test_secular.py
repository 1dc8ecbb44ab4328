import math

import numpy as np
import pytest

from flobloch import (
    DriveSpec,
    ForceMeter,
    Magnetometer,
    ProbeSpec,
    SingularAmplitude,
    Tachometer,
    WellSpec,
    comb_partial_sum,
    from_angle,
    make_map,
    probe_to_force,
    secular_reduce,
    trajectory_fourier_components,
)
from flobloch.errors import (
    ConfigurationError,
    DegenerateLatticeError,
    ParameterError,
    ResonanceError,
)
from flobloch.secular import comb_secular_average

TWO_PI = 2.0 * math.pi


@pytest.fixture
def square():
    return make_map(WellSpec.square(L=1.0, m=1.0), 0.5)


@pytest.fixture
def triangular_unit_omega():
    # eta = m = 1 and E0 = pi^2/2 give Omega = 1 exactly
    return make_map(WellSpec.triangular(eta=1.0, m=1.0), math.pi**2 / 2.0)


def test_square_linear_drive_triangle_wave_series(square):
    # x(Theta) is a triangle wave: V_l = 2L/(pi*l)^2 for odd l, 0 for even,
    # V_0 = L/2
    spec = trajectory_fourier_components(square, lambda x: x, l_max=15,
                                         nodes=1 << 17)
    assert spec.get(0).real == pytest.approx(0.5, abs=1e-10)
    for ell in range(1, 16):
        expect = 2.0 / (math.pi**2 * ell**2) if ell % 2 else 0.0
        assert abs(spec.get(ell) - expect) < 1e-8
        assert abs(spec.get(-ell) - expect) < 1e-8


def test_triangular_linear_drive_parabola_series(triangular_unit_omega):
    # x(Theta) = (eta/2 m Omega^2) Theta (2 pi - Theta); its series gives
    # V_l = -eta/(m Omega^2 l^2) and V_0 = eta pi^2/(3 m Omega^2)
    spec = trajectory_fourier_components(triangular_unit_omega, lambda x: x,
                                         l_max=12, nodes=1 << 17)
    assert spec.get(0).real == pytest.approx(math.pi**2 / 3.0, abs=1e-8)
    for ell in range(1, 13):
        assert abs(spec.get(ell) - (-1.0 / ell**2)) < 1e-8


def test_constant_profile(square):
    spec = trajectory_fourier_components(square, lambda x: 3.25 * np.ones_like(x),
                                         l_max=4)
    assert spec.get(0).real == pytest.approx(3.25, rel=1e-12)
    for ell in (1, 2, 3, 4):
        assert abs(spec.get(ell)) < 1e-12


def test_hermiticity_reconstruction(square):
    spec = trajectory_fourier_components(square, lambda x: x * (1 - x), l_max=10)
    theta = TWO_PI * np.arange(257) / 257
    vals = np.zeros_like(theta, dtype=complex)
    for ell, c in spec.as_dict().items():
        vals += c * np.exp(1j * ell * theta)
    assert np.max(np.abs(vals.imag)) < 1e-10


def test_parseval(square):
    # the composed signal has corner-induced 1/l^2 tails, so the truncated
    # sum needs l_max large enough that the discarded tail sits below 1e-8
    v = lambda x: np.cos(3.0 * x) + 0.5 * x
    spec = trajectory_fourier_components(square, v, l_max=256, nodes=1 << 16)
    theta = TWO_PI * np.arange(1 << 16) / (1 << 16)
    x, _ = from_angle(square, theta)
    quad = np.mean(np.abs(v(x)) ** 2)
    assert np.sum(np.abs(spec.coeffs) ** 2) == pytest.approx(quad, rel=1e-8)


def test_secular_reduce_fig1_scale(square):
    model = secular_reduce(square, DriveSpec(n=100, amplitude=50.0))
    assert model.V_n == 50.0
    assert model.M == square.M_eff
    assert model.f == 0.0


def test_secular_reduce_even_harmonic_degenerate(square):
    with pytest.raises(DegenerateLatticeError):
        secular_reduce(square, DriveSpec(n=2, profile=lambda x: x))


def test_secular_reduce_off_resonance(square):
    omega_bad = (3 + 0.5) * square.Omega
    with pytest.raises(ResonanceError):
        secular_reduce(square, DriveSpec(n=3, omega=omega_bad,
                                         profile=lambda x: x))


def test_secular_reduce_phase_rotation(square):
    # shifting the drive in x flips signs of coefficients; V_n stays real >= 0
    model = secular_reduce(square, DriveSpec(n=1, profile=lambda x: -x))
    assert model.V_n == pytest.approx(2.0 / math.pi**2, rel=1e-7)
    assert abs(abs(model.phase_shift) - math.pi) < 1e-7


def test_probe_force_meter_value(square):
    t_d = TWO_PI / square.Omega
    probe = ProbeSpec(ForceMeter(F0=math.pi, tau=0.1 * t_d / 2.0), T_D=t_d)
    red = probe_to_force(probe, square)
    expect = 1.0 * math.pi * probe.instrument.tau / (math.pi * t_d)
    assert red.f == pytest.approx(expect, rel=1e-14)
    assert red.dirac_correction == pytest.approx(probe.instrument.tau / t_d)


def test_probe_tachometer_value(triangular_unit_omega):
    t_d = TWO_PI / triangular_unit_omega.Omega
    probe = ProbeSpec(Tachometer(w_z=math.pi, y0=1.0, tau=t_d / 20), T_D=t_d)
    red = probe_to_force(probe, triangular_unit_omega)
    assert red.f == pytest.approx(-math.pi * 1.0 * (t_d / 20) / math.pi, rel=1e-14)
    assert red.constraint_recoil_share == 0.5


def test_probe_magnetometer_zero_field(triangular_unit_omega):
    t_d = TWO_PI / triangular_unit_omega.Omega
    probe = ProbeSpec(Magnetometer(B_z=0.0, Q=1.0, y0=1.0, tau=t_d / 20), T_D=t_d)
    assert probe_to_force(probe, triangular_unit_omega).f == 0.0


def test_probe_linearity(square, triangular_unit_omega):
    t_d_sq = TWO_PI / square.Omega
    t_d_tr = TWO_PI / triangular_unit_omega.Omega
    for inst, aamap, t_d in [
        (lambda s: ForceMeter(F0=s, tau=t_d_sq / 50), square, t_d_sq),
        (lambda s: Tachometer(w_z=s, y0=0.3, tau=t_d_tr / 50),
         triangular_unit_omega, t_d_tr),
        (lambda s: Magnetometer(B_z=s, Q=1.6, y0=0.3, tau=t_d_tr / 50),
         triangular_unit_omega, t_d_tr),
    ]:
        f1 = probe_to_force(ProbeSpec(inst(1.0), T_D=t_d), aamap).f
        f2 = probe_to_force(ProbeSpec(inst(2.0), T_D=t_d), aamap).f
        assert f2 == pytest.approx(2.0 * f1, rel=1e-14)


def test_probe_singular_amplitude():
    well = WellSpec.quartic(b=math.pi, Omega=1.0, L=100.0, m=1.0)
    aamap = make_map(well, 0.0)
    t_d = TWO_PI / aamap.Omega
    inst = SingularAmplitude(a=2.0, b=well.b, tau=t_d / 40)
    red = probe_to_force(ProbeSpec(inst, T_D=t_d), aamap)
    assert red.f == pytest.approx(2.0 * inst.tau * 1.0 / (TWO_PI * math.pi),
                                  rel=1e-14)
    double = SingularAmplitude(a=4.0, b=well.b, tau=t_d / 40)
    assert probe_to_force(ProbeSpec(double, T_D=t_d), aamap).f == pytest.approx(
        2.0 * red.f, rel=1e-14)


def test_probe_incompatible_pairing(square):
    t_d = TWO_PI / square.Omega
    probe = ProbeSpec(Tachometer(w_z=1.0, y0=1.0, tau=t_d / 20), T_D=t_d)
    with pytest.raises(ConfigurationError):
        probe_to_force(probe, square)


def test_probe_tau_bound():
    with pytest.raises(ParameterError):
        ProbeSpec(ForceMeter(F0=1.0, tau=0.3), T_D=2.0)


def test_comb_secular_average_converges_to_sawtooth():
    # the K-truncated average approaches the linear probe with O(1/K) error
    theta = 2.0
    exact = theta - math.pi
    err = [abs(comb_secular_average(theta, K, centered=True) - exact)
           for K in (8, 16, 32, 64, 128)]
    assert err[-1] < err[0]
    assert err[-1] < 4.0 / 128


def test_comb_centered_vanishes_at_pi():
    assert comb_secular_average(math.pi, K=25, centered=True) == pytest.approx(
        0.0, abs=1e-12)


def test_comb_tail_ratio():
    # residual of the centered partial sum follows the 1/K series tail:
    # K * r(K) -> 1 at theta = pi/2, and r(1) = 2 - pi/2 exactly, so the
    # K=1 vs K=50 ratio is (2 - pi/2) / r(50) = 21.47
    theta = math.pi / 2.0
    exact = theta - math.pi

    def residual(K):
        return abs(comb_secular_average(theta, K, centered=True) - exact)

    assert residual(1) == pytest.approx(2.0 - math.pi / 2.0, rel=1e-12)
    for K in (50, 200):
        assert K * residual(K) == pytest.approx(1.0, rel=1e-3)
    assert residual(1) / residual(50) == pytest.approx(21.4688, rel=1e-4)


def test_comb_partial_sum_time_average():
    # averaging the doubly truncated form over one fast period leaves the
    # sawtooth partial sum exactly (the comb harmonics integrate to zero)
    theta, K, omega = 1.3, 12, 2.0
    t = (np.arange(4096) + 0.5) / 4096 * (TWO_PI / omega)
    avg = np.mean([comb_partial_sum(theta, ti, K, omega) for ti in t])
    assert avg == pytest.approx(comb_secular_average(theta, K), rel=1e-6)
