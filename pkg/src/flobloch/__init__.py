"""Floquet-Bloch oscillation metrology toolkit.

A driven trapped particle reduces, near the resonance omega = n*Omega, to a
lattice Hamiltonian P**2/(2M) + V_n*cos(n*theta) on the angle circle.  A weak
probe tilts that lattice and the resulting Bloch period T_B = hbar*n/|f| is
the measured quantity from which forces, rotation rates, magnetic fields and
singular-potential amplitudes are inverted.
"""

from .errors import FloblochError
from .wells import (
    ActionAngleMap,
    PhasePoint,
    WellKind,
    WellSpec,
    action,
    angular_frequency,
    effective_mass,
    from_angle,
    make_map,
    to_angle,
)
from .secular import (
    DriveSpec,
    ForceMeter,
    FourierSpectrum,
    Magnetometer,
    ProbeReduction,
    ProbeSpec,
    ReducedModel,
    SingularAmplitude,
    Tachometer,
    comb_partial_sum,
    probe_to_force,
    secular_reduce,
    trajectory_fourier_components,
)
from .bands import BandStructure, bloch_state, group_velocity_and_mass, solve_bands
from .reduced import (
    AngularState,
    EvolutionLog,
    drift_per_period,
    evolve_reduced,
    init_gaussian,
    to_lab_frame,
)
from .instruments import (
    InstrumentReading,
    PeriodEstimate,
    QuarticDesign,
    design_quartic_well,
    estimate_period,
    infer_force,
    invert_instrument,
)

__version__ = "0.1.0"

__all__ = [
    "ActionAngleMap", "AngularState", "BandStructure", "DriveSpec",
    "EvolutionLog", "FloblochError", "ForceMeter", "FourierSpectrum",
    "InstrumentReading", "Magnetometer", "PeriodEstimate", "PhasePoint",
    "ProbeReduction", "ProbeSpec", "QuarticDesign", "ReducedModel",
    "SingularAmplitude", "Tachometer", "WellKind", "WellSpec", "action",
    "angular_frequency", "bloch_state", "comb_partial_sum",
    "design_quartic_well", "drift_per_period", "effective_mass",
    "estimate_period", "evolve_reduced", "from_angle",
    "group_velocity_and_mass", "infer_force", "init_gaussian",
    "invert_instrument", "make_map", "probe_to_force", "secular_reduce",
    "solve_bands", "to_angle", "to_lab_frame",
    "trajectory_fourier_components",
]
