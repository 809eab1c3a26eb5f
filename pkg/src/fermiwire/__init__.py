"""Qubit transmission through a fermionic nearest-neighbour wire.

Simulation and verification toolkit for sending qubits through a
tight-binding ring with Gaussian-wavepacket encodings: exact
single-particle dynamics, packet diagnostics, protocol error budgets,
an exact small-lattice many-body oracle, and the minimal-wait scaling
harness.
"""

__version__ = "0.1.0"

from .lattice import (
    Boundary,
    HoppingMatrix,
    Lattice,
    Spectrum,
    basis_state,
    build_hopping,
    diagonalize,
    dispersion,
    dispersion_third_derivative,
    group_velocity,
    propagate,
    ring_spectrum,
    transit_time,
)
from .wavepacket import (
    PacketBudget,
    PacketParams,
    Region,
    WidthReport,
    broadening_prediction,
    characteristic_width,
    circular_centroid,
    centroid_shift,
    fourier_airy_overlap,
    gaussian_packet,
    measured_width,
    overlap,
    overlap_decay_estimate,
    region_weight,
    sigma_for_budget,
    sigma_sites_for_budget,
    spectral_leakage,
    width_report,
)
from .protocol import (
    ErrorBudgetReport,
    ProtocolPlan,
    ScalingFit,
    accumulate_error,
    decode_mode,
    encoding_error_bound,
    error_budget,
    fit_rate_scaling,
    min_wait_time,
    plan_for_small_lattice,
    plan_protocol,
    propagation_error,
)
from . import fock
from . import harness

__all__ = [
    "Boundary",
    "ErrorBudgetReport",
    "HoppingMatrix",
    "Lattice",
    "PacketBudget",
    "PacketParams",
    "ProtocolPlan",
    "Region",
    "ScalingFit",
    "Spectrum",
    "WidthReport",
    "accumulate_error",
    "basis_state",
    "broadening_prediction",
    "build_hopping",
    "centroid_shift",
    "characteristic_width",
    "circular_centroid",
    "decode_mode",
    "diagonalize",
    "dispersion",
    "dispersion_third_derivative",
    "encoding_error_bound",
    "error_budget",
    "fit_rate_scaling",
    "fock",
    "fourier_airy_overlap",
    "gaussian_packet",
    "group_velocity",
    "harness",
    "measured_width",
    "min_wait_time",
    "overlap",
    "overlap_decay_estimate",
    "plan_for_small_lattice",
    "plan_protocol",
    "propagate",
    "propagation_error",
    "region_weight",
    "ring_spectrum",
    "sigma_for_budget",
    "sigma_sites_for_budget",
    "spectral_leakage",
    "transit_time",
    "width_report",
]
