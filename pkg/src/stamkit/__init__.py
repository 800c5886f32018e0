"""stamkit: compile and verify shortcuts to adiabaticity by modulation.

A constant gauge generator ``G`` and a set of level energies define a family
of Hamiltonians ``H(lam)``. Applying ``H`` only at a few path points, each
for a duration that flips the relative dynamic phase of every coupled level
pair by pi, reproduces the adiabatic evolution exactly at the checkpoints.
"""
from . import diagnostics, dynamics, models, protocol, qla, robustness
from .diagnostics import BoundReport, bound_report, eps_ave, u_deviation
from .dynamics import LindbladModel, RampSpec, propagate_lindblad, propagate_ramp, propagate_unitary, propagator_of
from .errors import StamError
from .models import BosonicModel, CoupledQubitModel, LambdaModel, build_bosonic, build_coupled_qubits, build_lambda
from .protocol import GaugeSpec, PulseSequence, Schedule, compile_sequence, make_schedule, validate_clusters
from .robustness import ErrorChannel, ScanResult, apply_channel, sweep, transfer_efficiency

__version__ = "0.1.0"

__all__ = [
    "BosonicModel", "BoundReport", "CoupledQubitModel", "ErrorChannel", "GaugeSpec", "LambdaModel",
    "LindbladModel", "PulseSequence", "RampSpec", "ScanResult", "Schedule", "StamError",
    "apply_channel", "bound_report", "build_bosonic", "build_coupled_qubits", "build_lambda",
    "compile_sequence", "diagnostics", "dynamics", "eps_ave", "make_schedule", "models", "propagate_lindblad",
    "propagate_ramp", "propagate_unitary", "propagator_of", "protocol", "qla", "robustness", "sweep",
    "transfer_efficiency", "u_deviation", "validate_clusters",
]
