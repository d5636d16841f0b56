"""Atomic-state teleportation through cavity decay with a compensating resource."""

from .params import InputQubit, OverdampedError, PulseSchedule, SystemParams, qubit_fidelity
from .protocol import DetectorModel, Outcome, run_analytic, run_trajectory
from .estimate import Estimate, InputEnsemble, ProtocolEstimate, estimate_protocol
from .optimize import TuneConfig, TuneResult, fine_tune

__all__ = [
    "DetectorModel",
    "Estimate",
    "InputEnsemble",
    "InputQubit",
    "Outcome",
    "OverdampedError",
    "ProtocolEstimate",
    "PulseSchedule",
    "SystemParams",
    "TuneConfig",
    "TuneResult",
    "estimate_protocol",
    "fine_tune",
    "qubit_fidelity",
    "run_analytic",
    "run_trajectory",
]
