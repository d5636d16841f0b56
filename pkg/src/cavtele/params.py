"""Physical parameters, pulse schedules and input qubits.

Rates are stored as angular frequencies in rad/us and times in us. The
``from_mhz`` constructor takes the usual ``rate/(2*pi)`` values in MHz.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


class OverdampedError(ValueError):
    """Raised when 4*delta**2 <= kappa**2 and a closed form is requested."""


@dataclass(frozen=True)
class SystemParams:
    """Atom-cavity rates (rad/us): detuning, laser, coupling, cavity and atomic damping."""

    Delta: float
    Omega: float
    g: float
    kappa: float
    gamma: float = 0.0

    def __post_init__(self):
        for name in ("Delta", "Omega", "g", "kappa", "gamma"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            if value < 0:
                raise ValueError(f"{name} must be non-negative, got {value!r}")
        if self.Delta <= 0:
            raise ValueError("Delta must be positive")

    @classmethod
    def from_mhz(cls, Delta, Omega, g, kappa, gamma=0.0):
        return cls(*(TWO_PI * float(x) for x in (Delta, Omega, g, kappa, gamma)))

    def to_mhz(self):
        return tuple(x / TWO_PI for x in (self.Delta, self.Omega, self.g, self.kappa, self.gamma))

    def replace(self, **changes):
        fields = dict(Delta=self.Delta, Omega=self.Omega, g=self.g, kappa=self.kappa, gamma=self.gamma)
        fields.update(changes)
        return SystemParams(**fields)

    @property
    def delta_eff(self) -> float:
        """Effective two-photon coupling g**2/Delta."""
        return self.g**2 / self.Delta

    @property
    def underdamped(self) -> bool:
        return 4.0 * self.delta_eff**2 > self.kappa**2

    @property
    def omega_kappa(self) -> float:
        if not self.underdamped:
            raise OverdampedError(
                f"overdamped regime: 4*delta^2={4 * self.delta_eff**2:.6g} <= "
                f"kappa^2={self.kappa**2:.6g} (rad/us)^2; closed forms need 4*delta^2 > kappa^2"
            )
        return math.sqrt(4.0 * self.delta_eff**2 - self.kappa**2)


@dataclass(frozen=True)
class PulseSchedule:
    """Laser-on times for Alice and Bob, detection window and branch index."""

    t_A: float
    t_B: float
    t_D: float
    branch_n: int = 0

    def __post_init__(self):
        for name in ("t_A", "t_B", "t_D"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be a finite non-negative time, got {value!r}")
        if self.branch_n < 0:
            raise ValueError("branch_n must be non-negative")

    def check_window(self, kappa: float) -> bool:
        """Warn when the detection window is too short to drain the cavities."""
        ok = self.t_D * kappa >= 3.0
        if not ok:
            warnings.warn(
                f"detection window t_D*kappa = {self.t_D * kappa:.3g} < 3; "
                "closed forms assume t_D >> 1/kappa",
                stacklevel=2,
            )
        return ok

    def with_times(self, t_A=None, t_B=None, t_D=None):
        return PulseSchedule(
            self.t_A if t_A is None else float(t_A),
            self.t_B if t_B is None else float(t_B),
            self.t_D if t_D is None else float(t_D),
            self.branch_n,
        )


@dataclass(frozen=True)
class InputQubit:
    """Normalized qubit alpha|0> + beta|1>."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        a, b = complex(self.alpha), complex(self.beta)
        if not (np.isfinite(a) and np.isfinite(b)):
            raise ValueError("amplitudes must be finite")
        norm = abs(a) ** 2 + abs(b) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {norm!r}, expected 1")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @classmethod
    def normalized(cls, alpha, beta):
        a, b = complex(alpha), complex(beta)
        norm = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
        if norm == 0.0:
            raise ValueError("zero vector cannot be normalized")
        return cls(a / norm, b / norm)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)

    @property
    def p1(self) -> float:
        """Population |beta|^2."""
        return abs(self.beta) ** 2


def qubit_fidelity(target: InputQubit, state) -> float:
    """Fidelity of a qubit (2-vector or 2x2 density matrix) against a pure target."""
    phi = target.vector
    arr = np.asarray(state, dtype=complex)
    if arr.shape == (2,):
        norm = np.vdot(arr, arr).real
        if norm <= 0.0:
            raise ValueError("zero-norm state")
        return float(abs(np.vdot(phi, arr)) ** 2 / norm)
    if arr.shape == (2, 2):
        return float(np.real(np.conj(phi) @ arr @ phi))
    raise ValueError(f"expected a 2-vector or 2x2 matrix, got shape {arr.shape}")
