"""Three-qubit model of teleportation with a distorted input and a
non-maximally-entangled resource.

Qubit 1 holds N(alpha|0> + zeta*beta|1>), qubits 2-3 hold a|10> + b|01>.
``branch_states`` gives Bob's unnormalized qubit for each two-bit outcome in
closed form; ``simulate_circuit`` produces the same map gate by gate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

OUTCOMES = ("00", "01", "10", "11")

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.diag([1, -1]).astype(complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)

# Bob's correction per outcome: X first, then Z
CORRECTIONS = {"00": _X, "01": _I, "10": _Z, "11": _Z @ _X}


@dataclass(frozen=True)
class DistortedInput:
    alpha: complex
    beta: complex
    zeta: complex = 1.0

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {norm!r}, expected 1")
        if abs(self.alpha) ** 2 + abs(self.zeta) ** 2 * abs(self.beta) ** 2 == 0:
            raise ValueError("distortion annihilates the input state")

    @property
    def norm_factor(self) -> float:
        return 1.0 / math.sqrt(abs(self.alpha) ** 2 + abs(self.zeta) ** 2 * abs(self.beta) ** 2)

    @property
    def target(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)


@dataclass(frozen=True)
class ResourceState:
    a: complex
    b: complex

    def __post_init__(self):
        norm = abs(self.a) ** 2 + abs(self.b) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"|a|^2 + |b|^2 = {norm!r}, expected 1")

    @classmethod
    def compensating(cls, zeta: complex):
        """Resource with a = zeta*b."""
        b = 1.0 / math.sqrt(1.0 + abs(zeta) ** 2)
        return cls(zeta * b, b)


def branch_states(inp: DistortedInput, res: ResourceState) -> dict[str, np.ndarray]:
    """Bob's unnormalized qubit for each outcome just before measurement."""
    pref = inp.norm_factor / math.sqrt(2)
    al, zb = inp.alpha, inp.zeta * inp.beta
    a, b = res.a, res.b
    return {
        "00": pref * np.array([a * zb, b * al]),
        "11": pref * np.array([-a * zb, b * al]),
        "01": pref * np.array([a * al, b * zb]),
        "10": pref * np.array([a * al, -b * zb]),
    }


def _op(gate, target, n=3):
    ops = [_I] * n
    ops[target] = gate
    out = ops[0]
    for m in ops[1:]:
        out = np.kron(out, m)
    return out


def _cnot(control, target, n=3):
    dim = 2**n
    U = np.zeros((dim, dim), dtype=complex)
    for k in range(dim):
        bits = [(k >> (n - 1 - i)) & 1 for i in range(n)]
        if bits[control]:
            bits[target] ^= 1
        j = sum(bit << (n - 1 - i) for i, bit in enumerate(bits))
        U[j, k] = 1.0
    return U


def simulate_circuit(inp: DistortedInput, res: ResourceState) -> dict[str, np.ndarray]:
    """Gate-level state vector of the three qubits, split by the measured pair.

    CNOT(1->2), Hadamard on 1, CNOT(1->2) maps the two-qubit basis of (1, 2)
    onto the outcome labels.
    """
    q1 = inp.norm_factor * np.array([inp.alpha, inp.zeta * inp.beta])
    q23 = np.zeros(4, dtype=complex)
    q23[0b10] = res.a
    q23[0b01] = res.b
    psi = np.kron(q1, q23)
    psi = _cnot(0, 1) @ psi
    psi = _op(_H, 0) @ psi
    psi = _cnot(0, 1) @ psi
    t = psi.reshape(2, 2, 2)
    return {f"{i}{j}": t[i, j].copy() for i in range(2) for j in range(2)}


def postselect_fidelity(inp: DistortedInput, res: ResourceState, outcome: str):
    """Fidelity of Bob's corrected qubit with the undistorted input, and branch weight.

    A zero-weight branch gives ``(nan, 0.0)``.
    """
    if outcome not in OUTCOMES:
        raise ValueError(f"outcome must be one of {OUTCOMES}, got {outcome!r}")
    branch = branch_states(inp, res)[outcome]
    prob = float(np.vdot(branch, branch).real)
    if prob == 0.0:
        return math.nan, 0.0
    bob = CORRECTIONS[outcome] @ branch
    fid = abs(np.vdot(inp.target, bob)) ** 2 / prob
    return float(fid), prob
