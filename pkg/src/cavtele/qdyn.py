"""Non-Hermitian Hamiltonians, collapse channels and the jump-time sampler."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import (
    Propagator,
    build_annihilation,
    build_flip,
    embed,
    local_annihilation,
    local_flip,
    norm2,
)
from .params import SystemParams

MODELS = ("full", "adiabatic")

# bisection stops once the bracket on the jump time is this narrow (us)
JUMP_TIME_TOL = 1e-6
_NORM_FLOOR = 1e-300


@dataclass(frozen=True)
class HamiltonianSpec:
    params: SystemParams
    model: str = "full"
    laser_on_A: bool = False
    laser_on_B: bool = False


@dataclass(frozen=True)
class CollapseChannel:
    operator: np.ndarray
    label: str
    # +1 / -1 for the two beam-splitter output ports, None for sideways emission
    detector: int | None = None

    @property
    def detectable(self) -> bool:
        return self.detector is not None


def local_hamiltonian(p: SystemParams, model: str = "full", laser_on: bool = True, n_max: int = 1) -> np.ndarray:
    """Hamiltonian of one atom-cavity system.

    ``full`` is the three-level Lambda atom with detuned excited state;
    ``adiabatic`` is the effective two-level form with coupling g**2/Delta,
    valid only for Omega == g. Both carry -i*kappa*a^dag a and -i*gamma*sigma_22
    so the anti-Hermitian part matches the collapse channels.
    """
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}, got {model!r}")
    a = local_annihilation(n_max)
    ad = a.conj().T
    n_op = ad @ a
    s = lambda i, j: local_flip(i, j, n_max)  # noqa: E731
    H = -1j * p.kappa * n_op - 1j * p.gamma * s(2, 2)
    if model == "full":
        H = H + p.Delta * s(2, 2)
        H = H + p.g * (a @ s(2, 0) + ad @ s(0, 2))
        if laser_on:
            H = H + p.Omega * (s(2, 1) + s(1, 2))
        return H
    d = p.delta_eff
    H = H - d * n_op @ s(0, 0)
    if laser_on:
        if not math.isclose(p.Omega, p.g, rel_tol=1e-12, abs_tol=0.0):
            raise ValueError(
                f"adiabatic model requires Omega == g (got Omega={p.Omega!r}, g={p.g!r} rad/us)"
            )
        H = H - d * s(1, 1) - d * (a @ s(1, 0) + ad @ s(0, 1))
    return H


def build_hamiltonian(spec: HamiltonianSpec, n_max: int = 1) -> np.ndarray:
    """Joint Hamiltonian H_A x 1 + 1 x H_B for the two independent systems."""
    H_A = local_hamiltonian(spec.params, spec.model, spec.laser_on_A, n_max)
    H_B = local_hamiltonian(spec.params, spec.model, spec.laser_on_B, n_max)
    return embed(H_A, "A", n_max) + embed(H_B, "B", n_max)


def build_collapse_channels(p: SystemParams, n_max: int = 1, branching: float = 0.5) -> list[CollapseChannel]:
    """Beam-splitter detection channels plus sideways spontaneous emission.

    ``branching`` is the fraction of excited-state decay going to |0>; the
    remainder goes to |1>. The total rate out of |2> is 2*gamma.
    """
    if not 0.0 <= branching <= 1.0:
        raise ValueError("branching must lie in [0, 1]")
    a_A = build_annihilation("A", n_max)
    a_B = build_annihilation("B", n_max)
    root_k = math.sqrt(p.kappa)
    channels = [
        CollapseChannel(root_k * (a_A + 1j * a_B), "Dplus", +1),
        CollapseChannel(root_k * (a_A - 1j * a_B), "Dminus", -1),
    ]
    if p.gamma > 0:
        for side in ("A", "B"):
            for level, frac in ((0, branching), (1, 1.0 - branching)):
                if frac > 0:
                    op = math.sqrt(2.0 * p.gamma * frac) * build_flip(level, 2, side, n_max)
                    channels.append(CollapseChannel(op, f"Spont{side}{level}"))
    return channels


def channel_rate_operator(channels) -> np.ndarray:
    """Sum of C^dag C over all channels."""
    return sum(c.operator.conj().T @ c.operator for c in channels)


@dataclass
class NoJump:
    state: np.ndarray


@dataclass
class Jump:
    time: float
    channel: int
    label: str
    state: np.ndarray


def sample_jump(psi: np.ndarray, H, window: float, rng: np.random.Generator, channels, u: float | None = None):
    """Evolve a normalized state for at most ``window`` us, sampling one jump.

    Draws ``u ~ U(0,1)``; if the no-jump norm**2 stays above ``u`` over the
    window the normalized no-jump state is returned. Otherwise the jump time
    solves ``norm**2(t) = u`` by bisection and a channel is drawn with weight
    ``||C_k psi(t)||**2``.
    """
    prop = H if isinstance(H, Propagator) else Propagator(H)
    if u is None:
        u = rng.random()
    if prop.diagonalized:
        coeffs = prop.coefficients(psi)
        evolve = lambda t: prop.from_coefficients(coeffs, t)  # noqa: E731
    else:
        evolve = lambda t: prop.apply(t, psi)  # noqa: E731
    end = evolve(window)
    end_norm = norm2(end)
    if end_norm > u:
        return NoJump(end / math.sqrt(max(end_norm, _NORM_FLOOR)))
    lo, hi = 0.0, window
    while hi - lo > JUMP_TIME_TOL:
        mid = 0.5 * (lo + hi)
        if norm2(evolve(mid)) > u:
            lo = mid
        else:
            hi = mid
    t_j = 0.5 * (lo + hi)
    pre = evolve(t_j)
    kicked = [c.operator @ pre for c in channels]
    weights = np.array([norm2(v) for v in kicked])
    total = weights.sum()
    if total <= _NORM_FLOOR:
        raise RuntimeError("norm decayed but no collapse channel acts on the state")
    k = int(np.searchsorted(np.cumsum(weights), rng.random() * total, side="right"))
    k = min(k, len(channels) - 1)
    post = kicked[k]
    return Jump(t_j, k, channels[k].label, post / math.sqrt(max(weights[k], _NORM_FLOOR)))
