"""Self-check suite run by ``cavtele check``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analytic, circuit
from .linalg import Propagator, basis_state, local_index, local_state, norm2
from .params import SystemParams
from .qdyn import (
    HamiltonianSpec,
    build_collapse_channels,
    build_hamiltonian,
    channel_rate_operator,
    local_hamiltonian,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return math.isfinite(self.residual) and self.residual < self.tolerance


def compensation_identity(p: SystemParams, kappa_mhz=np.linspace(0.5, 8.0, 20)) -> float:
    worst = 0.0
    for k in kappa_mhz:
        q = p.replace(kappa=2 * math.pi * k)
        if not q.underdamped:
            continue
        t_A = analytic.mapping_time(q)
        worst = max(worst, analytic.compensation_residual(t_A, analytic.entangling_time(t_A, q), q))
    return worst


def closed_form_vs_propagation(p: SystemParams, n_points: int = 100) -> float:
    """Max amplitude error between exp(-iHt)|10> and the a(t), b(t) closed form."""
    q = p.replace(Omega=p.g)
    H = local_hamiltonian(q, "adiabatic", laser_on=True)
    prop = Propagator(H)
    psi0 = local_state(1, 0)
    i01, i10 = local_index(0, 1), local_index(1, 0)
    t_max = 2 * math.pi / q.omega_kappa
    worst = 0.0
    for t in np.linspace(0.0, t_max, n_points):
        psi = prop.apply(t, psi0)
        a, b = analytic.ab_coefficients(t, q)
        pref = np.exp((1j * q.delta_eff - 0.5 * q.kappa) * t)
        worst = max(worst, abs(psi[i01] - pref * 1j * a), abs(psi[i10] - pref * b))
    return worst


def channel_completeness(p: SystemParams) -> float:
    worst = 0.0
    rate = channel_rate_operator(build_collapse_channels(p))
    for model in ("full", "adiabatic"):
        q = p if model == "full" else p.replace(Omega=p.g)
        for on in (False, True):
            H = build_hamiltonian(HamiltonianSpec(q, model, on, on))
            anti = -2.0 * (H - H.conj().T) / 2j
            worst = max(worst, float(np.max(np.abs(rate - anti))))
    return worst


def quadrature_vs_closed_form(p: SystemParams) -> float:
    s = analytic.schedule(p, t_d_factor=20.0)
    closed = analytic.success_probability(s, p)
    quad = analytic.success_probability(s, p, "quadrature")
    return abs(quad - closed) / closed


def prep_norm_consistency(p: SystemParams) -> float:
    from .params import InputQubit

    s = analytic.schedule(p)
    worst = 0.0
    for alpha, beta in ((1, 0), (0, 1), (0.6, 0.8j), (1, 1)):
        q = InputQubit.normalized(alpha, beta)
        P_A, P_B = analytic.prep_success_probs(q, s, p)
        worst = max(worst, abs(norm2(analytic.mapped_alice_state(q, s, p)) - P_A),
                    abs(norm2(analytic.bob_resource_state(s, p)) - P_B))
    return worst


def norm_monotonicity(p: SystemParams) -> float:
    """Largest norm increase along a time grid for every stage Hamiltonian."""
    psi0 = (basis_state(1, 0, 1, 0) + basis_state(0, 0, 1, 0)) / math.sqrt(2)
    worst = 0.0
    for on_A, on_B in ((True, True), (True, False), (False, False)):
        prop = Propagator(build_hamiltonian(HamiltonianSpec(p, "full", on_A, on_B)))
        norms = [norm2(prop.apply(t, psi0)) for t in np.linspace(0, 0.5, 200)]
        worst = max(worst, max(0.0, float(np.max(np.diff(norms)))))
    return worst


def circuit_compensation(n_samples: int = 200, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        z = rng.standard_normal(4)
        v = np.array([z[0] + 1j * z[1], z[2] + 1j * z[3]])
        v /= np.linalg.norm(v)
        zeta = rng.uniform(1e-3, 1.0)
        inp = circuit.DistortedInput(v[0], v[1], zeta)
        res = circuit.ResourceState.compensating(zeta)
        for outcome in ("01", "10"):
            fid, _ = circuit.postselect_fidelity(inp, res, outcome)
            worst = max(worst, abs(1.0 - fid))
    return worst


def modified_fidelity(p: SystemParams) -> float:
    from .params import InputQubit

    worst = 0.0
    for alpha, beta in ((1, 0), (0, 1), (0.6, 0.8j), (1, -1j)):
        q = InputQubit.normalized(alpha, beta)
        for eps in (1, -1):
            worst = max(worst, abs(1.0 - analytic.bob_fidelity(q, p, eps)))
    return worst


def run_checks(p: SystemParams) -> list[CheckResult]:
    """Evaluate every invariant for the given parameters (closed forms need underdamping)."""
    p.omega_kappa  # raises OverdampedError early
    return [
        CheckResult("compensation_identity", compensation_identity(p), 1e-10),
        CheckResult("closed_form_vs_propagation", closed_form_vs_propagation(p), 1e-9),
        CheckResult("channel_completeness", channel_completeness(p), 1e-12),
        CheckResult("quadrature_vs_closed_form", quadrature_vs_closed_form(p), 1e-4),
        CheckResult("prep_norm_consistency", prep_norm_consistency(p), 1e-12),
        CheckResult("norm_monotonicity", norm_monotonicity(p), 1e-12),
        CheckResult("circuit_compensation", circuit_compensation(), 1e-12),
        CheckResult("modified_mode_fidelity", modified_fidelity(p), 1e-12),
    ]
