"""Preparation, detection and recovery stages for a single protocol run.

Two backends share the same outcome vocabulary: ``run_analytic`` returns
the exact outcome distribution from the closed forms, ``run_trajectory``
draws one quantum-jump trajectory of the full or adiabatic model with
detector efficiency and dark counts.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import analytic
from .linalg import Propagator, local_index, local_state, product_state, reduced_atom_B
from .params import InputQubit, PulseSchedule, SystemParams
from .qdyn import HamiltonianSpec, Jump, build_collapse_channels, build_hamiltonian, local_hamiltonian, sample_jump

US_PER_S = 1e-6


class Outcome(str, enum.Enum):
    SUCCESS = "success"
    NO_CLICK = "no_click"
    DOUBLE_CLICK = "double_click"
    CONTAMINATED = "contaminated_success"

    @property
    def indicated_success(self) -> bool:
        return self in (Outcome.SUCCESS, Outcome.CONTAMINATED)


@dataclass(frozen=True)
class DetectorModel:
    """Overall efficiency, dark-count rate per detector (1/s) and photon-number resolution.

    With ``reject_prep_clicks`` a click while the lasers are on rejects the
    run; otherwise such clicks are classified like any other.
    """

    eta: float = 1.0
    dark_rate: float = 0.0
    resolving: bool = True
    reject_prep_clicks: bool = True

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta!r}")
        if not (math.isfinite(self.dark_rate) and self.dark_rate >= 0):
            raise ValueError(f"dark_rate must be a finite non-negative rate, got {self.dark_rate!r}")

    @property
    def kind(self) -> str:
        return "resolving" if self.resolving else "conventional"


@dataclass(frozen=True)
class Click:
    time: float
    detector: int
    origin: str  # "cavity" or "dark"


@dataclass
class RunOutcome:
    classification: Outcome
    epsilon: int | None
    clicks: list = field(default_factory=list)
    cavity_emissions: int = 0
    spontaneous_emissions: int = 0
    # Bob's corrected atomic state restricted to {|0>, |1>}; trace < 1 if |2> is populated
    bob_rho: np.ndarray | None = None
    fidelity: float = math.nan

    @property
    def indicated_success(self) -> bool:
        return self.classification.indicated_success

    @property
    def bob_in_ground(self) -> bool:
        return self.bob_rho is not None and abs(self.bob_rho[0, 0].real - 1.0) < 1e-9


def classify(clicks, d: DetectorModel, physical_emissions: int, detection_start: float = 0.0):
    """Map a time-ordered click record to an outcome and detector sign.

    Clicks before ``detection_start`` mean a photon was registered while the
    lasers were still on; the run is then rejected (``NO_CLICK`` if nothing
    follows, ``DOUBLE_CLICK`` otherwise). Conventional detectors merge
    photons arriving at the same detector; resolving ones count them.
    """
    early = [c for c in clicks if c.time < detection_start]
    late = [c for c in clicks if c.time >= detection_start]
    if early:
        return (Outcome.DOUBLE_CLICK if late else Outcome.NO_CLICK), None
    if not late:
        return Outcome.NO_CLICK, None
    fired = sorted({c.detector for c in late})
    if d.resolving:
        if len(late) > 1:
            return Outcome.DOUBLE_CLICK, None
    elif len(fired) > 1:
        return Outcome.DOUBLE_CLICK, None
    epsilon = fired[0]
    clean = physical_emissions == 1 and len(late) == 1 and late[0].origin == "cavity"
    return (Outcome.SUCCESS if clean else Outcome.CONTAMINATED), epsilon


@dataclass(frozen=True)
class AnalyticBranch:
    classification: Outcome
    epsilon: int | None
    probability: float
    fidelity: float


def run_analytic(q: InputQubit, p: SystemParams, s: PulseSchedule | None, d: DetectorModel,
                 mode: str = "modified") -> list[AnalyticBranch]:
    """Exact outcome distribution from the closed forms (no gamma, no dark counts).

    Single-emission runs are detected with probability eta and split evenly
    between the two detectors. Contaminated successes carry the two-photon
    weight with Bob left in |0>. With resolving detectors both photons of a
    two-photon run can be seen, giving a rejected double click.
    """
    if s is None:
        s = analytic.schedule(p, mode)
    eta = d.eta
    p_one = analytic.single_photon_probability(q, s, p)
    p_suc = analytic.success_probability(s, p)
    p_two = analytic.two_photon_prob(q, eta, s, p, d.kind)
    p_double = 0.0
    if d.resolving:
        p_double = abs(q.beta) ** 2 * math.exp(-p.kappa * s.t_A) * eta**2 * p_suc
    branches = []
    for eps in (1, -1):
        fid = analytic.bob_fidelity(q, p, eps, s=s) if p_one > 0 else math.nan
        branches.append(AnalyticBranch(Outcome.SUCCESS, eps, 0.5 * eta * p_one, fid))
    for eps in (1, -1):
        branches.append(AnalyticBranch(Outcome.CONTAMINATED, eps, 0.5 * p_two, abs(q.alpha) ** 2))
    branches.append(AnalyticBranch(Outcome.DOUBLE_CLICK, None, p_double, math.nan))
    rest = 1.0 - sum(b.probability for b in branches)
    branches.append(AnalyticBranch(Outcome.NO_CLICK, None, max(rest, 0.0), math.nan))
    return branches


def analytic_summary(branches):
    """(indicated-success probability, conditional fidelity) of a distribution."""
    ok = [b for b in branches if b.classification.indicated_success and b.probability > 0]
    p_ok = sum(b.probability for b in ok)
    if p_ok == 0:
        return 0.0, math.nan
    return p_ok, sum(b.probability * b.fidelity for b in ok) / p_ok


@dataclass(frozen=True)
class _Segment:
    start: float
    duration: float
    prop: Propagator
    preparation: bool


class TrajectorySimulator:
    """Precomputed propagators and channels for one (params, schedule, model)."""

    def __init__(self, p: SystemParams, s: PulseSchedule, model: str = "full", n_max: int = 1,
                 branching: float = 0.5):
        self.p, self.s, self.model, self.n_max = p, s, model, n_max
        self.prep_time = max(s.t_A, s.t_B)
        self.window = self.prep_time + s.t_D
        self.channels = build_collapse_channels(p, n_max, branching)

        # pulses end together at prep_time
        on_A = (self.prep_time - s.t_A, self.prep_time)
        on_B = (self.prep_time - s.t_B, self.prep_time)
        edges = sorted({0.0, on_A[0], on_B[0], self.prep_time})
        segments = []
        props = {}
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi - lo <= 0:
                continue
            mid = 0.5 * (lo + hi)
            key = (on_A[0] <= mid < on_A[1], on_B[0] <= mid < on_B[1])
            if key not in props:
                props[key] = Propagator(build_hamiltonian(HamiltonianSpec(p, model, *key), n_max))
            segments.append(_Segment(lo, hi - lo, props[key], True))
        if s.t_D > 0:
            off = props.get((False, False)) or Propagator(build_hamiltonian(HamiltonianSpec(p, model), n_max))
            segments.append(_Segment(self.prep_time, s.t_D, off, False))
        self.segments = segments
        self.phase = {eps: self._correction_phase(eps) for eps in (1, -1)}

    def _correction_phase(self, epsilon: int) -> complex:
        """Deterministic relative phase on Bob's |1> after a clean click.

        Built from the no-jump pulse amplitudes: Alice's |10> -> |01> amplitude
        and Bob's |10> -> (|10>, |01>) amplitudes. Reduces to
        -i*eps*exp(i*delta*t_A) for the adiabatic model.
        """
        p, s, n = self.p, self.s, self.n_max
        H_on = local_hamiltonian(p, self.model, True, n)
        U_A = Propagator(H_on).matrix(s.t_A)
        U_B = Propagator(H_on).matrix(s.t_B)
        i10, i01 = local_index(1, 0, n), local_index(0, 1, n)
        A1 = U_A[i01, i10]
        B0, B1 = U_B[i10, i10], U_B[i01, i10]
        ratio = A1 * B0 / (1j * epsilon * B1) if B1 != 0 else 0
        if ratio == 0 or not np.isfinite(ratio):
            return analytic.zeeman_phase(p, s.t_A, epsilon)
        return ratio / abs(ratio)

    def initial_state(self, q: InputQubit) -> np.ndarray:
        n = self.n_max
        psi_A = q.alpha * local_state(0, 0, n) + q.beta * local_state(1, 0, n)
        return product_state(psi_A, local_state(1, 0, n))

    def evolve(self, q: InputQubit, rng: np.random.Generator):
        """Propagate one trajectory; returns (final state, jumps as (time, channel index))."""
        psi = self.initial_state(q)
        jumps = []
        for seg in self.segments:
            t, left = seg.start, seg.duration
            while left > 0:
                res = sample_jump(psi, seg.prop, left, rng, self.channels)
                psi = res.state
                if not isinstance(res, Jump):
                    break
                t += res.time
                left -= res.time
                jumps.append((t, res.channel))
        return psi, jumps

    def bob_state(self, psi: np.ndarray, epsilon: int) -> np.ndarray:
        rho = reduced_atom_B(psi, self.n_max)[:2, :2]
        u = np.array([1.0, 1.0 / self.phase[epsilon]])
        return rho * np.outer(u, u.conj())

    def run(self, q: InputQubit, d: DetectorModel, rng: np.random.Generator) -> RunOutcome:
        psi, jumps = self.evolve(q, rng)
        clicks = []
        cavity = spont = 0
        for t, k in jumps:
            ch = self.channels[k]
            if ch.detectable:
                cavity += 1
                if d.eta >= 1.0 or rng.random() < d.eta:
                    clicks.append(Click(t, ch.detector, "cavity"))
            else:
                spont += 1
        if d.dark_rate > 0:
            mean = d.dark_rate * US_PER_S * self.window
            for det in (1, -1):
                for t in rng.uniform(0.0, self.window, rng.poisson(mean)):
                    clicks.append(Click(float(t), det, "dark"))
        clicks.sort(key=lambda c: (c.time, -c.detector))
        label, eps = classify(clicks, d, cavity, self.prep_time if d.reject_prep_clicks else 0.0)
        rho = self.bob_state(psi, eps if eps is not None else 1)
        fid = float(np.real(np.conj(q.vector) @ rho @ q.vector))
        return RunOutcome(label, eps, clicks, cavity, spont, rho, min(max(fid, 0.0), 1.0))


@lru_cache(maxsize=64)
def get_simulator(p: SystemParams, s: PulseSchedule, model: str = "full", n_max: int = 1,
                  branching: float = 0.5) -> TrajectorySimulator:
    return TrajectorySimulator(p, s, model, n_max, branching)


def run_trajectory(q: InputQubit, p: SystemParams, s: PulseSchedule | None, d: DetectorModel,
                   mode: str = "modified", rng: np.random.Generator | None = None, model: str = "full",
                   n_max: int = 1, branching: float = 0.5) -> RunOutcome:
    """One quantum-jump realization of the whole protocol."""
    if s is None:
        s = analytic.schedule(p, mode)
    if rng is None:
        rng = np.random.default_rng()
    return get_simulator(p, s, model, n_max, branching).run(q, d, rng)
