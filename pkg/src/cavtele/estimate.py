"""Monte Carlo estimates of average fidelity and success probability.

Every trajectory draws from its own stream, seeded by ``(seed, index)``, so
results do not depend on how the work is split across processes. Sums are
taken with ``math.fsum`` which is exactly rounded and therefore independent
of summation order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .params import InputQubit, PulseSchedule, SystemParams
from .protocol import DetectorModel, Outcome, get_simulator

STRATEGIES = ("haar", "mub6", "fixed")

_STREAM_TRAJECTORY = 0
_STREAM_INPUT = 1

_MUB6 = (
    (1.0, 0.0),
    (0.0, 1.0),
    (1 / math.sqrt(2), 1 / math.sqrt(2)),
    (1 / math.sqrt(2), -1 / math.sqrt(2)),
    (1 / math.sqrt(2), 1j / math.sqrt(2)),
    (1 / math.sqrt(2), -1j / math.sqrt(2)),
)


@dataclass(frozen=True)
class InputEnsemble:
    strategy: str = "haar"
    count: int = 100
    alpha: complex | None = None
    beta: complex | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.strategy == "fixed" and (self.alpha is None or self.beta is None):
            raise ValueError("fixed strategy needs alpha and beta")

    @classmethod
    def fixed(cls, alpha, beta, count=1):
        return cls("fixed", count, complex(alpha), complex(beta))


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_error: float
    n_samples: int

    def within(self, target: float, n_sigma: float = 3.0) -> bool:
        return abs(self.mean - target) <= n_sigma * self.std_error


def input_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_STREAM_INPUT, index)))


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_STREAM_TRAJECTORY, index)))


def sample_input(strategy, rng: np.random.Generator | None = None, index: int = 0,
                 alpha=None, beta=None) -> InputQubit:
    """One input qubit; Haar draws normalize a complex Gaussian pair."""
    if isinstance(strategy, InputEnsemble):
        alpha, beta, strategy = strategy.alpha, strategy.beta, strategy.strategy
    if strategy == "haar":
        z = rng.standard_normal(4)
        return InputQubit.normalized(complex(z[0], z[1]), complex(z[2], z[3]))
    if strategy == "mub6":
        return InputQubit(*_MUB6[index % 6])
    if strategy == "fixed":
        return InputQubit.normalized(alpha, beta)
    raise ValueError(f"unknown strategy {strategy!r}")


def ensemble_inputs(ensemble: InputEnsemble, seed: int) -> list[InputQubit]:
    return [sample_input(ensemble, input_rng(seed, i), index=i) for i in range(ensemble.count)]


@dataclass
class InputTally:
    """Per-input outcome record; success fidelities kept individually."""

    n: int = 0
    counts: dict = field(default_factory=dict)
    success_fidelities: list = field(default_factory=list)
    fidelity_sum_all: float = 0.0

    @property
    def n_success(self) -> int:
        return len(self.success_fidelities)


@dataclass
class ProtocolEstimate:
    avg_fidelity: Estimate
    avg_success: Estimate
    pooled_fidelity: Estimate
    unconditional_fidelity: Estimate
    outcome_rates: dict
    n_trajectories: int
    n_inputs_with_success: int
    tallies: list = field(default_factory=list, repr=False)

    def rate(self, outcome: Outcome) -> Estimate:
        n = self.n_trajectories
        k = self.outcome_rates.get(outcome, 0.0)
        return Estimate(k, math.sqrt(max(k * (1 - k), 0.0) / n), n)


def _run_block(args):
    p, s, d, model, n_max, branching, seed, n_traj, items = args
    sim = get_simulator(p, s, model, n_max, branching)
    out = []
    for i, q in items:
        tally = InputTally(n=n_traj, counts={o: 0 for o in Outcome})
        fid_all = []
        for j in range(n_traj):
            rng = trajectory_rng(seed, i * n_traj + j)
            res = sim.run(q, d, rng)
            tally.counts[res.classification] += 1
            fid_all.append(res.fidelity)
            if res.indicated_success:
                tally.success_fidelities.append(res.fidelity)
        tally.fidelity_sum_all = math.fsum(fid_all)
        out.append((i, tally))
    return out


def _mean_se(values):
    n = len(values)
    if n == 0:
        return math.nan, math.nan
    mean = math.fsum(values) / n
    if n == 1:
        return mean, math.nan
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def estimate_protocol(p: SystemParams, s: PulseSchedule, d: DetectorModel, mode: str = "modified",
                      ensemble: InputEnsemble | None = None, n_traj: int = 10_000, seed: int = 0,
                      model: str = "full", n_max: int = 1, branching: float = 0.5,
                      workers: int = 1) -> ProtocolEstimate:
    """Average fidelity and indicated-success rate over inputs and trajectories.

    ``n_traj`` trajectories are run for each of the ``ensemble.count``
    inputs. The average fidelity is the input-average of per-input
    post-selected fidelities (inputs without any indicated success are
    skipped); the pooled average over all accepted runs and the
    unconditional average are kept as diagnostics. ``mode`` only labels the
    run; the schedule fixes the pulse times.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    if ensemble is None:
        ensemble = InputEnsemble()
    inputs = list(enumerate(ensemble_inputs(ensemble, seed)))
    workers = max(1, int(workers))
    common = (p, s, d, model, n_max, branching, seed, n_traj)
    if workers == 1:
        results = _run_block((*common, inputs))
    else:
        blocks = [inputs[k::workers] for k in range(workers)]
        results = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_run_block, [(*common, b) for b in blocks if b]):
                results.extend(part)
    results.sort(key=lambda item: item[0])
    tallies = [t for _, t in results]

    n_total = n_traj * len(tallies)
    rates = [t.n_success / t.n for t in tallies]
    success_mean = math.fsum(rates) / len(rates)
    if len(rates) >= 2:
        _, success_se = _mean_se(rates)
    else:
        success_se = math.sqrt(success_mean * (1 - success_mean) / n_total)

    per_input = [math.fsum(t.success_fidelities) / t.n_success for t in tallies if t.n_success]
    if len(per_input) >= 2:
        fid_mean, fid_se = _mean_se(per_input)
    elif len(per_input) == 1:
        only = next(t for t in tallies if t.n_success)
        fid_mean, fid_se = _mean_se(only.success_fidelities)
    else:
        fid_mean = fid_se = math.nan

    pooled = [f for t in tallies for f in t.success_fidelities]
    pooled_mean, pooled_se = _mean_se(pooled)
    uncond_mean = math.fsum(t.fidelity_sum_all for t in tallies) / n_total

    outcome_rates = {o: sum(t.counts[o] for t in tallies) / n_total for o in Outcome}
    return ProtocolEstimate(
        avg_fidelity=Estimate(fid_mean, fid_se, len(pooled)),
        avg_success=Estimate(success_mean, success_se, n_total),
        pooled_fidelity=Estimate(pooled_mean, pooled_se, len(pooled)),
        unconditional_fidelity=Estimate(uncond_mean, math.nan, n_total),
        outcome_rates=outcome_rates,
        n_trajectories=n_total,
        n_inputs_with_success=len(per_input),
        tallies=tallies,
    )
