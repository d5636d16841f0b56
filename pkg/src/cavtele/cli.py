"""Command-line front end writing CSV tables.

Exit status is 0 on success, 2 for configuration errors (including
overdamped parameters) and 3 when ``check`` finds a failing invariant.
"""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import logging
import math
import sys

import numpy as np

from . import analytic, checks
from .config import FIELD_NAMES, ConfigError, RunConfig, load_config
from .estimate import InputEnsemble, estimate_protocol
from .optimize import OBJECTIVES, TuneConfig, fine_tune
from .params import OverdampedError
from .protocol import Outcome

log = logging.getLogger("cavtele")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "nan" if math.isnan(value) else format(float(value), ".12g")
    return str(value)


def write_csv(fh, header, rows) -> None:
    fh.write(",".join(header) + "\n")
    for row in rows:
        fh.write(",".join(fmt(v) for v in row) + "\n")


def _warn_gamma(cfg: RunConfig) -> None:
    if cfg.gamma_mhz > 0 and cfg.backend == "analytic":
        log.warning("gamma_mhz = %g is ignored by the analytic backend", cfg.gamma_mhz)


def sweep_kappa(cfg: RunConfig, kappa_min: float, kappa_max: float, steps: int):
    header = ("kappa_mhz", "fidelity_modified", "fidelity_original", "psuc_modified", "psuc_original")
    rows = []
    for k in np.linspace(kappa_min, kappa_max, steps):
        p = dataclasses.replace(cfg, kappa_mhz=float(k), gamma_mhz=0.0).params()
        if not p.underdamped:
            log.warning("kappa_mhz = %g is overdamped; row left as nan", k)
            rows.append((float(k), math.nan, math.nan, math.nan, math.nan))
            continue
        row = [float(k)]
        scheds = [analytic.schedule(p, mode, t_D=0.0, branch_n=cfg.branch_n) for mode in analytic.MODES]
        row += [analytic.haar_average_fidelity(s, p) for s in scheds]
        row += [analytic.haar_average_success(s, p) for s in scheds]
        rows.append(tuple(row))
    return header, rows


def sweep_eta(cfg: RunConfig, eta_min: float, eta_max: float, steps: int):
    p = cfg.params()
    s = cfg.schedule(p)
    p0 = p.replace(gamma=0.0)
    header = ["eta", "fbar_resolving", "fbar_conventional", "psuc_resolving", "psuc_conventional"]
    traj = cfg.backend == "trajectory"
    if traj:
        for det in analytic.DETECTORS:
            header += [f"fbar_{det}_traj", f"fbar_{det}_traj_se", f"psuc_{det}_traj", f"psuc_{det}_traj_se"]
    rows = []
    for eta in np.linspace(eta_min, eta_max, steps):
        eta = float(eta)
        row = [eta]
        row += [analytic.average_fidelity(eta, s, p0, det) for det in analytic.DETECTORS]
        row += [analytic.average_success(eta, s, p0, det) for det in analytic.DETECTORS]
        if traj:
            for det in analytic.DETECTORS:
                est = _trajectory_estimate(cfg, s, eta=eta, detector=det)
                row += [est.avg_fidelity.mean, est.avg_fidelity.std_error,
                        est.avg_success.mean, est.avg_success.std_error]
        rows.append(tuple(row))
    return header, rows


def _trajectory_estimate(cfg: RunConfig, s, eta=None, detector=None):
    return estimate_protocol(
        cfg.params(), s, cfg.detector_model(eta, detector), cfg.mode,
        InputEnsemble("haar", cfg.n_states), cfg.n_traj, cfg.seed, cfg.model, workers=cfg.workers,
    )


ESTIMATE_HEADER = (
    "backend", "detector", "mode", "eta", "t_a_us", "t_b_us", "t_d_us",
    "avg_success", "avg_success_se", "avg_fidelity", "avg_fidelity_se",
    "pooled_fidelity", "contaminated_rate", "n_trajectories", "n_indicated",
    "analytic_success", "analytic_fidelity",
)


def estimate_row(cfg: RunConfig):
    p = cfg.params()
    s = cfg.schedule(p)
    p0 = p.replace(gamma=0.0)
    ana_s = analytic.average_success(cfg.eta, s, p0, cfg.detector)
    ana_f = analytic.average_fidelity(cfg.eta, s, p0, cfg.detector)
    head = (cfg.backend, cfg.detector, cfg.mode, cfg.eta, s.t_A, s.t_B, s.t_D)
    if cfg.backend == "analytic":
        return head + (ana_s, 0.0, ana_f, 0.0, ana_f, math.nan, 0, 0, ana_s, ana_f)
    est = _trajectory_estimate(cfg, s)
    return head + (
        est.avg_success.mean, est.avg_success.std_error,
        est.avg_fidelity.mean, est.avg_fidelity.std_error,
        est.pooled_fidelity.mean, est.outcome_rates[Outcome.CONTAMINATED],
        est.n_trajectories, est.pooled_fidelity.n_samples, ana_s, ana_f,
    )


def run_optimize(cfg: RunConfig, args):
    try:
        tune = TuneConfig(objective=args.objective, rel_width=args.rel_width, tol_time=args.tol_time,
                          max_evals=args.max_evals, n_traj_per_eval=args.n_traj_per_eval,
                          n_states=args.n_states_per_eval)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    p = cfg.params()
    t_D = cfg.t_d_factor / p.kappa
    res = fine_tune(p, cfg.detector_model(), cfg.mode, tune, cfg.seed, cfg.model, t_D=t_D, workers=cfg.workers)
    header = ("t_a_us", "t_b_us", "objective", "objective_se", "seed_t_a_us", "seed_t_b_us",
              "seed_objective", "improved", "n_evals")
    rows = [(res.t_A, res.t_B, res.objective.mean, res.objective.std_error, res.seed_t_A, res.seed_t_B,
             res.seed_objective.mean, res.improved, res.n_evals)]
    return header, rows, res


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat 'key = value' configuration file")
    common.add_argument("--out", help="output CSV path (default stdout)")
    for name in FIELD_NAMES:
        common.add_argument("--" + name.replace("_", "-"), dest="cfg_" + name, metavar="VALUE",
                            help=f"override config key {name}")

    parser = argparse.ArgumentParser(prog="cavtele", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sk = sub.add_parser("sweep-kappa", parents=[common], help="analytic fidelity and success vs kappa")
    sk.add_argument("--kappa-min", type=float, default=0.5)
    sk.add_argument("--kappa-max", type=float, default=8.0)
    sk.add_argument("--steps", type=int, default=20)

    se = sub.add_parser("sweep-eta", parents=[common], help="average fidelity and success vs detection efficiency")
    se.add_argument("--eta-min", type=float, default=0.0)
    se.add_argument("--eta-max", type=float, default=1.0)
    se.add_argument("--steps", type=int, default=21)

    sub.add_parser("estimate", parents=[common], help="single-point estimate")

    op = sub.add_parser("optimize", parents=[common], help="fine-tune t_A and t_B against the simulator")
    op.add_argument("--objective", choices=OBJECTIVES, default="avg_fidelity")
    op.add_argument("--max-evals", type=int, default=60)
    op.add_argument("--tol-time", type=float, default=2e-4)
    op.add_argument("--rel-width", type=float, default=0.3)
    op.add_argument("--n-traj-per-eval", type=int, default=500, help="trajectories per input per candidate")
    op.add_argument("--n-states-per-eval", type=int, default=20, help="Haar inputs per candidate")
    op.add_argument("--history", help="also write every evaluated point to this CSV")

    sub.add_parser("check", parents=[common], help="run the invariant self-check suite")
    return parser


def _load(args) -> RunConfig:
    overrides = {name: getattr(args, "cfg_" + name) for name in FIELD_NAMES
                 if getattr(args, "cfg_" + name) is not None}
    return load_config(args.config, overrides)


def _validate_range(lo, hi, steps, name, unit=False):
    if steps < 1:
        raise ConfigError("--steps must be >= 1")
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi or lo < 0:
        raise ConfigError(f"invalid {name} range [{lo}, {hi}]")
    if unit and hi > 1:
        raise ConfigError(f"{name} range must lie in [0, 1]")


@contextlib.contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def main(argv=None) -> int:
    logging.basicConfig(format="%(levelname)s: %(message)s", level=logging.INFO, stream=sys.stderr)
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        if args.command == "sweep-kappa":
            _validate_range(args.kappa_min, args.kappa_max, args.steps, "kappa")
            _warn_gamma(cfg)
            header, rows = sweep_kappa(cfg, args.kappa_min, args.kappa_max, args.steps)
        elif args.command == "sweep-eta":
            _validate_range(args.eta_min, args.eta_max, args.steps, "eta", unit=True)
            _warn_gamma(cfg)
            header, rows = sweep_eta(cfg, args.eta_min, args.eta_max, args.steps)
        elif args.command == "estimate":
            _warn_gamma(cfg)
            header, rows = ESTIMATE_HEADER, [estimate_row(cfg)]
        elif args.command == "optimize":
            header, rows, res = run_optimize(cfg, args)
            if args.history:
                with _output(args.history) as fh:
                    write_csv(fh, ("t_a_us", "t_b_us", "objective"), res.history)
        else:
            _warn_gamma(cfg)
            results = checks.run_checks(cfg.params())
            header = ("check", "residual", "tolerance", "status")
            rows = [(r.name, r.residual, r.tolerance, "pass" if r.passed else "FAIL") for r in results]
    except OverdampedError as exc:
        log.error("rejected: %s", exc)
        return EXIT_CONFIG
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    with _output(args.out) as fh:
        write_csv(fh, header, rows)
    if args.command == "check" and not all(r.passed for r in results):
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
