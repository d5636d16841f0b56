import numpy as np
import pytest

from cavtele import analytic as an
from cavtele.optimize import TuneConfig, fine_tune
from cavtele.protocol import DetectorModel

SMALL = dict(max_evals=15, n_traj_per_eval=60, n_states=4)


def test_config_validation():
    with pytest.raises(ValueError):
        TuneConfig(objective="success")
    with pytest.raises(ValueError):
        TuneConfig(tol_time=0.0)
    with pytest.raises(ValueError):
        TuneConfig(max_evals=0)


def test_bounds_must_contain_seed(p_v):
    cfg = TuneConfig(bounds=((0.2, 0.3), (0.01, 0.02)), **SMALL)
    with pytest.raises(ValueError, match="seed"):
        fine_tune(p_v, DetectorModel(), cfg=cfg, model="adiabatic")


def test_adiabatic_optimum_is_the_analytic_point(p_v):
    res = fine_tune(p_v, DetectorModel(), cfg=TuneConfig(**SMALL), seed=1, model="adiabatic", t_d_factor=12)
    s = an.schedule(p_v)
    assert abs(res.t_A - s.t_A) <= 2e-4 and abs(res.t_B - s.t_B) <= 2e-4
    assert res.objective.mean >= res.seed_objective.mean


def test_never_worse_than_seed_and_monotone(p_v_gamma):
    cfg = TuneConfig(objective="fidelity_times_success", **SMALL)
    res = fine_tune(p_v_gamma, DetectorModel(), cfg=cfg, seed=3)
    assert res.objective.mean >= res.seed_objective.mean
    best = res.best_so_far
    assert np.all(np.diff(best) >= 0)
    assert res.n_evals <= cfg.max_evals
    if not res.improved:
        assert (res.t_A, res.t_B) == (res.seed_t_A, res.seed_t_B)


def test_reproducible(p_v_gamma):
    cfg = TuneConfig(max_evals=8, n_traj_per_eval=40, n_states=3)
    a = fine_tune(p_v_gamma, DetectorModel(), cfg=cfg, seed=5)
    b = fine_tune(p_v_gamma, DetectorModel(), cfg=cfg, seed=5)
    assert (a.t_A, a.t_B, a.objective) == (b.t_A, b.t_B, b.objective)
