import math

import numpy as np
import pytest

from cavtele import analytic as an
from cavtele.estimate import trajectory_rng
from cavtele.params import InputQubit, PulseSchedule, SystemParams
from cavtele.protocol import (
    Click,
    DetectorModel,
    Outcome,
    TrajectorySimulator,
    analytic_summary,
    classify,
    run_analytic,
    run_trajectory,
)

RES = DetectorModel(1.0, 0.0, True)
CONV = DetectorModel(1.0, 0.0, False)


def _c(t, det, origin="cavity"):
    return Click(t, det, origin)


@pytest.mark.parametrize(
    "clicks, d, n_phys, expected",
    [
        ([], RES, 0, (Outcome.NO_CLICK, None)),
        ([_c(1.0, 1)], RES, 1, (Outcome.SUCCESS, 1)),
        ([_c(1.0, -1)], CONV, 1, (Outcome.SUCCESS, -1)),
        ([_c(1.0, 1)], RES, 2, (Outcome.CONTAMINATED, 1)),
        ([_c(1.0, 1), _c(1.2, 1)], RES, 2, (Outcome.DOUBLE_CLICK, None)),
        ([_c(1.0, 1), _c(1.2, 1)], CONV, 2, (Outcome.CONTAMINATED, 1)),
        ([_c(1.0, 1), _c(1.2, -1)], CONV, 2, (Outcome.DOUBLE_CLICK, None)),
        ([_c(1.0, 1, "dark")], RES, 0, (Outcome.CONTAMINATED, 1)),
        ([_c(1.0, -1, "dark")], CONV, 1, (Outcome.CONTAMINATED, -1)),
        ([_c(0.05, 1)], RES, 1, (Outcome.NO_CLICK, None)),
        ([_c(0.05, 1), _c(1.0, 1)], CONV, 2, (Outcome.DOUBLE_CLICK, None)),
    ],
)
def test_classify(clicks, d, n_phys, expected):
    assert classify(clicks, d, n_phys, detection_start=0.1) == expected


def test_detector_model_validation():
    with pytest.raises(ValueError):
        DetectorModel(eta=1.2)
    with pytest.raises(ValueError):
        DetectorModel(dark_rate=-1)
    assert DetectorModel(resolving=False).kind == "conventional"
    assert Outcome.CONTAMINATED.indicated_success and not Outcome.DOUBLE_CLICK.indicated_success


@pytest.mark.parametrize("d", [DetectorModel(0.3, 0, True), DetectorModel(0.3, 0, False), RES])
def test_analytic_branches_form_distribution(p_v, d):
    q = InputQubit.normalized(0.6, 0.8)
    br = run_analytic(q, p_v, None, d)
    assert sum(b.probability for b in br) == pytest.approx(1.0)
    assert all(b.probability >= 0 for b in br)
    p_ok, fid = analytic_summary(br)
    assert 0 < p_ok < 1 and 0.5 < fid <= 1.0 + 1e-12


def test_analytic_summary_averages_to_closed_form(p_v):
    """Averaging the per-input conditional fidelity over |beta|^2 reproduces the closed form."""
    s = an.schedule(p_v)
    d = DetectorModel(0.2, 0, False)
    xs = np.linspace(0, 1, 2001)
    fids = [analytic_summary(run_analytic(InputQubit(math.sqrt(1 - x), math.sqrt(x)), p_v, s, d))[1] for x in xs]
    w = np.full(xs.size, 1.0)
    w[0] = w[-1] = 0.5
    avg = float(np.sum(w * fids) / np.sum(w))
    assert avg == pytest.approx(an.average_fidelity(0.2, s, p_v, "conventional"), abs=1e-6)


def test_no_decay_never_clicks():
    p = SystemParams.from_mhz(62.5, 16, 16, 0.0)
    s = an.schedule(p, t_D=1.0)
    rng = np.random.default_rng(0)
    for _ in range(50):
        out = run_trajectory(InputQubit.normalized(1, 1), p, s, RES, rng=rng, model="adiabatic")
        assert out.classification is Outcome.NO_CLICK and not out.clicks


def test_adiabatic_phase_calibration_matches_closed_form(p_v):
    sim = TrajectorySimulator(p_v, an.schedule(p_v), "adiabatic")
    for eps in (1, -1):
        assert sim.phase[eps] == pytest.approx(an.zeeman_phase(p_v, sim.s.t_A, eps), abs=1e-12)


def test_pulses_end_together(p_v):
    s = an.schedule(p_v)
    sim = TrajectorySimulator(p_v, s, "full")
    assert sim.prep_time == pytest.approx(s.t_A)
    starts = [seg.start for seg in sim.segments]
    assert starts == sorted(starts)
    assert sim.segments[-1].start == pytest.approx(s.t_A) and not sim.segments[-1].preparation
    assert sum(seg.duration for seg in sim.segments) == pytest.approx(s.t_A + s.t_D)


def test_success_runs_are_perfect_in_adiabatic_model(p_v):
    s = an.schedule(p_v, t_d_factor=12)
    q = InputQubit.normalized(0.6, 0.8j)
    seen = 0
    for i in range(3000):
        out = run_trajectory(q, p_v, s, RES, rng=trajectory_rng(1, i), model="adiabatic")
        if out.classification is Outcome.SUCCESS:
            seen += 1
            assert out.fidelity == pytest.approx(1.0, abs=1e-8)
            assert out.cavity_emissions == 1 and len(out.clicks) == 1
    assert seen > 100


def test_contaminated_runs_leave_bob_in_ground(p_v):
    s = an.schedule(p_v, t_d_factor=12)
    q = InputQubit.normalized(1, 1)
    d = DetectorModel(0.5, 0, False)
    found = 0
    for i in range(4000):
        out = run_trajectory(q, p_v, s, d, rng=trajectory_rng(2, i), model="adiabatic")
        if out.classification is Outcome.CONTAMINATED:
            found += 1
            assert out.bob_in_ground
            assert out.fidelity == pytest.approx(0.5, abs=1e-6)
    assert found > 0


def test_same_stream_same_outcome(p_v_gamma):
    s = PulseSchedule(0.1058, 0.0131, 1.0 / p_v_gamma.kappa * 4)
    d = DetectorModel(0.05, 50.0, False)
    q = InputQubit.normalized(1, 1j)
    for i in range(20):
        a = run_trajectory(q, p_v_gamma, s, d, rng=trajectory_rng(7, i))
        b = run_trajectory(q, p_v_gamma, s, d, rng=trajectory_rng(7, i))
        assert a.classification == b.classification and a.clicks == b.clicks
        assert a.fidelity == b.fidelity


def test_dark_counts_produce_clicks_without_photons():
    p = SystemParams.from_mhz(62.5, 16, 16, 0.0)
    s = PulseSchedule(0.1, 0.01, 10.0)
    d = DetectorModel(1.0, 2e6, True)  # 2 per us per detector
    rng = np.random.default_rng(3)
    n_clicks = [len(run_trajectory(InputQubit(1, 0), p, s, d, rng=rng, model="adiabatic").clicks) for _ in range(300)]
    assert np.mean(n_clicks) == pytest.approx(2 * 2.0 * 10.1, rel=0.05)


def test_spontaneous_emission_is_never_detected(p_v_gamma):
    s = an.schedule(p_v_gamma.replace(gamma=0.0))
    q = InputQubit(0, 1)
    spont = 0
    for i in range(500):
        out = run_trajectory(q, p_v_gamma, s, RES, rng=trajectory_rng(4, i))
        spont += out.spontaneous_emissions
        assert all(c.origin == "cavity" for c in out.clicks)
        assert len(out.clicks) == out.cavity_emissions
    assert spont > 0


def test_fidelity_in_unit_interval(p_v_gamma):
    s = an.schedule(p_v_gamma.replace(gamma=0.0))
    d = DetectorModel(0.5, 1e4, False)
    for i in range(300):
        out = run_trajectory(InputQubit.normalized(1, 2), p_v_gamma, s, d, rng=trajectory_rng(5, i))
        assert 0.0 <= out.fidelity <= 1.0


def test_prep_clicks_can_be_counted(p_v):
    """Bob leaks a photon during his pulse often enough to see both rules act."""
    s = an.schedule(p_v, t_d_factor=4)
    q = InputQubit(1, 0)
    strict = DetectorModel(1.0, 0.0, True, reject_prep_clicks=True)
    loose = DetectorModel(1.0, 0.0, True, reject_prep_clicks=False)
    n_strict = n_loose = 0
    for i in range(3000):
        a = run_trajectory(q, p_v, s, strict, rng=trajectory_rng(8, i), model="adiabatic")
        b = run_trajectory(q, p_v, s, loose, rng=trajectory_rng(8, i), model="adiabatic")
        assert a.clicks == b.clicks
        early = any(c.time < s.t_A for c in a.clicks)
        if early and len(a.clicks) == 1:
            assert a.classification is Outcome.NO_CLICK
            assert b.classification is Outcome.SUCCESS
            n_strict += 1
        n_loose += b.indicated_success
    assert n_strict > 0 and n_loose > 0
