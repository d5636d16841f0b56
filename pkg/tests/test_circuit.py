import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavtele.circuit import (
    OUTCOMES,
    DistortedInput,
    ResourceState,
    branch_states,
    postselect_fidelity,
    simulate_circuit,
)

angles = st.floats(0.0, math.pi / 2)
phases = st.floats(0.0, 2 * math.pi)


def _input(theta, phi, zeta):
    return DistortedInput(math.cos(theta), math.sin(theta) * np.exp(1j * phi), zeta)


@settings(max_examples=100, deadline=None)
@given(theta=angles, phi=phases, zeta=st.floats(0.01, 5.0), r=angles)
def test_gate_circuit_matches_closed_form(theta, phi, zeta, r):
    inp = _input(theta, phi, zeta)
    res = ResourceState(math.cos(r), math.sin(r))
    gates, closed = simulate_circuit(inp, res), branch_states(inp, res)
    for k in OUTCOMES:
        assert np.allclose(gates[k], closed[k], atol=1e-14)


@settings(max_examples=100, deadline=None)
@given(theta=angles, phi=phases, zeta=st.floats(1e-3, 1.0))
def test_compensated_outcomes_are_perfect(theta, phi, zeta):
    inp = _input(theta, phi, zeta)
    res = ResourceState.compensating(zeta)
    for k in ("01", "10"):
        fid, prob = postselect_fidelity(inp, res, k)
        if prob > 0:
            assert abs(1 - fid) < 1e-12


@settings(max_examples=50, deadline=None)
@given(theta=angles, phi=phases)
def test_undistorted_maximal_resource_recovers_all_outcomes(theta, phi):
    inp = _input(theta, phi, 1.0)
    res = ResourceState(1 / math.sqrt(2), 1 / math.sqrt(2))
    total = 0.0
    for k in OUTCOMES:
        fid, prob = postselect_fidelity(inp, res, k)
        assert fid == pytest.approx(1.0, abs=1e-12)
        total += prob
    assert total == pytest.approx(1.0)


def test_outcome_probabilities_sum_to_one():
    inp = _input(0.3, 1.0, 0.4)
    res = ResourceState(0.6, 0.8)
    assert sum(postselect_fidelity(inp, res, k)[1] for k in OUTCOMES) == pytest.approx(1.0)


def test_zero_branch_is_nan():
    fid, prob = postselect_fidelity(DistortedInput(1.0, 0.0, 1.0), ResourceState(1.0, 0.0), "00")
    assert prob == 0.0 and math.isnan(fid)


def test_uncompensated_resource_loses_fidelity():
    inp = _input(math.pi / 4, 0.0, 0.2)
    fid, _ = postselect_fidelity(inp, ResourceState(1 / math.sqrt(2), 1 / math.sqrt(2)), "01")
    assert fid < 0.9


def test_invalid_inputs():
    with pytest.raises(ValueError):
        DistortedInput(1.0, 1.0)
    with pytest.raises(ValueError):
        DistortedInput(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        postselect_fidelity(_input(0.1, 0, 1), ResourceState(1, 0), "22")
