import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from protmeas.impulsive import born_sample, impulsive_measure
from protmeas.linalg import InvariantError, fidelity, tensor, von_neumann_entropy
from protmeas.spin import D_DOWN, D_UP, DOWN, UP, UnitaryFamilyParams, measurement_unitary

CANONICAL = measurement_unitary(UnitaryFamilyParams())


def test_up_clicks():
    res = impulsive_measure(UP, CANONICAL)
    assert abs(abs(np.vdot(tensor(D_UP, UP), res.post_state)) - 1) < 1e-12
    assert res.outcome_probs == (1.0, 0.0)


def test_down_stays():
    res = impulsive_measure(DOWN, CANONICAL)
    assert res.outcome_probs[1] == pytest.approx(1.0, abs=1e-15)


def test_equal_superposition_is_maximally_entangled():
    res = impulsive_measure(np.array([1, 1]) / math.sqrt(2), CANONICAL)
    assert res.outcome_probs[0] == pytest.approx(0.5, abs=1e-12)
    assert von_neumann_entropy(res.system_state) == pytest.approx(math.log(2), abs=1e-10)
    assert von_neumann_entropy(res.detector_state) == pytest.approx(math.log(2), abs=1e-10)


def test_post_state_form_random_family():
    rng = np.random.default_rng(4)
    for _ in range(20):
        p = UnitaryFamilyParams.random(rng)
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        a, b = v / np.linalg.norm(v)
        res = impulsive_measure([a, b], measurement_unitary(p))
        expected = a * np.exp(1j * p.theta) * tensor(D_UP, UP) + b * np.exp(1j * p.phi) * tensor(D_DOWN, DOWN)
        assert np.abs(res.post_state - expected).max() < 1e-12
        assert sum(res.outcome_probs) == pytest.approx(1.0, abs=1e-12)
        assert res.outcome_probs[0] == pytest.approx(abs(a) ** 2, abs=1e-12)


def test_rejects_contract_violation():
    with pytest.raises(InvariantError):
        impulsive_measure(UP, np.eye(4))
    with pytest.raises(ValueError):
        impulsive_measure(np.ones(4) / 2, CANONICAL)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(-math.pi, math.pi))
def test_collapse_destroys_input(a2, phase):
    a = math.sqrt(a2)
    b = math.sqrt(1 - a2) * complex(math.cos(phase), math.sin(phase))
    res = impulsive_measure([a, b], CANONICAL)
    f = fidelity(res.system_state, np.array([a, b]))
    # the reduced state is diag(|a|^2, |b|^2): overlap |a|^4 + |b|^4
    assert f == pytest.approx(a2 ** 2 + (1 - a2) ** 2, abs=1e-12)
    assert f < 1.0
    assert f <= max(a2, 1 - a2) + 1e-12


def test_born_sample_all_up():
    res = impulsive_measure(UP, CANONICAL)
    counts = born_sample(res, 1000, seed=1)
    assert counts["n_up"] == 1000 and counts["n_down"] == 0


def test_born_sample_half():
    res = impulsive_measure(np.array([1, 1]) / math.sqrt(2), CANONICAL)
    counts = born_sample(res, 100_000, seed=12345)
    assert abs(counts["n_up"] / 100_000 - 0.5) < 0.005
    assert counts["algorithm"] == "numpy.random.Philox"
    assert counts["seed"] == 12345
    assert res.sampled_counts == counts


def test_born_sample_deterministic():
    res = impulsive_measure(np.array([0.6, 0.8]), CANONICAL)
    assert born_sample(res, 5000, seed=9) == born_sample(res, 5000, seed=9)


def test_born_sample_rejects_zero_shots():
    with pytest.raises(ValueError):
        born_sample(impulsive_measure(UP, CANONICAL), 0)


def test_born_frequencies_within_three_sigma():
    res = impulsive_measure(np.array([math.sqrt(0.3), math.sqrt(0.7)]), CANONICAL)
    shots = 20_000
    sigma = math.sqrt(0.3 * 0.7 / shots)
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(2024).spawn(50)]
    freqs = np.array([born_sample(res, shots, seed=s)["n_up"] / shots for s in seeds])
    # 3 sigma excursions have probability 0.27% each, so at most one in 50 is tolerable
    assert np.sum(np.abs(freqs - 0.3) > 3 * sigma) <= 1
    assert abs(freqs.mean() - 0.3) < 3 * sigma / math.sqrt(50)
