"""Model validation, stationary law, drift, duality, and the example zoo."""

import numpy as np
import pytest

from mrwlab.core import (
    build_dual,
    build_spec,
    flower_truncated,
    model_zoo,
    random_lattice,
    remark2,
    simple_rw,
    stationary_distribution,
    stationary_drift,
    stationary_increment_law,
    transition_kernel,
    two_cycle,
    validate_spec,
)
from mrwlab.errors import ModelValidationError
from mrwlab.measure import total_mass_matrix


def test_two_cycle_shape():
    spec = two_cycle()
    assert spec.states == ("a", "b")
    assert spec.transition.tolist() == [[0.0, 1.0], [1.0, 0.0]]
    assert spec.law(0, 1).support.tolist() == [2.0]
    assert spec.law(1, 0).support.tolist() == [-1.0]


def test_two_cycle_pi_and_drift():
    spec = two_cycle()
    pi = stationary_distribution(spec)
    assert pi.pi.tolist() == pytest.approx([0.5, 0.5])
    drift = stationary_drift(spec, pi)
    assert drift.mu == pytest.approx(0.5)  # (2 - 1) / 2
    assert drift.positive


def test_simple_rw_drift():
    spec = simple_rw(0.6)
    pi = stationary_distribution(spec)
    assert stationary_drift(spec, pi).mu == pytest.approx(0.2)


def test_remark2_zero_drift():
    spec = remark2()
    pi = stationary_distribution(spec)
    drift = stationary_drift(spec, pi)
    assert drift.mu == pytest.approx(0.0, abs=1e-15)
    assert not drift.positive


def test_flower_truncated_hub_weight():
    spec = flower_truncated(12)
    pi = stationary_distribution(spec)
    # Hub is visited every other step.
    assert pi.probability(0) == pytest.approx(0.5, abs=1e-12)
    drift = stationary_drift(spec, pi)
    assert drift.mu == pytest.approx(1.0, abs=1e-12)  # each excursion nets +2 over 2 steps


def test_row_sum_violation_rejected():
    with pytest.raises(ModelValidationError):
        build_spec(
            ("x", "y"),
            np.array([[0.5, 0.4], [0.5, 0.5]]),
            {
                (0, 0): ([1.0], [1.0]),
                (0, 1): ([1.0], [1.0]),
                (1, 0): ([1.0], [1.0]),
                (1, 1): ([1.0], [1.0]),
            },
            1.0,
        )


def test_off_lattice_support_rejected():
    with pytest.raises(ModelValidationError):
        build_spec(("x",), np.array([[1.0]]), {(0, 0): ([0.5], [1.0])}, 1.0)


def test_reducible_chain_rejected():
    with pytest.raises(ModelValidationError):
        build_spec(
            ("x", "y"),
            np.array([[1.0, 0.0], [0.5, 0.5]]),
            {(0, 0): ([1.0], [1.0]), (1, 0): ([1.0], [1.0]), (1, 1): ([1.0], [1.0])},
            1.0,
        )


def test_missing_law_rejected():
    with pytest.raises(ModelValidationError):
        build_spec(
            ("x", "y"),
            np.array([[0.0, 1.0], [1.0, 0.0]]),
            {(0, 1): ([1.0], [1.0])},
            1.0,
        )


def test_validate_spec_roundtrip():
    spec = two_cycle()
    again = validate_spec(spec.to_json_dict())
    assert again.states == spec.states
    assert np.array_equal(again.transition, spec.transition)
    assert again.law(0, 1).support.tolist() == [2.0]


def test_validate_spec_duplicate_transition():
    raw = two_cycle().to_json_dict()
    raw["transitions"].append(raw["transitions"][0])
    with pytest.raises(ModelValidationError):
        validate_spec(raw)


def test_stationary_fixed_point_random_models():
    for seed in range(8):
        spec = random_lattice(seed=seed)
        pi = stationary_distribution(spec)
        assert np.abs(pi.pi @ spec.transition - pi.pi).max() < 1e-12
        assert pi.pi.min() > 0
        assert pi.pi.sum() == pytest.approx(1.0)


def test_dual_keeps_pi_and_drift():
    for seed in range(6):
        spec = random_lattice(seed=seed)
        pi = stationary_distribution(spec)
        dual = build_dual(spec, pi)
        pid = stationary_distribution(dual)
        assert np.abs(pid.pi - pi.pi).max() < 1e-12
        mu = stationary_drift(spec, pi).mu
        mud = stationary_drift(dual, pid).mu
        assert mud == pytest.approx(mu, abs=1e-12)


def test_dual_is_involution():
    for seed in range(6):
        spec = random_lattice(seed=seed)
        pi = stationary_distribution(spec)
        dd = build_dual(build_dual(spec, pi), pi)
        assert np.abs(dd.transition - spec.transition).max() < 1e-12
        for key, law in spec.increments.items():
            other = dd.increments[key]
            assert np.array_equal(law.indices, other.indices)
            assert np.abs(law.weights - other.weights).max() < 1e-12


def test_dual_increment_is_reversed_pair_law():
    spec = two_cycle()
    dual = build_dual(spec, stationary_distribution(spec))
    # Dual a->b carries the original b->a law, unchanged in sign.
    assert dual.law(0, 1).support.tolist() == [-1.0]
    assert dual.law(1, 0).support.tolist() == [2.0]


def test_stationary_increment_law_mean_is_drift():
    for seed in range(4):
        spec = random_lattice(seed=seed)
        pi = stationary_distribution(spec)
        law = stationary_increment_law(spec, pi)
        mean = sum(w * lm.mean() for w, lm in zip(law.state_weights, law.laws))
        assert mean == pytest.approx(stationary_drift(spec, pi).mu, abs=1e-12)


def test_transition_kernel_masses_match_transition():
    spec = random_lattice(seed=3)
    G = transition_kernel(spec)
    assert np.abs(total_mass_matrix(G) - spec.transition).max() < 1e-12


def test_random_lattice_reproducible_and_positive_drift():
    a = random_lattice(seed=12)
    b = random_lattice(seed=12)
    assert np.array_equal(a.transition, b.transition)
    assert stationary_drift(a, stationary_distribution(a)).mu > 0


def test_model_zoo_dispatch():
    assert model_zoo("two_cycle").states == ("a", "b")
    assert model_zoo("simple_rw", p=0.7).m == 1
    with pytest.raises(ModelValidationError):
        model_zoo("no_such_model")
