"""Ladder-chain stationary law, epoch-time laws, mean brackets, cross checks."""

import json
import math

import numpy as np
import pytest

from mrwlab.core import (
    random_lattice,
    remark2,
    simple_rw,
    stationary_distribution,
    two_cycle,
)
from mrwlab.errors import DivergenceGateError
from mrwlab.factorization import escape_probabilities
from mrwlab.theory import (
    _ascent_time_dp,
    _closed_classes,
    cross_validate,
    expected_ladder_epoch,
    joint_law_nu,
    ladder_stationary_exact,
    ladder_stationary_nullvector,
)

from helpers import ascent_time_pmf_brute


def test_two_cycle_ladder_stationary_closed_form():
    lad = ladder_stationary_exact(two_cycle())
    assert lad.pi_ladder[0] == pytest.approx(0.0, abs=1e-10)
    assert lad.pi_ladder[1] == pytest.approx(1.0, abs=1e-10)
    assert lad.support == ("b",)
    assert lad.c == pytest.approx(0.5, abs=1e-10)
    assert lad.method == "escape"


def test_two_cycle_nullvector_agrees():
    nv = ladder_stationary_nullvector(two_cycle())
    assert nv.method == "nullvector"
    assert nv.support == ("b",)
    assert nv.pi_ladder.tolist() == [0.0, 1.0]
    assert math.isnan(nv.c)


def test_simple_rw_ladder_constant():
    lad = ladder_stationary_exact(simple_rw(0.6))
    assert lad.pi_ladder.tolist() == [1.0]
    assert lad.c == pytest.approx(0.2, abs=1e-9)


@pytest.mark.parametrize("seed", [0, 2, 4, 7])
def test_exact_and_nullvector_routes_agree(seed):
    spec = random_lattice(seed=seed, m=3 + seed % 3)
    a = ladder_stationary_exact(spec)
    b = ladder_stationary_nullvector(spec)
    assert np.abs(a.pi_ladder - b.pi_ladder).max() <= 1e-8
    assert a.support == b.support


def test_ascent_time_dp_matches_path_stepping():
    for spec in (simple_rw(0.6), two_cycle(), random_lattice(seed=3)):
        pmf, alive = _ascent_time_dp(spec, 12)
        for i, label in enumerate(spec.states):
            brute = ascent_time_pmf_brute(spec, label, 12)
            assert np.abs(pmf[i] - brute).max() <= 1e-12
        assert np.all(alive >= -1e-15)
        assert np.allclose(pmf.sum(axis=1) + alive, 1.0, atol=1e-12)


def test_simple_rw_ascent_time_values():
    # P(sigma = 1) = 0.6, P(sigma = 3) = 0.4 * 0.6 * 0.6, P(sigma = 2) = 0.
    pmf, _ = _ascent_time_dp(simple_rw(0.6), 5)
    assert pmf[0, 0] == pytest.approx(0.6, abs=1e-15)
    assert pmf[0, 1] == 0.0
    assert pmf[0, 2] == pytest.approx(0.144, abs=1e-15)
    assert pmf[0, 3] == 0.0
    assert pmf[0, 4] == pytest.approx(0.06912, abs=1e-15)


def test_two_cycle_nu_is_point_mass_at_b_two():
    nu = joint_law_nu(two_cycle(), n_max=8)
    # Stationary epochs sit in b; from b the next ascent takes two steps.
    assert nu.values[1, 1] == pytest.approx(1.0, abs=1e-10)
    assert nu.values.sum() == pytest.approx(1.0, abs=1e-10)
    assert nu.state_marginal[0] == pytest.approx(0.0, abs=1e-10)


def test_nu_marginals_consistent():
    spec = random_lattice(seed=6)
    lad = ladder_stationary_exact(spec)
    leaks = []
    for n_max in (96, 192, 384):
        nu = joint_law_nu(spec, n_max=n_max, ladder=lad)
        leak = float((lad.pi_ladder * nu.surviving_mass).sum())
        leaks.append(leak)
        assert nu.gap_marginal.sum() == pytest.approx(1.0 - leak, abs=1e-12)
        assert np.abs(nu.state_marginal - lad.pi_ladder).max() <= leak + 1e-12
        # Partial mean sits strictly below the exact reciprocal of c.
        steps = np.arange(1, n_max + 1, dtype=float)
        partial_mean = float(nu.gap_marginal @ steps)
        assert partial_mean <= 1.0 / lad.c + 1e-9
    # Truncation leak shrinks geometrically as the table grows.
    assert leaks[1] < 0.5 * leaks[0]
    assert leaks[2] < 0.5 * leaks[1]


def test_mean_epoch_simple_rw_is_five():
    rep = expected_ladder_epoch(simple_rw(0.6), tol=1e-9)
    assert rep.width <= 2e-9
    assert rep.value[0] == pytest.approx(5.0, abs=1e-7)


def test_mean_epoch_two_cycle_values():
    rep = expected_ladder_epoch(two_cycle(), tol=1e-10)
    assert rep.value[0] == pytest.approx(1.0, abs=1e-9)
    assert rep.value[1] == pytest.approx(2.0, abs=1e-9)
    assert np.all(rep.lower <= rep.upper)


@pytest.mark.parametrize("seed", [1, 5])
def test_mean_epoch_reciprocal_and_state_bounds(seed):
    spec = random_lattice(seed=seed, m=4)
    pi = stationary_distribution(spec)
    lad = ladder_stationary_exact(spec, pi=pi)
    rep = expected_ladder_epoch(spec, tol=1e-10)
    mean = float(lad.pi_ladder @ rep.value)
    assert mean == pytest.approx(1.0 / lad.c, abs=1e-7)
    esc = escape_probabilities(spec, pi=pi)
    for i in range(spec.m):
        if esc.lower[i] > 1e-9:
            cap = 1.0 / (pi.pi[i] * esc.lower[i])
            assert rep.upper[i] <= cap + 1e-7


def test_mean_epoch_gates_on_nonpositive_drift():
    with pytest.raises(DivergenceGateError):
        expected_ladder_epoch(remark2())


def test_closed_classes_identified():
    two_absorbing = np.eye(2)
    assert len(_closed_classes(two_absorbing)) == 2
    chain_into_sink = np.array([[0.5, 0.2], [0.0, 0.6]])
    closed = _closed_classes(chain_into_sink)
    assert len(closed) == 1 and closed[0].tolist() == [1]
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    closed = _closed_classes(swap)
    assert len(closed) == 1 and closed[0].tolist() == [0, 1]


def test_cross_validate_all_green_simple_rw():
    rep = cross_validate(simple_rw(0.6), seed=0, n_ladder=1500, reps=8, sigma_reps=6000)
    assert rep.ok, [c.check_id for c in rep.failed()]
    ids = {c.check_id for c in rep.checks}
    assert {
        "dual_involution",
        "factorization_identity",
        "mass_matrix_identity",
        "escape_vs_nullvector",
        "mean_epoch_reciprocal",
        "ladder_occupation_mc",
        "joint_epoch_law_mc",
    } <= ids
    # Report serialises cleanly.
    blob = json.dumps(rep.as_json_dict(), sort_keys=True)
    assert json.loads(blob)["ok"] is True


def test_cross_validate_all_green_random_model():
    spec = random_lattice(seed=12, m=4)
    rep = cross_validate(spec, seed=1, n_ladder=1500, reps=8, sigma_reps=6000)
    assert rep.ok, [(c.check_id, c.observed, c.bound) for c in rep.failed()]


def test_cross_validate_exact_only_mode():
    rep = cross_validate(two_cycle(), mc=False)
    assert rep.ok
    assert all(not c.check_id.endswith("_mc") for c in rep.checks)
