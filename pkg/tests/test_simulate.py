"""Path simulation, ladder extraction, estimators, coupling, hub-and-petals."""

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
from mrwlab.simulate import (
    DyadicPetalWeights,
    audit_flower_path,
    coupling_experiment,
    embedded_renewal,
    estimate_joint_epoch_law,
    estimate_ladder_occupation,
    estimate_sigma0_probability,
    extract_strict_ascending,
    extract_weak_descending,
    first_hit_ladder_support,
    flower_min_tail_mc,
    flower_min_tail_probability,
    simulate_flower,
    simulate_path,
)

from helpers import ladder_epochs_naive


def test_path_is_reproducible_and_consistent():
    spec = random_lattice(seed=2)
    a = simulate_path(spec, spec.states[0], 500, seed=9)
    b = simulate_path(spec, spec.states[0], 500, seed=9)
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.increments_lattice, b.increments_lattice)
    assert a.sums_lattice[0] == 0
    assert np.array_equal(np.diff(a.sums_lattice), a.increments_lattice)
    assert a.partial_sums[1] == pytest.approx(a.increments_lattice[0] * spec.span)


def test_two_cycle_path_is_deterministic():
    spec = two_cycle()
    path = simulate_path(spec, "a", 6, seed=0)
    assert path.state_sequence().tolist() == ["a", "b", "a", "b", "a", "b", "a"]
    assert path.increments_lattice.tolist() == [2, -1, 2, -1, 2, -1]


def test_extraction_matches_naive_definition():
    spec = random_lattice(seed=4)
    for seed in range(10):
        path = simulate_path(spec, spec.states[seed % spec.m], 300, seed=seed)
        asc = extract_strict_ascending(path)
        desc = extract_weak_descending(path)
        sums = path.sums_lattice
        assert np.array_equal(asc.epochs, ladder_epochs_naive(sums, ascending=True))
        assert np.array_equal(desc.epochs, ladder_epochs_naive(sums, ascending=False))
        assert np.all(np.diff(asc.heights_lattice) > 0)
        assert np.all(np.diff(desc.heights_lattice) <= 0)
        assert np.array_equal(asc.states, path.states[asc.epochs])


def test_simple_rw_ascending_heights_step_by_one():
    path = simulate_path(simple_rw(0.6), "s", 5000, seed=21)
    asc = extract_strict_ascending(path)
    # Skip-free upward: every new maximum exceeds the old one by exactly 1.
    assert np.all(np.diff(asc.heights_lattice) == 1)


def test_occupation_two_cycle_is_point_mass():
    occ = estimate_ladder_occupation(two_cycle(), "a", n_ladder=400, seed=1, reps=4)
    assert occ.estimates["a"].value == 0.0
    assert occ.estimates["b"].value == 1.0
    assert occ.complete


def test_occupation_requires_drift_or_override():
    with pytest.raises(DivergenceGateError):
        estimate_ladder_occupation(remark2(), "s", n_ladder=50, seed=0, reps=2)
    occ = estimate_ladder_occupation(
        remark2(), "s", n_ladder=50, seed=0, reps=2, override=True, horizon_cap=200_000
    )
    # Zero drift still produces epochs, just slowly; all of them sit in 's'.
    assert occ.estimates["s"].value == 1.0


def test_occupation_deterministic_across_worker_counts(monkeypatch):
    spec = random_lattice(seed=6)
    results = []
    for workers in ("1", "4"):
        monkeypatch.setenv("MRWLAB_WORKERS", workers)
        occ = estimate_ladder_occupation(spec, spec.states[0], n_ladder=300, seed=5, reps=6)
        results.append([occ.estimates[s].value for s in spec.states])
    assert results[0] == results[1]


def test_sigma0_estimates_decrease_in_horizon():
    spec = simple_rw(0.6)
    pi = stationary_distribution(spec)
    values = []
    for n_back in (4, 16, 64, 256):
        est = estimate_sigma0_probability(spec, pi, n_back=n_back, seed=3, reps=4000)
        values.append(est["s"].value)
    assert all(a >= b for a, b in zip(values, values[1:]))
    # Limit is pi * escape = 0.2 for this walk.
    assert values[-1] == pytest.approx(0.2, abs=0.03)


def test_joint_epoch_law_frequencies_sum_to_one():
    spec = random_lattice(seed=1)
    est = estimate_joint_epoch_law(spec, spec.states[0], n_ladder=400, seed=2, reps=4, n_max=16)
    total = est.values.sum() + est.overflow
    assert total == pytest.approx(1.0, abs=1e-12)
    assert est.complete


def test_embedded_renewal_gaps_positive():
    spec = random_lattice(seed=8)
    path = simulate_path(spec, spec.states[0], 20_000, seed=11)
    asc = extract_strict_ascending(path)
    state_counts = np.bincount(asc.states[1:], minlength=spec.m)
    label = spec.states[int(state_counts.argmax())]
    gaps = embedded_renewal(path, label)
    assert gaps.size > 10
    assert np.all(gaps > 0)


def test_first_hit_ladder_support_reaches_support():
    spec = two_cycle()
    est = first_hit_ladder_support(spec, ["b"], "a", horizon=50, seed=7, reps=50)
    assert est.value == 1.0


def test_coupling_matches_tails():
    spec = random_lattice(seed=3, m=5)
    hits = 0
    for seed in range(25):
        rep = coupling_experiment(spec, spec.states[0], spec.states[2], horizon=30_000, seed=seed)
        assert rep.coupled
        if rep.tau is not None and rep.rho is not None:
            hits += 1
            assert rep.matched_tail
            assert rep.first_common_ladder_epoch > rep.coupling_time
    assert hits >= 24


def test_coupling_same_start_couples_at_zero():
    spec = random_lattice(seed=3, m=5)
    rep = coupling_experiment(spec, spec.states[1], spec.states[1], horizon=10_000, seed=0)
    assert rep.coupling_time == 0
    assert rep.matched_tail


# ---------------------------------------------------------------------------
# Hub-and-petals model
# ---------------------------------------------------------------------------


def test_dyadic_sampler_matches_interval_partition():
    w = DyadicPetalWeights()
    # u in [1 - 2^(1-i), 1 - 2^-i) must map to petal i.  Stay a safe margin
    # inside the upper end: one ulp below it, 1 - u rounds onto the boundary.
    for i in range(1, 20):
        lo = 1.0 - 2.0 ** (1 - i)
        hi = 1.0 - 2.0 ** (-i)
        width = hi - lo
        probes = [lo, lo + width / 2, hi - width * 1e-9]
        got = w.sample(np.array(probes))
        assert got.tolist() == [i, i, i], f"petal {i}"


def test_dyadic_sampler_frequencies():
    w = DyadicPetalWeights()
    u = np.random.default_rng(0).random(200_000)
    petals = w.sample(u)
    for i in (1, 2, 3, 4):
        freq = float(np.mean(petals == i))
        assert freq == pytest.approx(2.0 ** -i, abs=0.005)


def test_dyadic_tail_exact_powers():
    w = DyadicPetalWeights()
    assert w.tail_geq(1) == 1.0
    assert w.tail_geq(2) == 1.0
    assert w.tail_geq(3) == 0.5  # jump >= 3 means petal >= 2
    assert w.tail_geq(4) == 0.5
    assert w.tail_geq(5) == 0.25
    assert w.tail_geq(1025) == 2.0 ** -10


def test_flower_paths_satisfy_closed_forms():
    path = simulate_flower(5001, seed=13)
    audit = audit_flower_path(path)
    assert audit.ok and audit.failures == 0
    sums = path.sums_lattice
    assert np.all(sums[2::2] == np.arange(2, 5002, 2))  # even steps exactly n

    dual = simulate_flower(5001, seed=13, dual=True)
    audit_d = audit_flower_path(dual, dual=True)
    assert audit_d.ok
    assert audit_d.min_shifted >= 0.0  # reversed walk never drops below n - 1


def test_flower_min_tail_oracle_small_case():
    # N = 1: only S_1 = -2^I matters; P(S_1 <= -B) = P(2^I >= B).
    w = DyadicPetalWeights()
    for B in (1, 2, 3, 5, 9):
        assert flower_min_tail_probability(1, B) == pytest.approx(w.tail_geq(B))
    # Two odd steps: complement multiplies.
    exact = flower_min_tail_probability(3, 4)
    expect = 1.0 - (1.0 - w.tail_geq(3)) * (1.0 - w.tail_geq(6))
    assert exact == pytest.approx(expect, abs=1e-15)


def test_flower_min_tail_mc_agrees():
    exact = flower_min_tail_probability(500, 20)
    est = flower_min_tail_mc(500, 20, seed=5, reps=3000)
    assert abs(est.value - exact) <= 3.5 * est.standard_error


def test_flower_min_tail_rejects_bad_args():
    with pytest.raises(ValueError):
        flower_min_tail_probability(0, 5)
    with pytest.raises(ValueError):
        flower_min_tail_probability(10, 0)
