"""Stationary law of the ladder chain and the identity cross-checks.

The strict ascending ladder chain records the driving state each time the
walk makes a new maximum.  Its stationary law is available three ways: in
closed form from reversed-walk escape probabilities, as the stationary
vector of the computed first-ascent kernel, and empirically from paths.
``cross_validate`` runs every identity the theory supplies and reports one
named check per identity.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from . import simulate
from .core import build_dual, stationary_distribution, stationary_drift
from .errors import ModelValidationError
from .factorization import (
    _iter_jumps,
    contraction_certificate,
    escape_probabilities,
    strict_ascending_kernel,
    verify_factorization,
)
from .measure import total_mass_matrix

SUPPORT_ATOL = 1e-9


@dataclass(frozen=True, eq=False)
class LadderStationary:
    """Stationary law of the ascending ladder chain.

    ``pi_ladder[i]`` is proportional to pi_i times the escape probability
    of the reversed walk from i; ``c`` is the normalising constant, equal
    to the reciprocal mean epoch gap.  ``method`` records how the vector
    was produced ("escape" or "nullvector"; the latter has no ``c``).
    """

    states: tuple
    pi_ladder: np.ndarray
    support: tuple
    c: float
    c_bracket: tuple
    method: str
    residual: float

    def as_dict(self):
        return {s: float(v) for s, v in zip(self.states, self.pi_ladder)}


def ladder_stationary_exact(spec, pi=None, tol=1e-10, k_max=2 ** 14, override=False):
    """Closed-form stationary law: pi_i times the reversed-walk escape
    probability, normalised by their stationary average c."""
    pi = pi if pi is not None else stationary_distribution(spec)
    esc = escape_probabilities(spec, pi=pi, tol=tol, k_max=k_max, override=override)
    raw = pi.pi * esc.value
    total = raw.sum()
    if not total > 0.0:
        raise ModelValidationError("no state has positive escape probability")
    vec = raw / total
    return LadderStationary(
        states=spec.states,
        pi_ladder=vec,
        support=esc.support(atol=SUPPORT_ATOL),
        c=esc.c,
        c_bracket=esc.c_bracket,
        method="escape",
        residual=esc.width,
    )


def _closed_classes(B, cut=1e-12):
    mask = B > cut
    n_comp, labels = csgraph.connected_components(sp.csr_matrix(mask), connection="strong")
    closed = []
    for comp in range(n_comp):
        members = labels == comp
        if not mask[members][:, ~members].any():
            closed.append(np.flatnonzero(members))
    return closed


def ladder_stationary_nullvector(spec, ascending=None, tol=1e-10, k_max=2 ** 14, override=False):
    """Stationary vector of the first-ascent kernel's mass matrix.

    Solved on the unique closed communicating class of that matrix; states
    outside it get weight 0.  Fully independent of the escape route, so the
    two methods cross-check each other.
    """
    asc = ascending if ascending is not None else strict_ascending_kernel(
        spec, tol=tol, k_max=k_max, override=override
    )
    B = total_mass_matrix(asc.kernel)
    closed = _closed_classes(B)
    if len(closed) != 1:
        raise ModelValidationError(
            f"ladder chain has {len(closed)} closed classes; expected exactly one"
        )
    idx = closed[0]
    sub = B[np.ix_(idx, idx)]
    n = idx.size
    A = np.eye(n) - sub.T
    A[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    x = np.linalg.solve(A, rhs)
    residual = float(np.abs(x @ sub - x).max())
    if np.any(x < -1e-12):
        raise ModelValidationError("stationary solve of the ladder kernel went negative")
    full = np.zeros(spec.m)
    full[idx] = np.clip(x, 0.0, None)
    full /= full.sum()
    return LadderStationary(
        states=spec.states,
        pi_ladder=full,
        support=tuple(spec.states[k] for k in idx),
        c=math.nan,
        c_bracket=(math.nan, math.nan),
        method="nullvector",
        residual=residual,
    )


# ---------------------------------------------------------------------------
# First-ascent time distribution
# ---------------------------------------------------------------------------


def _ascent_time_dp(spec, n_steps):
    """Exact law of the first strict-ascent time up to ``n_steps``.

    Propagates the sub-probability distribution over (state, level <= 0)
    with a band wide enough that no reachable level is ever clipped.
    Returns pmf[i, n-1] = P_i(ascent at step n) and the surviving mass.
    """
    m = spec.m
    down = spec.max_down()
    L = max(1, n_steps * down)
    width = L + 1  # levels -L..0, index b = level + L
    if m * m * width > 50_000_000:
        raise MemoryError("ascent-time band is too large; lower n_steps")
    jumps = list(_iter_jumps(spec))
    dist = np.zeros((m, m, width))
    for i in range(m):
        dist[i, i, L] = 1.0
    pmf = np.zeros((m, n_steps))
    for n in range(n_steps):
        new = np.zeros_like(dist)
        for i, j, k, pw in jumps:
            if k >= 1:
                cut = max(0, L + 1 - k)
                pmf[:, n] += pw * dist[:, i, cut:].sum(axis=1)
                if k <= L:
                    new[:, j, k:] += pw * dist[:, i, : width - k]
            else:
                new[:, j, : width + k] += pw * dist[:, i, -k:]
        dist = new
    return pmf, dist.sum(axis=(1, 2))


@dataclass(frozen=True, eq=False)
class NuTable:
    """Joint stationary law nu[i, n-1] of (epoch state i, epoch gap n).

    Equals pi_ladder[i] * P_i(first ascent at step n); its state marginal
    is pi_ladder and its gap marginal the stationary epoch-gap law.
    """

    states: tuple
    values: np.ndarray
    sigma_pmf: np.ndarray
    surviving_mass: np.ndarray
    n_max: int

    @property
    def gap_marginal(self):
        return self.values.sum(axis=0)

    @property
    def state_marginal(self):
        # Exact only in the n_max -> infinity limit; the survivor mass is
        # reported so callers can bound the truncation.
        return self.values.sum(axis=1)


def joint_law_nu(spec, n_max=64, ladder=None, tol=1e-10, k_max=2 ** 14, override=False):
    """Tabulate nu up to gap ``n_max``."""
    lad = ladder if ladder is not None else ladder_stationary_exact(
        spec, tol=tol, k_max=k_max, override=override
    )
    pmf, alive = _ascent_time_dp(spec, n_max)
    return NuTable(
        states=spec.states,
        values=lad.pi_ladder[:, None] * pmf,
        sigma_pmf=pmf,
        surviving_mass=alive,
        n_max=n_max,
    )


@dataclass(frozen=True, eq=False)
class MeanEpochReport:
    """Certified bracket on E_i[first ascent time] for every state.

    ``lower`` adds the exact survivor contribution (M+1) * P(sigma > M);
    ``upper`` adds the certified geometric tail on top.  The bracket width
    is the certificate tail weight, not a heuristic.
    """

    states: tuple
    lower: np.ndarray
    upper: np.ndarray
    n_steps: int
    tail_bound: float
    rho: float

    @property
    def value(self):
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self):
        return float((self.upper - self.lower).max())


def expected_ladder_epoch(spec, tol=1e-9, n_cap=2 ** 13, override=False):
    """Bracket the mean first-ascent time from each state.

    P_i(sigma > n) <= H * rho**n from a contraction certificate picks the
    horizon; the sum below it is exact.
    """
    pi = stationary_distribution(spec)
    drift = stationary_drift(spec, pi)
    if not drift.positive and not override:
        from .errors import DivergenceGateError

        raise DivergenceGateError(
            "expected_ladder_epoch requires positive stationary drift; "
            "with drift <= 0 the mean first-ascent time is infinite or undefined.",
            details={"mu": drift.mu},
        )
    cert = contraction_certificate(spec)
    if not cert.feasible:
        from .errors import NonConvergenceError

        raise NonConvergenceError(
            "no contraction certificate: cannot bound the ascent-time tail",
            details={"mu": drift.mu},
        )
    n = 64
    while cert.tail_weight(n) > tol and n < n_cap:
        n *= 2
    tail = cert.tail_weight(n)
    if tail > tol:
        from .errors import NonConvergenceError

        raise NonConvergenceError(
            f"ascent-time tail bound {tail:.3e} still exceeds {tol:g} at horizon {n}",
            details={"horizon": n, "tail": tail},
        )
    pmf, alive = _ascent_time_dp(spec, n)
    steps = np.arange(1, n + 1, dtype=np.float64)
    partial = pmf @ steps
    lower = partial + (n + 1) * alive
    upper = lower + tail
    return MeanEpochReport(
        states=spec.states,
        lower=lower,
        upper=upper,
        n_steps=n,
        tail_bound=tail,
        rho=cert.rho,
    )


# ---------------------------------------------------------------------------
# Cross-validation of every identity
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CheckResult:
    check_id: str
    passed: bool
    observed: float
    bound: float
    note: str = ""

    def as_json_dict(self):
        return {
            "id": self.check_id,
            "passed": bool(self.passed),
            "observed": float(self.observed),
            "bound": float(self.bound),
            "note": self.note,
        }


@dataclass(frozen=True, eq=False)
class VerificationReport:
    states: tuple
    checks: tuple
    ok: bool

    def failed(self):
        return tuple(c for c in self.checks if not c.passed)

    def as_json_dict(self):
        return {
            "ok": bool(self.ok),
            "n_checks": len(self.checks),
            "checks": [c.as_json_dict() for c in self.checks],
        }


def _max_law_distance(a, b):
    """Largest total-variation gap between matching increment laws."""
    worst = 0.0
    for key, law in a.increments.items():
        other = b.increments[key]
        da = dict(zip(law.indices.tolist(), law.weights.tolist()))
        db = dict(zip(other.indices.tolist(), other.weights.tolist()))
        for k in set(da) | set(db):
            worst = max(worst, abs(da.get(k, 0.0) - db.get(k, 0.0)))
    return worst


def cross_validate(
    spec,
    seed=0,
    exact_tol=1e-8,
    solver_tol=1e-10,
    mc=True,
    n_ladder=2000,
    reps=8,
    sigma_reps=20_000,
    n_se=3.0,
    n_max=24,
    k_max=2 ** 14,
    override=False,
):
    """Run every identity check the theory supplies on one model.

    Exact checks compare two independent computations at ``exact_tol``
    (plus certified solver defects).  MC checks compare simulation to the
    exact values at ``n_se`` standard errors plus certified bias bounds.
    """
    checks = []

    def add(check_id, observed, bound, note=""):
        checks.append(
            CheckResult(
                check_id=check_id,
                passed=bool(observed <= bound),
                observed=float(observed),
                bound=float(bound),
                note=note,
            )
        )

    pi = stationary_distribution(spec)
    dual = build_dual(spec, pi)

    # Time reversal is an involution and preserves the drift.
    dd = build_dual(dual, stationary_distribution(dual))
    add(
        "dual_involution",
        max(float(np.abs(dd.transition - spec.transition).max()), _max_law_distance(dd, spec)),
        1e-12,
    )
    add(
        "dual_drift",
        abs(stationary_drift(dual, stationary_distribution(dual)).mu - stationary_drift(spec, pi).mu),
        1e-12,
    )

    fact = verify_factorization(
        spec, pi=pi, tol=exact_tol, solver_tol=solver_tol, k_max=k_max, override=override
    )
    defect = fact.solver_defect
    add("factorization_identity", fact.residual, exact_tol + 4 * defect)
    add("mass_matrix_identity", fact.mass_residual, exact_tol + 4 * defect)
    add("stationary_column_mass", fact.column_mass_residual, exact_tol + defect)
    sub_a = np.asarray(total_mass_matrix(fact.ascending.kernel)).sum(axis=1).max()
    sub_d = np.asarray(total_mass_matrix(fact.dual_descending.kernel)).sum(axis=1).max()
    add("kernels_substochastic", max(sub_a, sub_d) - 1.0, 1e-12)

    esc = escape_probabilities(spec, pi=pi, tol=solver_tol, k_max=k_max, override=override)
    exact = ladder_stationary_exact(spec, pi=pi, tol=solver_tol, k_max=k_max, override=override)
    null = ladder_stationary_nullvector(spec, ascending=fact.ascending)
    add(
        "escape_vs_nullvector",
        float(np.abs(exact.pi_ladder - null.pi_ladder).max()),
        exact_tol + esc.width,
    )
    add(
        "ladder_support_methods",
        0.0 if set(exact.support) == set(null.support) else 1.0,
        0.5,
        note=f"escape {exact.support} vs nullvector {null.support}",
    )
    # x_j = pi_j * escape_j is a left null vector of I - ||ascending kernel||.
    x = pi.pi * esc.value
    B = total_mass_matrix(fact.ascending.kernel)
    add(
        "escape_nullvector_equation",
        float(np.abs(x @ (np.eye(spec.m) - B)).max()),
        exact_tol + esc.width + defect,
    )

    mean = expected_ladder_epoch(spec, tol=solver_tol, override=override)
    e_pi = float(exact.pi_ladder @ mean.value)
    c_lo, c_hi = exact.c_bracket
    add(
        "mean_epoch_reciprocal",
        abs(e_pi - 1.0 / exact.c),
        exact_tol + mean.width + (1.0 / c_lo - 1.0 / c_hi),
    )
    on_support = [spec.index(s) for s in exact.support]
    worst_slack = 0.0
    for i in on_support:
        cap = 1.0 / (pi.pi[i] * max(esc.lower[i], 1e-300))
        worst_slack = max(worst_slack, mean.upper[i] - cap)
    add("mean_epoch_state_bound", worst_slack, exact_tol)

    nu = joint_law_nu(spec, n_max=n_max, ladder=exact)
    add(
        "nu_state_marginal",
        float(np.abs(nu.state_marginal + exact.pi_ladder * nu.surviving_mass - exact.pi_ladder).max()),
        exact_tol,
        note="marginal plus truncated survivor mass recovers the stationary law",
    )

    if mc:
        occ = simulate.estimate_ladder_occupation(
            spec, spec.states[0], n_ladder=n_ladder, seed=seed, reps=reps, override=override
        )
        worst = 0.0
        for i, s in enumerate(spec.states):
            est = occ.estimates[s]
            slack = n_se * max(est.standard_error, 1e-6)
            worst = max(worst, abs(est.value - exact.pi_ladder[i]) - slack)
        add("ladder_occupation_mc", worst, 0.0, note=f"{occ.epochs_observed} epochs")

        seen = occ.state_counts.sum(axis=0) > 0
        exact_support = {spec.index(s) for s in exact.support}
        add(
            "ladder_support_mc",
            0.0 if set(np.flatnonzero(seen)) == exact_support else 1.0,
            0.5,
        )

        dual_cert = contraction_certificate(dual)
        n_back = 256
        while dual_cert.feasible and dual_cert.tail_weight(n_back) > 1e-4 and n_back < 1 << 15:
            n_back *= 2
        bias = dual_cert.tail_weight(n_back) if dual_cert.feasible else 1.0
        sig = simulate.estimate_sigma0_probability(spec, pi, n_back=n_back, seed=seed + 1, reps=sigma_reps)
        worst = 0.0
        for i, s in enumerate(spec.states):
            est = sig[s]
            target = pi.pi[i] * esc.value[i]
            slack = n_se * max(est.standard_error, 1e-6) + bias + esc.width
            worst = max(worst, abs(est.value - target) - slack)
        add("stationary_sigma0_mc", worst, 0.0, note=f"n_back={n_back} bias<={bias:.2e}")

        joint = simulate.estimate_joint_epoch_law(
            spec,
            spec.states[0],
            n_ladder=n_ladder,
            seed=seed + 2,
            reps=reps,
            n_max=n_max,
            override=override,
        )
        worst = 0.0
        for i in range(spec.m):
            for g in range(n_max):
                slack = n_se * max(joint.standard_errors[i, g], 2e-3)
                worst = max(worst, abs(joint.values[i, g] - nu.values[i, g]) - slack)
        add("joint_epoch_law_mc", worst, 0.0, note=f"{joint.pairs_observed} pairs")

        gap_mc = joint.values.sum(axis=0)
        gap_exact = nu.gap_marginal
        se_gap = np.sqrt((joint.standard_errors ** 2).sum(axis=0))
        worst = float(
            np.max(np.abs(gap_mc - gap_exact) - n_se * np.maximum(se_gap, 2e-3))
        )
        add("marginal_epoch_law_mc", worst, 0.0)

    ok = all(c.passed for c in checks)
    return VerificationReport(states=spec.states, checks=tuple(checks), ok=ok)
