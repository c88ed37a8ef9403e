"""Path simulation, ladder-variable extraction, and Monte Carlo estimators.

All randomness flows from a single top-level seed.  Replicate r draws from
the stream ``SeedSequence(seed, spawn_key=(r,))``, so results never depend
on worker scheduling; ``MRWLAB_WORKERS`` caps parallelism only.  Walks are
advanced in exact integer lattice units.
"""

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import build_dual, stationary_distribution, stationary_drift
from .errors import DivergenceGateError, ModelValidationError

DEFAULT_CHUNK = 8192


def _rng(seed, replicate=0):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(replicate,)))


def _worker_count():
    raw = os.environ.get("MRWLAB_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError:
        n = 1
    return max(1, n)


def _map_replicates(fn, reps):
    """Run fn(0..reps-1); parallel workers never change the result order."""
    workers = _worker_count()
    if workers == 1 or reps <= 1:
        return [fn(r) for r in range(reps)]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=min(workers, reps)) as pool:
        return list(pool.map(fn, range(reps)))


def _divergence_gate(spec, override, what):
    """Positive stationary drift guarantees the walk diverges and ladder
    epochs keep arriving.  Callers may override when they know divergence
    holds for other reasons."""
    pi = stationary_distribution(spec)
    drift = stationary_drift(spec, pi)
    if not drift.positive and not override:
        raise DivergenceGateError(
            f"{what} requires positive divergence of the walk; stationary drift is "
            f"{drift.mu:g}. Pass override=True to assert divergence regardless.",
            details={"mu": drift.mu},
        )
    return pi, drift


@dataclass(frozen=True, eq=False)
class MCEstimate:
    """Monte Carlo estimate with its replicate-spread standard error."""

    value: float
    standard_error: float
    replicates: int
    params: dict
    seed: object


@dataclass(frozen=True, eq=False)
class PathSample:
    """Simulated walk: states and exact integer lattice increments."""

    span: float
    initial_state: object
    states: np.ndarray
    increments_lattice: np.ndarray
    seed: object
    state_labels: tuple = None

    def __post_init__(self):
        if self.states.shape[0] != self.increments_lattice.shape[0] + 1:
            raise ValueError("states must have one more entry than increments")
        object.__setattr__(self, "_sums", None)

    @property
    def n_steps(self):
        return self.increments_lattice.shape[0]

    @property
    def sums_lattice(self):
        """Partial sums S_0 = 0, S_1, ..., S_n in lattice units."""
        if self._sums is None:
            s = np.empty(self.n_steps + 1, dtype=np.int64)
            s[0] = 0
            np.cumsum(self.increments_lattice, out=s[1:])
            object.__setattr__(self, "_sums", s)
        return self._sums

    @property
    def partial_sums(self):
        return self.sums_lattice * self.span

    @property
    def increments(self):
        return self.increments_lattice * self.span

    def state_sequence(self):
        if self.state_labels is None:
            return self.states
        return np.asarray([self.state_labels[k] for k in self.states], dtype=object)


@dataclass(frozen=True, eq=False)
class LadderExtraction:
    """Ladder epochs of a path, including the trivial epoch at index 0.

    ``complete`` is True when the path ends exactly at a ladder epoch; when
    False the trailing excursion was cut by the horizon and later epochs may
    be missing, so open-ended gap statistics must drop it.
    """

    kind: str
    epochs: np.ndarray
    states: np.ndarray
    heights_lattice: np.ndarray
    span: float
    complete: bool

    @property
    def heights(self):
        return self.heights_lattice * self.span

    @property
    def count(self):
        return self.epochs.shape[0]


def _verify_extraction(sums, epochs, ascending):
    """Re-derive the epoch set from the running extremum; guards the
    backends against each other on every extraction."""
    if ascending:
        running = np.maximum.accumulate(sums)
        expected = np.flatnonzero(sums[1:] > running[:-1]) + 1
    else:
        running = np.minimum.accumulate(sums)
        expected = np.flatnonzero(sums[1:] <= running[:-1]) + 1
    if epochs[0] != 0 or not np.array_equal(epochs[1:], expected):
        raise AssertionError("ladder extraction failed the maximality recheck")


def extract_strict_ascending(path):
    """Epochs where the walk strictly exceeds every earlier value."""
    sums = path.sums_lattice
    epochs = _kernels.strict_ascending_epochs(sums)
    _verify_extraction(sums, epochs, ascending=True)
    heights = sums[epochs]
    return LadderExtraction(
        kind="strict_ascending",
        epochs=epochs,
        states=path.states[epochs],
        heights_lattice=heights,
        span=path.span,
        complete=bool(epochs[-1] == path.n_steps),
    )


def extract_weak_descending(path):
    """Epochs where the walk is at or below every earlier value."""
    sums = path.sums_lattice
    epochs = _kernels.weak_descending_epochs(sums)
    _verify_extraction(sums, epochs, ascending=False)
    heights = sums[epochs]
    return LadderExtraction(
        kind="weak_descending",
        epochs=epochs,
        states=path.states[epochs],
        heights_lattice=heights,
        span=path.span,
        complete=bool(epochs[-1] == path.n_steps),
    )


def simulate_path(spec, initial_state, n_steps, seed):
    """Simulate the walk for ``n_steps`` steps from ``initial_state``.

    Each step consumes one row of pre-drawn uniforms (transition draw,
    increment draw), so the compiled and numpy backends yield identical
    paths for the same seed.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    tables = _kernels.SamplingTables.from_spec(spec)
    start = spec.index(initial_state)
    u = _rng(seed, 0).random((n_steps, 2))
    states, incr = _kernels.simulate_steps(tables, start, u)
    # Every realised transition must carry positive probability.
    if n_steps and not np.all(spec.transition[states[:-1], states[1:]] > 0.0):
        raise AssertionError("simulated a zero-probability transition")
    return PathSample(
        span=spec.span,
        initial_state=initial_state,
        states=states,
        increments_lattice=incr,
        seed=seed,
        state_labels=spec.states,
    )


# ---------------------------------------------------------------------------
# Streaming ladder collection and occupation estimates
# ---------------------------------------------------------------------------


def _collect_ladder_states(tables, start, n_epochs, cap, rng, chunk=DEFAULT_CHUNK):
    """Walk in chunks until ``n_epochs`` strict ascending ladder epochs past
    index 0 are seen or ``cap`` steps are spent.  Returns (states at epochs
    1..; heights; epochs; steps used; complete)."""
    state = int(start)
    level = 0
    best = 0
    ep_states = []
    ep_heights = []
    ep_indices = []
    done = 0
    collected = 0
    while collected < n_epochs and done < cap:
        size = min(chunk, cap - done)
        u = rng.random((size, 2))
        states, incr = _kernels.simulate_steps(tables, state, u)
        sums = level + np.cumsum(incr)
        running = np.maximum.accumulate(sums)
        prev = np.empty_like(running)
        prev[0] = best
        prev[1:] = running[:-1]
        hits = np.flatnonzero(sums > prev)
        ep_states.append(states[hits + 1])
        ep_heights.append(sums[hits])
        ep_indices.append(hits + done + 1)
        collected += hits.size
        best = max(best, int(running[-1]))
        state = int(states[-1])
        level = int(sums[-1])
        done += size
    states_all = np.concatenate(ep_states) if ep_states else np.empty(0, dtype=np.int64)
    heights_all = np.concatenate(ep_heights) if ep_heights else np.empty(0, dtype=np.int64)
    idx_all = np.concatenate(ep_indices) if ep_indices else np.empty(0, dtype=np.int64)
    complete = states_all.size >= n_epochs
    if complete:
        states_all = states_all[:n_epochs]
        heights_all = heights_all[:n_epochs]
        idx_all = idx_all[:n_epochs]
    return states_all, heights_all, idx_all, done, complete


@dataclass(frozen=True, eq=False)
class OccupationEstimate:
    """Ladder-chain occupation frequencies aggregated over replicates."""

    estimates: dict  # state label -> MCEstimate
    epochs_observed: int
    complete: bool
    state_counts: np.ndarray  # (reps, m) counted ladder states past burn-in

    def value_vector(self, states):
        return np.array([self.estimates[s].value for s in states])


def estimate_ladder_occupation(
    spec,
    initial_state,
    n_ladder,
    burn_in=1,
    seed=0,
    reps=8,
    horizon_cap=None,
    override=False,
):
    """Occupation frequencies of the strict ascending ladder chain.

    Each replicate walks until ``burn_in + n_ladder`` ladder epochs past the
    start are observed (or ``horizon_cap`` steps are spent, in which case it
    contributes what it saw and the result is flagged incomplete).  Values
    and standard errors are the replicate mean and spread of the per-state
    frequencies over epochs after the burn-in.
    """
    if burn_in < 0 or n_ladder < 1:
        raise ValueError("need burn_in >= 0 and n_ladder >= 1")
    _divergence_gate(spec, override, "estimate_ladder_occupation")
    tables = _kernels.SamplingTables.from_spec(spec)
    start = spec.index(initial_state)
    cap = horizon_cap if horizon_cap is not None else max(1_000_000, 200 * (burn_in + n_ladder))
    target = burn_in + n_ladder
    m = spec.m

    def one(rep):
        states, _, _, _, complete = _collect_ladder_states(
            tables, start, target, cap, _rng(seed, rep)
        )
        used = states[burn_in:]
        counts = np.bincount(used, minlength=m).astype(np.float64)
        return counts, complete

    results = _map_replicates(one, reps)
    counts = np.stack([r[0] for r in results])
    complete = all(r[1] for r in results)
    totals = counts.sum(axis=1)
    if np.any(totals == 0):
        raise DivergenceGateError(
            "no ladder epochs observed past burn-in within the horizon cap",
            details={"cap": cap},
        )
    freqs = counts / totals[:, None]
    values = freqs.mean(axis=0)
    ses = freqs.std(axis=0, ddof=1) / math.sqrt(reps) if reps > 1 else np.zeros(m)
    params = {
        "n_ladder": n_ladder,
        "burn_in": burn_in,
        "reps": reps,
        "horizon_cap": cap,
        "complete": complete,
    }
    estimates = {
        spec.states[i]: MCEstimate(float(values[i]), float(ses[i]), reps, params, seed)
        for i in range(m)
    }
    return OccupationEstimate(
        estimates=estimates,
        epochs_observed=int(totals.sum()),
        complete=complete,
        state_counts=counts,
    )


def estimate_sigma0_probability(spec, pi, n_back, seed=0, reps=10_000):
    """Estimate, per state i, the chance that the chain starts in i under
    the stationary law and the time-reversed walk stays strictly positive
    for ``n_back`` steps.

    The estimate is non-increasing in ``n_back`` and converges to the
    probability that the reversed walk never weakly descends to its start.
    """
    if n_back < 1:
        raise ValueError("n_back must be at least 1")
    dual = build_dual(spec, pi)
    tables = _kernels.SamplingTables.from_spec(dual)
    cum_pi = np.cumsum(pi.pi)
    cum_pi[-1] = 1.0
    m = spec.m

    def one(rep):
        rng = _rng(seed, rep)
        u0 = rng.random()
        start = min(int(np.searchsorted(cum_pi, u0, side="right")), m - 1)
        u = rng.random((n_back, 2))
        _, incr = _kernels.simulate_steps(tables, start, u)
        alive = int(np.cumsum(incr).min() > 0)
        return start, alive

    results = _map_replicates(one, reps)
    hits = np.zeros((reps, m))
    for r, (start, alive) in enumerate(results):
        hits[r, start] = alive
    values = hits.mean(axis=0)
    ses = hits.std(axis=0, ddof=1) / math.sqrt(reps) if reps > 1 else np.zeros(m)
    params = {"n_back": n_back, "reps": reps}
    return {
        spec.states[i]: MCEstimate(float(values[i]), float(ses[i]), reps, params, seed)
        for i in range(m)
    }


@dataclass(frozen=True, eq=False)
class JointEpochEstimate:
    """MC joint frequency of (state at a ladder epoch, gap to the next).

    ``values[i, g-1]`` estimates the stationary chance that an epoch sits in
    state i with the next epoch g steps later, for g = 1..n_max;
    ``overflow`` collects gaps beyond n_max.  Frequencies are normalised by
    all observed pairs, so cells estimate the joint law directly.
    """

    states: tuple
    values: np.ndarray
    standard_errors: np.ndarray
    overflow: float
    pairs_observed: int
    complete: bool
    params: dict
    seed: object


def estimate_joint_epoch_law(
    spec,
    initial_state,
    n_ladder,
    burn_in=1,
    seed=0,
    reps=8,
    n_max=32,
    horizon_cap=None,
    override=False,
):
    """Estimate the joint law of (epoch state, epoch gap) on the ladder chain."""
    if n_ladder < 2:
        raise ValueError("need at least two epochs past burn-in")
    _divergence_gate(spec, override, "estimate_joint_epoch_law")
    tables = _kernels.SamplingTables.from_spec(spec)
    start = spec.index(initial_state)
    target = burn_in + n_ladder + 1
    cap = horizon_cap if horizon_cap is not None else max(1_000_000, 200 * target)
    m = spec.m

    def one(rep):
        states, _, idx, _, complete = _collect_ladder_states(
            tables, start, target, cap, _rng(seed, rep)
        )
        st = states[burn_in:-1]
        gaps = np.diff(idx[burn_in:])
        table = np.zeros((m, n_max + 1))
        capped = np.minimum(gaps, n_max + 1)
        np.add.at(table, (st, capped - 1), 1.0)
        return table, complete

    results = _map_replicates(one, reps)
    tables_ = np.stack([r[0] for r in results])
    complete = all(r[1] for r in results)
    totals = tables_.sum(axis=(1, 2))
    if np.any(totals == 0):
        raise DivergenceGateError("no epoch pairs observed within the horizon cap")
    freq = tables_ / totals[:, None, None]
    values = freq.mean(axis=0)
    ses = freq.std(axis=0, ddof=1) / math.sqrt(reps) if reps > 1 else np.zeros_like(values)
    params = {"n_ladder": n_ladder, "burn_in": burn_in, "reps": reps, "n_max": n_max}
    return JointEpochEstimate(
        states=spec.states,
        values=values[:, :n_max],
        standard_errors=ses[:, :n_max],
        overflow=float(values[:, n_max].sum()),
        pairs_observed=int(totals.sum()),
        complete=complete,
        params=params,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Coupling experiment
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CouplingReport:
    """Outcome of one spliced-path coupling run.

    Two independent walks run until their driving chains first meet at T.
    The spliced path follows the first walk to T and the second walk's
    increments afterwards.  Past the maximum Y of both pre-T walks (offset
    by the difference of the walks at T) the ladder epochs of the second
    walk and of the spliced path must coincide.
    """

    coupling_time: object
    y_first: float
    y_second: float
    y_bound: float
    tau: object
    rho: object
    first_common_ladder_epoch: object
    matched_tail: object
    n_tail_epochs: int
    horizon: int
    coupled: bool


def coupling_experiment(spec, i, j, horizon, seed, override=False):
    """Run the two-chain splice construction from states i and j."""
    _divergence_gate(spec, override, "coupling_experiment")
    tables = _kernels.SamplingTables.from_spec(spec)
    idx_i = spec.index(i)
    idx_j = spec.index(j)
    rng_first = _rng(seed, 0)
    rng_second = _rng(seed, 1)

    u2 = rng_second.random((horizon, 2))
    states2, incr2 = _kernels.simulate_steps(tables, idx_j, u2)
    sums2 = np.empty(horizon + 1, dtype=np.int64)
    sums2[0] = 0
    np.cumsum(incr2, out=sums2[1:])

    # Grow the first walk only until the chains meet.
    states1 = [np.array([idx_i], dtype=np.int64)]
    incr1 = []
    built = 0
    T = 0 if idx_i == idx_j else None
    while T is None and built < horizon:
        size = min(1024, horizon - built)
        u1 = rng_first.random((size, 2))
        s, x = _kernels.simulate_steps(tables, int(states1[-1][-1]), u1)
        states1.append(s[1:])
        incr1.append(x)
        seg = np.flatnonzero(s[1:] == states2[built + 1 : built + 1 + size])
        if seg.size:
            T = built + int(seg[0]) + 1
        built += size
    failed = CouplingReport(
        coupling_time=None,
        y_first=math.nan,
        y_second=math.nan,
        y_bound=math.nan,
        tau=None,
        rho=None,
        first_common_ladder_epoch=None,
        matched_tail=None,
        n_tail_epochs=0,
        horizon=horizon,
        coupled=False,
    )
    if T is None:
        return failed

    s1 = np.concatenate(states1)[: T + 1]
    x1 = np.concatenate(incr1)[:T] if incr1 else np.empty(0, dtype=np.int64)
    sums1 = np.empty(T + 1, dtype=np.int64)
    sums1[0] = 0
    np.cumsum(x1, out=sums1[1:])

    y1 = int(sums1.max())
    y2 = int(sums2[: T + 1].max())
    y = max(y1, y2)
    delta = int(sums1[T] - sums2[T])

    spliced = np.concatenate([sums1, sums2[T + 1 :] + delta])
    ep2 = _kernels.strict_ascending_epochs(sums2)
    eph = _kernels.strict_ascending_epochs(spliced)
    h2 = sums2[ep2]
    hh = spliced[eph]

    tau_hits = np.flatnonzero(h2 > y + max(-delta, 0))
    rho_hits = np.flatnonzero(hh > y + max(delta, 0))
    span = spec.span
    if tau_hits.size == 0 or rho_hits.size == 0:
        return CouplingReport(
            coupling_time=T,
            y_first=y1 * span,
            y_second=y2 * span,
            y_bound=y * span,
            tau=None,
            rho=None,
            first_common_ladder_epoch=None,
            matched_tail=None,
            n_tail_epochs=0,
            horizon=horizon,
            coupled=True,
        )
    tau = int(tau_hits[0])
    rho = int(rho_hits[0])
    tail2 = ep2[tau:]
    tailh = eph[rho:]
    matched = (
        tail2.size > 0
        and tail2.size == tailh.size
        and bool(np.array_equal(tail2, tailh))
        and int(tail2[0]) > T
    )
    return CouplingReport(
        coupling_time=T,
        y_first=y1 * span,
        y_second=y2 * span,
        y_bound=y * span,
        tau=tau,
        rho=rho,
        first_common_ladder_epoch=int(tail2[0]),
        matched_tail=matched,
        n_tail_epochs=int(tail2.size),
        horizon=horizon,
        coupled=True,
    )


# ---------------------------------------------------------------------------
# Renewal views and support hitting
# ---------------------------------------------------------------------------


def embedded_renewal(path, s):
    """Height gaps between successive ladder epochs whose state is ``s``.

    Returns an empty array when ``s`` is seen fewer than twice among the
    ladder states.  All gaps are strictly positive.
    """
    ladder = extract_strict_ascending(path)
    if path.state_labels is not None:
        target = path.state_labels.index(s) if s in path.state_labels else None
    else:
        target = s
    if target is None:
        return np.empty(0)
    sel = np.flatnonzero(ladder.states == target)
    if sel.size < 2:
        return np.empty(0)
    return np.diff(ladder.heights_lattice[sel]) * path.span


def first_hit_ladder_support(spec, ladder_support, initial_state, horizon, seed, reps=200):
    """Fraction of replicates whose ladder chain enters ``ladder_support``
    at some epoch index >= 1 within the horizon."""
    support = {spec.index(s) for s in ladder_support}
    if not support:
        raise ModelValidationError("ladder_support must be non-empty")
    tables = _kernels.SamplingTables.from_spec(spec)
    start = spec.index(initial_state)

    def one(rep):
        u = _rng(seed, rep).random((horizon, 2))
        states, incr = _kernels.simulate_steps(tables, start, u)
        sums = np.empty(horizon + 1, dtype=np.int64)
        sums[0] = 0
        np.cumsum(incr, out=sums[1:])
        epochs = _kernels.strict_ascending_epochs(sums)
        hit = np.isin(states[epochs[1:]], list(support)).any()
        return float(hit)

    vals = np.array(_map_replicates(one, reps))
    params = {"horizon": horizon, "reps": reps, "support": sorted(ladder_support, key=str)}
    se = vals.std(ddof=1) / math.sqrt(reps) if reps > 1 else 0.0
    return MCEstimate(float(vals.mean()), float(se), reps, params, seed)


# ---------------------------------------------------------------------------
# Hub-and-petals walk on the unbounded state space
# ---------------------------------------------------------------------------


class DyadicPetalWeights:
    """Petal law P(I = i) = 2**-i for i >= 1, sampled exactly.

    Uniform doubles are dyadic, so mapping u through the binary exponent of
    1 - u reproduces the law without rounding at interval edges.  Petal i
    carries jump magnitude 2**i.
    """

    label = "dyadic"
    max_petal = 62  # keeps 2**i and path sums inside int64

    def sample(self, u):
        mant, expo = np.frexp(1.0 - np.asarray(u, dtype=np.float64))
        petals = (1 - expo + (mant == 0.5)).astype(np.int64)
        if np.any(petals > self.max_petal):
            raise OverflowError("petal index exceeds the int64-safe range")
        return petals

    def jump(self, petals):
        return np.int64(1) << np.asarray(petals, dtype=np.int64)

    def tail_geq(self, t):
        """P(jump magnitude >= t)."""
        if t <= 2.0:
            return 1.0
        k = math.ceil(math.log2(t))
        while 2.0 ** k < t:
            k += 1
        while 2.0 ** (k - 1) >= t:
            k -= 1
        return 2.0 ** (1 - k)


@dataclass(frozen=True, eq=False)
class FlowerAudit:
    """Per-step verification of the closed-form hub-walk trajectory."""

    n_steps: int
    failures: int
    first_failure: object
    min_shifted: float  # min over n of S_n - (n - 1), meaningful for dual
    ok: bool


def simulate_flower(n_steps, seed, weights=None, dual=False):
    """Walk started at the hub of the infinite hub-and-petals model.

    Odd steps enter a fresh petal I with jump -2**I; even steps return to
    the hub with jump +2 + 2**I.  With ``dual=True`` the time-reversed
    increments are used instead (+2 + 2**I out, -2**I back).  States are the
    raw petal numbers with 0 for the hub.
    """
    weights = weights or DyadicPetalWeights()
    n_odd = (n_steps + 1) // 2
    n_even = n_steps // 2
    rng = _rng(seed, 0)
    petals = weights.sample(rng.random(n_odd)) if n_odd else np.empty(0, dtype=np.int64)
    jumps = weights.jump(petals)
    states = np.zeros(n_steps + 1, dtype=np.int64)
    states[1::2] = petals
    incr = np.empty(n_steps, dtype=np.int64)
    if dual:
        incr[0::2] = 2 + jumps[:n_odd]
        incr[1::2] = -jumps[:n_even]
    else:
        incr[0::2] = -jumps[:n_odd]
        incr[1::2] = 2 + jumps[:n_even]
    return PathSample(
        span=1.0,
        initial_state=0,
        states=states,
        increments_lattice=incr,
        seed=seed,
        state_labels=None,
    )


def audit_flower_path(path, dual=False):
    """Check the closed-form value of every partial sum.

    From the hub, even steps satisfy S_n = n in both directions; odd steps
    satisfy S_n = n - 1 - 2**I_n forwards and S_n = n + 1 + 2**I_n for the
    reversed walk.  Also tracks min(S_n - (n - 1)), which stays at or above
    0 for the reversed walk.
    """
    sums = path.sums_lattice
    n = path.n_steps
    idx = np.arange(n + 1, dtype=np.int64)
    jumps = np.int64(1) << path.states
    if dual:
        expected = np.where(idx % 2 == 0, idx, idx + 1 + jumps)
    else:
        expected = np.where(idx % 2 == 0, idx, idx - 1 - jumps)
    bad = np.flatnonzero(sums != expected)
    shifted = sums[1:] - (idx[1:] - 1) if n else np.empty(0, dtype=np.int64)
    return FlowerAudit(
        n_steps=n,
        failures=int(bad.size),
        first_failure=int(bad[0]) if bad.size else None,
        min_shifted=float(shifted.min()) if n else 0.0,
        ok=bad.size == 0,
    )


def flower_min_tail_probability(N, B, weights=None):
    """Exact P(min of the first N hub-walk sums <= -B).

    Even sums are positive, so only odd steps matter, and their petal draws
    are independent: the complement is the product over odd n <= N of
    1 - P(jump >= n - 1 + B).
    """
    if N < 1 or B <= 0:
        raise ValueError("need N >= 1 and B > 0")
    weights = weights or DyadicPetalWeights()
    log_miss = 0.0
    for n in range(1, N + 1, 2):
        p = weights.tail_geq(n - 1 + B)
        if p >= 1.0:
            return 1.0
        log_miss += math.log1p(-p)
    return -math.expm1(log_miss)


def flower_min_tail_mc(N, B, seed, reps=2000, weights=None, dual=False):
    """Monte Carlo companion of flower_min_tail_probability, driven through
    the path simulator."""

    def one(rep):
        path = simulate_flower(N, (seed, rep), weights=weights, dual=dual)
        return float(path.sums_lattice[1:].min() <= -B)

    vals = np.array(_map_replicates(one, reps))
    se = vals.std(ddof=1) / math.sqrt(reps) if reps > 1 else 0.0
    params = {"N": N, "B": B, "reps": reps, "dual": dual}
    return MCEstimate(float(vals.mean()), float(se), reps, params, seed)
