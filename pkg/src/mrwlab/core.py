"""Markov random walk models on a lattice.

A model is a finite irreducible driving chain together with one finitely
supported increment law per positive-probability transition.  All increment
supports live on a single lattice ``span * Z``.  This module owns model
validation, the stationary law of the chain, the stationary drift of the
walk, the time-reversed (dual) model, JSON round-tripping, and a small zoo
of named example models.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ModelValidationError
from .measure import KernelMatrix, LatticeMeasure

ROW_SUM_TOL = 1e-12
LATTICE_ALIGN_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class IncrementLaw:
    """Finitely supported probability law on the lattice ``span * Z``.

    ``indices`` are the support points in lattice units, strictly increasing;
    ``weights`` are the matching probabilities.
    """

    span: float
    indices: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "weights", w)

    @property
    def support(self):
        """Support points in real units."""
        return self.indices * self.span

    def mean(self):
        return float(np.dot(self.indices, self.weights)) * self.span

    def as_measure(self):
        return LatticeMeasure.from_indices(self.span, self.indices, self.weights)

    def as_json_dict(self):
        return {
            "support": [float(x) for x in self.support],
            "weights": [float(w) for w in self.weights],
        }


@dataclass(frozen=True, eq=False)
class MRWSpec:
    """Validated model: driving chain plus per-transition increment laws.

    ``states`` are the original labels; all arrays use dense indices in the
    listed order.  ``increments[(i, j)]`` exists exactly when
    ``transition[i, j] > 0``.
    """

    states: tuple
    transition: np.ndarray
    increments: dict
    span: float

    @property
    def m(self):
        return len(self.states)

    def index(self, label):
        try:
            return self.states.index(label)
        except ValueError:
            raise ModelValidationError(f"unknown state {label!r}") from None

    def law(self, i, j):
        return self.increments[(i, j)]

    def max_up(self):
        """Largest upward jump in lattice units (0 if none)."""
        best = 0
        for law in self.increments.values():
            if law.indices.size:
                best = max(best, int(law.indices.max()))
        return best

    def max_down(self):
        """Largest downward jump magnitude in lattice units (0 if none)."""
        best = 0
        for law in self.increments.values():
            if law.indices.size:
                best = max(best, -int(law.indices.min()))
        return best

    def to_json_dict(self):
        """Canonical JSON form; transitions sorted by (from, to) index."""
        transitions = []
        for (i, j) in sorted(self.increments):
            transitions.append(
                {
                    "from": self.states[i],
                    "to": self.states[j],
                    "prob": float(self.transition[i, j]),
                    "increment": self.increments[(i, j)].as_json_dict(),
                }
            )
        return {
            "states": list(self.states),
            "lattice_span": self.span,
            "transitions": transitions,
        }


def build_spec(states, transition, increments, span):
    """Assemble and validate a model from parts.

    Parameters
    ----------
    states : sequence of hashable labels (str or int)
    transition : (m, m) array of transition probabilities
    increments : mapping (i, j) -> (support_points, weights) or IncrementLaw,
        for every pair with positive transition probability
    span : lattice span, positive

    Returns
    -------
    MRWSpec

    Raises
    ------
    ModelValidationError on any contract violation, naming the offender.
    """
    states = tuple(states)
    m = len(states)
    if m == 0:
        raise ModelValidationError("model needs at least one state")
    if len(set(states)) != m:
        raise ModelValidationError("state labels must be distinct")
    if not (isinstance(span, (int, float)) and span > 0):
        raise ModelValidationError("lattice_span must be positive")
    span = float(span)

    P = np.asarray(transition, dtype=np.float64)
    if P.shape != (m, m):
        raise ModelValidationError(f"transition matrix must be {m}x{m}, got {P.shape}")
    if np.any(P < 0):
        i, j = np.argwhere(P < 0)[0]
        raise ModelValidationError(f"negative transition probability at ({states[i]!r}, {states[j]!r})")
    rows = P.sum(axis=1)
    bad = np.flatnonzero(np.abs(rows - 1.0) > ROW_SUM_TOL)
    if bad.size:
        i = int(bad[0])
        raise ModelValidationError(
            f"transition row for state {states[i]!r} sums to {rows[i]!r}, expected 1"
        )

    laws = {}
    for i in range(m):
        for j in range(m):
            if P[i, j] > 0.0:
                if (i, j) not in increments:
                    raise ModelValidationError(
                        f"missing increment law for transition ({states[i]!r}, {states[j]!r})"
                    )
                laws[(i, j)] = _validate_law(increments[(i, j)], span, states[i], states[j])

    extra = set(increments) - set(laws)
    if extra:
        i, j = sorted(extra)[0]
        raise ModelValidationError(
            f"increment law given for zero-probability transition ({states[i]!r}, {states[j]!r})"
        )

    _check_irreducible(P, states)
    return MRWSpec(states=states, transition=P, increments=laws, span=span)


def _validate_law(law, span, from_label, to_label):
    where = f"increment law for ({from_label!r}, {to_label!r})"
    if isinstance(law, IncrementLaw):
        points = law.support
        weights = law.weights
    else:
        points, weights = law
    points = np.asarray(points, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if points.ndim != 1 or points.shape != weights.shape or points.size == 0:
        raise ModelValidationError(f"{where}: support and weights must be matching non-empty vectors")
    if np.any(weights < 0):
        raise ModelValidationError(f"{where}: negative weight")
    total = weights.sum()
    if abs(total - 1.0) > ROW_SUM_TOL:
        raise ModelValidationError(f"{where}: weights sum to {total!r}, expected 1")
    ratio = points / span
    idx = np.rint(ratio)
    off = np.abs(ratio - idx)
    if np.any(off > LATTICE_ALIGN_TOL):
        k = int(np.argmax(off))
        raise ModelValidationError(f"{where}: support point {points[k]!r} is off-lattice for span {span!r}")
    idx = idx.astype(np.int64)
    if np.unique(idx).size != idx.size:
        raise ModelValidationError(f"{where}: duplicate support points")
    order = np.argsort(idx)
    return IncrementLaw(span=span, indices=idx[order], weights=weights[order])


def _check_irreducible(P, states):
    graph = csr_matrix((P > 0.0).astype(np.int8))
    n_comp, labels = connected_components(graph, directed=True, connection="strong")
    if n_comp > 1:
        members = [states[i] for i in np.flatnonzero(labels == labels[0])]
        raise ModelValidationError(
            f"driving chain is reducible ({n_comp} strongly connected components; "
            f"one component is {members!r})"
        )


def validate_spec(raw):
    """Parse and validate the JSON model form.

    Accepts the dict produced by ``MRWSpec.to_json_dict``: keys ``states``,
    ``lattice_span``, and ``transitions`` with per-transition ``from``,
    ``to``, ``prob``, and ``increment`` (``support`` / ``weights``).
    """
    if not isinstance(raw, dict):
        raise ModelValidationError("model JSON must be an object")
    for key in ("states", "lattice_span", "transitions"):
        if key not in raw:
            raise ModelValidationError(f"model JSON missing key {key!r}")
    states = raw["states"]
    if not isinstance(states, list) or not states:
        raise ModelValidationError("'states' must be a non-empty list")
    states = tuple(states)
    lookup = {s: i for i, s in enumerate(states)}
    if len(lookup) != len(states):
        raise ModelValidationError("state labels must be distinct")
    m = len(states)
    P = np.zeros((m, m), dtype=np.float64)
    increments = {}
    if not isinstance(raw["transitions"], list):
        raise ModelValidationError("'transitions' must be a list")
    for t in raw["transitions"]:
        try:
            i = lookup[t["from"]]
            j = lookup[t["to"]]
            prob = float(t["prob"])
            inc = t["increment"]
            support = inc["support"]
            weights = inc["weights"]
        except (KeyError, TypeError) as exc:
            raise ModelValidationError(f"malformed transition entry {t!r}") from exc
        if P[i, j] != 0.0:
            raise ModelValidationError(
                f"duplicate transition ({t['from']!r}, {t['to']!r})"
            )
        P[i, j] = prob
        increments[(i, j)] = (support, weights)
    return build_spec(states, P, increments, raw["lattice_span"])


@dataclass(frozen=True, eq=False)
class StationaryDistribution:
    """Stationary law of the driving chain, strictly positive entries."""

    pi: np.ndarray
    states: tuple

    def probability(self, label):
        return float(self.pi[self.states.index(label)])

    def as_dict(self):
        return {s: float(p) for s, p in zip(self.states, self.pi)}


def stationary_distribution(spec):
    """Solve pi P = pi with sum(pi) = 1 by a dense linear solve."""
    m = spec.m
    a = spec.transition.T - np.eye(m)
    a[-1, :] = 1.0
    b = np.zeros(m)
    b[-1] = 1.0
    pi = np.linalg.solve(a, b)
    residual = float(np.abs(pi @ spec.transition - pi).max())
    if residual > 1e-10:
        raise ModelValidationError(f"stationary solve residual {residual:g}")
    if np.any(pi <= 0):
        raise ModelValidationError("stationary distribution has a non-positive entry")
    pi = pi / pi.sum()
    return StationaryDistribution(pi=pi, states=spec.states)


@dataclass(frozen=True, eq=False)
class DriftReport:
    """Stationary mean increment of the walk."""

    mu: float
    per_transition: np.ndarray  # (m, m) conditional means, 0 where p = 0
    positive: bool


def stationary_drift(spec, pi):
    """Mean increment per step under the stationary chain law.

    The mean is sum over (i, j) of pi_i p_ij times the mean of the (i, j)
    increment law.  All laws have finite support, so it always exists.
    """
    m = spec.m
    means = np.zeros((m, m))
    for (i, j), law in spec.increments.items():
        means[i, j] = law.mean()
    mu = float(np.sum(pi.pi[:, None] * spec.transition * means))
    return DriftReport(mu=mu, per_transition=means, positive=mu > 0)


def build_dual(spec, pi):
    """Time-reversed model on the same lattice.

    Dual transition probabilities are ``pi_j p_ji / pi_i`` and the dual
    increment law from i to j is the original law of the (j, i) transition.
    The original stationary law is stationary for the dual, and applying
    the construction twice returns the original model.
    """
    m = spec.m
    P = spec.transition
    dual_P = (pi.pi[None, :] * P.T) / pi.pi[:, None]
    dual_P = dual_P / dual_P.sum(axis=1, keepdims=True)
    increments = {}
    for i in range(m):
        for j in range(m):
            if dual_P[i, j] > 0.0:
                law = spec.increments[(j, i)]
                increments[(i, j)] = (law.support, law.weights)
    return build_spec(spec.states, dual_P, increments, spec.span)


@dataclass(frozen=True, eq=False)
class StationaryIncrementLaw:
    """Stationary joint law of (state entered, increment just taken).

    ``state_weights[i]`` is the probability of entering state i, equal to
    the stationary law; ``laws[i]`` is the conditional increment law given
    arrival at i, stored as a lattice measure of mass 1.
    """

    states: tuple
    state_weights: np.ndarray
    laws: tuple  # per-state LatticeMeasure, each of total mass 1

    @property
    def total_mass(self):
        return float(
            sum(w * law.total_mass for w, law in zip(self.state_weights, self.laws))
        )


def stationary_increment_law(spec, pi):
    """Marginal of the stationary walk step: mass into state i with jump x
    equals the sum over source states j of pi_j p_ji F_ji(x)."""
    m = spec.m
    laws = []
    weights = np.zeros(m)
    for i in range(m):
        acc = LatticeMeasure.zero(spec.span)
        for j in range(m):
            if spec.transition[j, i] > 0.0:
                law = spec.increments[(j, i)]
                acc = acc + law.as_measure().scaled(pi.pi[j] * spec.transition[j, i])
        weights[i] = acc.total_mass
        laws.append(acc.scaled(1.0 / weights[i]) if weights[i] > 0 else acc)
    return StationaryIncrementLaw(states=spec.states, state_weights=weights, laws=tuple(laws))


def transition_kernel(spec):
    """One-step kernel as a measure matrix: entry (i, j) is p_ij F_ij."""
    m = spec.m
    z = LatticeMeasure.zero(spec.span)
    entries = []
    for i in range(m):
        row = []
        for j in range(m):
            if spec.transition[i, j] > 0.0:
                row.append(spec.increments[(i, j)].as_measure().scaled(spec.transition[i, j]))
            else:
                row.append(z)
        entries.append(tuple(row))
    return KernelMatrix(spec.span, tuple(entries))


# ---------------------------------------------------------------------------
# Model zoo
# ---------------------------------------------------------------------------


def two_cycle():
    """Two-state cycle: a -> b jumps +2, b -> a jumps -1."""
    return build_spec(
        states=("a", "b"),
        transition=[[0.0, 1.0], [1.0, 0.0]],
        increments={(0, 1): ([2.0], [1.0]), (1, 0): ([-1.0], [1.0])},
        span=1.0,
    )


def simple_rw(p=0.6):
    """Single-state walk stepping +1 with probability p, else -1."""
    if not 0.0 < p < 1.0:
        raise ModelValidationError("p must lie strictly between 0 and 1")
    return build_spec(
        states=("s",),
        transition=[[1.0]],
        increments={(0, 0): ([1.0, -1.0], [p, 1.0 - p])},
        span=1.0,
    )


def remark2():
    """Two-state alternating model with zero drift.

    Steps into state 's' are +1 or +3 with equal probability; steps out of
    's' are -2.  Every strict ascent therefore lands in 's', while the
    stationary drift is exactly zero, so the ascending ladder chain is
    degenerate at 's' even though the walk only oscillates.
    """
    return build_spec(
        states=("s", "a"),
        transition=[[0.0, 1.0], [1.0, 0.0]],
        increments={(0, 1): ([-2.0], [1.0]), (1, 0): ([1.0, 3.0], [0.5, 0.5])},
        span=1.0,
    )


def flower_truncated(n_petals=20):
    """Hub-and-petals model with dyadic petal probabilities.

    The hub 0 moves to petal i with probability 2**-i for i < n_petals; the
    tail mass is folded into the last petal so every jump size 1/p_0i stays
    an exact lattice integer.  Petal i returns to the hub with probability
    one.  Hub-to-petal jumps are -1/p_0i, petal-to-hub jumps are 2 + 1/p_0i,
    which keeps the stationary drift at exactly 1.
    """
    if n_petals < 1:
        raise ModelValidationError("need at least one petal")
    probs = [2.0 ** -i for i in range(1, n_petals + 1)]
    probs[-1] = 2.0 ** -(n_petals - 1) if n_petals > 1 else 1.0
    states = tuple(range(n_petals + 1))
    m = n_petals + 1
    P = np.zeros((m, m))
    increments = {}
    for i, p in enumerate(probs, start=1):
        P[0, i] = p
        P[i, 0] = 1.0
        jump = round(1.0 / p)
        increments[(0, i)] = ([-float(jump)], [1.0])
        increments[(i, 0)] = ([2.0 + jump], [1.0])
    return build_spec(states, P, increments, span=1.0)


def random_lattice(seed=0, m=4, span=1.0, max_jump=3, drift_target=0.5, tries=200):
    """Random dense irreducible model with drift near ``drift_target``.

    Rows are Dirichlet; each increment law picks 2 to 4 distinct lattice
    points in [-max_jump, max_jump].  Candidates are drawn until the
    stationary drift falls within ``max(0.25 * span, 0.25 * |target|)`` of
    the target, which keeps the generator deterministic per seed.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0x5EED,)))
    window = max(0.25 * span, 0.25 * abs(drift_target))
    for _ in range(tries):
        P = rng.dirichlet(np.ones(m), size=m)
        increments = {}
        for i in range(m):
            for j in range(m):
                size = int(rng.integers(2, 5))
                ks = rng.choice(np.arange(-max_jump, max_jump + 1), size=size, replace=False)
                w = rng.dirichlet(np.ones(size))
                increments[(i, j)] = (np.sort(ks) * span, w[np.argsort(ks)])
        spec = build_spec(tuple(f"s{i}" for i in range(m)), P, increments, span)
        mu = stationary_drift(spec, stationary_distribution(spec)).mu
        if abs(mu - drift_target) <= window:
            return spec
    raise ModelValidationError(
        f"no candidate hit drift {drift_target} +- {window} in {tries} tries"
    )


_ZOO = {
    "two_cycle": two_cycle,
    "simple_rw": simple_rw,
    "remark2": remark2,
    "flower_truncated": flower_truncated,
    "random_lattice": random_lattice,
}


def model_zoo(name, **params):
    """Instantiate a named example model."""
    if name not in _ZOO:
        raise ModelValidationError(f"unknown zoo model {name!r}; have {sorted(_ZOO)}")
    return _ZOO[name](**params)
