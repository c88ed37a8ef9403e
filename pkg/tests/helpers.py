"""Independent brute-force oracles shared by the test modules.

Everything here recomputes quantities from first principles (path
enumeration, dict-based distribution stepping) without touching the
library's solvers, so agreement is evidence rather than tautology.
"""

from collections import defaultdict

import numpy as np


def enumerate_paths(spec, start_label, length):
    """Yield (prob, states, increments) over all positive-probability paths.

    Literal product-space enumeration; exponential, keep length small.
    """
    start = spec.index(start_label)
    moves = {}
    for (i, j), law in spec.increments.items():
        p = spec.transition[i, j]
        opts = [(p * w, j, int(k)) for k, w in zip(law.indices, law.weights)]
        moves.setdefault(i, []).extend(opts)

    def walk(state, prob, states, incr):
        if len(incr) == length:
            yield prob, tuple(states), tuple(incr)
            return
        for pw, j, k in moves[state]:
            yield from walk(j, prob * pw, states + [j], incr + [k])

    yield from walk(start, 1.0, [start], [])


def first_passage_brute(spec, start_label, horizon, ascending=True):
    """Exact first-passage mass by stepping a dict distribution.

    Returns (collected, alive): ``collected[(state, level)]`` is the exact
    probability of first crossing at that cell within ``horizon`` steps,
    ``alive`` the mass that has not crossed yet.  The true kernel entry lies
    in [collected, collected + alive].
    """
    start = spec.index(start_label)
    moves = defaultdict(list)
    for (i, j), law in spec.increments.items():
        p = spec.transition[i, j]
        for k, w in zip(law.indices, law.weights):
            moves[i].append((p * w, j, int(k)))
    dist = {(start, 0): 1.0}
    collected = defaultdict(float)
    for _ in range(horizon):
        nxt = defaultdict(float)
        for (i, lvl), mass in dist.items():
            for pw, j, k in moves[i]:
                tgt = lvl + k
                crossed = tgt > 0 if ascending else tgt <= 0
                if crossed:
                    collected[(j, tgt)] += mass * pw
                else:
                    nxt[(j, tgt)] += mass * pw
        dist = nxt
    return dict(collected), sum(dist.values())


def ascent_time_pmf_brute(spec, start_label, n_max):
    """P(first strict ascent happens at step n), n = 1..n_max, exactly."""
    start = spec.index(start_label)
    moves = defaultdict(list)
    for (i, j), law in spec.increments.items():
        p = spec.transition[i, j]
        for k, w in zip(law.indices, law.weights):
            moves[i].append((p * w, j, int(k)))
    dist = {(start, 0): 1.0}
    pmf = []
    for _ in range(n_max):
        nxt = defaultdict(float)
        crossed = 0.0
        for (i, lvl), mass in dist.items():
            for pw, j, k in moves[i]:
                if lvl + k > 0:
                    crossed += mass * pw
                else:
                    nxt[(j, lvl + k)] += mass * pw
        pmf.append(crossed)
        dist = nxt
    return np.array(pmf)


def ladder_epochs_naive(sums, ascending=True):
    """Quadratic-time ladder epochs straight from the definition."""
    epochs = [0]
    for n in range(1, len(sums)):
        prior = sums[:n]
        if ascending:
            if sums[n] > max(prior):
                epochs.append(n)
        else:
            if sums[n] <= min(prior):
                epochs.append(n)
    return np.array(epochs, dtype=np.int64)


def random_kernel_matrix(rng, dim, span=1.0, max_abs=4, max_atoms=3):
    """Random substochastic kernel matrix for algebra property tests."""
    from mrwlab.measure import KernelMatrix, LatticeMeasure

    entries = []
    for _ in range(dim):
        row = []
        scale = rng.uniform(0.2, 1.0)
        raw = rng.dirichlet(np.ones(dim)) * scale
        for j in range(dim):
            n_atoms = rng.integers(1, max_atoms + 1)
            idx = rng.choice(np.arange(-max_abs, max_abs + 1), size=n_atoms, replace=False)
            w = rng.dirichlet(np.ones(n_atoms)) * raw[j]
            row.append(LatticeMeasure.from_indices(span, idx, w))
        entries.append(tuple(row))
    return KernelMatrix(span=span, entries=tuple(entries))
