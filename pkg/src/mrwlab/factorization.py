"""First-passage ladder kernels and the kernel-level splitting identity.

The strict ascending kernel of a walk collects the joint law of (state,
overshoot) at the first time the partial sum exceeds 0; the weak descending
kernel does the same for the first time the sum drops to or below 0.  Both
are computed exactly on a level band via sparse expected-visit solves, with
the band height doubled until a certified error bound drops below
tolerance.  Exponential tilt certificates supply the error bounds and the
geometric tail rates used elsewhere.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .core import build_dual, stationary_distribution, stationary_drift
from .errors import DivergenceGateError, NonConvergenceError
from .measure import KernelMatrix, LatticeMeasure, matrix_convolve, max_total_variation, total_mass_matrix

DEFAULT_TOL = 1e-10
DEFAULT_K_MAX = 2 ** 14
CERT_MARGIN = 1e-9


# ---------------------------------------------------------------------------
# Exponential tilt certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TiltCertificate:
    """Witness (theta, v) with T(theta) v <= rho * v componentwise, v > 0.

    T(theta)_ij = p_ij * E[exp(-theta X_ij)] in lattice units.  Any such
    pair makes v_{M_n} exp(-theta S_n) a supermartingale, giving explicit
    geometric bounds on descents and on P(S_n <= 0).
    """

    theta: float
    vector: np.ndarray
    rho: float
    feasible: bool

    @property
    def log_ratio(self):
        """max_j log(v_j / min_i v_i); the prefactor of every bound."""
        if not self.feasible:
            return math.inf
        lv = np.log(self.vector)
        return float(lv.max() - lv.min())

    def descent_bound(self, state, level):
        """Upper bound on P(walk from ``state`` at lattice level > 0 ever
        reaches a level <= 0), for level = ``level``."""
        if not self.feasible:
            return 1.0
        lv = np.log(self.vector)
        expo = lv[state] - lv.min() - self.theta * level
        return float(np.exp(np.minimum(expo, 0.0)))

    def negative_sum_bound(self, n):
        """Upper bound on max_i P_i(S_n <= 0); decays like rho**n."""
        if not self.feasible or not self.rho < 1.0:
            return 1.0
        return min(1.0, math.exp(self.log_ratio) * self.rho ** n)

    def tail_weight(self, n):
        """Upper bound on sum_{k > n} max_i P_i(S_k <= 0)."""
        if not self.feasible or not self.rho < 1.0:
            return math.inf
        return math.exp(self.log_ratio) * self.rho ** (n + 1) / (1.0 - self.rho)


def _tilt_matrix(spec, theta):
    m = spec.m
    T = np.zeros((m, m))
    for (i, j), law in spec.increments.items():
        T[i, j] = spec.transition[i, j] * float(
            np.sum(law.weights * np.exp(-theta * law.indices.astype(np.float64)))
        )
    return T


def _certify(spec, theta, iters=300):
    """Collatz-Wielandt upper bound on the Perron root of T(theta).

    Power iteration supplies the test vector; the returned (rho, v) is a
    valid certificate for any positive v because rho is the maximum ratio.
    """
    T = _tilt_matrix(spec, theta)
    if not np.all(np.isfinite(T)):
        return math.inf, None
    m = spec.m
    # Diagonal shift removes periodicity without moving the Perron vector.
    shift = max(1.0, T.max()) * 1e-3
    v = np.ones(m)
    A = T + shift * np.eye(m)
    for _ in range(iters):
        nxt = A @ v
        top = nxt.max()
        if not np.isfinite(top) or top <= 0.0:
            return math.inf, None
        v = nxt / top
    if np.any(v <= 0.0):
        return math.inf, None
    ratios = (T @ v) / v
    if not np.all(np.isfinite(ratios)):
        return math.inf, None
    return float(ratios.max()), v


def _theta_cap(spec):
    reach = max(spec.max_up(), spec.max_down(), 1)
    return 300.0 / reach


def descent_certificate(spec, margin=CERT_MARGIN):
    """Largest certified tilt: maximal theta with rho(T(theta)) <= 1 - margin.

    Feasible exactly when the walk drifts upward; the larger theta is, the
    faster descent bounds decay in the level.
    """
    cap = _theta_cap(spec)
    best = None
    theta_lo = None
    theta_hi = cap
    theta = cap
    for _ in range(60):
        rho, v = _certify(spec, theta)
        if rho <= 1.0 - margin:
            theta_lo = theta
            best = (theta, v, rho)
            break
        theta_hi = theta
        theta /= 2.0
        if theta < 1e-12:
            break
    if best is None:
        return TiltCertificate(theta=0.0, vector=np.ones(spec.m), rho=math.inf, feasible=False)
    if theta_lo < cap:
        for _ in range(50):
            mid = 0.5 * (theta_lo + theta_hi)
            rho, v = _certify(spec, mid)
            if rho <= 1.0 - margin:
                theta_lo, best = mid, (mid, v, rho)
            else:
                theta_hi = mid
    theta, v, rho = best
    return TiltCertificate(theta=theta, vector=v, rho=rho, feasible=True)


def contraction_certificate(spec, margin=CERT_MARGIN, grid=120):
    """Certificate with the smallest certified rho.

    Used for n-step bounds P(S_n <= 0) <= C * rho**n, where small rho
    matters more than large theta.  The feasible window can sit many
    decades below the cap, so the search runs on a log grid and then
    refines around the best point.
    """
    cap = _theta_cap(spec)

    def best_on(thetas, seed_best):
        best = seed_best
        for theta in thetas:
            rho, v = _certify(spec, float(theta))
            if rho <= 1.0 - margin and (best is None or rho < best[2]):
                best = (float(theta), v, rho)
        return best

    coarse = cap * np.exp(np.linspace(math.log(1e-8), 0.0, grid))
    best = best_on(coarse, None)
    if best is None:
        return TiltCertificate(theta=0.0, vector=np.ones(spec.m), rho=math.inf, feasible=False)
    for _ in range(3):
        center = best[0]
        fine = center * np.exp(np.linspace(math.log(0.5), math.log(2.0), 24))
        best = best_on(fine[fine <= cap], best)
    theta, v, rho = best
    return TiltCertificate(theta=theta, vector=v, rho=rho, feasible=True)


# ---------------------------------------------------------------------------
# Band solves
# ---------------------------------------------------------------------------


def _iter_jumps(spec):
    for (i, j), law in spec.increments.items():
        p = spec.transition[i, j]
        for k, w in zip(law.indices.tolist(), law.weights.tolist()):
            yield i, j, int(k), p * w


def _expected_visits(spec, rows, cols, data, n_cells, rhs):
    T = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_cells, n_cells),
    ).tocsc()
    A = (sp.identity(n_cells, format="csc") - T).tocsc()
    # Visits from start distribution b solve (I - T)^T x = b.
    return splu(A).solve(rhs, trans="T")


def _band_solve_ascending(spec, K):
    """Exact first-ascent decomposition with levels below -K abandoned.

    Returns kernel weights (m, m, max_up) for overshoot levels 1..max_up,
    plus per-start absorbed and censored mass.  Computed entries are exact
    lower approximations; each row's total-variation error is at most its
    censored mass.
    """
    m = spec.m
    up = spec.max_up()
    width = K + 1  # band levels -K..0, index b = level + K
    n = m * width
    rows, cols, data = [], [], []
    for i, j, k, pw in _iter_jumps(spec):
        b_lo = max(0, -k)
        b_hi = min(K, K - k)
        if b_lo <= b_hi:
            b = np.arange(b_lo, b_hi + 1)
            rows.append(i * width + b)
            cols.append(j * width + b + k)
            data.append(np.full(b.size, pw))
    rhs = np.zeros((n, m))
    for i in range(m):
        rhs[i * width + K, i] = 1.0
    visits = _expected_visits(spec, rows, cols, data, n, rhs)
    V = visits.T.reshape(m, m, width)  # [start, state, band index]

    out = np.zeros((m, m, up))
    cens = np.zeros(m)
    for i, j, k, pw in _iter_jumps(spec):
        if k >= 1:
            b0 = max(0, K + 1 - k)
            t0 = b0 - K + k  # lowest absorbed level, >= 1
            out[:, j, t0 - 1 : k] += pw * V[:, i, b0 : K + 1]
        elif k <= -1:
            b_hi = min(K, -k - 1)
            cens += pw * V[:, i, 0 : b_hi + 1].sum(axis=1)
    absorbed = out.sum(axis=(1, 2))
    return out, absorbed, cens


def _band_solve_descending(spec, K):
    """Exact first weak-descent decomposition with levels above K abandoned.

    Returns kernel weights (m, m, max_down + 1) for landing levels
    -max_down..0 and the censored mass split by (state, level) in
    K+1..K+max_up, which drives the certified error refinement.
    """
    m = spec.m
    up = spec.max_up()
    down = spec.max_down()
    if K < up:
        raise ValueError("band must cover one full upward jump")
    width = K  # band levels 1..K, index b = level - 1
    n = m * width
    rows, cols, data = [], [], []
    for i, j, k, pw in _iter_jumps(spec):
        b_lo = max(0, -k)
        b_hi = min(K - 1, K - 1 - k)
        if b_lo <= b_hi:
            b = np.arange(b_lo, b_hi + 1)
            rows.append(i * width + b)
            cols.append(j * width + b + k)
            data.append(np.full(b.size, pw))
    # The start sits at level 0: its first jump either lands in the band,
    # descends immediately, or (never, given K >= max_up) censors.
    rhs = np.zeros((n, m))
    out = np.zeros((m, m, down + 1))  # landing levels t: index t + down
    for i, j, k, pw in _iter_jumps(spec):
        if 1 <= k <= K:
            rhs[j * width + (k - 1), i] += pw
        elif k <= 0:
            out[i, j, k + down] += pw
    visits = _expected_visits(spec, rows, cols, data, n, rhs)
    V = visits.T.reshape(m, m, width)

    cens = np.zeros((m, m, up))  # censored levels K+1..K+up, index t - K - 1
    for i, j, k, pw in _iter_jumps(spec):
        if k <= -1:
            b_hi = min(K - 1, -k - 1)
            t_lo = 1 + k
            t_hi = (b_hi + 1) + k
            out[:, j, t_lo + down : t_hi + down + 1] += pw * V[:, i, 0 : b_hi + 1]
        elif k >= 1:
            b_lo = max(0, K - k)
            t_lo = (b_lo + 1) + k
            cens[:, j, t_lo - K - 1 : k] += pw * V[:, i, b_lo:K]
    absorbed = out.sum(axis=(1, 2))
    return out, absorbed, cens


# ---------------------------------------------------------------------------
# Ladder kernels with certified K-doubling
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LadderKernelResult:
    """Ladder kernel plus the certificate trail of its computation.

    ``row_defect[i]`` bounds the total-variation gap between row i of
    ``kernel`` and the exact first-passage kernel (entries are computed
    from below).  ``history`` records (K, max defect) per doubling.
    """

    kind: str
    kernel: KernelMatrix
    absorbed_mass: np.ndarray
    censored_mass: np.ndarray
    row_defect: np.ndarray
    K: int
    history: tuple
    certificate: TiltCertificate

    @property
    def defect(self):
        return float(self.row_defect.max())


def _kernel_from_weights(spec, weights, level_lo):
    m = spec.m
    entries = []
    for i in range(m):
        row = []
        for j in range(m):
            row.append(LatticeMeasure(spec.span, level_lo, weights[i, j].copy()))
        entries.append(tuple(row))
    return KernelMatrix(span=spec.span, entries=tuple(entries))


def _initial_band(spec, k0):
    if k0 is not None:
        return int(k0)
    return max(16, 8 * max(spec.max_up(), spec.max_down(), 1))


def _gate(spec, override, what):
    pi = stationary_distribution(spec)
    drift = stationary_drift(spec, pi)
    if not drift.positive and not override:
        raise DivergenceGateError(
            f"{what} requires positive stationary drift (got {drift.mu:g}); "
            "pass override=True to attempt the solve anyway.",
            details={"mu": drift.mu},
        )
    return pi, drift


def strict_ascending_kernel(spec, tol=DEFAULT_TOL, k0=None, k_max=DEFAULT_K_MAX, override=False):
    """First strict-ascent kernel: joint law of (state, level) when the walk
    first exceeds 0.  Row defects equal the censored mass and shrink
    geometrically in K under positive drift."""
    _gate(spec, override, "strict_ascending_kernel")
    cert = descent_certificate(spec)
    K = _initial_band(spec, k0)
    history = []
    while True:
        weights, absorbed, cens = _band_solve_ascending(spec, K)
        defect = float(cens.max())
        history.append((K, defect))
        if defect < tol:
            return LadderKernelResult(
                kind="strict_ascending",
                kernel=_kernel_from_weights(spec, weights, 1),
                absorbed_mass=absorbed,
                censored_mass=cens,
                row_defect=cens,
                K=K,
                history=tuple(history),
                certificate=cert,
            )
        if 2 * K > k_max:
            raise NonConvergenceError(
                f"first-ascent solve defect {defect:.3e} > {tol:g} at band K={K}; "
                "the walk does not ascend fast enough for the banded solve.",
                details={"K": K, "defect": defect, "history": history},
            )
        K *= 2


def weak_descending_kernel(spec, tol=DEFAULT_TOL, k0=None, k_max=DEFAULT_K_MAX, override=False):
    """First weak-descent kernel: joint law of (state, level) when the walk
    first returns to or below 0.

    Under positive drift the walk escapes with positive probability, so the
    kernel is strictly substochastic.  Mass censored above the band is
    multiplied by a certified bound on its return probability; the result's
    row defects carry that certified error.
    """
    _gate(spec, override, "weak_descending_kernel")
    cert = descent_certificate(spec)
    down = spec.max_down()
    K = max(_initial_band(spec, k0), spec.max_up())
    history = []
    while True:
        weights, absorbed, cens = _band_solve_descending(spec, K)
        m = spec.m
        if down == 0:
            # No downward jumps: censored paths can never return.
            bounds = np.zeros((m, spec.max_up()))
        else:
            levels = np.arange(K + 1, K + spec.max_up() + 1, dtype=np.float64)
            bounds = np.empty((m, levels.size))
            for j in range(m):
                for t, lev in enumerate(levels):
                    bounds[j, t] = cert.descent_bound(j, lev)
        defect = np.einsum("ijt,jt->i", cens, bounds)
        worst = float(defect.max())
        history.append((K, worst))
        if worst < tol:
            return LadderKernelResult(
                kind="weak_descending",
                kernel=_kernel_from_weights(spec, weights, -down),
                absorbed_mass=absorbed,
                censored_mass=cens.sum(axis=(1, 2)),
                row_defect=defect,
                K=K,
                history=tuple(history),
                certificate=cert,
            )
        if 2 * K > k_max:
            raise NonConvergenceError(
                f"first weak-descent solve defect {worst:.3e} > {tol:g} at band K={K}; "
                "no tilt certificate controls the censored mass.",
                details={"K": K, "defect": worst, "history": history},
            )
        K *= 2


# ---------------------------------------------------------------------------
# Escape probabilities and the splitting identity
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EscapeProbabilities:
    """Per-state chance that the reversed walk never weakly descends.

    ``lower``/``upper`` bracket the exact value; ``value`` is the midpoint.
    ``c`` integrates the values against the stationary law and equals the
    reciprocal of the mean ladder epoch.
    """

    states: tuple
    lower: np.ndarray
    upper: np.ndarray
    pi: np.ndarray
    dual_kernel: LadderKernelResult

    @property
    def value(self):
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self):
        return float((self.upper - self.lower).max())

    @property
    def c(self):
        return float(self.pi @ self.value)

    @property
    def c_bracket(self):
        return float(self.pi @ self.lower), float(self.pi @ self.upper)

    def support(self, atol=1e-9):
        """States with certified positive escape probability."""
        return tuple(s for s, lo in zip(self.states, self.lower) if lo > atol)

    def as_dict(self):
        return {s: float(v) for s, v in zip(self.states, self.value)}


def escape_probabilities(spec, pi=None, tol=DEFAULT_TOL, k_max=DEFAULT_K_MAX, override=False):
    """Bracket P_i(reversed walk stays above 0 forever) for every state."""
    pi = pi if pi is not None else stationary_distribution(spec)
    dual = build_dual(spec, pi)
    res = weak_descending_kernel(dual, tol=tol, k_max=k_max, override=override)
    upper = 1.0 - res.absorbed_mass
    lower = np.clip(upper - res.row_defect, 0.0, None)
    return EscapeProbabilities(
        states=spec.states,
        lower=lower,
        upper=upper,
        pi=pi.pi,
        dual_kernel=res,
    )


def star_kernel(dual_descending: KernelMatrix, pi) -> KernelMatrix:
    """Reweight the dual's weak-descent kernel back to the original walk:
    entry (i, j) is (pi_j / pi_i) times the dual's (j, i) entry."""
    p = pi.pi if hasattr(pi, "pi") else np.asarray(pi)
    m = dual_descending.dim
    entries = []
    for i in range(m):
        row = []
        for j in range(m):
            row.append(dual_descending.entry(j, i).scaled(p[j] / p[i]))
        entries.append(tuple(row))
    return KernelMatrix(span=dual_descending.span, entries=tuple(entries))


@dataclass(frozen=True, eq=False)
class SubstochasticReport:
    row_masses: np.ndarray
    max_row_mass: float
    min_weight: float
    ok: bool


def check_substochastic(kernel: KernelMatrix, tol=1e-12):
    """Row masses must not exceed 1 and no weight may be materially negative."""
    masses = total_mass_matrix(kernel).sum(axis=1)
    min_w = 0.0
    for row in kernel.entries:
        for meas in row:
            if meas.weights.size:
                min_w = min(min_w, float(meas.weights.min()))
    ok = bool(masses.max() <= 1.0 + tol and min_w >= -tol)
    return SubstochasticReport(
        row_masses=masses,
        max_row_mass=float(masses.max()),
        min_weight=min_w,
        ok=ok,
    )


@dataclass(frozen=True, eq=False)
class FactorizationReport:
    """Residuals of the splitting of delta_0 I - G into descending and
    ascending factors, with the solver defects that budget them."""

    spec_states: tuple
    ascending: LadderKernelResult
    dual_descending: LadderKernelResult
    star: KernelMatrix
    transition: KernelMatrix
    residual: float
    mass_residual: float
    column_mass_residual: float
    solver_defect: float
    tolerance: float
    ok: bool


def verify_factorization(
    spec, pi=None, tol=1e-9, solver_tol=DEFAULT_TOL, k_max=DEFAULT_K_MAX, override=False
):
    """Compute both ladder factors and check the splitting identity.

    Checks, in measure algebra over every entry:
      delta_0 I - G = (delta_0 I - *G) * (delta_0 I - G^ascending),
    its total-mass matrix consequence, and the stationary column-mass
    identity tying *G to the dual kernel.
    """
    from .core import transition_kernel

    pi = pi if pi is not None else stationary_distribution(spec)
    asc = strict_ascending_kernel(spec, tol=solver_tol, k_max=k_max, override=override)
    dual = build_dual(spec, pi)
    desc = weak_descending_kernel(dual, tol=solver_tol, k_max=k_max, override=override)
    star = star_kernel(desc.kernel, pi)
    G = transition_kernel(spec)

    ident = KernelMatrix.identity(spec.m, spec.span)
    lhs = ident - G
    rhs = matrix_convolve(ident - star, ident - asc.kernel)
    residual = max_total_variation(lhs, rhs)

    mass_lhs = np.eye(spec.m) - total_mass_matrix(G)
    mass_rhs = (np.eye(spec.m) - total_mass_matrix(star)) @ (
        np.eye(spec.m) - total_mass_matrix(asc.kernel)
    )
    mass_residual = float(np.abs(mass_lhs - mass_rhs).max())

    # Column masses of *G against the dual's row masses, weighted by pi.
    star_mass = total_mass_matrix(star)
    dual_rows = total_mass_matrix(desc.kernel).sum(axis=1)
    col_residual = float(np.abs(pi.pi @ star_mass - pi.pi * dual_rows).max())

    solver_defect = float(max(asc.row_defect.max(), desc.row_defect.max()))
    return FactorizationReport(
        spec_states=spec.states,
        ascending=asc,
        dual_descending=desc,
        star=star,
        transition=G,
        residual=residual,
        mass_residual=mass_residual,
        column_mass_residual=col_residual,
        solver_defect=solver_defect,
        tolerance=tol,
        ok=bool(residual <= tol and mass_residual <= tol and col_residual <= tol),
    )
