"""Finitely supported signed measures on a common lattice.

A measure lives on the grid ``{k * span : k integer}`` and is stored as a
dense weight vector starting at ``offset`` lattice units.  Matrices of such
measures represent transition kernels whose convolution product realises
kernel composition.
"""

from dataclasses import dataclass

import numpy as np

# Post-arithmetic support cleanup: leading/trailing weights at or below this
# magnitude are dropped so float dust cannot grow supports without bound.
TRIM_THRESHOLD = 1e-15


def _trim(offset, weights):
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError("weights must be one-dimensional")
    keep = np.flatnonzero(np.abs(w) > TRIM_THRESHOLD)
    if keep.size == 0:
        return 0, np.empty(0, dtype=np.float64)
    lo, hi = keep[0], keep[-1] + 1
    return offset + int(lo), np.ascontiguousarray(w[lo:hi])


@dataclass(frozen=True, eq=False)
class LatticeMeasure:
    """Signed measure with finite support on the lattice ``span * Z``.

    ``weights[k]`` is the mass at lattice index ``offset + k``.  The stored
    vector is trimmed: its first and last entries exceed TRIM_THRESHOLD in
    magnitude (interior zeros may remain).
    """

    span: float
    offset: int
    weights: np.ndarray

    def __post_init__(self):
        if not self.span > 0:
            raise ValueError("span must be positive")
        off, w = _trim(self.offset, self.weights)
        object.__setattr__(self, "offset", off)
        object.__setattr__(self, "weights", w)

    @staticmethod
    def zero(span):
        return LatticeMeasure(span, 0, np.empty(0))

    @staticmethod
    def delta(span, index=0, mass=1.0):
        return LatticeMeasure(span, index, np.array([mass], dtype=np.float64))

    @staticmethod
    def from_indices(span, indices, weights):
        """Build from unordered (lattice index, weight) pairs."""
        indices = np.asarray(indices, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.float64)
        if indices.size == 0:
            return LatticeMeasure.zero(span)
        lo = int(indices.min())
        dense = np.zeros(int(indices.max()) - lo + 1, dtype=np.float64)
        np.add.at(dense, indices - lo, weights)
        return LatticeMeasure(span, lo, dense)

    @property
    def is_zero(self):
        return self.weights.size == 0

    @property
    def total_mass(self):
        return float(self.weights.sum())

    @property
    def min_index(self):
        return None if self.is_zero else self.offset

    @property
    def max_index(self):
        return None if self.is_zero else self.offset + self.weights.size - 1

    def support_indices(self):
        return self.offset + np.flatnonzero(self.weights != 0.0)

    def support_points(self):
        return self.support_indices() * self.span

    def weight_at(self, index):
        k = index - self.offset
        if 0 <= k < self.weights.size:
            return float(self.weights[k])
        return 0.0

    def mean(self):
        """First moment; zero for the zero measure."""
        if self.is_zero:
            return 0.0
        ks = np.arange(self.offset, self.offset + self.weights.size)
        return float(np.dot(ks, self.weights)) * self.span

    def scaled(self, factor):
        if factor == 0.0 or self.is_zero:
            return LatticeMeasure.zero(self.span)
        return LatticeMeasure(self.span, self.offset, self.weights * factor)

    def __neg__(self):
        return self.scaled(-1.0)

    def __add__(self, other):
        _check_span(self, other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        lo = min(self.offset, other.offset)
        hi = max(self.offset + self.weights.size, other.offset + other.weights.size)
        buf = np.zeros(hi - lo, dtype=np.float64)
        buf[self.offset - lo : self.offset - lo + self.weights.size] += self.weights
        buf[other.offset - lo : other.offset - lo + other.weights.size] += other.weights
        return LatticeMeasure(self.span, lo, buf)

    def __sub__(self, other):
        return self + (-other)

    def as_json_dict(self):
        return {
            "span": self.span,
            "offset": int(self.offset),
            "weights": [float(w) for w in self.weights],
        }

    def __repr__(self):
        if self.is_zero:
            return f"LatticeMeasure(span={self.span}, zero)"
        return (
            f"LatticeMeasure(span={self.span}, offset={self.offset}, "
            f"mass={self.total_mass:.6g}, n={self.weights.size})"
        )


def _check_span(a, b):
    if a.span != b.span:
        raise ValueError(f"span mismatch: {a.span} vs {b.span}")


def convolve(a, b):
    """Convolution of two lattice measures; supports add, offsets add."""
    _check_span(a, b)
    if a.is_zero or b.is_zero:
        return LatticeMeasure.zero(a.span)
    return LatticeMeasure(a.span, a.offset + b.offset, np.convolve(a.weights, b.weights))


def tv_distance(a, b):
    """Total variation distance: sum of absolute weight differences."""
    diff = a - b
    return float(np.abs(diff.weights).sum())


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Square matrix of lattice measures sharing one span."""

    span: float
    entries: tuple

    def __post_init__(self):
        m = len(self.entries)
        rows = []
        for row in self.entries:
            if len(row) != m:
                raise ValueError("kernel matrix must be square")
            for e in row:
                if e.span != self.span:
                    raise ValueError("entry span differs from matrix span")
            rows.append(tuple(row))
        object.__setattr__(self, "entries", tuple(rows))

    @property
    def dim(self):
        return len(self.entries)

    def entry(self, i, j):
        return self.entries[i][j]

    @staticmethod
    def identity(dim, span):
        z = LatticeMeasure.zero(span)
        d = LatticeMeasure.delta(span)
        return KernelMatrix(
            span, tuple(tuple(d if i == j else z for j in range(dim)) for i in range(dim))
        )

    @staticmethod
    def zeros(dim, span):
        z = LatticeMeasure.zero(span)
        return KernelMatrix(span, tuple(tuple(z for _ in range(dim)) for _ in range(dim)))

    def __add__(self, other):
        _check_kernel_shapes(self, other)
        return KernelMatrix(
            self.span,
            tuple(
                tuple(self.entries[i][j] + other.entries[i][j] for j in range(self.dim))
                for i in range(self.dim)
            ),
        )

    def __sub__(self, other):
        _check_kernel_shapes(self, other)
        return KernelMatrix(
            self.span,
            tuple(
                tuple(self.entries[i][j] - other.entries[i][j] for j in range(self.dim))
                for i in range(self.dim)
            ),
        )

    def as_json_dict(self):
        return {
            "span": self.span,
            "dim": self.dim,
            "entries": [[e.as_json_dict() for e in row] for row in self.entries],
        }


def _check_kernel_shapes(a, b):
    if a.dim != b.dim:
        raise ValueError("kernel matrix dimensions differ")
    if a.span != b.span:
        raise ValueError("kernel matrix spans differ")


def matrix_convolve(a, b):
    """Kernel composition: entry (i, j) is the sum over k of a[i,k] * b[k,j],
    with * the measure convolution."""
    _check_kernel_shapes(a, b)
    m = a.dim
    out = []
    for i in range(m):
        row = []
        for j in range(m):
            acc = LatticeMeasure.zero(a.span)
            for k in range(m):
                left = a.entries[i][k]
                right = b.entries[k][j]
                if left.is_zero or right.is_zero:
                    continue
                acc = acc + convolve(left, right)
            row.append(acc)
        out.append(tuple(row))
    return KernelMatrix(a.span, tuple(out))


def total_mass_matrix(kernel):
    """Entrywise total mass; convolution of kernels multiplies these."""
    return np.array(
        [[e.total_mass for e in row] for row in kernel.entries], dtype=np.float64
    )


def max_total_variation(a, b):
    """Largest entrywise total variation distance between two kernels."""
    _check_kernel_shapes(a, b)
    return max(
        tv_distance(a.entries[i][j], b.entries[i][j])
        for i in range(a.dim)
        for j in range(a.dim)
    )
