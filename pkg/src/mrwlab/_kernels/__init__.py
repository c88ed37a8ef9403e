"""Simulation kernels with a compiled fast path and a numpy fallback.

The compiled extension is preferred when the build produced it; otherwise
the pure numpy implementation is used.  Both consume identical pre-drawn
uniform arrays and cumulative tables and return bit-identical results, so
the choice never affects any estimate.
"""

from dataclasses import dataclass

import numpy as np

from . import _pykernels

try:
    from . import _ckernels

    _impl = _ckernels
    HAVE_COMPILED = True
except ImportError:
    _impl = _pykernels
    HAVE_COMPILED = False


def backend_name():
    return "compiled" if HAVE_COMPILED else "numpy"


def available_backends():
    names = {"numpy": _pykernels}
    if HAVE_COMPILED:
        names["compiled"] = _ckernels
    return names


@dataclass(frozen=True, eq=False)
class SamplingTables:
    """Cumulative tables shared by every backend.

    ``cum_trans`` holds row-cumulative transition probabilities with the
    final column pinned to 1.0 so draws in [0, 1) always resolve.  Increment
    tables are CSR-style over pair ids ``i * m + j``; the numpy backend also
    carries a rectangular padded copy.
    """

    m: int
    cum_trans: np.ndarray
    inc_off: np.ndarray
    inc_cum: np.ndarray
    inc_val: np.ndarray
    inc_pad: np.ndarray
    seg_len: np.ndarray

    @classmethod
    def from_arrays(cls, transition, laws):
        """Build tables from a transition matrix and {(i, j): (indices,
        weights)} increment data in lattice units."""
        m = transition.shape[0]
        cum_trans = np.cumsum(transition, axis=1)
        cum_trans[:, -1] = 1.0
        cum_trans = np.ascontiguousarray(cum_trans, dtype=np.float64)
        off = np.zeros(m * m + 1, dtype=np.int64)
        cum_parts = []
        val_parts = []
        for p in range(m * m):
            i, j = divmod(p, m)
            if (i, j) in laws:
                indices, weights = laws[(i, j)]
                c = np.cumsum(np.asarray(weights, dtype=np.float64))
                c[-1] = 1.0
                cum_parts.append(c)
                val_parts.append(np.asarray(indices, dtype=np.int64))
                off[p + 1] = off[p] + c.size
            else:
                off[p + 1] = off[p]
        inc_cum = (
            np.concatenate(cum_parts) if cum_parts else np.empty(0, dtype=np.float64)
        )
        inc_val = (
            np.concatenate(val_parts) if val_parts else np.empty(0, dtype=np.int64)
        )
        pad, seg_len = _pykernels.build_padded_tables(off, inc_cum)
        return cls(
            m=m,
            cum_trans=cum_trans,
            inc_off=off,
            inc_cum=inc_cum,
            inc_val=inc_val,
            inc_pad=pad,
            seg_len=seg_len,
        )

    @classmethod
    def from_spec(cls, spec):
        laws = {k: (law.indices, law.weights) for k, law in spec.increments.items()}
        return cls.from_arrays(spec.transition, laws)


def simulate_steps(tables, start, u, backend=None):
    """Advance the walk once per row of ``u``.

    Column 0 of ``u`` resolves the state transition, column 1 the increment.
    Returns (states including the start, increments in lattice units).
    """
    mod = available_backends()[backend] if backend else _impl
    if mod is _pykernels:
        return mod.simulate_steps(
            tables.cum_trans,
            tables.inc_off,
            tables.inc_cum,
            tables.inc_val,
            int(start),
            u,
            inc_pad=tables.inc_pad,
            seg_len=tables.seg_len,
        )
    return mod.simulate_steps(
        tables.cum_trans,
        tables.inc_off,
        tables.inc_cum,
        tables.inc_val,
        int(start),
        u,
    )


def strict_ascending_epochs(sums, backend=None):
    mod = available_backends()[backend] if backend else _impl
    return mod.strict_ascending_epochs(np.ascontiguousarray(sums, dtype=np.int64))


def weak_descending_epochs(sums, backend=None):
    mod = available_backends()[backend] if backend else _impl
    return mod.weak_descending_epochs(np.ascontiguousarray(sums, dtype=np.int64))
