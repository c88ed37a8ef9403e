"""Pure numpy implementation of the simulation kernels.

Must produce bit-identical output to the compiled backend: both resolve a
uniform draw to the count of cumulative-table entries less than or equal
to it, capped at the last slot of the segment.
"""

import numpy as np


def simulate_steps(cum_trans, inc_off, inc_cum, inc_val, start, u, inc_pad=None, seg_len=None):
    n = u.shape[0]
    m = cum_trans.shape[0]
    if inc_pad is None:
        inc_pad, seg_len = build_padded_tables(inc_off, inc_cum)

    # Resolve every draw against every source state up front, then compose.
    # searchsorted(side="right") counts entries <= u, matching the scan in
    # the compiled backend.
    next_state = np.empty((m, n), dtype=np.int64)
    col = np.ascontiguousarray(u[:, 0])
    for s in range(m):
        next_state[s] = np.searchsorted(cum_trans[s], col, side="right")
    np.minimum(next_state, m - 1, out=next_state)

    # Chain the per-state resolutions; chunked so the list views stay small.
    states = np.empty(n + 1, dtype=np.int64)
    states[0] = start
    s = int(start)
    chunk = 1 << 16
    for base in range(0, n, chunk):
        end = min(n, base + chunk)
        rows = next_state[:, base:end].tolist()
        buf = [0] * (end - base)
        for t in range(end - base):
            s = rows[s][t]
            buf[t] = s
        states[base + 1 : end + 1] = buf

    pair = states[:-1] * m + states[1:]
    counts = (inc_pad[pair] <= u[:, 1][:, None]).sum(axis=1)
    np.minimum(counts, seg_len[pair] - 1, out=counts)
    incr = inc_val[inc_off[pair] + counts]
    return states, incr


def build_padded_tables(inc_off, inc_cum):
    """Rectangular cumulative table padded with 2.0 (never counted)."""
    seg_len = np.diff(inc_off).astype(np.int64)
    width = max(1, int(seg_len.max()))
    pad = np.full((seg_len.size, width), 2.0, dtype=np.float64)
    for p in range(seg_len.size):
        lo, hi = inc_off[p], inc_off[p + 1]
        pad[p, : hi - lo] = inc_cum[lo:hi]
    return pad, seg_len


def strict_ascending_epochs(sums):
    """Indices k with sums[k] above every earlier value; index 0 included."""
    running = np.maximum.accumulate(sums)
    mask = sums[1:] > running[:-1]
    return np.concatenate(([0], np.flatnonzero(mask) + 1)).astype(np.int64)


def weak_descending_epochs(sums):
    """Indices k with sums[k] at or below every earlier value; 0 included."""
    running = np.minimum.accumulate(sums)
    mask = sums[1:] <= running[:-1]
    return np.concatenate(([0], np.flatnonzero(mask) + 1)).astype(np.int64)
