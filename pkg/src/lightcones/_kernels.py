"""Subset-streaming kernels for the operator-quantum-walk certificates.

The walk matrix is indexed by subsets of {1..L} encoded as bitmasks (bit
i-1 represents site i).  Row sums and matrix-vector products depend on each
subset only through its two right-most elements, so the kernels stream over
all 2^L masks with O(L^2) lookup tables and never materialize the matrix.

Two interchangeable backends are provided:
  - a numba @njit backend (default when numba imports), and
  - a pure-numpy vectorized fallback.
Selection: environment variable LIGHTCONES_NUMBA = "1"/"0" forces a backend;
unset or "auto" uses numba when available.  `backend_name()` reports the
active one; benchmarks/bench_kernels.py compares the two.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "NUMBA_ENABLED",
    "backend_name",
    "subset_tops",
    "trial_vector_table",
    "stream_row_max",
    "stream_matvec",
]

_flag = os.environ.get("LIGHTCONES_NUMBA", "auto").strip().lower()
if _flag in ("0", "false", "off", "no", "numpy"):
    NUMBA_ENABLED = False
elif _flag in ("1", "true", "on", "yes", "numba"):
    import numba  # noqa: F401  -- fail loudly when explicitly requested

    NUMBA_ENABLED = True
else:
    try:
        import numba  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover
        NUMBA_ENABLED = False


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------------------
# subset structure
# ---------------------------------------------------------------------------


def subset_tops_numpy(n_bits: int):
    """(top1, top2) site indices (1-based, 0 when absent) for all masks."""
    size = 1 << n_bits
    masks = np.arange(size, dtype=np.int64)
    top1 = np.zeros(size, dtype=np.int16)
    nz = masks > 0
    # highest set bit via float exponent; exact for n_bits <= 52
    top1[nz] = np.floor(np.log2(masks[nz])).astype(np.int16) + 1
    rest = masks.copy()
    rest[nz] &= ~(np.int64(1) << (top1[nz].astype(np.int64) - 1))
    top2 = np.zeros(size, dtype=np.int16)
    nz2 = rest > 0
    top2[nz2] = np.floor(np.log2(rest[nz2])).astype(np.int16) + 1
    return top1, top2


if NUMBA_ENABLED:
    from numba import njit

    @njit(cache=True)
    def _tops_numba(n_bits):
        size = 1 << n_bits
        top1 = np.zeros(size, dtype=np.int16)
        top2 = np.zeros(size, dtype=np.int16)
        for s in range(1, size):
            m = s
            t1 = 0
            while m:
                t1 += 1
                m >>= 1
            top1[s] = t1
            rest = s & ~(1 << (t1 - 1))
            t2 = 0
            while rest:
                t2 += 1
                rest >>= 1
            top2[s] = t2
        return top1, top2

    @njit(cache=True)
    def _row_max_numba(n_bits, base, add_tail, swap_tab, use_swap):
        size = 1 << n_bits
        best = 0.0
        for s in range(size):
            m = s
            t1 = 0
            while m:
                t1 += 1
                m >>= 1
            if t1 == 0:
                row = add_tail[0]
            else:
                rest = s & ~(1 << (t1 - 1))
                t2 = 0
                while rest:
                    t2 += 1
                    rest >>= 1
                row = base + add_tail[t1]
                if use_swap:
                    row += swap_tab[t2, t1]
            if row > best:
                best = row
        return best

    @njit(cache=True)
    def _matvec_numba(x, n_bits, a_const, w_add, w_swap, use_swap):
        size = 1 << n_bits
        y = np.zeros(size)
        for s in range(size):
            m = s
            t1 = 0
            while m:
                t1 += 1
                m >>= 1
            acc = 0.0
            if t1 > 0:
                rest = s & ~(1 << (t1 - 1))
                t2 = 0
                mm = rest
                while mm:
                    t2 += 1
                    mm >>= 1
                # removal of the frontier element
                acc += a_const * w_add[t1 - t2] * x[rest]
                if use_swap:
                    for n in range(t2 + 1, n_bits + 1):
                        if n == t1:
                            continue
                        q = rest | (1 << (n - 1))
                        acc += a_const * w_swap[abs(t1 - n)] * x[q]
            # additions beyond the frontier
            for k in range(t1 + 1, n_bits + 1):
                q = s | (1 << (k - 1))
                acc += a_const * w_add[k - t1] * x[q]
            y[s] = acc
        return y

    def subset_tops(n_bits):
        return _tops_numba(n_bits)

else:

    def subset_tops(n_bits):
        return subset_tops_numpy(n_bits)


# ---------------------------------------------------------------------------
# trial vector
# ---------------------------------------------------------------------------


def trial_vector_table(n_bits: int, w_gap: np.ndarray) -> np.ndarray:
    """phi over all masks: phi[0] = 1 and phi[S] = phi[S minus top] *
    w_gap[top(S) - top(S minus top)].  w_gap is indexed by gap 1..L."""
    size = 1 << n_bits
    phi = np.empty(size)
    phi[0] = 1.0
    top1, _ = subset_tops(n_bits)
    for b in range(n_bits):
        lo = 1 << b
        rest = np.arange(lo, dtype=np.int64)
        gaps = (b + 1) - top1[rest].astype(np.int64)
        phi[lo : 2 * lo] = phi[:lo] * w_gap[gaps]
    return phi


# ---------------------------------------------------------------------------
# streamed Collatz-Wielandt row maximum
# ---------------------------------------------------------------------------


def stream_row_max(n_bits, base, add_tail, swap_tab=None):
    """max over subsets of the trial-vector-weighted row sum.

    base: the frontier-removal contribution (constant by construction of the
    trial vector); add_tail[j]: total addition contribution for frontier j
    (index 0 = empty set); swap_tab[j2, j]: frontier-swap contribution for the
    state-transfer variant, or None.
    """
    add_tail = np.asarray(add_tail, dtype=float)
    use_swap = swap_tab is not None
    if swap_tab is None:
        swap_tab = np.zeros((n_bits + 1, n_bits + 1))
    swap_tab = np.asarray(swap_tab, dtype=float)
    if NUMBA_ENABLED:
        return float(_row_max_numba(n_bits, float(base), add_tail, swap_tab, use_swap))
    top1, top2 = subset_tops_numpy(n_bits)
    rows = np.where(top1 > 0, base, 0.0) + add_tail[top1]
    if use_swap:
        rows = rows + np.where(top1 > 0, swap_tab[top2, top1], 0.0)
    return float(rows.max())


# ---------------------------------------------------------------------------
# streamed matrix-vector product
# ---------------------------------------------------------------------------


def stream_matvec(x, n_bits, a_const, w_add, w_swap=None):
    """y = M x for the implicit walk matrix.

    w_add[g]: add/remove entry weight at frontier gap g (index 1..L);
    w_swap[g]: frontier-swap entry weight (transfer variant) or None.
    """
    x = np.asarray(x, dtype=float)
    w_add = np.asarray(w_add, dtype=float)
    use_swap = w_swap is not None
    if w_swap is None:
        w_swap_arr = np.zeros(n_bits + 1)
    else:
        w_swap_arr = np.asarray(w_swap, dtype=float)
    if NUMBA_ENABLED:
        return _matvec_numba(x, n_bits, float(a_const), w_add, w_swap_arr, use_swap)
    return _matvec_numpy(x, n_bits, a_const, w_add, w_swap_arr if use_swap else None)


def _matvec_numpy(x, n_bits, a_const, w_add, w_swap):
    size = 1 << n_bits
    top1, top2 = subset_tops_numpy(n_bits)
    masks = np.arange(size, dtype=np.int64)
    y = np.zeros(size)
    t1 = top1.astype(np.int64)
    t2 = top2.astype(np.int64)
    nz = masks > 0
    rest = masks.copy()
    rest[nz] &= ~(np.int64(1) << (t1[nz] - 1))
    # removal of the frontier element
    y[nz] += a_const * w_add[(t1 - t2)[nz]] * x[rest[nz]]
    # additions beyond the frontier
    for k in range(1, n_bits + 1):
        sel = t1 < k
        q = masks[sel] | (np.int64(1) << (k - 1))
        y[sel] += a_const * w_add[k - t1[sel]] * x[q]
    if w_swap is not None:
        for n in range(1, n_bits + 1):
            sel = nz & (t2 < n) & (t1 != n)
            q = rest[sel] | (np.int64(1) << (n - 1))
            y[sel] += a_const * w_swap[np.abs(t1[sel] - n)] * x[q]
    return y
