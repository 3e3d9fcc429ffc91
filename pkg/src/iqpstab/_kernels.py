"""Hot loops, in two interchangeable flavours.

Every kernel exists twice: an explicit-loop version compiled with numba and
a vectorised pure-numpy version.  ``NUMBA`` and ``NUMPY`` expose the two sets
side by side (the benchmark and the equivalence tests use both); ``active``
is the set the rest of the package calls.  Setting ``IQP_DISABLE_NUMBA=1``
in the environment, or not having numba installed, selects numpy.

Packed layout: a matrix is a C-contiguous ``uint64`` array of shape
``(rows, words)``; column ``j`` is bit ``j % 64`` of word ``j // 64``.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

_DISABLED = os.environ.get("IQP_DISABLE_NUMBA", "").strip() not in ("", "0")
HAVE_NUMBA = numba is not None

_ONE = np.uint64(1)
_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_S56 = np.uint64(56)


# ---------------------------------------------------------------------------
# numpy flavour
# ---------------------------------------------------------------------------


def _np_rref(data: np.ndarray, ncols: int) -> np.ndarray:
    """In-place reduced row echelon form; returns pivot columns."""
    nrows = data.shape[0]
    pivots = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        w, b = c >> 6, np.uint64(c & 63)
        col = (data[r:, w] >> b) & _ONE
        hits = np.flatnonzero(col)
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            data[[r, p]] = data[[p, r]]
        mask = ((data[:, w] >> b) & _ONE).astype(bool)
        mask[r] = False
        if mask.any():
            data[mask] ^= data[r]
        pivots.append(c)
        r += 1
    return np.asarray(pivots, dtype=np.int64)


def _np_matmul(a: np.ndarray, acols: int, b: np.ndarray) -> np.ndarray:
    """Product of packed ``a`` (rows x acols) and packed ``b`` (acols rows)."""
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.uint64)
    for j in range(acols):
        sel = ((a[:, j >> 6] >> np.uint64(j & 63)) & _ONE).astype(bool)
        if sel.any():
            out[sel] ^= b[j]
    return out


def _np_matvec(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Parities of row-wise AND with ``v``; one uint8 per row."""
    if a.shape[1] == 0:
        return np.zeros(a.shape[0], dtype=np.uint8)
    counts = np.bitwise_count(a & v).sum(axis=1, dtype=np.int64)
    return (counts & 1).astype(np.uint8)


def _np_gram_selected(a: np.ndarray, sel: np.ndarray, ncols: int) -> np.ndarray:
    """Sum of p p^T over the rows p of ``a`` with ``sel`` set."""
    rows = a[sel.astype(bool)]
    out = np.zeros((ncols, a.shape[1]), dtype=np.uint64)
    for j in range(ncols):
        pick = ((rows[:, j >> 6] >> np.uint64(j & 63)) & _ONE).astype(bool)
        if pick.any():
            out[j] = np.bitwise_xor.reduce(rows[pick], axis=0)
    return out


def _np_apply_x_rotations(state: np.ndarray, masks: np.ndarray, c: float, s: float) -> None:
    """Apply exp(i theta X_p) for every mask p, in place."""
    idx = np.arange(state.shape[0], dtype=np.int64)
    for p in masks:
        state[:] = c * state + 1j * s * state[idx ^ p]


def _np_check_candidate(h_data: np.ndarray, sel: np.ndarray, ncols: int, g_max: int) -> bool:
    """Gram rank of the selected rows is <= g_max and their radical is doubly even."""
    if not sel.any():
        return False
    g = _np_gram_selected(h_data, sel, ncols)
    work = g.copy()
    piv = _np_rref(work, ncols)
    if piv.size > g_max:
        return False
    kern = _np_kernel_rows(work, piv, ncols, h_data.shape[1])
    rows = h_data[sel.astype(bool)]
    for k in kern:
        w = int(np.sum((np.bitwise_count(rows & k).sum(axis=1) & 1)))
        if w & 3:
            return False
    return True


def _np_kernel_rows(rref: np.ndarray, pivots: np.ndarray, ncols: int, nwords: int) -> np.ndarray:
    """Kernel basis (one packed vector per row) from an RREF and its pivots."""
    is_piv = np.zeros(ncols, dtype=bool)
    is_piv[pivots] = True
    free = np.flatnonzero(~is_piv)
    out = np.zeros((free.size, nwords), dtype=np.uint64)
    for t, f in enumerate(free):
        out[t, f >> 6] |= _ONE << np.uint64(f & 63)
        bits = (rref[: pivots.size, f >> 6] >> np.uint64(f & 63)) & _ONE
        for i in np.flatnonzero(bits):
            pc = int(pivots[i])
            out[t, pc >> 6] |= _ONE << np.uint64(pc & 63)
    return out


def _np_gray_search(h_data, k_rows, hk, ncols, g_max, budget, cap):
    """Walk span(k_rows) minus zero in Gray-code order, checking each vector.

    ``hk[j]`` holds H k_j as a uint8 row vector.  Step i visits the vector
    with coefficients i ^ (i >> 1).  Stops after ``cap`` hits or ``budget``
    checks; returns ``(checks_used, hit_steps)``.
    """
    nk = k_rows.shape[0]
    h = np.zeros(h_data.shape[0], dtype=np.uint8)
    total = (1 << nk) - 1 if nk < 62 else (1 << 62)
    limit = min(total, budget)
    hits = []
    for i in range(1, limit + 1):
        j = (i & -i).bit_length() - 1
        h ^= hk[j]
        if _np_check_candidate(h_data, h, ncols, g_max):
            hits.append(i)
            if len(hits) >= cap:
                return i, np.array(hits, dtype=np.int64)
    return limit, np.array(hits, dtype=np.int64)


NUMPY = SimpleNamespace(
    name="numpy",
    rref=_np_rref,
    matmul=_np_matmul,
    matvec=_np_matvec,
    gram_selected=_np_gram_selected,
    apply_x_rotations=_np_apply_x_rotations,
    check_candidate=_np_check_candidate,
    kernel_rows=_np_kernel_rows,
    gray_search=_np_gray_search,
)


# ---------------------------------------------------------------------------
# numba flavour
# ---------------------------------------------------------------------------


if HAVE_NUMBA:
    njit = numba.njit

    @njit(cache=True, inline="always")
    def popcount(x):
        x = x - ((x >> _ONE) & _M1)
        x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
        x = (x + (x >> np.uint64(4))) & _M4
        return (x * _H01) >> _S56

    @njit(cache=True)
    def rref(data, ncols):
        nrows, nw = data.shape
        pivots = np.empty(min(nrows, ncols), dtype=np.int64)
        r = 0
        for c in range(ncols):
            if r == nrows:
                break
            w = c >> 6
            bit = _ONE << np.uint64(c & 63)
            p = -1
            for i in range(r, nrows):
                if data[i, w] & bit:
                    p = i
                    break
            if p < 0:
                continue
            if p != r:
                for k in range(nw):
                    tmp = data[r, k]
                    data[r, k] = data[p, k]
                    data[p, k] = tmp
            for i in range(nrows):
                if i != r and (data[i, w] & bit):
                    for k in range(w, nw):
                        data[i, k] ^= data[r, k]
            pivots[r] = c
            r += 1
        return pivots[:r].copy()

    @njit(cache=True)
    def matmul(a, acols, b):
        out = np.zeros((a.shape[0], b.shape[1]), dtype=np.uint64)
        nwb = b.shape[1]
        for i in range(a.shape[0]):
            for j in range(acols):
                if (a[i, j >> 6] >> np.uint64(j & 63)) & _ONE:
                    for k in range(nwb):
                        out[i, k] ^= b[j, k]
        return out

    @njit(cache=True)
    def matvec(a, v):
        out = np.zeros(a.shape[0], dtype=np.uint8)
        for i in range(a.shape[0]):
            acc = np.uint64(0)
            for k in range(a.shape[1]):
                acc ^= a[i, k] & v[k]
            out[i] = np.uint8(popcount(acc) & _ONE)
        return out

    @njit(cache=True)
    def gram_selected(a, sel, ncols):
        nw = a.shape[1]
        out = np.zeros((ncols, nw), dtype=np.uint64)
        for i in range(a.shape[0]):
            if sel[i] == 0:
                continue
            for j in range(ncols):
                if (a[i, j >> 6] >> np.uint64(j & 63)) & _ONE:
                    for k in range(nw):
                        out[j, k] ^= a[i, k]
        return out

    @njit(cache=True)
    def apply_x_rotations(state, masks, c, s):
        dim = state.shape[0]
        for p in masks:
            if p == 0:
                ph = c + 1j * s
                for x in range(dim):
                    state[x] *= ph
                continue
            for x in range(dim):
                y = x ^ p
                if x < y:
                    a = state[x]
                    b = state[y]
                    state[x] = c * a + 1j * s * b
                    state[y] = c * b + 1j * s * a

    @njit(cache=True)
    def kernel_rows(rref_data, pivots, ncols, nwords):
        is_piv = np.zeros(ncols, dtype=np.bool_)
        for i in range(pivots.shape[0]):
            is_piv[pivots[i]] = True
        nfree = ncols - pivots.shape[0]
        out = np.zeros((nfree, nwords), dtype=np.uint64)
        t = 0
        for f in range(ncols):
            if is_piv[f]:
                continue
            out[t, f >> 6] |= _ONE << np.uint64(f & 63)
            for i in range(pivots.shape[0]):
                if (rref_data[i, f >> 6] >> np.uint64(f & 63)) & _ONE:
                    pc = pivots[i]
                    out[t, pc >> 6] |= _ONE << np.uint64(pc & 63)
            t += 1
        return out

    @njit(cache=True)
    def check_candidate(h_data, sel, ncols, g_max):
        any_sel = False
        for i in range(sel.shape[0]):
            if sel[i]:
                any_sel = True
                break
        if not any_sel:
            return False
        g = gram_selected(h_data, sel, ncols)
        piv = rref(g, ncols)
        if piv.shape[0] > g_max:
            return False
        kern = kernel_rows(g, piv, ncols, h_data.shape[1])
        for t in range(kern.shape[0]):
            w = 0
            for i in range(h_data.shape[0]):
                if sel[i] == 0:
                    continue
                acc = np.uint64(0)
                for k in range(h_data.shape[1]):
                    acc ^= h_data[i, k] & kern[t, k]
                w += popcount(acc) & _ONE
            if w & 3:
                return False
        return True

    @njit(cache=True)
    def gray_search(h_data, k_rows, hk, ncols, g_max, budget, cap):
        nk = k_rows.shape[0]
        m = h_data.shape[0]
        h = np.zeros(m, dtype=np.uint8)
        if nk < 62:
            total = (np.int64(1) << nk) - 1
        else:
            total = np.int64(1) << 62
        limit = min(total, budget)
        hits = np.zeros(max(cap, 1), dtype=np.int64)
        nh = 0
        for i in range(1, limit + 1):
            j = 0
            while not (i >> j) & 1:
                j += 1
            for r in range(m):
                h[r] ^= hk[j, r]
            if check_candidate(h_data, h, ncols, g_max):
                hits[nh] = i
                nh += 1
                if nh >= cap:
                    return i, hits[:nh].copy()
        return limit, hits[:nh].copy()

    NUMBA = SimpleNamespace(
        name="numba",
        rref=rref,
        matmul=matmul,
        matvec=matvec,
        gram_selected=gram_selected,
        apply_x_rotations=apply_x_rotations,
        check_candidate=check_candidate,
        kernel_rows=kernel_rows,
        gray_search=gray_search,
    )


else:  # pragma: no cover
    NUMBA = None

active = NUMPY if (_DISABLED or NUMBA is None) else NUMBA


def backend_name() -> str:
    return active.name
