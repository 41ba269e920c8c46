"""Bit-matrix kernels for relation closure and happened-before saturation.

A binary relation over n operations is stored as a row-bitset matrix: a numpy
array of shape (n, w) with w = ceil(n / 64) words of dtype uint64, where bit j
of row i (word j >> 6, bit j & 63) encodes the pair (i, j).

Two interchangeable backends implement the hot loops: a numba-compiled one
(default when numba imports) and a pure-numpy one. Select explicitly with the
environment variable CAUSALCHECK_BACKEND=numba|numpy, or at runtime with
set_backend(). Both produce bit-identical results; tests assert that.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    HAS_NUMBA = False

_U1 = np.uint64(1)

BACKEND_ENV = "CAUSALCHECK_BACKEND"


def words_for(n: int) -> int:
    """Number of uint64 words needed for one n-bit row."""
    return (n + 63) >> 6


def empty_rows(n: int) -> np.ndarray:
    return np.zeros((n, words_for(n)), dtype=np.uint64)


def pack_bool_matrix(m: np.ndarray) -> np.ndarray:
    """Pack an (n, n) boolean matrix into (n, w) uint64 bitset rows."""
    n = m.shape[0]
    w = words_for(n)
    if n == 0:
        return np.zeros((0, 0), dtype=np.uint64)
    padded = np.zeros((n, w * 64), dtype=np.uint8)
    padded[:, :n] = m.astype(np.uint8)
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view(np.uint64)


def pack_bool_row(vec: np.ndarray) -> np.ndarray:
    """Pack an (n,) boolean vector into a (w,) uint64 bitset row."""
    n = vec.shape[0]
    w = words_for(n)
    if n == 0:
        return np.zeros(0, dtype=np.uint64)
    padded = np.zeros(w * 64, dtype=np.uint8)
    padded[:n] = vec.astype(np.uint8)
    return np.packbits(padded, bitorder="little").view(np.uint64)


def unpack_to_bool(rows: np.ndarray, n: int) -> np.ndarray:
    """Inverse of pack_bool_matrix: (n, w) uint64 rows back to (n, n) bool."""
    if n == 0:
        return np.zeros((0, 0), dtype=bool)
    bits = np.unpackbits(np.ascontiguousarray(rows).view(np.uint8), axis=1, bitorder="little")
    return bits[:, :n].astype(bool)


def get_bit(rows: np.ndarray, i: int, j: int) -> bool:
    return bool((rows[i, j >> 6] >> np.uint64(j & 63)) & _U1)


def set_bit(rows: np.ndarray, i: int, j: int) -> None:
    rows[i, j >> 6] |= _U1 << np.uint64(j & 63)


def has_reflexive(rows: np.ndarray, n: int) -> bool:
    """True iff some pair (i, i) is present."""
    if n == 0:
        return False
    idx = np.arange(n)
    words = rows[idx, idx >> 6]
    bits = (words >> (idx & 63).astype(np.uint64)) & _U1
    return bool(bits.any())


def rows_subset(a: np.ndarray, b: np.ndarray) -> bool:
    """True iff relation a is a subset of relation b (same shape)."""
    return bool(np.all((a & ~b) == 0))


def popcount(rows: np.ndarray) -> int:
    """Total number of pairs in the relation."""
    if rows.size == 0:
        return 0
    as_bytes = np.ascontiguousarray(rows).view(np.uint8)
    return int(np.unpackbits(as_bytes).sum())


# --- transitive closure -----------------------------------------------------


def _closure_numpy(rows: np.ndarray, n: int) -> np.ndarray:
    # Warshall over bit rows: whoever reaches k inherits everything k reaches.
    for k in range(n):
        col = (rows[:, k >> 6] >> np.uint64(k & 63)) & _U1
        hit = np.nonzero(col)[0]
        if hit.size:
            rows[hit] |= rows[k]
    return rows


if HAS_NUMBA:

    @njit(cache=True)
    def _closure_numba(rows, n):  # pragma: no cover - compiled
        w = rows.shape[1]
        one = np.uint64(1)
        for k in range(n):
            wk = k >> 6
            bk = np.uint64(k & 63)
            for i in range(n):
                if (rows[i, wk] >> bk) & one:
                    for j in range(w):
                        rows[i, j] |= rows[k, j]
        return rows


# --- happened-before saturation ---------------------------------------------
#
# Starting from a transitively closed base, repeatedly add the write-to-write
# pairs forced by reads that happen program-order-before the anchor: when a
# read r returns the value of write w2, every other same-variable write w1
# already ordered before r gets ordered before w2. Each round of additions is
# followed by a full re-closure, until nothing changes.


def _hb_saturate_numpy(hb, n, reads, srcs, rvars, wstart, wlist):
    while True:
        added = False
        for t in range(len(reads)):
            w2 = int(srcs[t])
            if w2 < 0:
                continue
            r = int(reads[t])
            v = int(rvars[t])
            cand = wlist[wstart[v] : wstart[v + 1]]
            if cand.size == 0:
                continue
            before_r = (hb[cand, r >> 6] >> np.uint64(r & 63)) & _U1
            sel = cand[(before_r == 1) & (cand != w2)]
            if sel.size:
                w2w = w2 >> 6
                w2b = np.uint64(w2 & 63)
                missing = sel[((hb[sel, w2w] >> w2b) & _U1) == 0]
                if missing.size:
                    hb[missing, w2w] |= _U1 << w2b
                    added = True
        if not added:
            return hb
        _closure_numpy(hb, n)


if HAS_NUMBA:

    @njit(cache=True)
    def _hb_saturate_numba(hb, n, reads, srcs, rvars, wstart, wlist):  # pragma: no cover
        one = np.uint64(1)
        while True:
            added = False
            for t in range(reads.shape[0]):
                w2 = srcs[t]
                if w2 < 0:
                    continue
                r = reads[t]
                v = rvars[t]
                rw = r >> 6
                rb = np.uint64(r & 63)
                w2w = w2 >> 6
                w2b = np.uint64(w2 & 63)
                for p in range(wstart[v], wstart[v + 1]):
                    w1 = wlist[p]
                    if w1 == w2:
                        continue
                    if (hb[w1, rw] >> rb) & one:
                        if not ((hb[w1, w2w] >> w2b) & one):
                            hb[w1, w2w] |= one << w2b
                            added = True
            if not added:
                return hb
            _closure_numba(hb, n)


# --- backend selection --------------------------------------------------------

_VALID = ("numba", "numpy")


def _initial_backend() -> str:
    requested = os.environ.get(BACKEND_ENV, "").strip().lower()
    if requested and requested not in _VALID:
        warnings.warn(
            f"{BACKEND_ENV}={requested!r} is not one of {_VALID}; using the default",
            stacklevel=2,
        )
        requested = ""
    if requested == "numba" and not HAS_NUMBA:
        warnings.warn(f"{BACKEND_ENV}=numba requested but numba is not importable; using numpy", stacklevel=2)
        requested = "numpy"
    if not requested:
        requested = "numba" if HAS_NUMBA else "numpy"
    return requested


_backend = _initial_backend()


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    """Switch kernel backend at runtime (used by tests and the benchmark)."""
    global _backend
    if name not in _VALID:
        raise ValueError(f"unknown backend {name!r}; expected one of {_VALID}")
    if name == "numba" and not HAS_NUMBA:
        raise ValueError("numba backend requested but numba is not importable")
    _backend = name


def closure_inplace(rows: np.ndarray, n: int) -> np.ndarray:
    """Transitively close the relation in place and return it."""
    if n <= 1:
        return rows
    if _backend == "numba":
        return _closure_numba(rows, n)
    return _closure_numpy(rows, n)


def hb_saturate_inplace(hb, n, reads, srcs, rvars, wstart, wlist) -> np.ndarray:
    """Saturate a happened-before matrix in place and return it.

    hb must already be transitively closed. reads/srcs/rvars describe, for each
    read program-order-at-or-before the anchor, its dense index, the dense index
    of the write it returns (-1 for an initial read), and its variable number;
    wstart/wlist give the per-variable write index lists in flattened form.
    """
    if n == 0 or len(reads) == 0:
        return hb
    if _backend == "numba":
        return _hb_saturate_numba(hb, n, reads, srcs, rvars, wstart, wlist)
    return _hb_saturate_numpy(hb, n, reads, srcs, rvars, wstart, wlist)


def warmup() -> None:
    """Force JIT compilation of the hot kernels so timed runs start warm."""
    n = 3
    rows = empty_rows(n)
    set_bit(rows, 0, 1)
    set_bit(rows, 1, 2)
    closure_inplace(rows, n)
    reads = np.array([2], dtype=np.int64)
    srcs = np.array([1], dtype=np.int64)
    rvars = np.array([0], dtype=np.int64)
    wstart = np.array([0, 2], dtype=np.int64)
    wlist = np.array([0, 1], dtype=np.int64)
    hb = empty_rows(n)
    set_bit(hb, 0, 2)
    hb_saturate_inplace(hb, n, reads, srcs, rvars, wstart, wlist)
