"""Hot kernels: numba-compiled with a pure-numpy fallback.

The env flag HERMQUOT_DISABLE_NUMBA=1 forces the numpy path (same
signatures, defined in kernels_numpy).  benchmarks/bench_kernels.py compares
both implementations on the production workloads.
"""

from __future__ import annotations

import os

import numpy as np

from . import kernels_numpy

_DISABLED = os.environ.get("HERMQUOT_DISABLE_NUMBA", "0").lower() in ("1", "true", "yes")

numba = None
if not _DISABLED:
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        numba = None

NUMBA_ACTIVE = numba is not None


def pack_key(mat, nbits):
    """int64 key of a 9-entry code tuple; nbits bits per entry."""
    key = 0
    for e in mat:
        key = (key << nbits) | int(e)
    return key


if NUMBA_ACTIVE:
    from numba import njit

    @njit(cache=True)
    def _closure_from_table_nb(table, gens):
        n = table.shape[0]
        member = np.zeros(n, dtype=np.bool_)
        member[0] = True
        stack = np.empty(n, dtype=np.int64)
        stack[0] = 0
        top = 1
        while top > 0:
            top -= 1
            x = stack[top]
            for k in range(gens.shape[0]):
                y = table[x, gens[k]]
                if not member[y]:
                    member[y] = True
                    stack[top] = y
                    top += 1
        return member

    @njit(cache=True)
    def _mult_table_rows_nb(mats, i0, i1, mulq, addq, scalars, sorted_keys, key_to_id, nbits):
        n = mats.shape[0]
        out = np.zeros((i1 - i0, n), dtype=np.uint16)
        prod = np.zeros(9, dtype=np.int64)
        scaled = np.zeros(9, dtype=np.int64)
        for i in range(i0, i1):
            for j in range(n):
                for r in range(3):
                    for c in range(3):
                        acc = 0
                        for k in range(3):
                            acc = addq[acc, mulq[mats[i, 3 * r + k], mats[j, 3 * k + c]]]
                        prod[3 * r + c] = acc
                best = np.int64(0x7FFFFFFFFFFFFFFF)
                for si in range(scalars.shape[0]):
                    s = scalars[si]
                    key = np.int64(0)
                    for e in range(9):
                        scaled[e] = mulq[s, prod[e]]
                        key = (key << nbits) | scaled[e]
                    if key < best:
                        best = key
                lo = np.searchsorted(sorted_keys, best)
                out[i - i0, j] = key_to_id[lo]
        return out

    @njit(cache=True)
    def _count_fixed_points_nb(mats, pts, mulf, addf, invf):
        n = mats.shape[0]
        m = pts.shape[0]
        K = np.int64(mulf.shape[0])
        counts = np.zeros(n, dtype=np.int64)
        img = np.zeros(3, dtype=np.int64)
        for i in range(n):
            cnt = 0
            for j in range(m):
                for r in range(3):
                    acc = 0
                    for k in range(3):
                        acc = addf[acc, mulf[mats[i, 3 * r + k], pts[j, k]]]
                    img[r] = acc
                piv = img[2]
                if piv == 0:
                    piv = img[1]
                    if piv == 0:
                        piv = img[0]
                pinv = invf[piv]
                x0 = mulf[pinv, img[0]]
                x1 = mulf[pinv, img[1]]
                x2 = mulf[pinv, img[2]]
                if x0 == pts[j, 0] and x1 == pts[j, 1] and x2 == pts[j, 2]:
                    cnt += 1
            counts[i] = cnt
        return counts

    def closure_from_table(table, gens):
        return _closure_from_table_nb(table, np.asarray(gens, dtype=np.int64))

    def mult_table_rows(mats, i0, i1, mulq, addq, scalars, sorted_keys, key_to_id):
        nbits = int(np.ceil(np.log2(mulq.shape[0])))
        return _mult_table_rows_nb(
            mats.astype(np.int64),
            i0,
            i1,
            mulq.astype(np.int64),
            addq.astype(np.int64),
            np.asarray(scalars, dtype=np.int64),
            sorted_keys,
            key_to_id,
            nbits,
        )

    def count_fixed_points(mats, pts, mulf, addf, invf):
        return _count_fixed_points_nb(
            mats.astype(np.int64),
            pts.astype(np.int64),
            mulf.astype(np.int64),
            addf.astype(np.int64),
            invf.astype(np.int64),
        )

else:
    closure_from_table = kernels_numpy.closure_from_table
    mult_table_rows = kernels_numpy.mult_table_rows
    count_fixed_points = kernels_numpy.count_fixed_points
