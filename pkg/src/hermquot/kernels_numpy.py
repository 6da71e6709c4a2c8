"""Pure-numpy implementations of the hot kernels.

Same signatures as the numba versions in kernels.py; selected by setting
HERMQUOT_DISABLE_NUMBA=1 in the environment.
"""

from __future__ import annotations

import numpy as np


def closure_from_table(table: np.ndarray, gens: np.ndarray) -> np.ndarray:
    """Membership mask of the subgroup generated by `gens` (identity id 0).

    BFS orbit of the identity under right multiplication by the generators.
    """
    n = table.shape[0]
    member = np.zeros(n, dtype=np.bool_)
    member[0] = True
    frontier = np.array([0], dtype=np.int64)
    gens = np.asarray(gens, dtype=np.int64)
    while frontier.size:
        prods = table[np.ix_(frontier, gens)].ravel().astype(np.int64)
        prods = np.unique(prods)
        new = prods[~member[prods]]
        member[new] = True
        frontier = new
    return member


def mult_table_rows(mats, i0, i1, mulq, addq, scalars, sorted_keys, key_to_id):
    """Rows [i0, i1) of the group multiplication table for packed matrices.

    mats: [n, 9] uint16 quadratic codes; canonical representatives.
    scalars: unitary scalars used for canonicalization.
    sorted_keys / key_to_id: int64 canonical packed keys, sorted, and the id
    of each sorted key.  Key packing must match kernels.pack_key.
    """
    n = mats.shape[0]
    nbits = int(np.ceil(np.log2(mulq.shape[0])))
    out = np.zeros((i1 - i0, n), dtype=np.uint16)
    B = mats.astype(np.int64)
    for i in range(i0, i1):
        a = B[i]
        prod = _mat3_batch_mul_single(a, B, mulq, addq)
        keys = _canon_keys(prod, mulq, scalars, nbits)
        pos = np.searchsorted(sorted_keys, keys)
        out[i - i0] = key_to_id[pos]
    return out


def _mat3_batch_mul_single(a, B, mulq, addq):
    """a (9,) times every matrix in B ([m, 9]); all int64 codes."""
    m = B.shape[0]
    out = np.zeros((m, 9), dtype=np.int64)
    for r in range(3):
        for c in range(3):
            acc = np.zeros(m, dtype=np.int64)
            for k in range(3):
                prod = mulq[a[3 * r + k], B[:, 3 * k + c]]
                acc = addq[acc, prod]
            out[:, 3 * r + c] = acc
    return out


def _canon_keys(mats, mulq, scalars, nbits):
    """Packed int64 key of the canonical representative of each matrix."""
    m = mats.shape[0]
    best = None
    for s in scalars:
        scaled = mulq[int(s), mats].astype(np.int64)
        key = np.zeros(m, dtype=np.int64)
        for e in range(9):
            key = (key << nbits) | scaled[:, e]
        best = key if best is None else np.minimum(best, key)
    return best


def count_fixed_points(mats, pts, mulf, addf, invf):
    """Fixed-point counts of each matrix on a normalized point set.

    mats: [n, 9] flat sextic codes; pts: [m, 3] flat codes, each point
    normalized so its last nonzero coordinate is 1.
    """
    n = mats.shape[0]
    m = pts.shape[0]
    K = np.int64(mulf.shape[0])
    pkeys = (pts[:, 0].astype(np.int64) * K + pts[:, 1]) * K + pts[:, 2]
    counts = np.zeros(n, dtype=np.int64)
    P = pts.astype(np.int64)
    for i in range(n):
        a = mats[i].astype(np.int64)
        img = np.zeros((m, 3), dtype=np.int64)
        for r in range(3):
            acc = np.zeros(m, dtype=np.int64)
            for k in range(3):
                acc = addf[acc, mulf[a[3 * r + k], P[:, k]]]
            img[:, r] = acc
        # normalize: divide by last nonzero coordinate
        last = np.where(img[:, 2] != 0, 2, np.where(img[:, 1] != 0, 1, 0))
        pivot = img[np.arange(m), last]
        piv_inv = invf[pivot]
        for r in range(3):
            img[:, r] = mulf[piv_inv, img[:, r]]
        ikeys = (img[:, 0] * K + img[:, 1]) * K + img[:, 2]
        counts[i] = int(np.sum(ikeys == pkeys))
    return counts
