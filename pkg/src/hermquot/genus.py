"""Quotient-curve genus from ramification, closed-form genus theorems, and
the orbit-counting rational-point oracle at tiny scale.

The different degree of H_q -> H_q/G is the sum of the per-element
contributions determined by type classification; Riemann-Hurwitz then gives
2 g(H_q) - 2 - Delta = |G| (2 g' - 2), whose integrality is a structural
check on the input actually being a group of curve automorphisms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .classify import classify
from .errors import (
    EnumerationTooLarge,
    NonIntegralGenus,
    NotAdditiveSubgroup,
    NotAGroup,
    RangeError,
)
from .fields import FlatField, field_make
from .pgu import NORM_TRACE, PGUElement, get_model, identity

TYPE_ORDER = ("A", "B1", "B2", "B3", "C", "D", "E")


def hermitian_genus(q: int) -> int:
    return q * (q - 1) // 2


def suzuki_genus(q: int) -> int:
    """g(S_q) = q0 (q - 1) for q = 2 q0^2."""
    q0sq, rem = divmod(q, 2)
    q0 = int(round(q0sq**0.5))
    if rem or q0 * q0 != q0sq:
        raise RangeError(f"{q} is not of Suzuki form 2*q0^2")
    return q0 * (q - 1)


def ree_genus(q: int) -> int:
    """g(R_q) = 3 q0 (q - 1)(q + q0 + 1)/2 for q = 3 q0^2."""
    q0sq, rem = divmod(q, 3)
    q0 = int(round(q0sq**0.5))
    if rem or q0 * q0 != q0sq:
        raise RangeError(f"{q} is not of Ree form 3*q0^2")
    return 3 * q0 * (q - 1) * (q + q0 + 1) // 2


def maximal_point_count(field_size: int, genus: int) -> int:
    """Hasse-Weil count of a maximal curve: m + 1 + 2g*sqrt(m)."""
    s = int(round(field_size**0.5))
    assert s * s == field_size
    return field_size + 1 + 2 * genus * s


@dataclass
class GenusReport:
    q: int
    group_order: int
    census: dict
    delta: int
    genus: int
    integrality_ok: bool
    maximal_points: int

    def to_json(self):
        d = {
            "q": self.q,
            "group_order": self.group_order,
            "census": {k: v for k, v in sorted(self.census.items())},
            "delta": self.delta,
            "genus": self.genus,
            "integrality_ok": self.integrality_ok,
            "maximal_points": self.maximal_points,
            "moduli": field_make(*_pn(self.q)).describe(),
        }
        return d

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True, indent=2)


def _pn(q):
    from .fields import factorize

    [(p, n)] = factorize(q).items()
    return p, n


def census_of(elements) -> dict:
    """type -> count over the nontrivial elements."""
    census = {}
    for el in elements:
        if el.order == 1:
            continue
        cls = classify(el)
        census[cls.type_tag] = census.get(cls.type_tag, 0) + 1
    return census


def delta_of_census(census: dict, q: int) -> int:
    from .classify import i_value

    return sum(n * i_value(tag, q) for tag, n in census.items())


def genus_from_delta(q: int, group_order: int, delta: int) -> int:
    two_g_minus_2 = 2 * hermitian_genus(q) - 2
    num = two_g_minus_2 - delta
    rem = num % group_order
    if rem:
        raise NonIntegralGenus(f"(2g-2-Delta) = {num} not divisible by |G| = {group_order}")
    val = num // group_order + 2
    if val % 2:
        raise NonIntegralGenus(f"2g' - 2 = {val - 2} is odd")
    g = val // 2
    if g < 0:
        raise NonIntegralGenus(f"negative genus {g}")
    return g


def verify_closed(elements) -> None:
    """Exact closure check, quadratic in |G|; use for small groups."""
    from .pgu import pgu_mul

    elset = set(elements)
    if identity(elements[0].model) not in elset:
        raise NotAGroup("identity missing")
    for a in elements:
        for b in elements:
            if pgu_mul(a, b) not in elset:
                raise NotAGroup("not closed under multiplication")


def genus_quotient(elements, *, closed_by_construction=False, check_cap=600) -> GenusReport:
    """Classify every nontrivial element, sum i-values, solve for the genus.

    `elements` is the full element list of G <= PGU(3, q).  Closure is
    re-verified exactly when |G| <= check_cap unless the caller vouches for
    it (groups produced by closure_elements are closed by construction).
    """
    if not elements:
        raise NotAGroup("empty input")
    q = elements[0].model.tower.q
    if not closed_by_construction:
        if len(elements) > check_cap:
            raise NotAGroup(f"cannot verify closure of {len(elements)} elements; pass closed_by_construction")
        verify_closed(elements)
    census = census_of(elements)
    n = len(elements)
    if sum(census.values()) != n - 1:
        raise NotAGroup("census does not cover |G| - 1 nontrivial elements")
    delta = delta_of_census(census, q)
    g = genus_from_delta(q, n, delta)
    return GenusReport(
        q=q,
        group_order=n,
        census=census,
        delta=delta,
        genus=g,
        integrality_ok=True,
        maximal_points=maximal_point_count(q * q, g),
    )


# ---------------------------------------------------------------------------
# closed-form genus theorems for groups fixing a rational curve point
# ---------------------------------------------------------------------------

def gsx_genus_p2(n: int, v: int, w: int) -> int:
    """g = 2^{n-v-1} (2^{n-w} - 1) for a 2-subgroup at q = 2^n."""
    if not (0 <= v <= n - 1 and 0 <= w <= n - 1):
        raise RangeError("need 0 <= v, w <= n-1")
    return 2 ** (n - v - 1) * (2 ** (n - w) - 1)


def gsx_genus_fixed(q: int, m: int, u: int, v: int, w: int):
    """(q - p^w)(q - (gcd(m, q+1) - 1) p^v) / (2 m p^u), or None if non-integral.

    Non-integrality is a verdict used to close non-existence cases, not an
    error.
    """
    import math

    p, _ = _pn(q)
    if v + w != u:
        raise RangeError("need v + w = u")
    num = (q - p**w) * (q - (math.gcd(m, q + 1) - 1) * p**v)
    den = 2 * m * p**u
    if num % den:
        return None
    return num // den


def gsx_sweep_fixed(q: int, m: int, u: int):
    """All (v, w, genus-or-None) with v + w = u."""
    return [(v, u - v, gsx_genus_fixed(q, m, u, v, u - v)) for v in range(u + 1)]


def gsx_condition_check(q: int, V, W) -> bool:
    """Is the norm image { b^{q+1} : b in V } contained in W?

    V must be an additive subgroup of F_{q^2} and W one of F_q (verified).
    """
    p, n = _pn(q)
    t = field_make(p, n)
    V = set(V)
    W = set(W)
    for name, S, membership in (("V", V, None), ("W", W, t.in_subfield_q)):
        if 0 not in S:
            raise NotAdditiveSubgroup(f"{name} misses 0")
        for a in S:
            if membership and not membership(a):
                raise NotAdditiveSubgroup(f"{name} not inside F_q")
            for b in S:
                if t.add(a, b) not in S:
                    raise NotAdditiveSubgroup(f"{name} not additively closed")
    return all(t.norm(b) in W for b in V)


# ---------------------------------------------------------------------------
# quotient rational-point oracle
# ---------------------------------------------------------------------------

def quotient_point_count(elements, extension_degree_cap: int = None) -> int:
    """F_{q^2}-rational points of H_q/G by Frobenius-stable orbit counting.

    Enumerates the curve points over F_{q^{2m}} with m = cap (defaults to
    |G|, which suffices: a stable orbit has size at most |G|, so its points
    have degree at most |G| over F_{q^2}).  Norm-trace model only; q <= 4 and
    |G| <= 8 keep the big field at or below 2^16 elements.
    """
    q = elements[0].model.tower.q
    G = list(elements)
    if elements[0].model.tag != NORM_TRACE:
        raise NotAGroup("oracle expects norm-trace model elements")
    if q > 4 or len(G) > 8:
        raise EnumerationTooLarge("oracle limited to q <= 4 and |G| <= 8")
    m = extension_degree_cap or len(G)
    p, n = _pn(q)
    K = FlatField(p, 2 * n * m)
    t = elements[0].model.tower
    emb = K.embedding_from(t)

    pts = _norm_trace_points_flat(q, K)
    # pack points to keys
    size = K.size
    keys = (pts[:, 0] * size + pts[:, 1]) * size + pts[:, 2]
    key_index = {int(k): i for i, k in enumerate(keys)}

    mats = np.array([[emb[c] for c in el.m] for el in G], dtype=np.int64)
    perms = []
    for gm in mats:
        img = _apply_flat(K, gm, pts)
        ik = (img[:, 0] * size + img[:, 1]) * size + img[:, 2]
        perms.append(np.array([key_index[int(k)] for k in ik], dtype=np.int64))
    # Frobenius x -> x^{q^2}
    frob_pts = np.stack([K.pow_vec(pts[:, j], q * q) for j in range(3)], axis=1)
    frob_pts = _normalize_flat(K, frob_pts)
    fk = (frob_pts[:, 0] * size + frob_pts[:, 1]) * size + frob_pts[:, 2]
    frob = np.array([key_index[int(k)] for k in fk], dtype=np.int64)

    # orbit representative = min index over the G-orbit
    npts = len(pts)
    rep = np.arange(npts, dtype=np.int64)
    for perm in perms:
        rep = np.minimum(rep, perm)
    changed = True
    while changed:
        changed = False
        for perm in perms:
            nr = np.minimum(rep, rep[perm])
            if not np.array_equal(nr, rep):
                rep = nr
                changed = True
    # orbit stable under Frobenius <=> rep is Frobenius-invariant on it
    reps = np.unique(rep)
    stable = 0
    for r in reps:
        if rep[frob[r]] == r:
            stable += 1
    return stable


def _norm_trace_points_flat(q, K: FlatField):
    """Points of Y^{q+1} = X^q T + X T^q over the flat field, normalized."""
    size = K.size
    x = np.arange(size, dtype=np.int64)
    rhs = K.add_vec(K.pow_vec(x, q), x)
    # bucket y by y^{q+1}
    y = np.arange(size, dtype=np.int64)
    ypow = K.pow_vec(y, q + 1)
    order = np.argsort(ypow, kind="stable")
    sorted_vals = ypow[order]
    pts = []
    starts = np.searchsorted(sorted_vals, rhs, side="left")
    ends = np.searchsorted(sorted_vals, rhs, side="right")
    for xi in range(size):
        for idx in range(starts[xi], ends[xi]):
            pts.append((xi, int(order[idx]), 1))
    pts.append((1, 0, 0))
    return np.array(pts, dtype=np.int64)


def _apply_flat(K: FlatField, mat, pts):
    out = np.zeros_like(pts)
    for r in range(3):
        acc = np.zeros(len(pts), dtype=np.int64)
        for k in range(3):
            acc = K.add_vec(acc, K.mul_vec(np.full(len(pts), mat[3 * r + k]), pts[:, k]))
        out[:, r] = acc
    return _normalize_flat(K, out)


def _normalize_flat(K: FlatField, pts):
    out = pts.copy()
    last = np.where(out[:, 2] != 0, 2, np.where(out[:, 1] != 0, 1, 0))
    piv = out[np.arange(len(out)), last]
    pinv = K.exp_t[(K.size - 1) - K.log_t[piv]]
    for r in range(3):
        out[:, r] = K.mul_vec(pinv, out[:, r])
    return out
