"""Generic finite-group engine and the PGU-specific search machinery.

FiniteGroupTable keeps an explicit element list with integer ids (identity
is id 0) and a full multiplication table, which makes subgroup closure a
table-BFS (numba kernel) and keeps the subgroup-lattice walk fast.  Carriers
are either PGU matrices or permutations; PGammaL(2,8) — isomorphic to
Ree(3) — is built on the 9 points of PG(1,8) with semilinear action.

The subgroup lattice is produced by a join BFS: starting from the cyclic
subgroups of prime-power order, every known class representative is joined
with every such cyclic subgroup.  Any subgroup is generated by its
prime-power cyclic subgroups, and each prefix of a generating chain is
itself found earlier up to conjugacy, so the walk is complete at class
level.  Conjugacy dedup keeps the full orbit of every class in a hash map.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (
    CapExceeded,
    LatticeTooLarge,
    NotNormal,
    NotUnitary,
    SearchSetNotClosed,
)
from .pgu import PGUElement, element, identity, pgu_inv, pgu_mul


class FiniteGroupTable:
    def __init__(self, table: np.ndarray, labels=None):
        self.table = table
        self.n = table.shape[0]
        self.labels = labels
        inv = np.zeros(self.n, dtype=np.int64)
        rows, cols = np.nonzero(table == 0)
        inv[rows] = cols
        self.inv = inv
        self.orders = self._element_orders()

    # -- construction ---------------------------------------------------------

    @classmethod
    def from_pgu_elements(cls, elements):
        """Table group over canonicalized PGU elements (identity first)."""
        ident = identity(elements[0].model)
        rest = sorted((el for el in elements if el != ident), key=lambda e: e.m)
        els = [ident] + rest
        model = ident.model
        t = model.tower
        n = len(els)
        mats = np.array([el.m for el in els], dtype=np.uint16)
        nbits = int(np.ceil(np.log2(t.Q)))
        scalars = np.array(model.unitary_scalars, dtype=np.int64)
        if nbits * 9 <= 63:
            keys = np.array([kernels.pack_key(m, nbits) for m in mats], dtype=np.int64)
            order = np.argsort(keys)
            sorted_keys = keys[order]
            key_to_id = order.astype(np.int64)
            table = np.zeros((n, n), dtype=np.uint16)
            step = max(1, (1 << 22) // max(n, 1))
            for lo in range(0, n, step):
                hi = min(n, lo + step)
                table[lo:hi] = kernels.mult_table_rows(
                    mats, lo, hi, t.mul_t, t.add_t, scalars, sorted_keys, key_to_id
                )
        else:
            table = _table_rows_numpy(mats, t, scalars)
        return cls(table, labels=els)

    @classmethod
    def from_perms(cls, perms):
        """Table group over permutation tuples (identity first)."""
        deg = len(perms[0])
        ident = tuple(range(deg))
        rest = sorted(set(p for p in perms if p != ident))
        els = [ident] + rest
        P = np.array(els, dtype=np.int64)
        n, d = P.shape
        weights = (n + 1) ** np.arange(d, dtype=np.int64) if (n + 1) ** d < 2**62 else None
        key_of = {p: i for i, p in enumerate(els)}
        table = np.zeros((n, n), dtype=np.uint16)
        for i in range(n):
            comp = P[i][P]  # (p_i o p_j)(x) = p_i[p_j[x]]
            for j in range(n):
                table[i, j] = key_of[tuple(comp[j])]
        return cls(table, labels=els)

    # -- basic structure --------------------------------------------------------

    def _element_orders(self):
        orders = np.zeros(self.n, dtype=np.int64)
        orders[0] = 1
        for x in range(1, self.n):
            k, acc = 1, x
            while acc != 0:
                acc = int(self.table[acc, x])
                k += 1
            orders[x] = k
        return orders

    def mul(self, a, b):
        return int(self.table[a, b])

    def conj(self, g, x):
        return int(self.table[self.table[g, x], self.inv[g]])

    def generators(self):
        """A small generating set, greedily built."""
        gens = []
        member = np.zeros(self.n, dtype=bool)
        member[0] = True
        for x in np.argsort(-self.orders):
            if member[x]:
                continue
            gens.append(int(x))
            member = kernels.closure_from_table(self.table, np.array(gens, dtype=np.int64))
            if member.all():
                break
        return gens

    def subgroup_closure(self, gen_ids):
        member = kernels.closure_from_table(self.table, np.asarray(gen_ids, dtype=np.int64))
        return np.flatnonzero(member).astype(np.int64)

    def conjugate_subgroup(self, g, ids):
        out = self.table[self.table[g, ids], self.inv[g]]
        return np.sort(out.astype(np.int64))

    def is_subgroup(self, ids):
        idset = set(int(i) for i in ids)
        return all(int(self.table[a, b]) in idset for a in idset for b in idset)

    def normalizer(self, ids):
        ids = np.sort(np.asarray(ids, dtype=np.int64))
        out = []
        for g in range(self.n):
            if np.array_equal(self.conjugate_subgroup(g, ids), ids):
                out.append(g)
        return np.array(out, dtype=np.int64)

    def centralizer(self, ids):
        out = []
        for g in range(self.n):
            if all(self.mul(g, x) == self.mul(x, g) for x in ids):
                out.append(g)
        return np.array(out, dtype=np.int64)

    def is_normal(self, ids):
        ids = np.sort(np.asarray(ids, dtype=np.int64))
        return all(
            np.array_equal(self.conjugate_subgroup(g, ids), ids) for g in self.generators()
        )

    def quotient_group(self, n_ids):
        """Coset group by a normal subgroup; returns (table group, coset map)."""
        n_ids = np.sort(np.asarray(n_ids, dtype=np.int64))
        if not self.is_normal(n_ids):
            raise NotNormal("quotient by a non-normal subgroup")
        rep = np.full(self.n, -1, dtype=np.int64)
        for x in range(self.n):
            if rep[x] < 0:
                coset = self.table[x, n_ids]
                r = int(coset.min())
                rep[coset] = r
        reps = np.unique(rep)
        index = {int(r): i for i, r in enumerate(reps)}
        m = len(reps)
        qt = np.zeros((m, m), dtype=np.uint16)
        for i, a in enumerate(reps):
            qt[i] = [index[int(rep[self.table[a, b]])] for b in reps]
        labels = None
        if self.labels is not None:
            labels = [self.labels[int(r)] for r in reps]
        return FiniteGroupTable(qt, labels=labels), rep

    def subgroup_is_abelian(self, ids):
        return all(self.mul(a, b) == self.mul(b, a) for a in ids for b in ids)

    def subgroup_is_cyclic(self, ids):
        target = len(ids)
        return any(self.orders[x] == target for x in ids)

    def subgroup_exponent(self, ids):
        e = 1
        for x in ids:
            e = e * int(self.orders[x]) // math.gcd(e, int(self.orders[x]))
        return e

    def order_multiset(self, ids):
        vals = {}
        for x in ids:
            o = int(self.orders[x])
            vals[o] = vals.get(o, 0) + 1
        return vals

    # -- lattice ---------------------------------------------------------------

    def cyclic_subgroups(self, prime_power_only=True):
        """Distinct cyclic subgroups as sorted id arrays (with a generator)."""
        seen = {}
        for x in range(1, self.n):
            o = int(self.orders[x])
            if prime_power_only and not _is_prime_power(o):
                continue
            ids = [0]
            acc = x
            while acc != 0:
                ids.append(acc)
                acc = int(self.table[acc, x])
            arr = np.sort(np.array(ids, dtype=np.int64))
            key = arr.tobytes()
            if key not in seen:
                seen[key] = (arr, x)
        return list(seen.values())

    def all_subgroups(self, order_filter=None, lattice_cap=10_000, filtered_cap=100_000):
        """Subgroup classes up to conjugacy via the join BFS.

        Returns a list of SubgroupClass.  With order_filter=d only subgroups
        of order dividing d are traversed and only those of order exactly d
        are returned.
        """
        if order_filter is None and self.n > lattice_cap:
            raise LatticeTooLarge(f"full lattice capped at {lattice_cap} elements")
        if order_filter is not None and self.n > filtered_cap:
            raise LatticeTooLarge(f"filtered lattice capped at {filtered_cap} elements")

        gens = self.generators()
        cyclics = self.cyclic_subgroups()
        if order_filter is not None:
            cyclics = [(arr, g) for arr, g in cyclics if order_filter % len(arr) == 0]

        classes: list[SubgroupClass] = []
        key_to_class: dict[bytes, int] = {}

        def register(arr, gen_ids):
            key = arr.tobytes()
            if key in key_to_class:
                return None
            cid = len(classes)
            orbit = self._subgroup_orbit(arr, gens)
            for k in orbit:
                key_to_class[k] = cid
            cls = SubgroupClass(
                class_id=cid,
                rep_ids=arr,
                order=len(arr),
                n_conjugates=len(orbit),
                generator_ids=tuple(gen_ids),
            )
            classes.append(cls)
            return cls

        trivial = register(np.array([0], dtype=np.int64), ())
        frontier = [trivial] if trivial else []
        for arr, g in cyclics:
            c = register(arr, (g,))
            if c is not None:
                frontier.append(c)

        while frontier:
            new = []
            for cls in frontier:
                member = np.zeros(self.n, dtype=bool)
                member[cls.rep_ids] = True
                for arr, g in cyclics:
                    if member[g]:
                        continue
                    gen_ids = list(cls.generator_ids) + [g]
                    join = self.subgroup_closure(gen_ids)
                    if order_filter is not None and order_filter % len(join) != 0:
                        continue
                    c = register(join, gen_ids)
                    if c is not None:
                        new.append(c)
            frontier = new
        if order_filter is not None:
            return [c for c in classes if c.order == order_filter]
        return classes

    def _subgroup_orbit(self, arr, gens):
        """All conjugates of a subgroup (as key bytes), BFS over generators."""
        start = arr.tobytes()
        seen = {start: arr}
        stack = [arr]
        while stack:
            cur = stack.pop()
            for g in gens:
                img = self.conjugate_subgroup(g, cur)
                key = img.tobytes()
                if key not in seen:
                    seen[key] = img
                    stack.append(img)
        return list(seen.keys())


def _table_rows_numpy(mats, t, scalars):
    """Mult table without packed int64 keys (large Q); row-batched numpy."""
    n = mats.shape[0]
    mulq = t.mul_t.astype(np.int64)
    addq = t.add_t.astype(np.int64)
    B = mats.astype(np.int64)
    canon = np.empty((n, 9), dtype=np.uint16)
    # canonical forms are the elements themselves; build key dict
    key_of = {mats[i].tobytes(): i for i in range(n)}
    table = np.zeros((n, n), dtype=np.uint16)
    for i in range(n):
        a = B[i]
        prod = np.zeros((n, 9), dtype=np.int64)
        for r in range(3):
            for c in range(3):
                acc = np.zeros(n, dtype=np.int64)
                for k in range(3):
                    acc = addq[acc, mulq[a[3 * r + k], B[:, 3 * k + c]]]
                prod[:, 3 * r + c] = acc
        best = None
        for s in scalars:
            cand = mulq[s, prod]
            if best is None:
                best = cand
            else:
                swap = _lex_less(cand, best)
                best[swap] = cand[swap]
        row = np.empty(n, dtype=np.uint16)
        bb = best.astype(np.uint16)
        for j in range(n):
            row[j] = key_of[bb[j].tobytes()]
        table[i] = row
    return table


def _lex_less(a, b):
    """Rows of a lexicographically smaller than rows of b."""
    less = np.zeros(a.shape[0], dtype=bool)
    decided = np.zeros(a.shape[0], dtype=bool)
    for c in range(a.shape[1]):
        lt = (~decided) & (a[:, c] < b[:, c])
        gt = (~decided) & (a[:, c] > b[:, c])
        less |= lt
        decided |= lt | gt
    return less


@dataclass
class SubgroupClass:
    class_id: int
    rep_ids: np.ndarray
    order: int
    n_conjugates: int
    generator_ids: tuple = field(default_factory=tuple)


def _is_prime_power(n):
    if n < 2:
        return False
    from .fields import factorize

    return len(factorize(n)) == 1


# ---------------------------------------------------------------------------
# matrix-level closure / normalizers inside a supplied search set
# ---------------------------------------------------------------------------

def closure(gens, cap: int = 2_000_000):
    """Spec-surface wrapper: the generated group as element list."""
    from .pgu import closure_elements

    return closure_elements(gens, cap=cap)


def normalizer_in_search_set(search_elements, subgroup_elements):
    """N_S(H) by direct scan over an explicitly enumerated search set S.

    S must be closed under multiplication (caller guarantees; spot-checked
    on a few random products).
    """
    sset = set(search_elements)
    import random

    rng = random.Random(11)
    sample = list(sset)
    for _ in range(min(25, len(sample))):
        a, b = rng.choice(sample), rng.choice(sample)
        if pgu_mul(a, b) not in sset:
            raise SearchSetNotClosed("search set is not multiplicatively closed")
    hset = frozenset(el.m for el in subgroup_elements)
    out = []
    for g in search_elements:
        gi = pgu_inv(g)
        img = frozenset(pgu_mul(pgu_mul(g, h), gi).m for h in subgroup_elements)
        if img == hset:
            out.append(g)
    return out


def normalizer_via_orbit(search_gens, search_order, subgroup_elements, orbit_cap=200_000):
    """N_S(H) for S = <search_gens> without enumerating S.

    Orbit-stabilizer on the conjugation action on the element-set of H:
    Schreier generators of the stabilizer are collected along a BFS of the
    orbit and closed into the normalizer.  |S| must be supplied (caller
    proves <search_gens> = S); |N| = |S| / orbit size is cross-checked.
    """
    model = subgroup_elements[0].model
    t = model.tower
    ident = identity(model)
    scalars = np.array(model.unitary_scalars, dtype=np.int64)
    mulq = t.mul_t.astype(np.int64)
    addq = t.add_t.astype(np.int64)

    def batch_conj_key(gm, gmi, hmats):
        out = _batch_mat_mul(mulq, addq, _batch_mat_mul_single(mulq, addq, gm, hmats), gmi)
        # canonicalize each row over the unitary scalars, then sort rows
        best = None
        for s in scalars:
            cand = mulq[s, out]
            if best is None:
                best = cand.copy()
            else:
                swap = _lex_less(cand, best)
                best[swap] = cand[swap]
        rows = best.astype(np.uint16)
        order = np.lexsort(tuple(rows[:, c] for c in range(8, -1, -1)))
        return rows[order].tobytes(), rows

    H0 = np.array(sorted(el.m for el in subgroup_elements), dtype=np.uint16)
    key0 = H0.tobytes()
    gen_pairs = [(np.array(g.m, dtype=np.int64), np.array(pgu_inv(g).m, dtype=np.int64), g) for g in search_gens]
    transversal = {key0: ident}
    state_mats = {key0: H0}
    order_list = [key0]
    schreier = []
    i = 0
    while i < len(order_list):
        key = order_list[i]
        i += 1
        t_s = transversal[key]
        base = state_mats[key].astype(np.int64)
        for gm, gmi, g in gen_pairs:
            k2, rows = batch_conj_key(gm, gmi, base)
            t_new = pgu_mul(g, t_s)
            if k2 not in transversal:
                transversal[k2] = t_new
                state_mats[k2] = rows
                order_list.append(k2)
                if len(order_list) > orbit_cap:
                    raise CapExceeded("normalizer orbit exceeded cap")
            else:
                # Schreier generator: t_{s.g}^{-1} * g * t_s stabilizes H
                sg = pgu_mul(pgu_inv(transversal[k2]), t_new)
                if sg != ident:
                    schreier.append(sg)
    orbit = len(order_list)
    if search_order % orbit:
        raise SearchSetNotClosed("orbit size does not divide |S|")
    expected = search_order // orbit
    from .pgu import closure_elements

    n_els = closure_elements(list(dict.fromkeys(schreier)) or [ident], cap=4 * expected)
    if len(n_els) != expected:
        raise SearchSetNotClosed(
            f"stabilizer closure has order {len(n_els)}, expected {expected}"
        )
    return n_els


def _batch_mat_mul_single(mulq, addq, a, B):
    """a (9,) times each row of B ([m, 9])."""
    m = B.shape[0]
    out = np.zeros((m, 9), dtype=np.int64)
    for r in range(3):
        for c in range(3):
            acc = np.zeros(m, dtype=np.int64)
            for k in range(3):
                acc = addq[acc, mulq[a[3 * r + k], B[:, 3 * k + c]]]
            out[:, 3 * r + c] = acc
    return out


def _batch_mat_mul(mulq, addq, A, b):
    """Each row of A ([m, 9]) times b (9,)."""
    m = A.shape[0]
    out = np.zeros((m, 9), dtype=np.int64)
    for r in range(3):
        for c in range(3):
            acc = np.zeros(m, dtype=np.int64)
            for k in range(3):
                acc = addq[acc, mulq[A[:, 3 * r + k], b[3 * k + c]]]
            out[:, 3 * r + c] = acc
    return out


def _set_key(elements):
    return tuple(sorted(el.m for el in elements))


# ---------------------------------------------------------------------------
# P Gamma L(2, 8)  (isomorphic to Ree(3))
# ---------------------------------------------------------------------------

_GF8_MOD = 0b1011  # x^3 + x + 1


def _gf8_mul(a, b):
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        if a & 0b1000:
            a ^= _GF8_MOD
        b >>= 1
    return r


def _gf8_inv(a):
    for b in range(1, 8):
        if _gf8_mul(a, b) == 1:
            return b
    raise ZeroDivisionError


@functools.lru_cache(maxsize=None)
def pgammal28() -> FiniteGroupTable:
    """PGammaL(2,8) on the 9 points of PG(1,8): PGL(2,8) extended by x -> x^2.

    Points are indexed 0..7 for F_8 codes plus 8 for infinity; order 1512 is
    verified at construction.
    """
    INF = 8

    def moebius(a, b, c, d):
        out = []
        for x in range(8):
            num = _gf8_mul(a, x) ^ b
            den = _gf8_mul(c, x) ^ d
            out.append(INF if den == 0 else _gf8_mul(num, _gf8_inv(den)))
        out.append(_gf8_mul(a, _gf8_inv(c)) if c else INF)
        return tuple(out)

    perms = set()
    for a in range(8):
        for b in range(8):
            for c in range(8):
                for d in range(8):
                    if _gf8_mul(a, d) ^ _gf8_mul(b, c):
                        perms.add(moebius(a, b, c, d))
    assert len(perms) == 504
    frob = tuple([_gf8_mul(x, x) for x in range(8)] + [INF])
    frob2 = tuple(frob[frob[x]] for x in range(9))
    full = set()
    for p in perms:
        full.add(p)
        full.add(tuple(p[frob[x]] for x in range(9)))
        full.add(tuple(p[frob2[x]] for x in range(9)))
    grp = FiniteGroupTable.from_perms(sorted(full))
    assert grp.n == 1512, f"PGammaL(2,8) built with order {grp.n}"
    return grp


# ---------------------------------------------------------------------------
# maximal subgroup order catalog (Mitchell-Hartley)
# ---------------------------------------------------------------------------

@dataclass
class MaximalOrderCatalog:
    q: int
    families: dict  # name -> order

    def divides_some_maximal(self, d: int) -> bool:
        """Does d divide three times the order of some listed maximal?"""
        return any((3 * order) % d == 0 for order in self.families.values())


def _psu3_order(q):
    return (q**3 + 1) * q**3 * (q**2 - 1) // math.gcd(3, q + 1)


def _is_square_in_fq(value: int, q: int) -> bool:
    from .fields import factorize, field_make

    [(p, n)] = factorize(q).items()
    t = field_make(p, n)
    code = value % p
    if code == 0:
        return True
    return t.pow(code, (q - 1) // 2) == 1


def maximal_order_catalog(q: int) -> MaximalOrderCatalog:
    from .fields import factorize

    [(p, n)] = factorize(q).items()
    d = math.gcd(3, q + 1)
    fams = {
        "point_on_curve_stab": q**3 * (q**2 - 1) // d,
        "point_off_curve_stab": q * (q - 1) * (q + 1) ** 2 // d,
        "self_polar_triangle_stab": 6 * (q + 1) ** 2 // d,
        "singer_normalizer": 3 * (q**2 - q + 1) // d,
    }
    if p > 2:
        fams["pgl2_conic"] = q * (q**2 - 1)
        for m in range(1, n):
            if n % m == 0 and (n // m) % 2 == 1:
                fams[f"psu3_{p}^{m}"] = _psu3_order(p**m)
                if (n // m) % 3 == 0 and (q + 1) % 3 == 0:
                    fams[f"psu3_{p}^{m}_ext3"] = 3 * _psu3_order(p**m)
        if (q + 1) % 9 == 0:
            fams["hessian_216"] = 216
        if (q + 1) % 3 == 0:
            fams["hessian_72"] = 72
            fams["hessian_36"] = 36
        if p == 7 or not _is_square_in_fq(-7, q):
            fams["psl2_7"] = 168
        has_cube_root = (q - 1) % 3 == 0
        if (p == 3 and n % 2 == 0) or (_is_square_in_fq(5, q) and not has_cube_root):
            fams["alt6"] = 360
        if p == 5 and n % 2 == 1:
            fams["sym6"] = 720
            fams["alt7"] = 2520
    else:
        for m in range(1, n):
            if n % m == 0 and is_prime_simple(n // m) and (n // m) % 2 == 1:
                fams[f"psu3_2^{m}"] = _psu3_order(2**m)
        if n % 3 == 0 and (n // 3) % 2 == 1:
            fams[f"psu3_2^{n // 3}_ext3"] = 3 * _psu3_order(2 ** (n // 3))
        if n == 1:
            fams["order36"] = 36
    return MaximalOrderCatalog(q, fams)


def is_prime_simple(m):
    from .fields import is_prime

    return is_prime(m)
