"""Type classification of PGU(3, q) elements and ramification contributions.

Every nontrivial element lands in exactly one of the types A, B1, B2, B3, C,
D, E according to its order and fixed structure in PG(2, \\bar F_q); the type
determines the contribution i(.) to the different degree:

    A: q+1    B1: 0    B2: 2    B3: 3    C: q+2    D: 2    E: 1

The decision tree works on the eigenstructure of a matrix lift: tame
elements (order coprime to p) are semisimple, so a repeated eigenvalue means
a 2-dimensional eigenspace (homology, type A), three distinct rational
eigenvalues split B1/B2 by how many eigenpoints lie on the curve, and an
irreducible characteristic polynomial is the Singer case B3 with a conjugate
point triangle over F_{q^6}.  Wild elements of order p are elations (C) or
single-eigenline maps (D) by eigenspace dimension; order 4 at p = 2 is D;
any other order divisible by p is E.  Configurations the theory excludes
(eigenpoints over F_{q^4}, one or three rational eigenpoints on the curve)
raise ClassificationContradiction.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

from .errors import (
    ClassificationContradiction,
    EnumerationTooLarge,
    IdentityElement,
)
from .fields import LEVEL_QUADRATIC, LEVEL_SEXTIC, roots_deg3
from .pgu import (
    NORM_TRACE,
    PGUElement,
    closure_elements,
    element,
    get_model,
    identity,
    make_B2,
    make_diag,
    make_homology,
    make_singer,
    make_tau,
    pgu_mul,
)

TYPE_A = "A"
TYPE_B1 = "B1"
TYPE_B2 = "B2"
TYPE_B3 = "B3"
TYPE_C = "C"
TYPE_D = "D"
TYPE_E = "E"

I_VALUES = {TYPE_A: "q+1", TYPE_B1: 0, TYPE_B2: 2, TYPE_B3: 3, TYPE_C: "q+2", TYPE_D: 2, TYPE_E: 1}


def i_value(type_tag: str, q: int) -> int:
    v = I_VALUES[type_tag]
    if v == "q+1":
        return q + 1
    if v == "q+2":
        return q + 2
    return v


@dataclass(frozen=True)
class ElementClass:
    type_tag: str
    order: int
    i_value: int
    n_eigenlines: int
    eigen_levels: tuple  # rationality level per eigenpoint
    on_curve_flags: tuple
    fixes_line_pointwise: bool

    def to_json(self):
        return {
            "type": self.type_tag,
            "order": self.order,
            "i": self.i_value,
            "eigenlines": self.n_eigenlines,
            "eigen_levels": list(self.eigen_levels),
            "on_curve": list(self.on_curve_flags),
            "fixes_line_pointwise": self.fixes_line_pointwise,
        }


def _charpoly(t, m):
    """det(xI - M) coefficients (c0, c1, c2, 1), low degree first."""
    tr = t.add(t.add(m[0], m[4]), m[8])
    det = 0
    det = t.add(det, t.mul(m[0], t.sub(t.mul(m[4], m[8]), t.mul(m[5], m[7]))))
    det = t.sub(det, t.mul(m[1], t.sub(t.mul(m[3], m[8]), t.mul(m[5], m[6]))))
    det = t.add(det, t.mul(m[2], t.sub(t.mul(m[3], m[7]), t.mul(m[4], m[6]))))
    m2 = 0
    m2 = t.add(m2, t.sub(t.mul(m[4], m[8]), t.mul(m[5], m[7])))
    m2 = t.add(m2, t.sub(t.mul(m[0], m[8]), t.mul(m[2], m[6])))
    m2 = t.add(m2, t.sub(t.mul(m[0], m[4]), t.mul(m[1], m[3])))
    return (t.neg(det), m2, t.neg(tr), 1)


def _rational_roots(t, f):
    """Distinct roots of f in F_{q^2} with multiplicities, plus the residual."""
    xQ = t.q2poly_powmod((0, 1), t.Q, f)
    r = t.q2poly_gcd(t.q2poly_sub(xQ, (0, 1)), f)
    roots = []
    rem = f
    deg = len(r) - 1
    if deg >= 1:
        # r splits into distinct linears over F_{q^2}; at most 3 roots, find
        # them by scanning divisors of the (now known) small gcd
        roots = _linear_roots_q2(t, r)
    out = []
    for rho in sorted(roots):
        mult = 0
        while True:
            quo, rest = _q2_divmod_linear(t, rem, rho)
            if rest != 0:
                break
            rem = quo
            mult += 1
        out.append((rho, mult))
    return out, rem


def _linear_roots_q2(t, r):
    deg = len(r) - 1
    if deg == 0:
        return []
    if deg == 1:
        return [t.mul(t.neg(r[0]), t.inv(r[1]))]
    if t.has_tables:
        # vectorized scan of F_{q^2}
        import numpy as np

        x = np.arange(t.Q, dtype=np.int64)
        acc = np.full(t.Q, r[-1], dtype=np.int64)
        for c in reversed(r[:-1]):
            acc = t.add_t[t.mul_t[acc, x], c]
        return [int(v) for v in x[acc == 0]]
    roots6, _ = roots_deg3(t, r)
    out = []
    for rho, mult in roots6:
        assert t.s_is_quadratic(rho) and mult == 1
        out.append(rho % t.Q)
    return out


def _q2_divmod_linear(t, a, rho):
    out = [0] * (len(a) - 1)
    acc = a[-1]
    for i in range(len(a) - 2, -1, -1):
        out[i] = acc
        acc = t.add(t.mul(acc, rho), a[i])
    return tuple(out), acc


def _eigen_kernel_rank(t, m, lam):
    """(rank of M - lam I, a kernel vector if rank 2) over F_{q^2}."""
    a = list(m)
    for i in (0, 4, 8):
        a[i] = t.sub(a[i], lam)
    # adjugate rows give cross products; nonzero adjugate <=> rank 2
    from .pgu import _mat_adjugate

    adj = _mat_adjugate(t, tuple(a))
    if any(adj):
        # kernel = column space of adjugate; take first nonzero column
        for c in range(3):
            col = (adj[c], adj[3 + c], adj[6 + c])
            if any(col):
                return 2, col
    if any(a):
        return 1, None
    return 0, None


def _eigen_kernel_sextic(t, m, lam6):
    """Kernel vector of M - lam I over F_{q^6} (rank assumed 2)."""
    a = [c for c in m]  # quadratic codes are sextic codes
    a = [int(c) for c in a]
    for i in (0, 4, 8):
        a[i] = t.s_add(a[i], t.s_neg(lam6))

    def mn(i, j, k, l):
        return t.s_add(t.s_mul(a[3 * i + k], a[3 * j + l]), t.s_neg(t.s_mul(a[3 * i + l], a[3 * j + k])))

    adj = [
        mn(1, 2, 1, 2), t.s_neg(mn(0, 2, 1, 2)), mn(0, 1, 1, 2),
        t.s_neg(mn(1, 2, 0, 2)), mn(0, 2, 0, 2), t.s_neg(mn(0, 1, 0, 2)),
        mn(1, 2, 0, 1), t.s_neg(mn(0, 2, 0, 1)), mn(0, 1, 0, 1),
    ]
    for c in range(3):
        col = (adj[c], adj[3 + c], adj[6 + c])
        if any(col):
            return col
    raise ClassificationContradiction("sextic eigenvalue with eigenspace dim != 1")


def classify(el: PGUElement) -> ElementClass:
    """Assign the Lemma-2.2-style type and ramification value to an element."""
    model = el.model
    t = model.tower
    q = t.q
    p = t.p
    m = el.order
    if m == 1:
        raise IdentityElement("classify expects a nontrivial element")

    if m % p == 0 or (p == 2 and m == 4):
        return _classify_wild(el, m)
    return _classify_tame(el, m)


def _classify_wild(el: PGUElement, m: int):
    model = el.model
    t = model.tower
    q, p = t.q, t.p
    if m == p or (p == 2 and m == 4):
        # unique eigenvalue: lambda^m = mu where el^m = mu * I
        from .pgu import _mat_mul

        acc = el.m
        for _ in range(m - 1):
            acc = _mat_mul(t, acc, el.m)
        mu = acc[0]
        lam = t.nth_root(mu, m)
        rank, ker = _eigen_kernel_rank(t, el.m, lam)
        if rank == 1:
            if m != p:
                raise ClassificationContradiction("(2,4)-element with a pointwise-fixed line")
            # elation: fixes its axis pointwise; center on the curve
            return ElementClass(TYPE_C, m, i_value(TYPE_C, q), 1, (LEVEL_QUADRATIC,), (True,), True)
        if rank == 2:
            pt = model.normalize_point(ker)
            if not model.on_curve(pt):
                raise ClassificationContradiction("wild element fixing a point off the curve")
            return ElementClass(TYPE_D, m, i_value(TYPE_D, q), 1, (LEVEL_QUADRATIC,), (True,), False)
        raise ClassificationContradiction("wild element is projectively trivial")
    if m % (p * p) == 0:
        raise ClassificationContradiction(f"order {m} divisible by p^2 but not handled")
    # type E: two rational fixed points, one on the curve, one off
    f = _charpoly(t, el.m)
    roots, resid = _rational_roots(t, f)
    if len(roots) != 2 or len(resid) != 1:
        raise ClassificationContradiction("type-E candidate without two rational eigenvalues")
    flags = []
    for lam, mult in roots:
        rank, ker = _eigen_kernel_rank(t, el.m, lam)
        if rank != 2:
            raise ClassificationContradiction("type-E eigenvalue with fat eigenspace")
        flags.append(model.on_curve(model.normalize_point(ker)))
    if sorted(flags) != [False, True]:
        raise ClassificationContradiction("type-E fixed points not split on/off the curve")
    return ElementClass(TYPE_E, m, i_value(TYPE_E, q), 2, (LEVEL_QUADRATIC,) * 2, tuple(flags), False)


def _classify_tame(el: PGUElement, m: int):
    model = el.model
    t = model.tower
    q = t.q
    f = _charpoly(t, el.m)
    roots, resid = _rational_roots(t, f)
    if len(roots) == 3:
        pts = []
        for lam, mult in roots:
            assert mult == 1
            rank, ker = _eigen_kernel_rank(t, el.m, lam)
            if rank != 2:
                raise ClassificationContradiction("distinct eigenvalue with fat eigenspace")
            pts.append(model.normalize_point(ker))
        flags = tuple(model.on_curve(pt) for pt in pts)
        on = sum(flags)
        if on == 0:
            if (q + 1) % m != 0:
                raise ClassificationContradiction("B1 order must divide q+1")
            return ElementClass(TYPE_B1, m, i_value(TYPE_B1, q), 3, (LEVEL_QUADRATIC,) * 3, flags, False)
        if on == 2:
            if (q * q - 1) % m != 0 or (q + 1) % m == 0:
                raise ClassificationContradiction("B2 order must divide q^2-1 and not q+1")
            return ElementClass(TYPE_B2, m, i_value(TYPE_B2, q), 3, (LEVEL_QUADRATIC,) * 3, flags, False)
        raise ClassificationContradiction(f"rational triangle with {on} points on the curve")
    if len(roots) == 2:
        # semisimple with a repeated eigenvalue: homology
        lam2 = next(lam for lam, mult in roots if mult == 2)
        lam1 = next(lam for lam, mult in roots if mult == 1)
        rank2, _ = _eigen_kernel_rank(t, el.m, lam2)
        if rank2 != 1:
            raise ClassificationContradiction("tame repeated eigenvalue not diagonalizable")
        rank1, center = _eigen_kernel_rank(t, el.m, lam1)
        pt = model.normalize_point(center)
        if model.on_curve(pt):
            raise ClassificationContradiction("homology center on the curve")
        if (q + 1) % m != 0:
            raise ClassificationContradiction("homology order must divide q+1")
        return ElementClass(TYPE_A, m, i_value(TYPE_A, q), 2, (LEVEL_QUADRATIC,) * 2, (False, True), True)
    if len(roots) == 1:
        raise ClassificationContradiction("eigenpoints over F_{q^4}: excluded configuration")
    # irreducible characteristic polynomial: Singer triangle over F_{q^6}
    roots6, resid6 = roots_deg3(t, f)
    if len(roots6) != 3 or len(resid6) != 1:
        raise ClassificationContradiction("B3 candidate without a conjugate sextic triple")
    flags = []
    for lam6, mult in roots6:
        assert mult == 1
        if t.s_is_quadratic(lam6):
            raise ClassificationContradiction("sextic path reached with rational eigenvalue")
        ker = _eigen_kernel_sextic(t, el.m, lam6)
        pt = model.normalize_point(ker, LEVEL_SEXTIC)
        flags.append(model.on_curve(pt, LEVEL_SEXTIC))
    if not all(flags):
        raise ClassificationContradiction("Singer triangle not contained in the curve")
    if (q * q - q + 1) % m != 0:
        raise ClassificationContradiction("B3 order must divide q^2-q+1")
    return ElementClass(TYPE_B3, m, i_value(TYPE_B3, q), 3, (LEVEL_SEXTIC,) * 3, tuple(flags), False)


# ---------------------------------------------------------------------------
# inventory
# ---------------------------------------------------------------------------

@dataclass
class ClassInventory:
    q: int
    entries: list = field(default_factory=list)  # (representative, ElementClass, class_size or None)

    def realized(self):
        return sorted({(cls.order, cls.type_tag) for _, cls, _ in self.entries})

    def orders(self):
        return sorted({cls.order for _, cls, _ in self.entries})

    def to_csv_rows(self):
        rows = [("order", "type", "i", "class_size", "representative")]
        for rep, cls, size in self.entries:
            rows.append((cls.order, cls.type_tag, cls.i_value, size if size is not None else "", repr(rep.m)))
        return rows


def _divisors(n):
    return [d for d in range(1, n + 1) if n % d == 0]


def class_inventory(q: int) -> ClassInventory:
    """Representatives covering every realized (order, type) pair.

    Generated from the recipe constructors with parameters swept over
    canonical ranges; completeness is verified exhaustively for q <= 5 and by
    sampling above (see verify functions).
    """
    model = get_model(q, NORM_TRACE)
    t = model.tower
    p = t.p
    inv = ClassInventory(q)
    seen = set()

    def add(rep):
        cls = classify(rep)
        key = (cls.order, cls.type_tag)
        if key not in seen:
            seen.add(key)
            inv.entries.append((rep, cls, None))

    from .pgu import change_model

    nt = model
    # A and B1 from the fermat diagonal torus
    for d in _divisors(q + 1):
        if d == 1:
            continue
        z = t.element_of_order(d)
        add(change_model(make_homology(q, z), nt))
        for k in range(2, d):
            lam, mu = z, t.pow(z, k)
            if lam != mu and mu != 1:
                try:
                    add(change_model(make_diag(q, lam, mu), nt))
                except ClassificationContradiction:
                    pass
    # B2 from the norm-trace torus
    for e in _divisors(q * q - 1):
        if e > 1 and (q + 1) % e != 0:
            add(make_B2(q, t.element_of_order(e)))
    # B3 from Singer powers
    singer = make_singer(q)
    for d in _divisors(q * q - q + 1):
        if d > 1:
            k = (q * q - q + 1) // d
            rep = singer
            acc = singer
            for _ in range(k - 1):
                acc = pgu_mul(acc, singer)
            add(acc)
    # wild types
    c0 = next(c for c in range(1, t.Q) if t.trace(c) == 0)
    add(make_tau(q, 1, 0, c0))  # C
    b0 = next(b for b in range(1, t.Q) if True)
    cb = next(c for c in range(t.Q) if t.trace(c) == t.norm(b0))
    add(make_tau(q, 1, b0, cb))  # D (order p odd, order 4 at p = 2)
    # E: elation times commuting diagonal 1-eigenvalue part
    for d in _divisors(q + 1):
        if d == 1:
            continue
        lam = t.element_of_order(d)
        diag = element(nt, (1, 0, 0, 0, lam, 0, 0, 0, 1))
        add(pgu_mul(make_tau(q, 1, 0, c0), diag))
    return inv


def verify_inventory_exhaustive(q: int, inventory=None, group_elements=None):
    """Check every nontrivial group element hits an inventory bucket (q <= 5)."""
    if q > 5:
        raise EnumerationTooLarge("exhaustive inventory verification requires q <= 5")
    inv = inventory or class_inventory(q)
    keys = set((o, tt) for o, tt in inv.realized())
    els = group_elements or pgu_group_elements(q)
    census = {}
    ident = identity(get_model(q, NORM_TRACE))
    for el in els:
        if el == ident:
            continue
        cls = classify(el)
        k = (cls.order, cls.type_tag)
        census[k] = census.get(k, 0) + 1
        if k not in keys:
            raise ClassificationContradiction(f"bucket {k} missing from inventory at q={q}")
    return census


def verify_inventory_sampled(q: int, samples: int = 100_000, seed: int = 7):
    """Random-walk sampling check of inventory coverage for big q."""
    import random

    inv = class_inventory(q)
    keys = set(inv.realized())
    model = get_model(q, NORM_TRACE)
    t = model.tower
    rng = random.Random(seed)
    gens = _walk_generators(q)
    x = identity(model)
    hit = set()
    for _ in range(samples):
        x = pgu_mul(x, gens[rng.randrange(len(gens))])
        if x.order == 1:
            continue
        cls = classify(x)
        k = (cls.order, cls.type_tag)
        if k not in keys:
            raise ClassificationContradiction(f"sampled bucket {k} missing from inventory at q={q}")
        hit.add(k)
    return hit


def _walk_generators(q):
    model = get_model(q, NORM_TRACE)
    t = model.tower
    from .pgu import change_model, make_swap_xt

    c0 = next(c for c in range(1, t.Q) if t.trace(c) == 0)
    b0 = 1
    cb = next(c for c in range(t.Q) if t.trace(c) == t.norm(b0))
    gens = [
        make_tau(q, 1, 0, c0),
        make_tau(q, 1, b0, cb),
        make_B2(q, t.generator),
        make_swap_xt(q),
        make_singer(q),
    ]
    return gens


@functools.lru_cache(maxsize=None)
def pgu_group_elements(q: int):
    """All elements of PGU(3, q), norm-trace model (q <= 5 kept reasonable)."""
    if q > 5:
        raise EnumerationTooLarge("full PGU enumeration kept to q <= 5")
    return closure_elements(_walk_generators(q), cap=300_000)


def classify_all(q: int):
    """type census and i-values for every nontrivial element of PGU(3, q)."""
    model = get_model(q, NORM_TRACE)
    if q <= 4:
        model.tower.sextic_flat()  # scalar sextic ops become table lookups
    els = pgu_group_elements(q)
    out = []
    ident = identity(model)
    for el in els:
        if el == ident:
            continue
        out.append((el, classify(el)))
    return out


def fixed_point_oracle(q: int):
    """Brute-force fixed-point counts on H_q(F_{q^6}) for all of PGU(3, q).

    Returns (elements, classes, counts): for tame elements the count must
    equal the classified i-value (the acceptance comparison); wild elements
    get their honest fixed-point count, which the caller may inspect.
    """
    import numpy as np

    from . import kernels

    if q > 4:
        raise EnumerationTooLarge("oracle enumerates H_q(F_{q^6}); q <= 4 only")
    model = get_model(q, NORM_TRACE)
    t = model.tower
    mulf, addf, invf, _ = t.sextic_flat()
    pts = model.rational_points(LEVEL_SEXTIC)
    pairs = classify_all(q)
    mats = np.array([el.m for el, _ in pairs], dtype=np.uint16)
    counts = kernels.count_fixed_points(mats, pts, mulf, addf, invf)
    return [el for el, _ in pairs], [cls for _, cls in pairs], counts


def oracle_mismatches(q: int):
    """Tame elements whose classified i-value differs from the brute force."""
    els, classes, counts = fixed_point_oracle(q)
    p = els[0].model.tower.p
    bad = []
    for el, cls, cnt in zip(els, classes, counts):
        if cls.order % p == 0:
            continue
        if cls.i_value != int(cnt):
            bad.append((el, cls, int(cnt)))
    return bad
