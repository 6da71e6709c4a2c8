"""PG(2, .) points, the two Hermitian curve models, and PGU(3, q).

Group elements are 3x3 matrices over F_{q^2} stored as 9-tuples of quadratic
codes, row-major.  An element is kept as its canonical representative: among
the q+1 unitary scalar multiples (mu with mu^{q+1} = 1) the one whose code
tuple is lexicographically least.  Constructors accept similitudes (matrices
preserving the form up to an F_q^* factor) and rescale them to isometries,
since the natural recipes — diag(a^{q+1}, a, 1) and friends — arrive that way.

Models: 'fermat' is X^{q+1} + Y^{q+1} + T^{q+1} = 0 (Gram = identity),
'norm-trace' is Y^{q+1} = X^q T + X T^q (Gram = antidiag(1, -1, 1)); a
deterministic Hermitian Gram-Schmidt provides the change of basis between
them.
"""

from __future__ import annotations

import functools
import itertools

import numpy as np

from . import kernels
from .errors import (
    CapExceeded,
    ConstraintViolated,
    ConstructionFailed,
    EnumerationTooLarge,
    NotUnitary,
    OrderCapExceeded,
    UnsupportedPrime,
    UnsupportedSize,
)
from .fields import LEVEL_QUADRATIC, LEVEL_SEXTIC, FieldTower, factorize, field_make

FERMAT = "fermat"
NORM_TRACE = "norm-trace"


class HermitianModel:
    """One plane model of H_q: a Gram matrix plus curve/point helpers."""

    def __init__(self, tower: FieldTower, tag: str):
        self.tower = tower
        self.tag = tag
        t = tower
        if tag == FERMAT:
            self.gram = (1, 0, 0, 0, 1, 0, 0, 0, 1)
        elif tag == NORM_TRACE:
            one, neg1 = 1, t.neg(1)
            self.gram = (0, 0, one, 0, neg1, 0, one, 0, 0)
        else:
            raise ConstraintViolated(f"unknown model tag {tag}")
        # unitary scalars mu^{q+1} = 1, ascending codes
        q = t.q
        zeta = t.element_of_order(q + 1)
        scal = {1}
        a = zeta
        while a != 1:
            scal.add(a)
            a = t.mul(a, zeta)
        self.unitary_scalars = tuple(sorted(scal))

    # -- forms ---------------------------------------------------------------

    def herm(self, u, v):
        """Sesquilinear form conj(u)^T . gram . v on quadratic-code triples."""
        t = self.tower
        acc = 0
        for i in range(3):
            ui = t.conj_code(u[i])
            if ui == 0:
                continue
            for j in range(3):
                g = self.gram[3 * i + j]
                if g:
                    acc = t.add(acc, t.mul(t.mul(ui, g), v[j]))
        return acc

    def herm_sextic(self, u, v):
        """Same form with x -> x^q extended to sextic codes."""
        t = self.tower
        acc = 0
        for i in range(3):
            ui = t.s_pow_q(u[i])
            if ui == 0:
                continue
            for j in range(3):
                g = self.gram[3 * i + j]
                if g:
                    acc = t.s_add(acc, t.s_mul(t.s_mul(ui, g), v[j]))
        return acc

    def on_curve(self, point, level=LEVEL_QUADRATIC) -> bool:
        if level == LEVEL_QUADRATIC:
            return self.herm(point, point) == 0
        if level == LEVEL_SEXTIC:
            return self.herm_sextic(point, point) == 0
        raise ConstraintViolated(f"bad level {level}")

    # -- points --------------------------------------------------------------

    def normalize_point(self, p, level=LEVEL_QUADRATIC):
        """Scale so the last nonzero coordinate is 1."""
        t = self.tower
        if level == LEVEL_QUADRATIC:
            inv = t.inv
            mul = t.mul
        else:
            inv = t.s_inv
            mul = t.s_mul
        for i in (2, 1, 0):
            if p[i] != 0:
                iv = inv(p[i])
                return tuple(mul(iv, c) for c in p)
        raise ConstraintViolated("zero vector is not a projective point")

    def rational_points(self, level=LEVEL_QUADRATIC) -> np.ndarray:
        """All curve points at the given level, canonical order, [N, 3]."""
        t = self.tower
        if level == LEVEL_QUADRATIC:
            if not t.has_tables:
                raise EnumerationTooLarge(f"q={t.q} has no value tables")
            return _curve_points(self.gram, t.Q, t.mul_t, t.add_t, t.conj_t)
        if level == LEVEL_SEXTIC:
            if t.q > 4:
                raise EnumerationTooLarge("sextic-level enumeration requires q <= 4")
            mulf, addf, invf, powq = t.sextic_flat()
            gram6 = self.gram  # quadratic codes are sextic codes
            return _curve_points(gram6, t.q**6, mulf, addf, powq)
        raise ConstraintViolated(f"bad level {level}")


def _curve_points(gram, K, mul_t, add_t, conj_t):
    """Vectorized scan of PG(2, K) for zeros of the Hermitian form."""
    pts = []
    # (x, y, 1)
    x = np.repeat(np.arange(K, dtype=np.int64), K)
    y = np.tile(np.arange(K, dtype=np.int64), K)
    one = np.ones(K * K, dtype=np.int64)
    mask = _form_zero(gram, (x, y, one), mul_t, add_t, conj_t)
    pts.append(np.stack([x[mask], y[mask], one[mask]], axis=1))
    # (x, 1, 0)
    x = np.arange(K, dtype=np.int64)
    one = np.ones(K, dtype=np.int64)
    zero = np.zeros(K, dtype=np.int64)
    mask = _form_zero(gram, (x, one, zero), mul_t, add_t, conj_t)
    pts.append(np.stack([x[mask], one[mask], zero[mask]], axis=1))
    # (1, 0, 0)
    mask = _form_zero(gram, (np.array([1]), np.array([0]), np.array([0])), mul_t, add_t, conj_t)
    if mask[0]:
        pts.append(np.array([[1, 0, 0]], dtype=np.int64))
    allpts = np.concatenate(pts, axis=0)
    order = np.lexsort((allpts[:, 2], allpts[:, 1], allpts[:, 0]))
    return allpts[order].astype(np.uint16)


def _form_zero(gram, coords, mul_t, add_t, conj_t):
    acc = np.zeros(coords[0].shape, dtype=np.int64)
    conj = [conj_t[c] for c in coords]
    for i in range(3):
        for j in range(3):
            g = gram[3 * i + j]
            if g:
                term = mul_t[mul_t[conj[i], g], coords[j]]
                acc = add_t[acc, term]
    return acc == 0


# ---------------------------------------------------------------------------
# group elements
# ---------------------------------------------------------------------------

class PGUElement:
    """Canonicalized projective unitary matrix with a cached order."""

    __slots__ = ("model", "m", "_order")

    def __init__(self, model: HermitianModel, m, *, _canonical=False):
        self.model = model
        if not _canonical:
            m = canon_tuple(model, tuple(int(c) for c in m))
            _check_unitary(model, m)
        self.m = m
        self._order = None

    def __eq__(self, other):
        return isinstance(other, PGUElement) and self.m == other.m and self.model.tag == other.model.tag

    def __hash__(self):
        return hash((self.model.tag, self.m))

    def __repr__(self):
        return f"PGUElement({self.model.tag}, {self.m})"

    def __mul__(self, other):
        return pgu_mul(self, other)

    def inv(self):
        return pgu_inv(self)

    @property
    def order(self):
        if self._order is None:
            self._order = element_order(self)
        return self._order

    def to_json(self):
        t = self.model.tower
        return {
            "model": self.model.tag,
            "matrix": [t.element(c, LEVEL_QUADRATIC).to_json() for c in self.m],
        }


def _mat_mul(t: FieldTower, a, b):
    out = [0] * 9
    for r in range(3):
        for c in range(3):
            acc = 0
            for k in range(3):
                acc = t.add(acc, t.mul(a[3 * r + k], b[3 * k + c]))
            out[3 * r + c] = acc
    return tuple(out)


def _mat_scale(t: FieldTower, s, a):
    return tuple(t.mul(s, c) for c in a)


def _mat_adjugate(t: FieldTower, a):
    def mn(i, j, k, l):
        return t.sub(t.mul(a[3 * i + k], a[3 * j + l]), t.mul(a[3 * i + l], a[3 * j + k]))

    adj = [
        mn(1, 2, 1, 2), t.neg(mn(0, 2, 1, 2)), mn(0, 1, 1, 2),
        t.neg(mn(1, 2, 0, 2)), mn(0, 2, 0, 2), t.neg(mn(0, 1, 0, 2)),
        mn(1, 2, 0, 1), t.neg(mn(0, 2, 0, 1)), mn(0, 1, 0, 1),
    ]
    return tuple(adj)


def _mat_det(t: FieldTower, a):
    d = 0
    d = t.add(d, t.mul(a[0], t.sub(t.mul(a[4], a[8]), t.mul(a[5], a[7]))))
    d = t.sub(d, t.mul(a[1], t.sub(t.mul(a[3], a[8]), t.mul(a[5], a[6]))))
    d = t.add(d, t.mul(a[2], t.sub(t.mul(a[3], a[7]), t.mul(a[4], a[6]))))
    return d


def _conj_transpose(t: FieldTower, a):
    return tuple(t.conj_code(a[3 * c + r]) for r in range(3) for c in range(3))


def _sandwich(model: HermitianModel, m):
    """conj-transpose(M) . H . M."""
    t = model.tower
    return _mat_mul(t, _mat_mul(t, _conj_transpose(t, m), model.gram), m)


def similitude_factor(model: HermitianModel, m):
    """lambda with M* H M = lambda H, or None if M is not a similitude."""
    s = _sandwich(model, m)
    t = model.tower
    lam = None
    for i in range(9):
        if model.gram[i]:
            cand = t.mul(s[i], t.inv(model.gram[i]))
            if lam is None:
                lam = cand
            elif lam != cand:
                return None
        elif s[i] != 0:
            return None
    if lam is None or lam == 0 or not t.in_subfield_q(lam):
        return None
    return lam


def _check_unitary(model: HermitianModel, m):
    if _sandwich(model, m) != model.gram:
        raise NotUnitary(f"matrix is not an isometry of the {model.tag} form")


def canon_tuple(model: HermitianModel, m):
    """Lexicographically least unitary-scalar multiple."""
    t = model.tower
    best = None
    for s in model.unitary_scalars:
        cand = m if s == 1 else _mat_scale(t, s, m)
        if best is None or cand < best:
            best = cand
    return best


def element(model: HermitianModel, entries) -> PGUElement:
    """Canonicalize an isometry or a similitude into a group element."""
    t = model.tower
    m = tuple(int(c) for c in entries)
    lam = similitude_factor(model, m)
    if lam is None:
        raise NotUnitary("matrix does not preserve the form up to F_q^* factor")
    if lam != 1:
        # rescale by nu with nu^{q+1} = lambda^{-1}
        nu = t.nth_root(t.inv(lam), t.q + 1)
        m = _mat_scale(t, nu, m)
    return PGUElement(model, canon_tuple(model, m), _canonical=True)


def identity(model: HermitianModel) -> PGUElement:
    return PGUElement(model, canon_tuple(model, (1, 0, 0, 0, 1, 0, 0, 0, 1)), _canonical=True)


def pgu_mul(a: PGUElement, b: PGUElement) -> PGUElement:
    if a.model is not b.model:
        raise ConstraintViolated("elements from different models")
    m = _mat_mul(a.model.tower, a.m, b.m)
    return PGUElement(a.model, canon_tuple(a.model, m), _canonical=True)


def pgu_inv(a: PGUElement) -> PGUElement:
    t = a.model.tower
    adj = _mat_adjugate(t, a.m)
    det = _mat_det(t, a.m)
    inv = _mat_scale(t, t.inv(det), adj)
    return element(a.model, inv)


def pgu_canon(model: HermitianModel, m) -> PGUElement:
    return element(model, m)


def is_scalar_matrix(t: FieldTower, m) -> bool:
    if m[1] or m[2] or m[3] or m[5] or m[6] or m[7]:
        return False
    return m[0] == m[4] == m[8] != 0


def order_cap(q: int) -> int:
    return 8 * q * q


@functools.lru_cache(maxsize=None)
def _order_families(q: int, p: int):
    fams = [p * (q + 1), (q + 1) ** 2, q * q - 1, q * q - q + 1]
    if p == 2:
        fams.append(4)
    return tuple(fams)


def element_order(a: PGUElement) -> int:
    """Least k >= 1 with a^k projectively trivial, by iterated multiplication."""
    model = a.model
    t = model.tower
    q = t.q
    cap = order_cap(q)
    acc = a.m
    k = 1
    while not is_scalar_matrix(t, acc):
        acc = _mat_mul(t, acc, a.m)
        k += 1
        if k > cap:
            raise OrderCapExceeded("order cap exceeded; non-unitary matrix slipped through")
    fams = _order_families(q, t.p)
    assert any(f % k == 0 for f in fams), f"order {k} outside PGU(3,{q}) order families"
    return k


def apply_to_point(a: PGUElement, pt):
    """Image of a quadratic-level point, normalized."""
    t = a.model.tower
    out = []
    for r in range(3):
        acc = 0
        for k in range(3):
            acc = t.add(acc, t.mul(a.m[3 * r + k], pt[k]))
        out.append(acc)
    return a.model.normalize_point(tuple(out))


# ---------------------------------------------------------------------------
# recipe constructors
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def get_model(q: int, tag: str) -> HermitianModel:
    p, n = _pn_of_q(q)
    tower = field_make(p, n)
    if not tower.has_tables:
        raise UnsupportedSize(f"group layer requires q <= 64, got {q}")
    return HermitianModel(tower, tag)


def _pn_of_q(q):
    f = factorize(q)
    if len(f) != 1:
        raise UnsupportedSize(f"{q} is not a prime power")
    [(p, n)] = f.items()
    return p, n


def make_homology(q: int, lam_code: int = None, *, order: int = None) -> PGUElement:
    """diag(lambda, 1, 1) in the fermat model; lambda^{q+1} = 1."""
    model = get_model(q, FERMAT)
    t = model.tower
    if lam_code is None:
        lam_code = t.element_of_order(order if order else q + 1)
    if t.pow(lam_code, q + 1) != 1 or lam_code == 1:
        raise ConstraintViolated("homology needs lambda^{q+1} = 1, lambda != 1")
    return element(model, (lam_code, 0, 0, 0, 1, 0, 0, 0, 1))


def make_diag(q: int, lam: int, mu: int) -> PGUElement:
    """diag(lambda, mu, 1) in the fermat model; both (q+1)-st roots of 1."""
    model = get_model(q, FERMAT)
    t = model.tower
    if t.pow(lam, q + 1) != 1 or t.pow(mu, q + 1) != 1:
        raise ConstraintViolated("diag entries must satisfy x^{q+1} = 1")
    return element(model, (lam, 0, 0, 0, mu, 0, 0, 0, 1))


def make_B2(q: int, mu: int) -> PGUElement:
    """diag(mu^{q+1}, mu, 1) in the norm-trace model, rescaled to isometry."""
    model = get_model(q, NORM_TRACE)
    t = model.tower
    if mu == 0:
        raise ConstraintViolated("mu must be nonzero")
    return element(model, (t.pow(mu, q + 1), 0, 0, 0, mu, 0, 0, 0, 1))


def make_tau(q: int, a: int, b: int, c: int) -> PGUElement:
    """Borel element [[a^{q+1}, a b^q, c], [0, a, b], [0, 0, 1]], norm-trace.

    Requires a != 0 and b^{q+1} = c^q + c; a similitude with factor a^{q+1}.
    """
    model = get_model(q, NORM_TRACE)
    t = model.tower
    if a == 0:
        raise ConstraintViolated("a must be nonzero")
    if t.norm(b) != t.trace(c):
        raise ConstraintViolated("need b^{q+1} = c^q + c")
    m = (t.pow(a, q + 1), t.mul(a, t.conj_code(b)), c, 0, a, b, 0, 0, 1)
    return element(model, m)


def tau_params(el: PGUElement):
    """(a, b, c) of a Borel element given in tau form (up to scalar)."""
    t = el.model.tower
    m = el.m
    if m[3] or m[6] or m[7] or m[8] == 0:
        raise ConstraintViolated("element is not upper-triangular tau form")
    s = t.inv(m[8])
    return (t.mul(s, m[4]), t.mul(s, m[5]), t.mul(s, m[2]))


def elation_parameters(q: int):
    """Nonzero c with c^q + c = 0, ascending (centers of type-C recipes)."""
    t = get_model(q, NORM_TRACE).tower
    return [c for c in range(1, t.Q) if t.trace(c) == 0]


def make_swap_xt(q: int) -> PGUElement:
    """(X, Y, T) -> (T, Y, X) in the norm-trace model."""
    model = get_model(q, NORM_TRACE)
    return element(model, (0, 0, 1, 0, 1, 0, 1, 0, 0))


def make_inverting_b2(q: int, order: int) -> PGUElement:
    """Least-parameter element J . diag(a^{q+1}, a, 1) of the given order.

    J is the X<->T swap; the result inverts every diagonal norm-trace torus
    element, which is how the dihedral and C13:C4 / C13:C8 extensions of
    B2-type cyclic groups arise.
    """
    model = get_model(q, NORM_TRACE)
    t = model.tower
    J = (0, 0, 1, 0, 1, 0, 1, 0, 0)
    for a in range(1, t.Q):
        m = (0, 0, 1, 0, a, 0, t.pow(a, q + 1), 0, 0)  # J . diag(a^{q+1}, a, 1)
        try:
            el = element(model, m)
        except NotUnitary:
            continue
        if el.order == order:
            return el
    raise ConstructionFailed(f"no inverting element of order {order} at q={q}")


def make_monomial(q: int, perm, diag) -> PGUElement:
    """Permutation-with-scales matrix in the fermat model."""
    model = get_model(q, FERMAT)
    m = [0] * 9
    for r in range(3):
        m[3 * r + perm[r]] = diag[r]
    return element(model, tuple(m))


def make_singer(q: int) -> PGUElement:
    """Type-B3 generator of projective order q^2 - q + 1.

    Multiplication by a norm-one generator gamma on F_{q^6} viewed as 3-space
    over F_{q^2} is unitary for the trace form Tr(u^{q^3} v); a Hermitian
    Gram-Schmidt then conjugates it into the norm-trace model.  The stated
    order and type are re-verified on the result.
    """
    el, _ = _singer_pair(q)
    return el


def make_singer_normalizer(q: int) -> PGUElement:
    """Order-3 element normalizing the Singer group: x -> x^{q^2} transported."""
    _, el = _singer_pair(q)
    return el


@functools.lru_cache(maxsize=None)
def _singer_pair(q: int):
    model = get_model(q, NORM_TRACE)
    t = model.tower
    K = q**6
    # gamma generating the norm-one subgroup of order q^3 + 1
    g6 = _sextic_generator(t)
    gamma = t.s_pow(g6, (K - 1) // (q**3 + 1))

    basis = [1, t.s_pack(0, 1, 0), t.s_pack(0, 0, 1)]

    def tr_form(u, v):
        w = t.s_mul(t.s_pow(u, q**3), v)
        # Tr_{F_{q^6}/F_{q^2}}(w) = w + w^{q^2} + w^{q^4}
        w2 = t.s_pow_q(t.s_pow_q(w))
        w4 = t.s_pow_q(t.s_pow_q(w2))
        s = t.s_add(t.s_add(w, w2), w4)
        assert t.s_is_quadratic(s)
        return s % t.Q

    def mult_matrix(alpha):
        cols = []
        for b in basis:
            prod = t.s_mul(alpha, b)
            cols.append(t.s_digits(prod))
        # columns are coordinates; row-major matrix
        return tuple(cols[c][r] for r in range(3) for c in range(3))

    gram = tuple(tr_form(basis[i], basis[j]) for i in range(3) for j in range(3))
    mg = mult_matrix(gamma)
    # Frobenius x -> x^{q^2} is F_{q^2}-linear and unitary for the same form
    frob_cols = [t.s_digits(t.s_pow_q(t.s_pow_q(b))) for b in basis]
    mf = tuple(frob_cols[c][r] for r in range(3) for c in range(3))

    C = _gram_to_model_basis(t, gram, model.gram)
    Ci = _mat_inv_generic(t, C)
    singer = element(model, _mat_mul(t, _mat_mul(t, Ci, mg), C))
    normer = element(model, _mat_mul(t, _mat_mul(t, Ci, mf), C))
    if singer.order != q * q - q + 1:
        raise ConstructionFailed("singer element has wrong order")
    if normer.order != 3:
        raise ConstructionFailed("singer normalizer element has wrong order")
    return singer, normer


def _sextic_generator(t: FieldTower):
    K = t.q**6
    facs = factorize(K - 1)
    a = t.s_pack(0, 1, 0)
    while True:
        if all(t.s_pow(a, (K - 1) // r) != 1 for r in facs):
            return a
        a += 1
        if a >= K:
            raise ConstructionFailed("no sextic generator found")


def _gram_to_model_basis(t: FieldTower, gram_src, gram_dst):
    """C with C* . gram_src . C = gram_dst, by Hermitian Gram-Schmidt.

    Both forms are nondegenerate Hermitian over F_{q^2}, hence congruent;
    each is first diagonalized to the identity, then the two transforms are
    composed.  Deterministic: pivots and norm preimages are least-code.
    """
    A = _diagonalize_to_identity(t, gram_src)
    B = _diagonalize_to_identity(t, gram_dst)
    # A* src A = I = B* dst B  =>  (A B^{-1})* src (A B^{-1}) = dst
    return _mat_mul(t, A, _mat_inv_generic(t, B))


def _diagonalize_to_identity(t: FieldTower, gram):
    def form(u, v):
        acc = 0
        for i in range(3):
            ui = t.conj_code(u[i])
            if ui:
                for j in range(3):
                    if gram[3 * i + j]:
                        acc = t.add(acc, t.mul(t.mul(ui, gram[3 * i + j]), v[j]))
        return acc

    def pool():
        # unit vectors first, then two-coordinate combinations, least-code
        for i in range(3):
            v = [0, 0, 0]
            v[i] = 1
            yield tuple(v)
        for i in range(3):
            for j in range(3):
                if i == j:
                    continue
                for s in range(1, t.Q):
                    v = [0, 0, 0]
                    v[i] = 1
                    v[j] = s
                    yield tuple(v)

    basis = []
    while len(basis) < 3:
        found = None
        for v in pool():
            w = list(v)
            for u in basis:
                c = form(tuple(u), tuple(w))  # basis vectors have unit norm
                w = [t.sub(w[i], t.mul(c, u[i])) for i in range(3)]
            if any(w) and form(tuple(w), tuple(w)) != 0:
                found = w
                break
        if found is None:
            raise ConstructionFailed("Gram-Schmidt found no anisotropic vector")
        nu = t.nth_root(form(tuple(found), tuple(found)), t.q + 1)
        nui = t.inv(nu)
        basis.append([t.mul(nui, c) for c in found])
    # columns are the basis vectors
    return tuple(basis[c][r] for r in range(3) for c in range(3))


def _mat_inv_generic(t: FieldTower, m):
    adj = _mat_adjugate(t, m)
    det = _mat_det(t, m)
    return _mat_scale(t, t.inv(det), adj)


def stab_point_gens(q: int, model_tag: str):
    """Generators of the full stabilizer of a standard off-curve point.

    Fermat model: point (0,0,1), block U(2) x U(1) on (X,Y)+(T); norm-trace
    model: point (0,1,0), block GU(2) x U(1) on (X,T)+(Y).  The stabilizer
    has order q(q-1)(q+1)^2; generation is the classical one (SL(2) from its
    unipotents resp. a mixing rotation, norm-surjective torus, and the
    determinant/center scalings) and is cross-checked by every orbit
    computation run inside it.
    """
    t = get_model(q, model_tag).tower
    model = get_model(q, model_tag)
    z = t.element_of_order(q + 1)
    if model_tag == FERMAT:
        # mixing rotation [[a, -c^q], [c, a^q]] with a^{q+1} + c^{q+1} = 1
        found = None
        for a in range(1, t.Q):
            na = t.norm(a)
            for c in range(1, t.Q):
                if t.add(na, t.norm(c)) == 1:
                    found = (a, c)
                    break
            if found:
                break
        a, c = found
        mix = element(model, (a, t.neg(t.conj_code(c)), 0, c, t.conj_code(a), 0, 0, 0, 1))
        return [
            element(model, (z, 0, 0, 0, 1, 0, 0, 0, 1)),
            element(model, (1, 0, 0, 0, z, 0, 0, 0, 1)),
            element(model, (0, 1, 0, 1, 0, 0, 0, 0, 1)),
            mix,
        ]
    # norm-trace: hyperbolic pair (X, T), Y fixed up to scaling
    theta = next(cc for cc in range(1, t.Q) if t.trace(cc) == 0)
    ag = t.generator
    return [
        element(model, (ag, 0, 0, 0, 1, 0, 0, 0, t.inv(t.conj_code(ag)))),
        element(model, (1, 0, theta, 0, 1, 0, 0, 0, 1)),
        element(model, (1, 0, 0, 0, 1, 0, theta, 0, 1)),
        element(model, (1, 0, 0, 0, z, 0, 0, 0, 1)),
    ]


def stab_point_order(q: int) -> int:
    return q * (q - 1) * (q + 1) ** 2


def triangle_stab_gens(q: int):
    """Generators of the self-polar-triangle (monomial) stabilizer, fermat."""
    t = get_model(q, FERMAT).tower
    z = t.element_of_order(q + 1)
    return [
        make_diag(q, z, 1),
        make_diag(q, 1, z),
        make_monomial(q, (1, 0, 2), (1, 1, 1)),
        make_monomial(q, (2, 0, 1), (1, 1, 1)),
    ]


def triangle_stab_order(q: int) -> int:
    return 6 * (q + 1) ** 2


def sylow_recipe(q: int, m: int):
    """Generators of a Sylow m-subgroup, per the diagonal/Borel recipes."""
    p, n = _pn_of_q(q)
    model_f = get_model(q, FERMAT)
    t = model_f.tower
    if m == p:
        # full unipotent group at P_inf: tau(1, b, c(b)) over a basis of
        # F_{q^2} plus the pure elations
        gens = []
        for b in _fp_basis_codes(t):
            gens.append(make_tau(q, 1, b, _c_for_b(t, b)))
        for c in _trace_zero_basis(t):
            gens.append(make_tau(q, 1, 0, c))
        return gens
    if m == 2 and p != 2:
        # wreath-type Sylow 2: the (q+1)-torus 2-part plus a swap
        s = (q + 1) & -(q + 1)  # 2-part of q+1
        z = t.element_of_order(s)
        return [
            make_diag(q, z, 1),
            make_diag(q, 1, z),
            make_monomial(q, (1, 0, 2), (1, 1, 1)),
        ]
    if m == 3 and p != 3 and (q + 1) % 3 == 0:
        s = 1
        qq = q + 1
        while qq % 3 == 0:
            s *= 3
            qq //= 3
        z = t.element_of_order(s)
        return [
            make_diag(q, z, 1),
            make_diag(q, 1, z),
            make_monomial(q, (2, 0, 1), (1, 1, 1)),
        ]
    if m not in (2, 3) and (q + 1) % m == 0 and m != p:
        # abelian C_{m^s} x C_{m^s} inside the diagonal torus
        s = 1
        qq = q + 1
        while qq % m == 0:
            s *= m
            qq //= m
        z = t.element_of_order(s)
        return [make_diag(q, z, 1), make_diag(q, 1, z)]
    if m % 2 == 1 and (q - 1) % m == 0 and m != p:
        # cyclic part of the B2 torus diag(a^{q+1}, a, 1)
        s = 1
        qq = q * q - 1
        while qq % m == 0:
            s *= m
            qq //= m
        z = t.element_of_order(s)
        return [make_B2(q, z)]
    raise UnsupportedPrime(f"no Sylow recipe for m={m} at q={q}")


def _fp_basis_codes(t: FieldTower):
    return [t.p**i for i in range(2 * t.n)]


def _trace_zero_basis(t: FieldTower):
    """F_p-basis of the trace-zero additive subgroup of F_{q^2}."""
    seen = {0}
    basis = []
    for c in range(1, t.Q):
        if t.trace(c) == 0 and c not in seen:
            basis.append(c)
            span = list(seen)
            for s in span:
                acc = s
                for _ in range(t.p - 1):
                    acc = t.add(acc, c)
                    seen.add(acc)
            if len(seen) == t.q:
                break
    return basis


def _c_for_b(t: FieldTower, b):
    """Least c with c^q + c = b^{q+1}."""
    target = t.norm(b)
    for c in range(t.Q):
        if t.trace(c) == target:
            return c
    raise ConstructionFailed("no c found")  # pragma: no cover


def additive_span(t: FieldTower, gens):
    """Additive F_p-span of the given quadratic codes."""
    seen = {0}
    frontier = [0]
    for g in gens:
        new = []
        for s in list(seen):
            acc = s
            for _ in range(t.p - 1):
                acc = t.add(acc, g)
                if acc not in seen:
                    seen.add(acc)
                    new.append(acc)
        frontier += new
    # close under repeated addition of generators
    changed = True
    while changed:
        changed = False
        for g in gens:
            for s in list(seen):
                v = t.add(s, g)
                if v not in seen:
                    seen.add(v)
                    changed = True
    return sorted(seen)


def make_unipotent_section(q: int, b_gens, w_gens=(), c_rule="least"):
    """Generators tau(1, b_i, c(b_i)) plus central tau(1, 0, w_j).

    c_rule 'least' takes the least valid c per generator; 'half-norm' takes
    c = b^{q+1}/2 (p odd), which is exactly the choice inverted by the
    involution diag(1, -1, 1) and keeps dihedral extensions tight.
    """
    t = get_model(q, NORM_TRACE).tower
    gens = []
    for b in b_gens:
        if c_rule == "half-norm":
            if t.p == 2:
                raise ConstraintViolated("half-norm rule needs odd p")
            c = t.mul(t.norm(b), t.inv(2 % t.p))
        else:
            c = _c_for_b(t, b)
        gens.append(make_tau(q, 1, b, c))
    for w in w_gens:
        if t.trace(w) != 0:
            raise ConstraintViolated("central parameters must have zero trace")
        gens.append(make_tau(q, 1, 0, w))
    return gens


# ---------------------------------------------------------------------------
# batch closure over matrices
# ---------------------------------------------------------------------------

def closure_elements(gens, cap: int = 2_000_000):
    """All elements of <gens> as PGUElements, deterministic order.

    BFS over canonical matrices (batched once the frontier grows); raises
    CapExceeded past `cap`.
    """
    if not gens:
        raise ConstraintViolated("need at least one generator")
    model = gens[0].model
    t = model.tower
    ident = identity(model)
    gen_list = list(dict.fromkeys(gens))
    gen_mats = [np.array(g.m, dtype=np.int64) for g in gen_list]
    mulq = t.mul_t.astype(np.int64)
    addq = t.add_t.astype(np.int64)
    scalars = [int(s) for s in model.unitary_scalars]

    seen = {np.array(ident.m, dtype=np.uint16).tobytes()}
    rows = [np.array(ident.m, dtype=np.uint16)]
    frontier = np.array([ident.m], dtype=np.int64)
    while frontier.size:
        new_rows = []
        for gm in gen_mats:
            prod = np.zeros((frontier.shape[0], 9), dtype=np.int64)
            for r in range(3):
                for c in range(3):
                    acc = np.zeros(frontier.shape[0], dtype=np.int64)
                    for k in range(3):
                        acc = addq[acc, mulq[frontier[:, 3 * r + k], gm[3 * k + c]]]
                    prod[:, 3 * r + c] = acc
            best = None
            for s in scalars:
                cand = prod if s == 1 else mulq[s, prod]
                if best is None:
                    best = cand.copy()
                else:
                    swap = _batch_lex_less(cand, best)
                    best[swap] = cand[swap]
            bb = best.astype(np.uint16)
            for row in bb:
                key = row.tobytes()
                if key not in seen:
                    seen.add(key)
                    rows.append(row)
                    new_rows.append(row)
                    if len(seen) > cap:
                        raise CapExceeded(f"closure exceeded cap {cap}")
        frontier = np.array(new_rows, dtype=np.int64) if new_rows else np.empty((0, 9), dtype=np.int64)
    out = [
        PGUElement(model, tuple(int(c) for c in row), _canonical=True)
        for row in sorted(rows, key=lambda r: tuple(r))
    ]
    return out


def _batch_lex_less(a, b):
    less = np.zeros(a.shape[0], dtype=bool)
    decided = np.zeros(a.shape[0], dtype=bool)
    for c in range(a.shape[1]):
        lt = (~decided) & (a[:, c] < b[:, c])
        gt = (~decided) & (a[:, c] > b[:, c])
        less |= lt
        decided |= lt | gt
    return less


def conjugate(g: PGUElement, h: PGUElement) -> PGUElement:
    """g h g^{-1}."""
    return pgu_mul(pgu_mul(g, h), pgu_inv(g))


def change_model(el: PGUElement, dst: HermitianModel) -> PGUElement:
    """Transport an element along the deterministic change of basis."""
    src = el.model
    if src.tag == dst.tag:
        return el
    t = src.tower
    C = _model_change_matrix(t, src, dst)
    Ci = _mat_inv_generic(t, C)
    return element(dst, _mat_mul(t, _mat_mul(t, Ci, el.m), C))


@functools.lru_cache(maxsize=None)
def _model_change_cached(q: int, src_tag: str, dst_tag: str):
    src = get_model(q, src_tag)
    dst = get_model(q, dst_tag)
    t = src.tower
    return _gram_to_model_basis(t, src.gram, dst.gram)


def _model_change_matrix(t: FieldTower, src: HermitianModel, dst: HermitianModel):
    # C maps dst-coordinates to src-coordinates: C* gram_src C = gram_dst
    return _model_change_cached(t.q, src.tag, dst.tag)


def model_point_bijection_ok(q: int, level_cap: int = 5) -> bool:
    """Change of basis maps one model's point set onto the other's (q <= 5)."""
    if q > level_cap:
        raise EnumerationTooLarge("bijection check limited to q <= 5")
    src = get_model(q, FERMAT)
    dst = get_model(q, NORM_TRACE)
    t = src.tower
    C = _model_change_matrix(t, src, dst)
    pts = dst.rational_points()
    mapped = set()
    for p in pts:
        v = tuple(int(c) for c in p)
        out = []
        for r in range(3):
            acc = 0
            for k in range(3):
                acc = t.add(acc, t.mul(C[3 * r + k], v[k]))
            out.append(acc)
        w = src.normalize_point(tuple(out))
        if not src.on_curve(w):
            return False
        mapped.add(w)
    return len(mapped) == len(pts)
