"""Field tower F_p < F_{q^2} < F_{q^6} with integer-coded elements.

Elements of F_{q^2} = F_p[x]/f2 are coded as integers in [0, q^2): the code of
a residue sum(c_i x^i) is sum(c_i p^i), digits low-degree first.  Elements of
F_{q^6} = F_{q^2}[y]/g3 are coded as d0 + d1*Q + d2*Q**2 with Q = q^2 and each
digit a quadratic code, so the embedding F_{q^2} -> F_{q^6} is the identity on
codes.  Both moduli are the lexicographically least monic irreducibles of
their degree, coefficients compared low-degree first, which pins down every
code in every run.

For q <= 64 (Q <= 4096) the quadratic level gets full add/mul value tables
plus exp/log, which is what the group-theoretic layers run on.  Larger fields
(field_make allows p^n up to 2^10) fall back to generic polynomial
arithmetic and only support the field operations themselves.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import DegreeTooHigh, NotMonic, NotPrime, UnsupportedSize, WrongLevel

TABLE_LIMIT = 4096  # largest Q for which value tables are built
SPLIT_SEED = 20259  # PRNG seed for equal-degree splitting, recorded in reports

LEVEL_BASE = "base"
LEVEL_QUADRATIC = "quadratic"
LEVEL_SEXTIC = "sextic"


def is_prime(m: int) -> bool:
    if m < 2:
        return False
    d = 2
    while d * d <= m:
        if m % d == 0:
            return False
        d += 1
    return True


def factorize(m: int) -> dict[int, int]:
    out: dict[int, int] = {}
    d = 2
    while d * d <= m:
        while m % d == 0:
            out[d] = out.get(d, 0) + 1
            m //= d
        d += 1
    if m > 1:
        out[m] = out.get(m, 0) + 1
    return out


# ---------------------------------------------------------------------------
# polynomial helpers over F_p (coefficient tuples, low degree first)
# ---------------------------------------------------------------------------

def _ptrim(a):
    i = len(a)
    while i > 0 and a[i - 1] == 0:
        i -= 1
    return tuple(a[:i])


def _pmul_fp(a, b, p):
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return _ptrim(out)


def _pmod_fp(a, f, p):
    # f monic
    a = list(a)
    df = len(f) - 1
    for i in range(len(a) - 1, df - 1, -1):
        c = a[i] % p
        if c:
            a[i] = 0
            for j in range(df):
                a[i - df + j] = (a[i - df + j] - c * f[j]) % p
    return _ptrim(a)


def _psub_fp(a, b, p):
    m = max(len(a), len(b))
    a = tuple(a) + (0,) * (m - len(a))
    b = tuple(b) + (0,) * (m - len(b))
    return _ptrim(tuple((x - y) % p for x, y in zip(a, b)))


def _pgcd_fp(a, b, p):
    a, b = _ptrim(a), _ptrim(b)
    while b:
        inv = pow(b[-1], p - 2, p)
        bm = tuple(c * inv % p for c in b)
        a, b = bm, _pmod_fp(a, bm, p)
    return a


def _ppowmod_fp(base, e, f, p):
    result = (1,)
    b = _pmod_fp(base, f, p)
    while e:
        if e & 1:
            result = _pmod_fp(_pmul_fp(result, b, p), f, p)
        b = _pmod_fp(_pmul_fp(b, b, p), f, p)
        e >>= 1
    return result


def _irreducible_fp(f, p) -> bool:
    """Full irreducibility test for a monic poly over F_p."""
    d = len(f) - 1
    if d <= 0:
        return False
    x = (0, 1)
    if _psub_fp(_ppowmod_fp(x, p**d, f, p), x, p):
        return False
    for r in factorize(d):
        diff = _psub_fp(_ppowmod_fp(x, p ** (d // r), f, p), x, p)
        if len(_pgcd_fp(diff, f, p)) - 1 != 0:
            return False
    return True


def _least_irreducible_fp(p, d):
    """Lexicographically least monic irreducible of degree d over F_p."""
    # lex order on (c_0, c_1, ..., c_{d-1}); itertools.product-style odometer
    # with the last coordinate fastest gives exactly that order.
    import itertools

    for cs in itertools.product(range(p), repeat=d):
        if cs[0] == 0:
            continue  # divisible by x
        f = cs + (1,)
        if _irreducible_fp(f, p):
            return f
    raise UnsupportedSize(f"no irreducible of degree {d} over F_{p}")


# ---------------------------------------------------------------------------
# the tower
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FieldElement:
    """Serialization-boundary view of a field element."""

    level: str
    coeffs: tuple  # base-p ints (quadratic) or 3 quadratic coeff tuples (sextic)

    def to_json(self):
        if self.level == LEVEL_SEXTIC:
            return [list(c) for c in self.coeffs]
        return list(self.coeffs)


class FieldTower:
    """Arithmetic for F_p, F_{q^2} and F_{q^6} at fixed (p, n)."""

    def __init__(self, p: int, n: int):
        if not is_prime(p):
            raise NotPrime(f"p={p} is not prime")
        q = p**n
        if q > 2**10:
            raise UnsupportedSize(f"q={q} exceeds 2^10")
        self.p = p
        self.n = n
        self.q = q
        self.Q = q * q
        self.f2 = _least_irreducible_fp(p, 2 * n)
        self._init_quadratic()
        self.g3 = self._least_irreducible_cubic()
        self._sextic_flat = None  # lazy flat tables for q <= 4
        self._ypow_p = None

    # -- quadratic level ----------------------------------------------------

    def _init_quadratic(self):
        p, Q = self.p, self.Q
        self.has_tables = Q <= TABLE_LIMIT
        if not self.has_tables:
            return
        d = 2 * self.n
        # digit decomposition of all codes, low degree first
        codes = np.arange(Q, dtype=np.int64)
        digits = np.empty((Q, d), dtype=np.int64)
        t = codes.copy()
        for i in range(d):
            digits[:, i] = t % p
            t //= p
        self._digits = digits
        # addition: digitwise mod p
        dig_sum = (digits[:, None, :] + digits[None, :, :]) % p
        weights = p ** np.arange(d, dtype=np.int64)
        self.add_t = (dig_sum * weights).sum(axis=2).astype(np.uint16)
        self.neg_t = self.add_row_inverse()
        # multiplication through exp/log on a generator
        self.exp_t, self.log_t = self._build_exp_log()
        lg = self.log_t
        Qm1 = Q - 1
        mul = np.zeros((Q, Q), dtype=np.uint16)
        ls = (lg[1:, None] + lg[None, 1:]) % Qm1
        mul[1:, 1:] = self.exp_t[ls]
        self.mul_t = mul
        inv = np.zeros(Q, dtype=np.uint16)
        inv[1:] = self.exp_t[(Qm1 - lg[1:]) % Qm1]
        self.inv_t = inv
        # Frobenius x -> x^p and conjugation x -> x^q as index maps
        frob = np.zeros(Q, dtype=np.uint16)
        frob[1:] = self.exp_t[(lg[1:] * p) % Qm1]
        self.frobp_t = frob
        conj = np.arange(Q, dtype=np.uint16)
        for _ in range(self.n):
            conj = frob[conj]
        self.conj_t = conj

    def add_row_inverse(self):
        p, d, Q = self.p, 2 * self.n, self.Q
        dig = self._digits
        weights = p ** np.arange(d, dtype=np.int64)
        return (((p - dig) % p) * weights).sum(axis=1).astype(np.uint16)

    def _build_exp_log(self):
        """Discrete log tables on the least-code multiplicative generator."""
        Q = self.Q
        order_facs = factorize(Q - 1)
        for g in range(2, Q):
            if all(self._pow_generic(g, (Q - 1) // r) != 1 for r in order_facs):
                break
        else:  # pragma: no cover - a generator always exists
            raise UnsupportedSize("no generator found")
        self.generator = g
        exp_t = np.zeros(2 * (Q - 1), dtype=np.uint16)
        log_t = np.zeros(Q, dtype=np.int64)
        a = 1
        for k in range(Q - 1):
            exp_t[k] = a
            log_t[a] = k
            a = self._mul_generic(a, g)
        exp_t[Q - 1 :] = exp_t[: Q - 1]
        return exp_t, log_t

    # generic (table-free) quadratic arithmetic, used to bootstrap tables and
    # to serve towers beyond TABLE_LIMIT
    def _to_poly(self, code):
        p, d = self.p, 2 * self.n
        out = []
        for _ in range(d):
            out.append(code % p)
            code //= p
        return _ptrim(out)

    def _from_poly(self, poly):
        code = 0
        for c in reversed(poly):
            code = code * self.p + c
        return code

    def _mul_generic(self, a, b):
        prod = _pmul_fp(self._to_poly(a), self._to_poly(b), self.p)
        return self._from_poly(_pmod_fp(prod, self.f2, self.p))

    def _add_generic(self, a, b):
        p = self.p
        pa, pb = self._to_poly(a), self._to_poly(b)
        m = max(len(pa), len(pb))
        pa += (0,) * (m - len(pa))
        pb += (0,) * (m - len(pb))
        return self._from_poly(_ptrim(tuple((x + y) % p for x, y in zip(pa, pb))))

    def _pow_generic(self, a, e):
        r = 1
        while e:
            if e & 1:
                r = self._mul_generic(r, a)
            a = self._mul_generic(a, a)
            e >>= 1
        return r

    # public scalar ops on quadratic codes
    def add(self, a, b):
        if self.has_tables:
            return int(self.add_t[a, b])
        return self._add_generic(a, b)

    def neg(self, a):
        if self.has_tables:
            return int(self.neg_t[a])
        p = self.p
        return self._from_poly(tuple((p - c) % p for c in self._to_poly(a)))

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        if self.has_tables:
            return int(self.mul_t[a, b])
        return self._mul_generic(a, b)

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of 0")
        if self.has_tables:
            return int(self.inv_t[a])
        return self._pow_generic(a, self.Q - 2)

    def pow(self, a, e):
        if a == 0:
            return 0 if e else 1
        if self.has_tables:
            return int(self.exp_t[(int(self.log_t[a]) * e) % (self.Q - 1)])
        return self._pow_generic(a, e % (self.Q - 1))

    def conj_code(self, a):
        """x -> x^q on quadratic codes."""
        if self.has_tables:
            return int(self.conj_t[a])
        return self._pow_generic(a, self.q)

    def norm(self, a):
        return self.mul(a, self.conj_code(a))

    def trace(self, a):
        return self.add(a, self.conj_code(a))

    def in_subfield_q(self, a) -> bool:
        return self.conj_code(a) == a

    def element_of_order(self, m: int) -> int:
        """Least-code element of exact multiplicative order m in F_{q^2}."""
        if m == 1:
            return 1
        if (self.Q - 1) % m != 0:
            raise UnsupportedSize(f"no element of order {m} in F_{self.Q}")
        base = self.pow(self.generator, (self.Q - 1) // m)
        facs = factorize(m)
        best = None
        a = base
        for _ in range(m):
            if all(self.pow(a, m // r) != 1 for r in facs):
                if best is None or a < best:
                    best = a
            a = self.mul(a, base)
        return best

    def nth_root(self, a: int, k: int) -> int:
        """Some x with x^k = a, when gcd(k, Q-1) divides log(a)."""
        if a == 0:
            return 0
        la = int(self.log_t[a]) if self.has_tables else self._log_generic(a)
        Qm1 = self.Q - 1
        import math

        d = math.gcd(k, Qm1)
        if la % d != 0:
            raise UnsupportedSize(f"{a} has no {k}-th root")
        kk = (k // d) % (Qm1 // d)
        x = (la // d) * pow(kk, -1, Qm1 // d) % (Qm1 // d)
        return self.pow(self.generator, x)

    def _log_generic(self, a):
        x, g = 1, self.generator
        for k in range(self.Q - 1):
            if x == a:
                return k
            x = self._mul_generic(x, g)
        raise UnsupportedSize("log of 0")

    def subfield_q_codes(self):
        """All codes lying in the subfield F_q, ascending."""
        return [a for a in range(self.Q) if self.in_subfield_q(a)]

    def trace_zero_codes(self):
        return [a for a in range(self.Q) if self.trace(a) == 0]

    # -- cubic modulus and sextic level -------------------------------------

    def _least_irreducible_cubic(self):
        """Lex-least monic cubic over F_{q^2} with no root in F_{q^2}."""
        import itertools

        rng = range(self.Q)
        for c0, c1, c2 in itertools.product(rng, rng, rng):
            if c0 == 0:
                continue
            if self._cubic_rootfree((c0, c1, c2, 1)):
                return (c0, c1, c2, 1)
        raise UnsupportedSize("no irreducible cubic found")

    def _cubic_rootfree(self, f) -> bool:
        # no linear factor <=> gcd(x^Q - x, f) = 1, via modexp over F_{q^2}
        xq = self.q2poly_powmod((0, 1), self.Q, f)
        diff = self.q2poly_sub(xq, (0, 1))
        return len(self.q2poly_gcd(diff, f)) - 1 == 0

    # polynomials over the quadratic level (tuples of codes, low degree first)
    def q2poly_trim(self, a):
        i = len(a)
        while i > 0 and a[i - 1] == 0:
            i -= 1
        return tuple(a[:i])

    def q2poly_mul(self, a, b):
        if not a or not b:
            return ()
        out = [0] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    out[i + j] = self.add(out[i + j], self.mul(ai, bj))
        return self.q2poly_trim(out)

    def q2poly_sub(self, a, b):
        m = max(len(a), len(b))
        a = tuple(a) + (0,) * (m - len(a))
        b = tuple(b) + (0,) * (m - len(b))
        return self.q2poly_trim(tuple(self.sub(x, y) for x, y in zip(a, b)))

    def q2poly_mod(self, a, f):
        a = list(a)
        df = len(f) - 1
        flead_inv = self.inv(f[-1])
        for i in range(len(a) - 1, df - 1, -1):
            c = self.mul(a[i], flead_inv)
            if c:
                a[i] = 0
                for j in range(df):
                    a[i - df + j] = self.sub(a[i - df + j], self.mul(c, f[j]))
        return self.q2poly_trim(a)

    def q2poly_gcd(self, a, b):
        a, b = self.q2poly_trim(a), self.q2poly_trim(b)
        while b:
            a, b = b, self.q2poly_mod(a, b)
        if a:
            lead_inv = self.inv(a[-1])
            a = tuple(self.mul(c, lead_inv) for c in a)
        return a

    def q2poly_powmod(self, base, e, f):
        result = (1,)
        b = self.q2poly_mod(base, f)
        while e:
            if e & 1:
                result = self.q2poly_mod(self.q2poly_mul(result, b), f)
            b = self.q2poly_mod(self.q2poly_mul(b, b), f)
            e >>= 1
        return result

    # sextic codes: d0 + d1*Q + d2*Q^2
    def s_digits(self, a):
        Q = self.Q
        return (a % Q, (a // Q) % Q, a // (Q * Q))

    def s_pack(self, d0, d1, d2):
        Q = self.Q
        return d0 + Q * d1 + Q * Q * d2

    def s_add(self, a, b):
        if self._sextic_flat is not None:
            return int(self._sextic_flat[1][a, b])
        da, db = self.s_digits(a), self.s_digits(b)
        return self.s_pack(*(self.add(x, y) for x, y in zip(da, db)))

    def s_neg(self, a):
        return self.s_pack(*(self.neg(x) for x in self.s_digits(a)))

    def s_mul(self, a, b):
        if self._sextic_flat is not None:
            return int(self._sextic_flat[0][a, b])
        d = self.s_digits(a)
        e = self.s_digits(b)
        # convolution then reduce by monic g3: y^3 = -(g0 + g1 y + g2 y^2)
        c = [0] * 5
        for i in range(3):
            if d[i]:
                for j in range(3):
                    c[i + j] = self.add(c[i + j], self.mul(d[i], e[j]))
        g0, g1, g2, _ = self.g3
        for k in (4, 3):
            ck = c[k]
            if ck:
                c[k] = 0
                c[k - 3] = self.sub(c[k - 3], self.mul(ck, g0))
                c[k - 2] = self.sub(c[k - 2], self.mul(ck, g1))
                c[k - 1] = self.sub(c[k - 1], self.mul(ck, g2))
        return self.s_pack(c[0], c[1], c[2])

    def s_pow(self, a, e):
        r = 1
        while e:
            if e & 1:
                r = self.s_mul(r, a)
            a = self.s_mul(a, a)
            e >>= 1
        return r

    def s_inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of 0")
        if self._sextic_flat is not None:
            return int(self._sextic_flat[2][a])
        return self.s_pow(a, self.q**6 - 2)

    def s_frobp(self, a):
        """x -> x^p on sextic codes."""
        if self._ypow_p is None:
            self._ypow_p = self.s_pow(self.s_pack(0, 1, 0), self.p)
        d0, d1, d2 = self.s_digits(a)
        fp = self.frobp_code
        yp = self._ypow_p
        out = fp(d0)
        out = self.s_add(out, self.s_mul(fp(d1), yp))
        out = self.s_add(out, self.s_mul(fp(d2), self.s_mul(yp, yp)))
        return out

    def frobp_code(self, a):
        if self.has_tables:
            return int(self.frobp_t[a])
        return self._pow_generic(a, self.p)

    def s_pow_q(self, a):
        for _ in range(self.n):
            a = self.s_frobp(a)
        return a

    def s_is_quadratic(self, a) -> bool:
        d0, d1, d2 = self.s_digits(a)
        return d1 == 0 and d2 == 0

    # polynomials over the sextic level
    def s6poly_mul(self, a, b):
        if not a or not b:
            return ()
        out = [0] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    out[i + j] = self.s_add(out[i + j], self.s_mul(ai, bj))
        return self._s6trim(out)

    def _s6trim(self, a):
        i = len(a)
        while i > 0 and a[i - 1] == 0:
            i -= 1
        return tuple(a[:i])

    def s6poly_mod(self, a, f):
        a = list(a)
        df = len(f) - 1
        flead_inv = self.s_inv(f[-1])
        for i in range(len(a) - 1, df - 1, -1):
            c = self.s_mul(a[i], flead_inv)
            if c:
                a[i] = 0
                for j in range(df):
                    a[i - df + j] = self.s_add(a[i - df + j], self.s_neg(self.s_mul(c, f[j])))
        return self._s6trim(a)

    def s6poly_gcd(self, a, b):
        a, b = self._s6trim(a), self._s6trim(b)
        while b:
            a, b = b, self.s6poly_mod(a, b)
        if a:
            li = self.s_inv(a[-1])
            a = tuple(self.s_mul(c, li) for c in a)
        return a

    def s6poly_powmod(self, base, e, f):
        result = (1,)
        b = self.s6poly_mod(base, f)
        while e:
            if e & 1:
                result = self.s6poly_mod(self.s6poly_mul(result, b), f)
            b = self.s6poly_mod(self.s6poly_mul(b, b), f)
            e >>= 1
        return result

    # -- flat sextic tables for tiny q (point enumeration, oracles) ---------

    def sextic_flat(self):
        """Value tables for F_{q^6} on packed codes; only for q <= 4."""
        if self.q > 4:
            raise UnsupportedSize("flat sextic tables only built for q <= 4")
        if self._sextic_flat is None:
            K = self.q**6
            Q = self.Q
            codes = np.arange(K, dtype=np.int64)
            D = np.stack([codes % Q, (codes // Q) % Q, codes // (Q * Q)], axis=1)
            mulq = self.mul_t.astype(np.int32)
            addq = self.add_t.astype(np.int32)
            g0, g1, g2, _ = self.g3
            ng = [int(self.neg_t[g0]), int(self.neg_t[g1]), int(self.neg_t[g2])]
            mul = np.empty((K, K), dtype=np.uint16)
            add = np.empty((K, K), dtype=np.uint16)
            chunk = max(1, (1 << 24) // K)
            for lo in range(0, K, chunk):
                hi = min(K, lo + chunk)
                Dc = D[lo:hi]
                conv = [np.zeros((hi - lo, K), dtype=np.int32) for _ in range(5)]
                for i in range(3):
                    for j in range(3):
                        term = mulq[Dc[:, None, i], D[None, :, j]]
                        conv[i + j] = addq[conv[i + j], term]
                for k in (4, 3):
                    ck = conv[k]
                    for d, gneg in enumerate(ng):
                        conv[k - 3 + d] = addq[conv[k - 3 + d], mulq[gneg, ck]]
                mul[lo:hi] = conv[0] + Q * conv[1] + Q * Q * conv[2]
                add[lo:hi] = (
                    addq[Dc[:, None, 0], D[None, :, 0]]
                    + Q * addq[Dc[:, None, 1], D[None, :, 1]]
                    + Q * Q * addq[Dc[:, None, 2], D[None, :, 2]]
                )
            # bootstrap inv/powq through the fresh mul table
            self._sextic_flat = (mul, add, np.zeros(K, dtype=np.uint16), None)
            inv = np.zeros(K, dtype=np.uint16)
            for a in range(1, K):
                inv[a] = self.s_pow(a, K - 2)
            powq = np.zeros(K, dtype=np.uint16)
            for a in range(K):
                powq[a] = self.s_pow_q(a)
            self._sextic_flat = (mul, add, inv, powq)
        return self._sextic_flat

    # -- serialization -------------------------------------------------------

    def element(self, code: int, level: str) -> FieldElement:
        if level == LEVEL_QUADRATIC:
            return FieldElement(level, tuple(self._to_poly_padded(code)))
        if level == LEVEL_SEXTIC:
            return FieldElement(level, tuple(tuple(self._to_poly_padded(d)) for d in self.s_digits(code)))
        if level == LEVEL_BASE:
            return FieldElement(level, (code % self.p,))
        raise WrongLevel(level)

    def _to_poly_padded(self, code):
        d = 2 * self.n
        out = []
        for _ in range(d):
            out.append(code % self.p)
            code //= self.p
        return out

    def code_of(self, elem: FieldElement) -> int:
        if elem.level == LEVEL_QUADRATIC:
            return self._from_poly(_ptrim(elem.coeffs))
        if elem.level == LEVEL_SEXTIC:
            return self.s_pack(*(self._from_poly(_ptrim(c)) for c in elem.coeffs))
        if elem.level == LEVEL_BASE:
            return elem.coeffs[0] % self.p
        raise WrongLevel(elem.level)

    def describe(self) -> dict:
        """Modulus data embedded in every report for auditability."""
        return {
            "p": self.p,
            "n": self.n,
            "q": self.q,
            "f2": list(self.f2),
            "g3": [list(self._to_poly_padded(c)) for c in self.g3],
            "split_seed": SPLIT_SEED,
        }


# ---------------------------------------------------------------------------
# spec-surface operations
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def field_make(p: int, n: int) -> FieldTower:
    """Build (and cache) the tower for q = p^n."""
    return FieldTower(p, n)


def conj(tower: FieldTower, x: FieldElement) -> FieldElement:
    if x.level != LEVEL_QUADRATIC:
        raise WrongLevel(f"conj expects quadratic level, got {x.level}")
    return tower.element(tower.conj_code(tower.code_of(x)), LEVEL_QUADRATIC)


def norm_trace(tower: FieldTower, x: FieldElement):
    if x.level != LEVEL_QUADRATIC:
        raise WrongLevel(f"norm_trace expects quadratic level, got {x.level}")
    c = tower.code_of(x)
    return (
        tower.element(tower.norm(c), LEVEL_QUADRATIC),
        tower.element(tower.trace(c), LEVEL_QUADRATIC),
    )


def roots_deg3(tower: FieldTower, poly):
    """Roots in F_{q^6} of a monic poly of degree <= 3 over F_{q^2}.

    Returns (roots, residual) where roots is a list of (sextic code, mult)
    and residual is the rootless factor (sextic-coefficient tuple; an
    irreducible quadratic over F_{q^2} ends up here since its roots live in
    F_{q^4}, not F_{q^6}).
    """
    poly = tower.q2poly_trim(poly)
    if not poly or poly[-1] != 1:
        raise NotMonic("roots_deg3 expects a monic polynomial")
    if len(poly) - 1 > 3:
        raise DegreeTooHigh("degree must be <= 3")
    f = tuple(poly)  # quadratic codes double as sextic codes
    if len(f) == 1:
        return [], f

    # x^K - x is the squarefree product of all linears over F_{q^6}, so the
    # gcd picks up each distinct root exactly once, multiplicities or not.
    K = tower.q**6
    xK = tower.s6poly_powmod((0, 1), K, f)
    r = tower.s6poly_gcd(_s6poly_sub(tower, xK, (0, 1)), f)
    distinct = _split_linear(tower, r)

    roots = []
    rem = f
    for rho in sorted(distinct):
        mult = 0
        while True:
            quo, rest = _s6poly_divmod_linear(tower, rem, rho)
            if rest != 0:
                break
            rem = quo
            mult += 1
        roots.append((rho, mult))
    return roots, rem


def _s6poly_sub(tower, a, b):
    m = max(len(a), len(b))
    a = tuple(a) + (0,) * (m - len(a))
    b = tuple(b) + (0,) * (m - len(b))
    return tower._s6trim(tuple(tower.s_add(x, tower.s_neg(y)) for x, y in zip(a, b)))


def _s6poly_div_exact(tower, a, b):
    # long division, remainder known zero
    a = list(a)
    out = [0] * (len(a) - len(b) + 1)
    binv = tower.s_inv(b[-1])
    for i in range(len(a) - 1, len(b) - 2, -1):
        c = tower.s_mul(a[i], binv)
        out[i - len(b) + 1] = c
        if c:
            for j in range(len(b)):
                a[i - len(b) + 1 + j] = tower.s_add(a[i - len(b) + 1 + j], tower.s_neg(tower.s_mul(c, b[j])))
    return tower._s6trim(out)


def _s6poly_divmod_linear(tower, a, rho):
    """Synthetic division by (x - rho); returns (quotient, remainder scalar)."""
    out = [0] * (len(a) - 1)
    acc = a[-1]
    for i in range(len(a) - 2, -1, -1):
        out[i] = acc
        acc = tower.s_add(tower.s_mul(acc, rho), a[i])
    return tower._s6trim(out), acc


def _s6poly_eval(tower, a, x):
    acc = 0
    for c in reversed(a):
        acc = tower.s_add(tower.s_mul(acc, x), c)
    return acc


def _split_linear(tower, r):
    """All roots of a product of distinct linear factors, deterministic."""
    deg = len(r) - 1
    if deg <= 0:
        return []
    if deg == 1:
        return [tower.s_neg(tower.s_mul(r[0], tower.s_inv(r[1])))]
    import random

    rng = random.Random(SPLIT_SEED)
    K = tower.q**6
    while True:
        # random probe of degree deg(r) - 1; a linear probe cannot split in
        # characteristic 2 since the trace map is additive in the shift
        h = tuple(rng.randrange(K) for _ in range(deg)) or (rng.randrange(K),)
        if len(tower._s6trim(h)) == 0:
            continue
        if tower.p == 2:
            # trace map splitting in characteristic 2
            m = 6 * tower.n
            acc = tower.s6poly_mod(h, r)
            tr = acc
            for _ in range(m - 1):
                acc = tower.s6poly_mod(tower.s6poly_mul(acc, acc), r)
                tr = _s6poly_add(tower, tr, acc)
            g = tower.s6poly_gcd(tr, r)
        else:
            he = tower.s6poly_powmod(h, (K - 1) // 2, r)
            g = tower.s6poly_gcd(_s6poly_sub(tower, he, (1,)), r)
        if 0 < len(g) - 1 < deg:
            other = _s6poly_div_exact(tower, r, g)
            return _split_linear(tower, g) + _split_linear(tower, other)


def _s6poly_add(tower, a, b):
    m = max(len(a), len(b))
    a = tuple(a) + (0,) * (m - len(a))
    b = tuple(b) + (0,) * (m - len(b))
    return tower._s6trim(tuple(tower.s_add(x, y) for x, y in zip(a, b)))


# ---------------------------------------------------------------------------
# flat single-level fields for the quotient point-count oracle
# ---------------------------------------------------------------------------

class FlatField:
    """GF(p^k) with exp/log arithmetic on codes, for p^k <= 2^16.

    Used for counting curve points over the big extension F_{q^{2m}} in the
    quotient point-count oracle; addition is XOR for p = 2 and digitwise
    otherwise.
    """

    def __init__(self, p: int, k: int):
        size = p**k
        if size > 2**16:
            raise UnsupportedSize(f"flat field of size {size} unsupported")
        self.p = p
        self.k = k
        self.size = size
        self.modpoly = _least_irreducible_fp(p, k)
        # exp/log via the least generator
        facs = factorize(size - 1)
        self._mul_gen = lambda a, b: self._mul_poly(a, b)
        for g in range(2, size):
            if all(self._pow(g, (size - 1) // r) != 1 for r in facs):
                self.generator = g
                break
        exp_t = np.zeros(2 * (size - 1), dtype=np.int64)
        log_t = np.zeros(size, dtype=np.int64)
        a = 1
        for i in range(size - 1):
            exp_t[i] = a
            log_t[a] = i
            a = self._mul_poly(a, g)
        exp_t[size - 1 :] = exp_t[: size - 1]
        self.exp_t, self.log_t = exp_t, log_t
        if p == 2:
            self.add_vec = lambda a, b: np.bitwise_xor(a, b)
        else:
            digits = np.empty((size, k), dtype=np.int64)
            t = np.arange(size, dtype=np.int64)
            for i in range(k):
                digits[:, i] = t % p
                t //= p
            w = p ** np.arange(k, dtype=np.int64)
            add = ((digits[:, None, :] + digits[None, :, :]) % p * w).sum(axis=2)
            self._add_t = add.astype(np.int64)
            self.add_vec = lambda a, b: self._add_t[a, b]

    def _mul_poly(self, a, b):
        p = self.p
        pa, pb = [], []
        x = a
        while x:
            pa.append(x % p)
            x //= p
        x = b
        while x:
            pb.append(x % p)
            x //= p
        prod = _pmul_fp(tuple(pa), tuple(pb), p)
        red = _pmod_fp(prod, self.modpoly, p)
        code = 0
        for c in reversed(red):
            code = code * p + c
        return code

    def _pow(self, a, e):
        r = 1
        while e:
            if e & 1:
                r = self._mul_poly(r, a)
            a = self._mul_poly(a, a)
            e >>= 1
        return r

    def mul_vec(self, a, b):
        out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
        nz = (a != 0) & (b != 0)
        la = self.log_t[np.asarray(a)[nz] if np.ndim(a) else a]
        lb = self.log_t[np.asarray(b)[nz] if np.ndim(b) else b]
        out[nz] = self.exp_t[la + lb]
        return out

    def pow_vec(self, a, e):
        a = np.asarray(a)
        out = np.zeros(a.shape, dtype=np.int64)
        nz = a != 0
        out[nz] = self.exp_t[(self.log_t[a[nz]] * e) % (self.size - 1)]
        if e == 0:
            out[~nz] = 1
        return out

    def embedding_from(self, tower: FieldTower):
        """Code map F_{q^2} -> this field via the least root of f2."""
        if self.size % tower.Q != 0 or (self.size - 1) % (tower.Q - 1) != 0:
            raise UnsupportedSize("no subfield embedding")
        # find least root of f2 in this field
        root = None
        for c in range(self.size):
            acc = 0
            for coef in reversed(tower.f2):
                acc = self._mul_poly(acc, c)
                acc = int(self.add_vec(np.int64(acc), np.int64(coef % self.p)))
            if acc == 0:
                root = c
                break
        if root is None:
            raise UnsupportedSize("f2 has no root in flat field")
        emb = np.zeros(tower.Q, dtype=np.int64)
        for code in range(tower.Q):
            digitpoly = tower._to_poly(code)
            acc = 0
            for coef in reversed(digitpoly):
                acc = self._mul_poly(acc, root)
                acc = int(self.add_vec(np.int64(acc), np.int64(coef)))
            emb[code] = acc
        return emb
