"""Exact coefficient arithmetic, sparse polynomials, exterior algebra and
differential operators.

Scalars live in Q(i)[sqrt2][pi, 1/pi].  A polynomial term is keyed by
``(Monomial, pi_power, root2)`` where ``root2`` is 0 or 1 and records a
single leftover factor of sqrt(2); even powers of sqrt(2) are folded into
the rational coefficient.  Nothing in this module touches floating point.

Variable identifiers are triples ``(kind, i, j)``:

* ``("up", i, a)``  the Fock variable u^+_{i a}, 1 <= a <= m
* ``("um", i, k)``  the Fock variable u^-_{i,k+m}; the second index is
  stored shifted down to 1 <= k <= m'
* ``("z", k, a)`` / ``("zb", k, a)``  Schroedinger coordinates z_{ka} and
  their conjugates

Their string forms are ``up_i_a``, ``um_i_k``, ``z_k_a`` and ``zb_k_a``.
"""

from __future__ import annotations

import json
from fractions import Fraction
from math import comb
from typing import Dict, Iterable, List, Optional, Sequence, Tuple


# ---------------------------------------------------------------------------
# Gaussian rationals
# ---------------------------------------------------------------------------

class GaussianRational:
    """An element re + i*im of Q(i) with exact rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is Fraction else Fraction(re)
        self.im = im if type(im) is Fraction else Fraction(im)

    @staticmethod
    def _mk(re: Fraction, im: Fraction) -> "GaussianRational":
        g = object.__new__(GaussianRational)
        g.re = re
        g.im = im
        return g

    @classmethod
    def coerce(cls, x) -> "GaussianRational":
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        return cls(x, 0)

    def __add__(self, other):
        o = GaussianRational.coerce(other)
        return GaussianRational._mk(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = GaussianRational.coerce(other)
        return GaussianRational._mk(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return GaussianRational.coerce(other) - self

    def __neg__(self):
        return GaussianRational._mk(-self.re, -self.im)

    def __mul__(self, other):
        o = GaussianRational.coerce(other)
        a, b, c, d = self.re, self.im, o.re, o.im
        if not b and not d:
            return GaussianRational._mk(a * c, b)
        return GaussianRational._mk(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GaussianRational.coerce(other)
        n = o.re * o.re + o.im * o.im
        if not n:
            raise ZeroDivisionError("division by zero in Q(i)")
        num = self * o.conjugate()
        return GaussianRational._mk(num.re / n, num.im / n)

    def __rtruediv__(self, other):
        return GaussianRational.coerce(other) / self

    def __pow__(self, k: int):
        if k < 0:
            return (GaussianRational(1) / self) ** (-k)
        out = GaussianRational(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self):
        return GaussianRational._mk(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.re == other and not self.im
        if isinstance(other, complex):
            return self.re == other.real and self.im == other.imag
        if not isinstance(other, GaussianRational):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        return f"({self.re}{'+' if self.im > 0 else '-'}{abs(self.im)}i)"

    def to_list(self) -> List[int]:
        return [self.re.numerator, self.re.denominator,
                self.im.numerator, self.im.denominator]


ZERO = GaussianRational(0)
ONE = GaussianRational(1)
I = GaussianRational(0, 1)


def i_power(k: int) -> GaussianRational:
    """Return i**k exactly."""
    return (ONE, I, -ONE, -I)[k % 4]


# ---------------------------------------------------------------------------
# Variables and monomials
# ---------------------------------------------------------------------------

Var = Tuple[str, int, int]


def var_name(v: Var) -> str:
    return f"{v[0]}_{v[1]}_{v[2]}"


def parse_var(name: str) -> Var:
    kind, i, j = name.rsplit("_", 2)
    return (kind, int(i), int(j))


class Monomial:
    """A product of variables with positive exponents, stored sorted."""

    __slots__ = ("exps", "_hash")

    def __init__(self, exps: Iterable[Tuple[Var, int]] = ()):
        merged: Dict[Var, int] = {}
        for v, e in exps:
            if e < 0:
                raise ValueError("negative exponent")
            merged[v] = merged.get(v, 0) + e
        self.exps = tuple(sorted((v, e) for v, e in merged.items() if e))
        self._hash = hash(self.exps)

    @staticmethod
    def _from_sorted(exps: tuple) -> "Monomial":
        m = object.__new__(Monomial)
        m.exps = exps
        m._hash = hash(exps)
        return m

    @classmethod
    def var(cls, v: Var, e: int = 1) -> "Monomial":
        return cls._from_sorted(((v, e),) if e else ())

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return self.exps == other.exps

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def sort_key(self):
        return (self.degree, self.exps)

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.exps)

    def exponent(self, v: Var) -> int:
        for w, e in self.exps:
            if w == v:
                return e
        return 0

    def as_dict(self) -> Dict[Var, int]:
        return dict(self.exps)

    def __mul__(self, other: "Monomial") -> "Monomial":
        if not other.exps:
            return self
        if not self.exps:
            return other
        d = dict(self.exps)
        for v, e in other.exps:
            d[v] = d.get(v, 0) + e
        return Monomial._from_sorted(tuple(sorted(d.items())))

    def divides(self, other: "Monomial") -> bool:
        d = other.as_dict()
        return all(d.get(v, 0) >= e for v, e in self.exps)

    def __truediv__(self, other: "Monomial") -> "Monomial":
        d = dict(self.exps)
        for v, e in other.exps:
            d[v] = d.get(v, 0) - e
            if d[v] < 0:
                raise ValueError("monomial does not divide")
        return Monomial._from_sorted(tuple(sorted((v, e) for v, e in d.items() if e)))

    def __repr__(self):
        if not self.exps:
            return "1"
        return "*".join(var_name(v) + (f"^{e}" if e > 1 else "") for v, e in self.exps)


ONE_MONO = Monomial()

# A term key: (monomial, pi power, leftover sqrt2 flag)
Key = Tuple[Monomial, int, int]


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------

class Poly:
    """Sparse polynomial with coefficients in Q(i)[sqrt2][pi, 1/pi].

    ``terms`` maps ``(Monomial, pi_power, root2)`` to a nonzero
    ``GaussianRational``.  Instances are treated as immutable.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Dict[Key, GaussianRational]] = None):
        self.terms: Dict[Key, GaussianRational] = {}
        if terms:
            for k, c in terms.items():
                c = GaussianRational.coerce(c)
                if c:
                    self.terms[k] = c

    @staticmethod
    def _raw(terms: Dict[Key, GaussianRational]) -> "Poly":
        p = object.__new__(Poly)
        p.terms = terms
        return p

    # constructors ----------------------------------------------------------
    @classmethod
    def const(cls, c=1, pi_pow: int = 0, root2: int = 0) -> "Poly":
        c = GaussianRational.coerce(c)
        return cls._raw({(ONE_MONO, pi_pow, root2): c} if c else {})

    @classmethod
    def var(cls, v: Var, c=1) -> "Poly":
        return cls._raw({(Monomial.var(v), 0, 0): GaussianRational.coerce(c)})

    @classmethod
    def monomial(cls, m: Monomial, c=1, pi_pow: int = 0, root2: int = 0) -> "Poly":
        c = GaussianRational.coerce(c)
        return cls._raw({(m, pi_pow, root2): c} if c else {})

    @classmethod
    def zero(cls) -> "Poly":
        return cls._raw({})

    # arithmetic ------------------------------------------------------------
    def __add__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            other = Poly.const(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for k, c in other.terms.items():
            s = out.get(k)
            if s is None:
                out[k] = c
            else:
                s = s + c
                if s:
                    out[k] = s
                else:
                    del out[k]
        return Poly._raw(out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly._raw({k: -c for k, c in self.terms.items()})

    def __sub__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            other = Poly.const(other)
        return self + (-other)

    def __rsub__(self, other) -> "Poly":
        return Poly.const(other) - self

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            return self.scale(other)
        out: Dict[Key, GaussianRational] = {}
        for (m1, p1, r1), c1 in self.terms.items():
            for (m2, p2, r2), c2 in other.terms.items():
                c = c1 * c2
                r = r1 + r2
                if r == 2:
                    c = c * 2
                    r = 0
                k = (m1 * m2, p1 + p2, r)
                s = out.get(k)
                if s is None:
                    out[k] = c
                else:
                    s = s + c
                    if s:
                        out[k] = s
                    else:
                        del out[k]
        return Poly._raw(out)

    def __rmul__(self, other) -> "Poly":
        return self.scale(other)

    def __pow__(self, k: int) -> "Poly":
        if k < 0:
            raise ValueError("negative power of a polynomial")
        out = Poly.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def scale(self, c, pi_pow: int = 0, root2: int = 0) -> "Poly":
        """Multiply by c * pi**pi_pow * sqrt2**root2 (root2 any integer)."""
        c = GaussianRational.coerce(c)
        if not c:
            return Poly.zero()
        c = c * (Fraction(2) ** (root2 // 2))
        root2 %= 2
        out = {}
        for (m, p, r), d in self.terms.items():
            e = d * c
            rr = r + root2
            if rr == 2:
                e = e * 2
                rr = 0
            out[(m, p + pi_pow, rr)] = e
        return Poly._raw(out)

    # structure -------------------------------------------------------------
    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(other)
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def degree(self) -> int:
        return max((m.degree for (m, _, _) in self.terms), default=-1)

    def degrees(self) -> set:
        return {m.degree for (m, _, _) in self.terms}

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    def variables(self) -> set:
        return {v for (m, _, _) in self.terms for v, _ in m.exps}

    def homogeneous_part(self, d: int) -> "Poly":
        return Poly._raw({k: c for k, c in self.terms.items() if k[0].degree == d})

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: (kv[0][0].sort_key(), kv[0][1], kv[0][2]))

    def coefficient(self, m: Monomial, pi_pow: int = 0, root2: int = 0) -> GaussianRational:
        return self.terms.get((m, pi_pow, root2), ZERO)

    def diff(self, v: Var, k: int = 1) -> "Poly":
        """k-th partial derivative with respect to v."""
        if k == 0:
            return self
        out: Dict[Key, GaussianRational] = {}
        for (m, p, r), c in self.terms.items():
            e = m.exponent(v)
            if e < k:
                continue
            fall = 1
            for j in range(k):
                fall *= e - j
            nm = Monomial._from_sorted(tuple((w, (f - k if w == v else f)) for w, f in m.exps if not (w == v and f == k)))
            key = (nm, p, r)
            s = out.get(key, ZERO) + c * fall
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        return Poly._raw(out)

    def substitute(self, values: Dict[Var, "Poly"]) -> "Poly":
        """Substitute polynomials for variables (others kept)."""
        out = Poly.zero()
        cache: Dict[Tuple[Var, int], Poly] = {}
        for (m, p, r), c in self.terms.items():
            term = Poly.monomial(ONE_MONO, c, p, r)
            rest = []
            for v, e in m.exps:
                if v in values:
                    key = (v, e)
                    if key not in cache:
                        cache[key] = values[v] ** e
                    term = term * cache[key]
                else:
                    rest.append((v, e))
            if rest:
                term = term * Poly.monomial(Monomial(rest))
            out = out + term
        return out

    def map_coefficients(self, f) -> "Poly":
        return Poly({k: f(c) for k, c in self.terms.items()})

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for (m, p, r), c in self.sorted_terms():
            s = repr(c)
            if p:
                s += f"*pi^{p}"
            if r:
                s += "*sqrt2"
            if m.exps:
                s += "*" + repr(m)
            parts.append(s)
        return " + ".join(parts)

    # serialization ---------------------------------------------------------
    def to_json_obj(self) -> list:
        """Deterministic list of [monomial, [re_num, re_den, im_num, im_den, pi_pow]].

        A leftover sqrt2 factor is appended as a sixth entry when present.
        """
        out = []
        for (m, p, r), c in self.sorted_terms():
            coeff = c.to_list() + [p]
            if r:
                coeff.append(r)
            out.append([{var_name(v): e for v, e in m.exps}, coeff])
        return out

    @classmethod
    def from_json_obj(cls, obj: list) -> "Poly":
        terms = {}
        for mono, coeff in obj:
            m = Monomial((parse_var(k), e) for k, e in mono.items())
            c = GaussianRational(Fraction(coeff[0], coeff[1]), Fraction(coeff[2], coeff[3]))
            r = coeff[5] if len(coeff) > 5 else 0
            terms[(m, coeff[4], r)] = c
        return cls(terms)

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)


def poly_det(mat: Sequence[Sequence[Poly]]) -> Poly:
    """Determinant of a square matrix of polynomials by cofactor expansion."""
    n = len(mat)
    if any(len(row) != n for row in mat):
        raise ValueError("poly_det needs a square matrix")
    if n == 0:
        return Poly.const(1)
    rows = [[x if isinstance(x, Poly) else Poly.const(x) for x in row] for row in mat]

    def rec(cols: Tuple[int, ...], r: int) -> Poly:
        if r == n:
            return Poly.const(1)
        total = Poly.zero()
        for idx, c in enumerate(cols):
            entry = rows[r][c]
            if entry.is_zero():
                continue
            minor = rec(cols[:idx] + cols[idx + 1:], r + 1)
            term = entry * minor
            total = total + (term if idx % 2 == 0 else -term)
        return total

    return rec(tuple(range(n)), 0)


# ---------------------------------------------------------------------------
# Differential operators
# ---------------------------------------------------------------------------

class DiffOperator:
    """Finite sum of coefficient * derivative, coefficients on the left."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Dict[Monomial, Poly]] = None):
        self.terms: Dict[Monomial, Poly] = {}
        if terms:
            for d, c in terms.items():
                if not c.is_zero():
                    self.terms[d] = c

    @classmethod
    def mult(cls, p: Poly) -> "DiffOperator":
        return cls({ONE_MONO: p})

    @classmethod
    def partial(cls, v: Var, c=1, pi_pow: int = 0) -> "DiffOperator":
        return cls({Monomial.var(v): Poly.const(c, pi_pow)})

    @classmethod
    def identity(cls) -> "DiffOperator":
        return cls.mult(Poly.const(1))

    def __add__(self, other: "DiffOperator") -> "DiffOperator":
        out = dict(self.terms)
        for d, c in other.terms.items():
            out[d] = out[d] + c if d in out else c
        return DiffOperator(out)

    def __neg__(self):
        return DiffOperator({d: -c for d, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c, pi_pow: int = 0, root2: int = 0) -> "DiffOperator":
        return DiffOperator({d: p.scale(c, pi_pow, root2) for d, p in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, DiffOperator):
            return self.compose(other)
        return self.scale(other)

    __rmul__ = scale

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        return isinstance(other, DiffOperator) and self.terms == other.terms

    def order(self) -> int:
        return max((d.degree for d in self.terms), default=-1)

    def apply(self, p: Poly) -> Poly:
        out = Poly.zero()
        for d, c in self.terms.items():
            q = p
            for v, e in d.exps:
                q = q.diff(v, e)
                if q.is_zero():
                    break
            if not q.is_zero():
                out = out + c * q
        return out

    __call__ = apply

    def compose(self, other: "DiffOperator") -> "DiffOperator":
        """Return self o other, normal ordered by the Leibniz rule."""
        out: Dict[Monomial, Poly] = {}
        for da, ca in self.terms.items():
            for db, cb in other.terms.items():
                for gamma, mult in _sub_multi_indices(da):
                    q = cb
                    for v, e in gamma.exps:
                        q = q.diff(v, e)
                    if q.is_zero():
                        continue
                    newd = (da / gamma) * db
                    term = (ca * q).scale(mult)
                    out[newd] = out[newd] + term if newd in out else term
        return DiffOperator(out)

    def commutator(self, other: "DiffOperator") -> "DiffOperator":
        return self.compose(other) - other.compose(self)

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({c})*d[{d}]" for d, c in sorted(self.terms.items(), key=lambda kv: kv[0].sort_key()))


def _sub_multi_indices(d: Monomial):
    """Yield (gamma, prod binom(alpha, gamma)) for gamma <= d."""
    items = list(d.exps)
    out = [(ONE_MONO, 1)]
    for v, e in items:
        nxt = []
        for g, mult in out:
            for k in range(e + 1):
                nxt.append((g * Monomial.var(v, k) if k else g, mult * comb(e, k)))
        out = nxt
    return out


# ---------------------------------------------------------------------------
# Exterior algebra cochains
# ---------------------------------------------------------------------------

# An exterior index: (kind, pair) with kind 0 for xi' (dual to p+) and 1 for
# xi'' (dual to p-).  The canonical order puts every xi' before every xi''.
ExtIndex = Tuple[int, Tuple[int, int]]

PRIME = 0
DPRIME = 1


def sort_with_sign(idx: Sequence) -> Tuple[int, tuple]:
    """Sort a sequence of exterior indices; return (sign, sorted) or (0, ()) on repeats."""
    arr = list(idx)
    if len(set(arr)) != len(arr):
        return 0, ()
    sign = 1
    # insertion sort counting transpositions
    for i in range(1, len(arr)):
        j = i
        while j > 0 and arr[j - 1] > arr[j]:
            arr[j - 1], arr[j] = arr[j], arr[j - 1]
            sign = -sign
            j -= 1
    return sign, tuple(arr)


class Cochain:
    """Element of the exterior algebra on xi'/xi'' with Poly coefficients."""

    __slots__ = ("terms", "allowed")

    def __init__(self, terms: Optional[Dict[tuple, Poly]] = None, allowed: Optional[frozenset] = None):
        self.allowed = allowed
        self.terms: Dict[tuple, Poly] = {}
        if terms:
            for idx, c in terms.items():
                if allowed is not None:
                    for x in idx:
                        if x not in allowed:
                            raise ValueError(f"exterior index {x} outside the case range")
                s, key = sort_with_sign(idx)
                if s == 0 or c.is_zero():
                    continue
                c = c if s > 0 else -c
                if key in self.terms:
                    c = self.terms[key] + c
                if c.is_zero():
                    self.terms.pop(key, None)
                else:
                    self.terms[key] = c

    @classmethod
    def scalar(cls, p: Poly, allowed=None) -> "Cochain":
        return cls({(): p}, allowed)

    @classmethod
    def basis(cls, idx: Sequence[ExtIndex], p: Optional[Poly] = None, allowed=None) -> "Cochain":
        return cls({tuple(idx): p if p is not None else Poly.const(1)}, allowed)

    def __add__(self, other: "Cochain") -> "Cochain":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out[k] + c if k in out else c
        return Cochain({k: c for k, c in out.items()}, self.allowed or other.allowed)

    def __neg__(self):
        return Cochain({k: -c for k, c in self.terms.items()}, self.allowed)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "Cochain":
        if isinstance(c, Poly):
            return Cochain({k: p * c for k, p in self.terms.items()}, self.allowed)
        return Cochain({k: p.scale(c) for k, p in self.terms.items()}, self.allowed)

    def map_coefficients(self, f) -> "Cochain":
        return Cochain({k: f(p) for k, p in self.terms.items()}, self.allowed)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        return isinstance(other, Cochain) and self.terms == other.terms

    def degree_set(self) -> set:
        return {len(k) for k in self.terms}

    def bidegrees(self) -> set:
        return {(sum(1 for x in k if x[0] == PRIME), sum(1 for x in k if x[0] == DPRIME)) for k in self.terms}

    def bidegree(self) -> Tuple[int, int]:
        b = self.bidegrees()
        if len(b) != 1:
            raise ValueError(f"cochain is not of pure bidegree: {sorted(b)}")
        return next(iter(b))

    def wedge(self, other: "Cochain") -> "Cochain":
        return wedge(self, other)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for k, c in sorted(self.terms.items()):
            lab = "^".join(("xi'" if x[0] == PRIME else "xi''") + f"{x[1][0]}{x[1][1]}" for x in k) or "1"
            parts.append(f"[{lab}]*({c})")
        return " + ".join(parts)

    def to_json_obj(self) -> list:
        out = []
        for k, c in sorted(self.terms.items()):
            out.append([[["p" if x[0] == PRIME else "pp", list(x[1])] for x in k], c.to_json_obj()])
        return out


def wedge(a: Cochain, b: Cochain) -> Cochain:
    """Graded product; coefficients multiply, repeated indices vanish."""
    allowed = a.allowed or b.allowed
    out: Dict[tuple, Poly] = {}
    for ka, ca in a.terms.items():
        for kb, cb in b.terms.items():
            s, key = sort_with_sign(ka + kb)
            if s == 0:
                continue
            c = ca * cb
            if s < 0:
                c = -c
            out[key] = out[key] + c if key in out else c
    return Cochain(out, allowed)


# ---------------------------------------------------------------------------
# Exact linear algebra over Q(i)
# ---------------------------------------------------------------------------

class SolveResult:
    """Outcome of ``solve_exact``.

    ``solutions`` holds one particular solution per right-hand column (None for
    an inconsistent column); ``kernel`` is a basis of the null space.
    """

    def __init__(self, rank, pivots, kernel, solutions, inconsistent):
        self.rank = rank
        self.pivots = pivots
        self.kernel = kernel
        self.solutions = solutions
        self.inconsistent = inconsistent

    @property
    def consistent(self) -> bool:
        return not self.inconsistent

    def __repr__(self):
        return f"SolveResult(rank={self.rank}, kernel_dim={len(self.kernel)}, inconsistent={self.inconsistent})"


def _to_gr_matrix(mat) -> List[List[GaussianRational]]:
    return [[GaussianRational.coerce(x) for x in row] for row in mat]


def row_reduce(mat: List[List[GaussianRational]]):
    """Reduced row echelon form in place; returns (matrix, pivot columns)."""
    rows = len(mat)
    cols = len(mat[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        pr = None
        for i in range(r, rows):
            if mat[i][c]:
                pr = i
                break
        if pr is None:
            continue
        mat[r], mat[pr] = mat[pr], mat[r]
        inv = ONE / mat[r][c]
        if inv != ONE:
            mat[r] = [x * inv for x in mat[r]]
        prow = mat[r]
        nz = [j for j in range(c, cols) if prow[j]]
        for i in range(rows):
            if i != r and mat[i][c]:
                f = mat[i][c]
                row = mat[i]
                for j in nz:
                    row[j] = row[j] - f * prow[j]
        pivots.append(c)
        r += 1
    return mat, pivots


def solve_exact(mat, rhs=None) -> SolveResult:
    """Solve mat @ x = rhs exactly over Q(i).

    ``rhs`` is a list of columns (each a list of length rows) or None.
    Inconsistent columns are flagged rather than silently solved.
    """
    A = _to_gr_matrix(mat)
    nrows = len(A)
    ncols = len(A[0]) if nrows else 0
    rhs_cols = [] if rhs is None else [[GaussianRational.coerce(x) for x in col] for col in rhs]
    aug = [A[i] + [col[i] for col in rhs_cols] for i in range(nrows)]
    red, piv_all = row_reduce(aug)
    pivots = [p for p in piv_all if p < ncols]
    rank = len(pivots)
    inconsistent = []
    solutions = []
    for j in range(len(rhs_cols)):
        col = ncols + j
        bad = any(red[i][col] for i in range(rank, nrows))
        if bad:
            inconsistent.append(j)
            solutions.append(None)
            continue
        x = [ZERO] * ncols
        for i, p in enumerate(pivots):
            x[p] = red[i][col]
        solutions.append(x)
    free = [c for c in range(ncols) if c not in set(pivots)]
    kernel = []
    for f in free:
        v = [ZERO] * ncols
        v[f] = ONE
        for i, p in enumerate(pivots):
            v[p] = -red[i][f]
        kernel.append(v)
    return SolveResult(rank, pivots, kernel, solutions, inconsistent)


def mat_vec(mat, vec) -> List[GaussianRational]:
    return [sum((GaussianRational.coerce(a) * b for a, b in zip(row, vec)), ZERO) for row in mat]


def mat_mul(a, b):
    n, k, m = len(a), len(b), len(b[0])
    out = [[ZERO] * m for _ in range(n)]
    for i in range(n):
        ai = a[i]
        for t in range(k):
            x = ai[t]
            if not x:
                continue
            bt = b[t]
            row = out[i]
            for j in range(m):
                if bt[j]:
                    row[j] = row[j] + x * bt[j]
    return out


def mat_inverse(mat) -> List[List[GaussianRational]]:
    n = len(mat)
    eye = [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]
    res = solve_exact(mat, [list(col) for col in zip(*eye)])
    if res.rank < n:
        raise ValueError("matrix is singular")
    cols = res.solutions
    return [[cols[j][i] for j in range(n)] for i in range(n)]
