"""Infinitesimal Fock model for the unitary, symplectic and quaternionic
dual pairs.

All three cases are realized inside one model: the pair (U(p,q), U(m,m'))
acting on polynomials in the variables u^+_{ia} (1 <= a <= m) and u^-_{ik}
(1 <= k <= m', stored with the second index shifted down by m).  The
symplectic group Sp(2n,R) and O*(2n) sit inside U(n,n) as matrix
subalgebras of gl(2n), so cases B and C use p = q = n.

The Lie algebra action is not typed in by hand.  It comes from the
quadratic embedding of sp(W) into the Weyl algebra,

    j(Z) = -(1/(2*lam)) * sum_a (Z b_a) o b^a,     x o y = (xy + yx)/2,

over a basis b_a of W tensor C with <<b_a, b^c>> = delta, followed by the
Weyl action rho(w''_j) = u_j and rho(w'_j) = 2*i*lam * d/du_j with
lam = 2*pi*i.  The hand-written formulas for the compact subalgebras are
kept separately (``reference_k_action`` and friends) so the two routes can
be compared term for term.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from .exactalg import (
    DiffOperator,
    GaussianRational,
    I,
    ONE,
    ZERO,
    Monomial,
    Poly,
    Var,
    poly_det,
)

# lam = 2*pi*i, so 2*i*lam = -4*pi and -1/(2*lam) = i/(4*pi)
TWO_I_LAMBDA = (GaussianRational(-4), 1)
MINUS_INV_TWO_LAMBDA = (GaussianRational(0, Fraction(1, 4)), -1)

HALF = Fraction(1, 2)


# ---------------------------------------------------------------------------
# Dual pair cases
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DualPairCase:
    """A(p,q,r,s), B(n,r) or C(n,r).

    For B and C the fields ``p`` and ``q`` both hold n and ``s`` is 0.
    """

    tag: str
    p: int
    q: int
    r: int
    s: int = 0

    @classmethod
    def A(cls, p: int, q: int, r: int, s: int) -> "DualPairCase":
        c = cls("A", p, q, r, s)
        c.validate()
        return c

    @classmethod
    def B(cls, n: int, r: int) -> "DualPairCase":
        c = cls("B", n, n, r, 0)
        c.validate()
        return c

    @classmethod
    def C(cls, n: int, r: int) -> "DualPairCase":
        c = cls("C", n, n, r, 0)
        c.validate()
        return c

    def validate(self) -> None:
        if self.tag == "A":
            if not (1 <= self.r <= self.p and 0 <= self.s <= self.q):
                raise ValueError(f"case A needs 1<=r<=p and 0<=s<=q, got {self.label}")
        elif self.tag in ("B", "C"):
            if not (1 <= self.r <= self.n) or self.p != self.q or self.s:
                raise ValueError(f"case {self.tag} needs 1<=r<=n, got {self.label}")
        else:
            raise ValueError(f"unknown case tag {self.tag!r}")

    @property
    def n(self) -> int:
        return self.p

    @property
    def label(self) -> str:
        if self.tag == "A":
            return f"A({self.p},{self.q},{self.r},{self.s})"
        return f"{self.tag}({self.n},{self.r})"

    @property
    def dim_v(self) -> int:
        """Complex dimension of the U(p,q) space carrying the model."""
        return self.p + self.q

    @property
    def columns(self) -> int:
        """Number of u^- (equivalently u^+) columns in the Fock model."""
        return self.r + self.s if self.tag == "A" else self.r

    @property
    def m(self) -> int:
        """Rank parameter m of the second member: r+s, 2r or r."""
        return {"A": self.r + self.s, "B": 2 * self.r, "C": self.r}[self.tag]

    @property
    def codim(self) -> int:
        p, q, r, s, n = self.p, self.q, self.r, self.s, self.p
        if self.tag == "A":
            return r * q + p * s - r * s
        if self.tag == "B":
            return n * (n + 1) // 2 - (n - r) * (n - r + 1) // 2
        return n * (n - 1) // 2 - (n - r) * (n - r - 1) // 2

    @property
    def pairs(self) -> List[Tuple[int, int]]:
        """Index pairs labelling the p+ basis."""
        if self.tag == "A":
            return [(a, mu) for a in range(1, self.p + 1) for mu in range(self.p + 1, self.p + self.q + 1)]
        n = self.n
        if self.tag == "B":
            return [(a, b) for a in range(1, n + 1) for b in range(a, n + 1)]
        return [(a, b) for a in range(1, n + 1) for b in range(a + 1, n + 1)]

    @property
    def index_set(self) -> List[Tuple[int, int]]:
        """The normal-direction index set I, in canonical order."""
        p, q, r, s = self.p, self.q, self.r, self.s
        if self.tag == "A":
            first = [(a, mu) for a in range(1, r + 1) for mu in range(p + 1, p + q + 1)]
            second = [(a, mu) for a in range(r + 1, p + 1) for mu in range(p + 1, p + s + 1)]
            return sorted(first + second)
        n = self.n
        if self.tag == "B":
            return [(a, b) for a in range(1, r + 1) for b in range(a, n + 1)]
        return [(a, b) for a in range(1, r + 1) for b in range(a + 1, n + 1)]

    def to_json_obj(self) -> dict:
        if self.tag == "A":
            return {"case": "A", "p": self.p, "q": self.q, "r": self.r, "s": self.s}
        return {"case": self.tag, "n": self.n, "r": self.r}


# ---------------------------------------------------------------------------
# Matrices on V
# ---------------------------------------------------------------------------

Matrix = Dict[Tuple[int, int], GaussianRational]


def e(i: int, j: int, c=1) -> Matrix:
    return {(i, j): GaussianRational.coerce(c)}


def mat_add(*ms: Matrix, coeffs: Optional[Sequence] = None) -> Matrix:
    out: Matrix = {}
    for idx, m in enumerate(ms):
        c = GaussianRational.coerce(coeffs[idx]) if coeffs else ONE
        for k, v in m.items():
            s = out.get(k, ZERO) + c * v
            if s:
                out[k] = s
            else:
                out.pop(k, None)
    return out


def mat_scale(m: Matrix, c) -> Matrix:
    c = GaussianRational.coerce(c)
    return {k: v * c for k, v in m.items() if v * c}


def mat_bracket(x: Matrix, y: Matrix) -> Matrix:
    out: Matrix = {}
    for (i, j), a in x.items():
        for (k, l), b in y.items():
            if j == k:
                out[(i, l)] = out.get((i, l), ZERO) + a * b
            if l == i:
                out[(k, j)] = out.get((k, j), ZERO) - b * a
    return {k: v for k, v in out.items() if v}


@dataclass(frozen=True)
class LieBasisElt:
    """A named Lie algebra element.

    ``side`` is "V" for a matrix acting on the first member's space, "W" for
    a matrix acting on the second member's space, and "fock" for an
    endomorphism of W'' given on the Fock variables directly (used for the
    parts of the compact dual algebra that are not complex linear on W).
    ``weight`` is the torus weight when the element is a root vector.
    """

    name: str
    side: str
    matrix: Tuple[Tuple[tuple, GaussianRational], ...]
    weight: Optional[Tuple[Fraction, ...]] = None

    @classmethod
    def make(cls, name: str, side: str, matrix: dict, weight=None) -> "LieBasisElt":
        items = tuple(sorted((k, GaussianRational.coerce(v)) for k, v in matrix.items() if v))
        w = tuple(Fraction(x) for x in weight) if weight is not None else None
        return cls(name, side, items, w)

    def as_dict(self) -> dict:
        return dict(self.matrix)

    def __repr__(self):
        return f"LieBasisElt({self.name})"


# ---------------------------------------------------------------------------
# The Fock model
# ---------------------------------------------------------------------------

BasisKey = Tuple[str, int, int]  # ("p"|"pp", i, c): v_i (x) w'_c partner or W'' element


class FockModel:
    """Fock model of (U(p,q), U(m,m')) built from the symplectic space.

    For an index (i, c) with 1 <= i <= p+q and 1 <= c <= m+m' the W''
    vector is ``("pp", i, c)`` and its W' partner is ``("p", i, c)``;
    <<("p",i,c), ("pp",i,c)>> = 2i and all other pairings between distinct
    indices vanish.  The variable attached to ("pp", i, c) is u^+_{ic} for
    c <= m and u^-_{i,c-m} otherwise.
    """

    def __init__(self, p: int, q: int, m: int, mprime: int):
        self.p, self.q, self.m, self.mprime = p, q, m, mprime
        self.N = p + q
        self.M = m + mprime
        self.indices = [(i, c) for i in range(1, self.N + 1) for c in range(1, self.M + 1)]
        self._omega_cache: Dict[tuple, DiffOperator] = {}

    def __repr__(self):
        return f"FockModel(p={self.p}, q={self.q}, m={self.m}, m'={self.mprime})"

    # variables -------------------------------------------------------------
    def var(self, i: int, c: int) -> Var:
        if c <= self.m:
            return ("up", i, c)
        return ("um", i, c - self.m)

    def index_of(self, v: Var) -> Tuple[int, int]:
        kind, i, c = v
        if kind == "up":
            return (i, c)
        if kind == "um":
            return (i, c + self.m)
        raise ValueError(f"{v} is not a Fock variable")

    @property
    def variables(self) -> List[Var]:
        return [self.var(i, c) for i, c in self.indices]

    def _eta(self, i: int) -> int:
        return 1 if i <= self.p else -1

    def _gamma(self, c: int) -> int:
        return 1 if c <= self.m else -1

    def _p_role(self, i: int, c: int) -> str:
        """Role of b + i b' (the -i eigenvector of the original complex structure)."""
        return "pp" if (i <= self.p) == (c <= self.m) else "p"

    def _q_role(self, i: int, c: int) -> str:
        return "p" if self._p_role(i, c) == "pp" else "pp"

    # Weyl algebra ----------------------------------------------------------
    def rho(self, vec: Dict[BasisKey, GaussianRational]) -> DiffOperator:
        """Weyl action of a vector of W tensor C."""
        out: Dict[Monomial, Poly] = {}
        for (role, i, c), coeff in vec.items():
            if not coeff:
                continue
            v = self.var(i, c)
            if role == "pp":
                key = Monomial()
                term = Poly.var(v, coeff)
            else:
                key = Monomial.var(v)
                term = Poly.const(coeff * TWO_I_LAMBDA[0], TWO_I_LAMBDA[1])
            out[key] = out[key] + term if key in out else term
        return DiffOperator(out)

    def weyl_action(self, role: str, i: int, c: int) -> DiffOperator:
        """rho of v_i (x) w'_c (role "prime") or v_i (x) w''_c (role "dprime").

        The W'' member of each pair acts by multiplication, its W' partner
        by 2*i*lam times a derivative.
        """
        if not (1 <= i <= self.N and 1 <= c <= self.M):
            raise ValueError(f"index ({i},{c}) outside the model")
        if role not in ("prime", "dprime"):
            raise ValueError("role must be 'prime' or 'dprime'")
        # v_alpha carries w'' in W'', v_mu carries w' in W''
        in_dprime_space = (role == "dprime") == (i <= self.p)
        key = ("pp" if in_dprime_space else "p", i, c)
        return self.rho({key: ONE})

    # endomorphisms of W tensor C -------------------------------------------
    def endo_from_v(self, g: Matrix) -> Dict[BasisKey, Dict[BasisKey, GaussianRational]]:
        """Complexified action g (x) 1 of a matrix in gl(p+q) = u(p,q) tensor C."""
        Z: Dict[BasisKey, Dict[BasisKey, GaussianRational]] = {}
        for (i, j), gij in g.items():
            for c in range(1, self.M + 1):
                # Q_{jc} -> g_ij Q_{ic}
                src = (self._q_role(j, c), j, c)
                dst = (self._q_role(i, c), i, c)
                col = Z.setdefault(src, {})
                col[dst] = col.get(dst, ZERO) + gij
                # P_{ic} -> -eta_i eta_j g_ij P_{jc}
                src = (self._p_role(i, c), i, c)
                dst = (self._p_role(j, c), j, c)
                col = Z.setdefault(src, {})
                col[dst] = col.get(dst, ZERO) - gij * (self._eta(i) * self._eta(j))
        return Z

    def endo_from_w(self, C: Matrix) -> Dict[BasisKey, Dict[BasisKey, GaussianRational]]:
        """Complexified action 1 (x) C of a matrix in gl(m+m') = u(m,m') tensor C."""
        Z: Dict[BasisKey, Dict[BasisKey, GaussianRational]] = {}
        for (d, c), cdc in C.items():
            for i in range(1, self.N + 1):
                # Q_{ic} -> C_dc Q_{id}
                src = (self._q_role(i, c), i, c)
                dst = (self._q_role(i, d), i, d)
                col = Z.setdefault(src, {})
                col[dst] = col.get(dst, ZERO) + cdc
                # P_{id} -> -gamma_c gamma_d C_dc P_{ic}
                src = (self._p_role(i, d), i, d)
                dst = (self._p_role(i, c), i, c)
                col = Z.setdefault(src, {})
                col[dst] = col.get(dst, ZERO) - cdc * (self._gamma(c) * self._gamma(d))
        return Z

    def endo_from_fock(self, Mm: Dict[Tuple[Var, Var], GaussianRational]):
        """The J0-commuting element of sp acting on W'' by w''_j -> sum_i M[i,j] w''_i.

        Symplecticity fixes the W' block as minus the transpose.
        """
        Z: Dict[BasisKey, Dict[BasisKey, GaussianRational]] = {}
        for (vi, vj), c in Mm.items():
            i = self.index_of(vi)
            j = self.index_of(vj)
            col = Z.setdefault(("pp",) + j, {})
            col[("pp",) + i] = col.get(("pp",) + i, ZERO) + c
            col = Z.setdefault(("p",) + i, {})
            col[("p",) + j] = col.get(("p",) + j, ZERO) - c
        return Z

    def endo_of(self, x: LieBasisElt):
        if x.side == "V":
            return self.endo_from_v(x.as_dict())
        if x.side == "W":
            return self.endo_from_w(x.as_dict())
        if x.side == "fock":
            return self.endo_from_fock(x.as_dict())
        raise ValueError(f"unknown side {x.side}")

    def symplectic_form(self, a: BasisKey, b: BasisKey) -> GaussianRational:
        if a[1:] != b[1:] or a[0] == b[0]:
            return ZERO
        return GaussianRational(0, 2) if a[0] == "p" else GaussianRational(0, -2)

    def is_symplectic(self, Z) -> bool:
        """<<Zx,y>> + <<x,Zy>> = 0 on all basis pairs."""
        keys = [(role, i, c) for role in ("p", "pp") for (i, c) in self.indices]
        for a in keys:
            za = Z.get(a, {})
            for b in keys:
                zb = Z.get(b, {})
                s = sum((v * self.symplectic_form(k, b) for k, v in za.items()), ZERO)
                s = s + sum((v * self.symplectic_form(a, k) for k, v in zb.items()), ZERO)
                if s:
                    return False
        return True

    # the quadratic embedding ------------------------------------------------
    def omega_endo(self, Z) -> DiffOperator:
        """omega(Z) = rho(j(Z)) via the symmetrized dual-basis contraction."""
        total = DiffOperator()
        inv_2i = GaussianRational(0, Fraction(-1, 2))  # 1/(2i)
        for (i, c) in self.indices:
            # b = w'_j with dual w''_j / (2i)
            zb = Z.get(("p", i, c))
            if zb:
                A = self.rho(zb)
                B = self.rho({("pp", i, c): inv_2i})
                total = total + _sym(A, B)
            # b = w''_j with dual -w'_j / (2i)
            zb = Z.get(("pp", i, c))
            if zb:
                A = self.rho(zb)
                B = self.rho({("p", i, c): -inv_2i})
                total = total + _sym(A, B)
        return total.scale(MINUS_INV_TWO_LAMBDA[0], MINUS_INV_TWO_LAMBDA[1])

    def omega(self, x: LieBasisElt) -> DiffOperator:
        key = (x.side, x.matrix)
        if key not in self._omega_cache:
            self._omega_cache[key] = self.omega_endo(self.endo_of(x))
        return self._omega_cache[key]

    def omega_matrix(self, g: Matrix, side: str = "V") -> DiffOperator:
        return self.omega(LieBasisElt.make("_", side, g))


def _sym(a: DiffOperator, b: DiffOperator) -> DiffOperator:
    return (a.compose(b) + b.compose(a)).scale(HALF)


def compose_endo(Z1, Z2):
    """Z1 o Z2 for sparse column dictionaries."""
    out = {}
    for src, col in Z2.items():
        res: Dict[BasisKey, GaussianRational] = {}
        for mid, c in col.items():
            for dst, d in Z1.get(mid, {}).items():
                res[dst] = res.get(dst, ZERO) + c * d
        res = {k: v for k, v in res.items() if v}
        if res:
            out[src] = res
    return out


def endo_commutator(Z1, Z2):
    a = compose_endo(Z1, Z2)
    b = compose_endo(Z2, Z1)
    out = {}
    for k in set(a) | set(b):
        col = dict(a.get(k, {}))
        for dst, v in b.get(k, {}).items():
            col[dst] = col.get(dst, ZERO) - v
        col = {d: v for d, v in col.items() if v}
        if col:
            out[k] = col
    return out


# ---------------------------------------------------------------------------
# Models attached to a case
# ---------------------------------------------------------------------------

MODULES = ("minus", "plus", "full")


@lru_cache(maxsize=None)
def model_for(case: DualPairCase, module: str = "minus") -> FockModel:
    """P_- (only u^- variables), P_+ (only u^+) or the full model."""
    cols = case.columns
    if module == "minus":
        return FockModel(case.p, case.q, 0, cols)
    if module == "plus":
        return FockModel(case.p, case.q, cols, 0)
    if module == "full":
        return FockModel(case.p, case.q, cols, cols)
    raise ValueError(f"module must be one of {MODULES}")


def um(i: int, k: int) -> Var:
    return ("um", i, k)


def up(i: int, a: int) -> Var:
    return ("up", i, a)


# ---------------------------------------------------------------------------
# Lie algebra bases
# ---------------------------------------------------------------------------

def _weight_vec(case: DualPairCase, plus: Sequence[int] = (), minus: Sequence[int] = ()) -> Tuple[Fraction, ...]:
    size = case.dim_v if case.tag == "A" else case.n
    w = [Fraction(0)] * size
    for i in plus:
        w[i - 1] += 1
    for i in minus:
        w[i - 1] -= 1
    return tuple(w)


def k_basis(case: DualPairCase) -> List[LieBasisElt]:
    """Basis of the complexified compact subalgebra k."""
    out = []
    if case.tag == "A":
        p, N = case.p, case.dim_v
        for i in range(1, N + 1):
            for j in range(1, N + 1):
                if (i <= p) == (j <= p):
                    out.append(LieBasisElt.make(f"e{i},{j}", "V", e(i, j), _weight_vec(case, [i], [j])))
        return out
    n = case.n
    for a in range(1, n + 1):
        for b in range(1, n + 1):
            out.append(LieBasisElt.make(f"k{a},{b}", "V", k_elt(n, a, b), _weight_vec(case, [a], [b])))
    return out


def k_elt(n: int, a: int, b: int) -> Matrix:
    """-i e_{ab} + i e_{b+n,a+n}, the k element attached to v_a and v_{b+n}."""
    return mat_add(e(a, b, GaussianRational(0, -1)), e(b + n, a + n, I))


def torus(case: DualPairCase) -> List[LieBasisElt]:
    if case.tag == "A":
        return [LieBasisElt.make(f"e{i},{i}", "V", e(i, i)) for i in range(1, case.dim_v + 1)]
    n = case.n
    return [LieBasisElt.make(f"H{a}", "V", mat_add(e(a, a), e(a + n, a + n, -1))) for a in range(1, n + 1)]


def k_raising(case: DualPairCase) -> List[LieBasisElt]:
    """The nilradical n of the Borel subalgebra b of k."""
    if case.tag == "A":
        p, N = case.p, case.dim_v
        out = [x for x in k_basis(case) if _is_raising_a(x, p)]
        return out
    return [x for x in k_basis(case) if _ab(x)[0] < _ab(x)[1]]


def k_lowering(case: DualPairCase) -> List[LieBasisElt]:
    if case.tag == "A":
        p = case.p
        return [x for x in k_basis(case) if _is_lowering_a(x, p)]
    return [x for x in k_basis(case) if _ab(x)[0] > _ab(x)[1]]


def _ab(x: LieBasisElt) -> Tuple[int, int]:
    a, b = x.name[1:].split(",")
    return int(a), int(b)


def _is_raising_a(x: LieBasisElt, p: int) -> bool:
    i, j = _ab(x)
    return (i < j <= p) or (p < j < i)


def _is_lowering_a(x: LieBasisElt, p: int) -> bool:
    i, j = _ab(x)
    return (j < i <= p) or (p < i < j)


def p_plus_basis(case: DualPairCase) -> List[LieBasisElt]:
    """X elements spanning p+, keyed by ``case.pairs``."""
    out = []
    n = case.n
    for (a, b) in case.pairs:
        if case.tag == "A":
            m = e(a, b, 2)
            w = _weight_vec(case, [a], [b])
        elif case.tag == "B":
            m = mat_add(e(b, a + n), e(a, b + n))
            w = _weight_vec(case, [a, b])
        else:
            m = mat_add(e(a, b + n), e(b, a + n, -1))
            w = _weight_vec(case, [a, b])
        out.append(LieBasisElt.make(f"X{a},{b}", "V", m, w))
    return out


def p_minus_basis(case: DualPairCase) -> List[LieBasisElt]:
    out = []
    n = case.n
    for (a, b) in case.pairs:
        if case.tag == "A":
            m = e(b, a, 2)
            w = _weight_vec(case, [b], [a])
        elif case.tag == "B":
            m = mat_add(e(a + n, b), e(b + n, a))
            w = _weight_vec(case, [], [a, b])
        else:
            m = mat_add(e(b + n, a), e(a + n, b, -1))
            w = _weight_vec(case, [], [a, b])
        out.append(LieBasisElt.make(f"Y{a},{b}", "V", m, w))
    return out


def g_basis(case: DualPairCase) -> List[LieBasisElt]:
    return k_basis(case) + p_plus_basis(case) + p_minus_basis(case)


# ---------------------------------------------------------------------------
# The compact dual algebra k'
# ---------------------------------------------------------------------------

def _fock_elt(name: str, terms: Sequence[Tuple[GaussianRational, Var, Var]], weight=None) -> LieBasisElt:
    """Element whose Fock operator has u-d part sum c * u_i d/du_j."""
    M: Dict[Tuple[Var, Var], GaussianRational] = {}
    for c, vi, vj in terms:
        M[(vi, vj)] = M.get((vi, vj), ZERO) + GaussianRational.coerce(c)
    return LieBasisElt.make(name, "fock", M, weight)


def kprime_basis(case: DualPairCase, side: str = "minus") -> List[LieBasisElt]:
    """Generators of the compact dual algebra acting on P_- ("minus") or P_+ ("plus").

    Case A uses matrices on W (complex linear).  Cases B and C also contain
    elements that are antilinear on W; they are given by their action on
    W'' and realized through ``FockModel.endo_from_fock``.
    """
    r = case.columns
    out = []
    if case.tag == "A":
        for k in range(1, r + 1):
            for l in range(1, r + 1):
                wt = [Fraction(0)] * r
                wt[k - 1] += 1
                wt[l - 1] -= 1
                out.append(LieBasisElt.make(f"e'{k},{l}", "W", e(k, l), wt))
        return out
    n = case.n
    kind = "um" if side == "minus" else "up"
    u = lambda i, k: (kind, i, k)  # noqa: E731
    if case.tag == "B":
        for k in range(1, r + 1):
            for l in range(1, r + 1):
                terms = []
                for a in range(1, n + 1):
                    terms.append((2, u(a + n, k), u(a + n, l)))
                    terms.append((-2, u(a, l), u(a, k)))
                out.append(_fock_elt(f"w'{k}^w''{l}", terms))
        for k in range(1, r + 1):
            for l in range(k + 1, r + 1):
                terms = []
                for a in range(1, n + 1):
                    terms.append((2, u(a + n, k), u(a, l)))
                    terms.append((-2, u(a + n, l), u(a, k)))
                out.append(_fock_elt(f"w'{k}^w'{l}", terms))
                terms = []
                for a in range(1, n + 1):
                    terms.append((2, u(a, k), u(a + n, l)))
                    terms.append((-2, u(a, l), u(a + n, k)))
                out.append(_fock_elt(f"w''{k}^w''{l}", terms))
        return out
    for k in range(1, r + 1):
        for l in range(1, r + 1):
            terms = []
            for a in range(1, n + 1):
                terms.append((1, u(a, k), u(a, l)))
                terms.append((-1, u(a + n, l), u(a + n, k)))
            out.append(_fock_elt(f"E{k},{l}", terms))
    for k in range(1, r + 1):
        for l in range(k, r + 1):
            terms = []
            for a in range(1, n + 1):
                terms.append((1, u(a, k), u(a + n, l)))
                terms.append((1, u(a, l), u(a + n, k)))
            out.append(_fock_elt(f"S+{k},{l}", terms))
            terms = []
            for a in range(1, n + 1):
                terms.append((1, u(a + n, l), u(a, k)))
                terms.append((1, u(a + n, k), u(a, l)))
            out.append(_fock_elt(f"S-{k},{l}", terms))
    return out


def kprime_torus(case: DualPairCase, side: str = "minus") -> List[Tuple[LieBasisElt, Fraction]]:
    """Torus generators of k' with the scalar applied before reading weights.

    Case B reads weights against -1/2 * (w'_k ^ w''_k), which acts as
    1 (x) e_kk on the u^- variables.
    """
    basis = {x.name: x for x in kprime_basis(case, side)}
    r = case.columns
    if case.tag == "A":
        return [(basis[f"e'{k},{k}"], Fraction(1)) for k in range(1, r + 1)]
    # on P_+ the substituted formulas are minus the action of 1 (x) e_kk
    mirror = 1 if side == "minus" else -1
    if case.tag == "B":
        return [(basis[f"w'{k}^w''{k}"], Fraction(-1, 2) * mirror) for k in range(1, r + 1)]
    return [(basis[f"E{k},{k}"], Fraction(mirror)) for k in range(1, r + 1)]


def kprime_raising(case: DualPairCase, side: str = "minus") -> List[LieBasisElt]:
    basis = kprime_basis(case, side)
    r = case.columns
    out = []
    for x in basis:
        nm = x.name
        if case.tag == "A":
            k, l = (int(t) for t in nm[2:].split(","))
            if k < l:
                out.append(x)
        elif case.tag == "B":
            if nm.startswith("w''"):
                out.append(x)
            elif nm.startswith("w'") and "^w''" in nm:
                k, l = (int(t) for t in nm[2:].split("^w''"))
                if k < l:
                    out.append(x)
        else:
            if nm.startswith("E"):
                k, l = (int(t) for t in nm[1:].split(","))
                if k < l:
                    out.append(x)
            elif nm.startswith("S+"):
                out.append(x)
    return out


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def weyl_action(case: DualPairCase, role: str, i: int, c: int, module: str = "full") -> DiffOperator:
    """Weyl action of v_i (x) w'_c or v_i (x) w''_c (c counts u^+ columns first)."""
    return model_for(case, module).weyl_action(role, i, c)


def lie_action(case: DualPairCase, x: LieBasisElt, module: str = "minus") -> DiffOperator:
    """omega(x) on P_-, P_+ or the full model."""
    model = model_for(case, module)
    if x.side == "fock":
        want = "um" if module == "minus" else "up"
        kinds = {v[0] for pair, _ in x.matrix for v in pair}
        if module == "full" or kinds != {want}:
            raise ValueError(f"{x.name} is defined on the {'P_-' if 'um' in kinds else 'P_+'} variables only")
    if x.side == "W" and module != "full":
        # k' generators act on the negative (resp. positive) block of W
        shift = model.m if module == "minus" else 0
        return model.omega_matrix({(a + shift, b + shift): v for (a, b), v in x.matrix}, "W")
    return model.omega(x)


class NotAWeightVector(ValueError):
    def __init__(self, generator: str, residual: Poly):
        super().__init__(f"not a weight vector: fails under {generator}")
        self.generator = generator
        self.residual = residual


def _eigenvalue(op: DiffOperator, p: Poly, name: str) -> Fraction:
    img = op.apply(p)
    # read the ratio from one term, then confirm on all
    (key, c0) = next(iter(p.terms.items()))
    lam = img.terms.get(key, ZERO) / c0
    if img != p.scale(lam):
        raise NotAWeightVector(name, img - p.scale(lam))
    if lam.im:
        raise NotAWeightVector(name, img)
    return lam.re


def weight_of(case: DualPairCase, p: Poly, torus_kind: str = "k", module: str = "minus") -> Tuple[Fraction, ...]:
    """Torus weight of p under t (of k) or t' (of k')."""
    if p.is_zero():
        raise ValueError("zero polynomial has no weight")
    out = []
    if torus_kind == "k":
        for h in torus(case):
            out.append(_eigenvalue(lie_action(case, h, module), p, h.name))
    elif torus_kind == "kprime":
        side = "minus" if module == "minus" else "plus"
        for h, scale in kprime_torus(case, side):
            op = lie_action(case, h, module).scale(scale)
            out.append(_eigenvalue(op, p, h.name))
    else:
        raise ValueError("torus_kind must be 'k' or 'kprime'")
    return tuple(out)


@dataclass
class AnnihilationReport:
    annihilated: bool
    generator: Optional[str] = None
    image: Optional[Poly] = None

    def __bool__(self):
        return self.annihilated


def generators_for(case: DualPairCase, algebra: str, module: str = "minus") -> List[LieBasisElt]:
    if algebra == "n":
        return k_raising(case)
    if algebra == "p-":
        return p_minus_basis(case)
    if algebra == "p+":
        return p_plus_basis(case)
    if algebra == "n'":
        return kprime_raising(case, "minus" if module == "minus" else "plus")
    raise ValueError("algebra must be one of n, p-, p+, n'")


def annihilated_by(case: DualPairCase, p: Poly, algebra: str, module: str = "minus") -> AnnihilationReport:
    """True iff every generator of the given algebra kills p; otherwise a witness."""
    for x in generators_for(case, algebra, module):
        img = lie_action(case, x, module).apply(p)
        if not img.is_zero():
            return AnnihilationReport(False, x.name, img)
    return AnnihilationReport(True)


def weight_to_json(w: Sequence[Fraction]) -> list:
    return [[int(x * 2), 2] for x in w]


# ---------------------------------------------------------------------------
# Hand-written reference formulas (compared against the j construction)
# ---------------------------------------------------------------------------

def _udu(pairs: Sequence[Tuple[int, Var, Var]], const=Fraction(0)) -> DiffOperator:
    """sum c * u_i d/du_j + const."""
    terms: Dict[Monomial, Poly] = {}
    for c, vi, vj in pairs:
        d = Monomial.var(vj)
        t = Poly.var(vi, c)
        terms[d] = terms[d] + t if d in terms else t
    op = DiffOperator(terms)
    if const:
        op = op + DiffOperator.mult(Poly.const(const))
    return op


def reference_k_action(case: DualPairCase, x: LieBasisElt, module: str = "minus") -> DiffOperator:
    """Explicit k formulas on P_- (and their mirror on P_+) for basis elements of ``k_basis``."""
    cols = case.columns
    if case.tag == "A":
        i, j = _ab(x)
        p = case.p
        d = Fraction(cols) if i == j else Fraction(0)
        if module == "minus":
            if i <= p:
                return _udu([(1, um(i, k), um(j, k)) for k in range(1, cols + 1)], HALF * d)
            return _udu([(-1, um(j, k), um(i, k)) for k in range(1, cols + 1)], -HALF * d)
        if module == "plus":
            if i <= p:
                return _udu([(-1, up(j, a), up(i, a)) for a in range(1, cols + 1)], -HALF * d)
            return _udu([(1, up(i, a), up(j, a)) for a in range(1, cols + 1)], HALF * d)
        raise ValueError("reference formulas cover P_- and P_+")
    n = case.n
    a, b = _ab(x)
    mi = GaussianRational(0, -1)
    if module == "minus":
        pairs = [(mi, um(a + n, k), um(b + n, k)) for k in range(1, cols + 1)]
        pairs += [(mi, um(a, k), um(b, k)) for k in range(1, cols + 1)]
        op = _udu(pairs)
        if a == b:
            op = op + DiffOperator.mult(Poly.const(GaussianRational(0, -cols)))
        return op
    if module == "plus":
        pairs = [(I, up(b + n, k), up(a + n, k)) for k in range(1, cols + 1)]
        pairs += [(I, up(b, k), up(a, k)) for k in range(1, cols + 1)]
        op = _udu(pairs)
        if a == b:
            op = op + DiffOperator.mult(Poly.const(GaussianRational(0, cols)))
        return op
    raise ValueError("reference formulas cover P_- and P_+")


def reference_kprime_action(case: DualPairCase, x: LieBasisElt, side: str = "minus") -> DiffOperator:
    """Explicit k' formulas on P_- (side "minus") or P_+ (side "plus")."""
    p, q = case.p, case.q
    if case.tag == "A":
        k, l = (int(t) for t in x.name[2:].split(","))
        const = HALF * (p - q) if k == l else Fraction(0)
        if side == "minus":
            pairs = [(1, um(a, k), um(a, l)) for a in range(1, p + 1)]
            pairs += [(-1, um(mu, l), um(mu, k)) for mu in range(p + 1, p + q + 1)]
            return _udu(pairs, const)
        pairs = [(-1, up(a, l), up(a, k)) for a in range(1, p + 1)]
        pairs += [(1, up(mu, k), up(mu, l)) for mu in range(p + 1, p + q + 1)]
        return _udu(pairs, -const)
    # B and C generators are already stored as their displayed operators
    return _udu([(c, vi, vj) for (vi, vj), c in x.matrix])


# ---------------------------------------------------------------------------
# Special harmonics
# ---------------------------------------------------------------------------

def det_block(kind: str, rows: Sequence[int], cols: Sequence[int]) -> Poly:
    """det(u^kind_{ij}) over the given rows and columns."""
    if len(rows) != len(cols):
        raise ValueError("block must be square")
    return poly_det([[Poly.var((kind, i, j)) for j in cols] for i in rows])


def harmonic_factors(case: DualPairCase, kind: str = "um") -> List[Tuple[Poly, int]]:
    """(determinant, exponent) factors of f_D (kind "um") or its mirror (kind "up")."""
    p, q, r, s = case.p, case.q, case.r, case.s
    if case.tag == "A":
        f1 = det_block(kind, range(1, r + 1), range(1, r + 1))
        f2 = det_block(kind, range(p + 1, p + s + 1), range(r + 1, r + s + 1))
        return [(f1, q - s), (f2, p - r)]
    f = det_block(kind, range(1, r + 1), range(1, r + 1))
    if case.tag == "B":
        return [(f, case.n - r + 1)]
    return [(f, case.n - r - 1)]


def special_harmonic(case: DualPairCase, kind: str = "um") -> Poly:
    out = Poly.const(1)
    for f, e_ in harmonic_factors(case, kind):
        out = out * (f ** e_)
    return out


def stated_weights(case: DualPairCase) -> Dict[str, Tuple[Fraction, ...]]:
    """Closed-form weights of e_D, f_D and the mirrored lowest-weight harmonic, for k and k'.

    Keys: "e_D" and "f_D" (k, highest), "f_D_mirror" (k, lowest, variables
    u^+), "f_D_kprime" and "f_D_mirror_kprime" (k').
    """
    p, q, r, s = case.p, case.q, case.r, case.s
    if case.tag == "A":
        half = Fraction(r - s, 2)
        e_d = (q,) * r + (s,) * (p - r) + (-p,) * s + (-r,) * (q - s)
        kp = (-s + Fraction(p + q, 2),) * r + (r - Fraction(p + q, 2),) * s
        f_d = tuple(Fraction(x) + half for x in e_d)
        mirror = tuple(-x for x in f_d)
    else:
        n = case.n
        top = n + 1 if case.tag == "B" else n - 1
        e_d = (top,) * r + (r,) * (n - r)
        f_d = e_d
        mirror = tuple(-x for x in e_d)
        kp = (n - r + 1 if case.tag == "B" else n - r - 1,) * r
    frac = lambda t: tuple(Fraction(x) for x in t)  # noqa: E731
    return {"e_D": frac(e_d), "f_D": frac(f_d), "f_D_mirror": frac(mirror),
            "f_D_kprime": frac(kp), "f_D_mirror_kprime": frac(-x for x in kp)}


@dataclass
class LockReport:
    case: DualPairCase
    checked: int = 0
    mismatches: List[Tuple[str, str, str]] = field(default_factory=list)  # (module, generator, monomial)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def monomials_up_to(variables: Sequence[Var], degree: int) -> List[Monomial]:
    from itertools import combinations_with_replacement

    out = []
    for d in range(degree + 1):
        for combo in combinations_with_replacement(sorted(variables), d):
            m = Monomial()
            for v in combo:
                m = m * Monomial.var(v)
            out.append(m)
    return out


def normalization_lock(case: DualPairCase, max_degree: int = 3) -> LockReport:
    """Compare the derived k, k' and Weyl actions with the hand-written formulas on all monomials up to max_degree."""
    report = LockReport(case)
    for module in ("minus", "plus"):
        model = model_for(case, module)
        pairs = [(x.name, lie_action(case, x, module), reference_k_action(case, x, module)) for x in k_basis(case)]
        pairs += [(x.name, lie_action(case, x, module), reference_kprime_action(case, x, module))
                  for x in kprime_basis(case, module)]
        for v in model.variables:
            i, c = model.index_of(v)
            mult = DiffOperator.mult(Poly.var(v))
            deriv = DiffOperator.partial(v, TWO_I_LAMBDA[0], TWO_I_LAMBDA[1])
            # v_alpha (x) w''_c and v_mu (x) w'_c multiply; their partners differentiate
            positive = i <= case.p
            pairs.append((f"v{i}w''{c}", weyl_action(case, "dprime", i, c, module), mult if positive else deriv))
            pairs.append((f"v{i}w'{c}", weyl_action(case, "prime", i, c, module), deriv if positive else mult))
        for m in monomials_up_to(model.variables, max_degree):
            poly = Poly.monomial(m)
            for name, derived, ref in pairs:
                report.checked += 1
                if derived.apply(poly) != ref.apply(poly):
                    report.mismatches.append((module, name, repr(m)))
    return report
