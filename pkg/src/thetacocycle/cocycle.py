"""Special cocycles in the relative Lie algebra complex of the Fock model.

The construction pairs the top wedge e_D = wedge_{I} X in the exterior
algebra of p+ with the determinant harmonic f_D, closes the pair under the
lowering operators of k, and turns the resulting equivariant map into a
cochain by contracting against the dual basis for a K-invariant inner
product.  The mirror construction (lowest weights, raising operators, p-
and P_+) gives phi^-, and phi = phi^+ ^ phi^-.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from .exactalg import (
    DPRIME,
    PRIME,
    Cochain,
    GaussianRational,
    ONE,
    ZERO,
    Monomial,
    Poly,
    mat_inverse,
    solve_exact,
    sort_with_sign,
    wedge,
)
from .fock import (
    DualPairCase,
    LieBasisElt,
    k_basis,
    k_lowering,
    k_raising,
    lie_action,
    model_for,
    p_minus_basis,
    p_plus_basis,
    special_harmonic,
    torus,
    mat_bracket,
)

Pair = Tuple[int, int]
ExtVec = Dict[Tuple[Pair, ...], GaussianRational]

# ceilings for the default (desk-scale) parameter range
MAX_CODIM = 4
MAX_DIM_V = 4
MAX_N = 3


class ParameterCeilingError(ValueError):
    pass


class PairingError(RuntimeError):
    """The two slots of a paired module stopped being equivariant."""


def check_ceiling(case: DualPairCase, force: bool = False) -> None:
    if force:
        return
    size = case.dim_v if case.tag == "A" else case.n
    limit = MAX_DIM_V if case.tag == "A" else MAX_N
    if case.codim > MAX_CODIM or size > limit:
        raise ParameterCeilingError(
            f"{case.label} exceeds the default ceiling (codim <= {MAX_CODIM}, p+q <= {MAX_DIM_V}, n <= {MAX_N}); "
            "pass force=True"
        )


# ---------------------------------------------------------------------------
# Exterior algebra of p+ and p-
# ---------------------------------------------------------------------------

def _basis(case: DualPairCase, which: str) -> List[LieBasisElt]:
    if which == "plus":
        return p_plus_basis(case)
    if which == "minus":
        return p_minus_basis(case)
    raise ValueError("which must be 'plus' or 'minus'")


@lru_cache(maxsize=None)
def _pivots(case: DualPairCase, which: str):
    """A matrix entry that identifies each basis element of p+ (or p-)."""
    out = []
    for x in _basis(case, which):
        key, val = x.matrix[0]
        out.append((key, val))
    if len({k for k, _ in out}) != len(out):
        raise RuntimeError("p basis pivots are not distinct")
    return out


def decompose(case: DualPairCase, mat: dict, which: str) -> Dict[Pair, GaussianRational]:
    """Coordinates of a matrix in the X (which="plus") or Y basis; raises if not in the span."""
    basis = _basis(case, which)
    coords: Dict[Pair, GaussianRational] = {}
    rebuilt: dict = {}
    for pair, x, (key, val) in zip(case.pairs, basis, _pivots(case, which)):
        c = mat.get(key, ZERO) / val
        if c:
            coords[pair] = c
            for k, v in x.matrix:
                rebuilt[k] = rebuilt.get(k, ZERO) + c * v
    rebuilt = {k: v for k, v in rebuilt.items() if v}
    clean = {k: v for k, v in mat.items() if v}
    if rebuilt != clean:
        raise ValueError("matrix is not in the span of the p basis")
    return coords


@lru_cache(maxsize=None)
def ad_table(case: DualPairCase, x: LieBasisElt, which: str) -> Dict[Pair, Dict[Pair, GaussianRational]]:
    """[x, X_s] = sum_t a[s][t] X_t for every basis pair s."""
    out = {}
    for pair, b in zip(case.pairs, _basis(case, which)):
        out[pair] = decompose(case, mat_bracket(x.as_dict(), b.as_dict()), which)
    return out


def ext_add(a: ExtVec, b: ExtVec, c=ONE) -> ExtVec:
    out = dict(a)
    for k, v in b.items():
        s = out.get(k, ZERO) + c * v
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def ext_act(case: DualPairCase, x: LieBasisElt, vec: ExtVec, which: str) -> ExtVec:
    """ad(x) extended to the exterior algebra as a derivation."""
    table = ad_table(case, x, which)
    out: ExtVec = {}
    for key, c in vec.items():
        for pos, s in enumerate(key):
            for t, a in table[s].items():
                sign, new = sort_with_sign(key[:pos] + (t,) + key[pos + 1:])
                if sign == 0:
                    continue
                v = out.get(new, ZERO) + c * a * sign
                if v:
                    out[new] = v
                else:
                    out.pop(new, None)
    return out


def top_wedge(case: DualPairCase, which: str = "plus") -> ExtVec:
    """wedge over I of X (which="plus") or Y (which="minus") in canonical order."""
    sign, key = sort_with_sign(tuple(case.index_set))
    return {key: GaussianRational(sign)}


def ext_weight(case: DualPairCase, vec: ExtVec, which: str = "plus") -> Tuple[Fraction, ...]:
    if not vec:
        raise ValueError("zero vector has no weight")
    out = []
    for h in torus(case):
        img = ext_act(case, h, vec, which)
        k0, c0 = next(iter(vec.items()))
        lam = img.get(k0, ZERO) / c0
        if img != {k: v * lam for k, v in vec.items() if lam} or lam.im:
            raise ValueError(f"not a weight vector under {h.name}")
        out.append(lam.re)
    return tuple(out)


def _frobenius_norm2(x: LieBasisElt) -> Fraction:
    return sum((v * v.conjugate()).re for _, v in x.matrix)


@lru_cache(maxsize=None)
def _norms(case: DualPairCase, which: str) -> Dict[Pair, Fraction]:
    return {pair: _frobenius_norm2(x) for pair, x in zip(case.pairs, _basis(case, which))}


def ext_inner(case: DualPairCase, a: ExtVec, b: ExtVec, which: str = "plus") -> GaussianRational:
    """Hermitian inner product induced by the trace form; K-invariant."""
    norms = _norms(case, which)
    total = ZERO
    for k, v in a.items():
        w = b.get(k)
        if w is None:
            continue
        wt = Fraction(1)
        for s in k:
            wt *= norms[s]
        total = total + v * w.conjugate() * wt
    return total


def ext_to_json(vec: ExtVec) -> list:
    return [[[list(p) for p in k], v.to_list()] for k, v in sorted(vec.items())]


# ---------------------------------------------------------------------------
# Paired modules
# ---------------------------------------------------------------------------

@dataclass
class HighestWeightPair:
    case: DualPairCase
    top_ext: ExtVec
    top_poly: Poly
    which: str = "plus"  # "plus": highest weight in P_-; "minus": lowest weight in P_+

    @property
    def ext_side(self) -> str:
        return self.which

    @property
    def poly_module(self) -> str:
        return "minus" if self.which == "plus" else "plus"


def seed_pair(case: DualPairCase, which: str = "plus") -> HighestWeightPair:
    kind = "um" if which == "plus" else "up"
    return HighestWeightPair(case, top_wedge(case, which), special_harmonic(case, kind), which)


@dataclass
class PairedModule:
    seed: HighestWeightPair
    eps: List[ExtVec] = field(default_factory=list)
    psi: List[Poly] = field(default_factory=list)
    closed: bool = False

    @property
    def dim(self) -> int:
        return len(self.eps)


def _ext_coords(vecs: Sequence[ExtVec]):
    keys = sorted({k for v in vecs for k in v})
    return keys, [[v.get(k, ZERO) for v in vecs] for k in keys]


def _in_span(vecs: Sequence[ExtVec], target: ExtVec) -> Optional[List[GaussianRational]]:
    """Coefficients expressing target in terms of vecs, or None."""
    if not vecs:
        return None if target else []
    keys = sorted({k for v in list(vecs) + [target] for k in v})
    mat = [[v.get(k, ZERO) for v in vecs] for k in keys]
    res = solve_exact(mat, [[target.get(k, ZERO) for k in keys]])
    return res.solutions[0]


def _poly_combo(polys: Sequence[Poly], coeffs: Sequence[GaussianRational]) -> Poly:
    out = Poly.zero()
    for p, c in zip(polys, coeffs):
        if c:
            out = out + p.scale(c)
    return out


def _poly_rank(polys: Sequence[Poly]) -> int:
    keys = sorted({k for p in polys for k in p.terms}, key=lambda k: (k[0].sort_key(), k[1], k[2]))
    if not keys:
        return 0
    mat = [[p.terms.get(k, ZERO) for p in polys] for k in keys]
    return solve_exact(mat).rank


def generate_paired_module(seed: HighestWeightPair, shuffle_seed: Optional[int] = None) -> PairedModule:
    """Close (e_D, f_D) under the k lowering (or raising) operators.

    Each new image is tested for membership in the span built so far.  A
    dependent exterior image forces the polynomial image to be the same
    combination; any mismatch raises ``PairingError``.
    """
    case = seed.case
    ops = k_lowering(case) if seed.which == "plus" else k_raising(case)
    rng = random.Random(shuffle_seed) if shuffle_seed is not None else None
    if rng:
        ops = list(ops)
        rng.shuffle(ops)
    mod = PairedModule(seed, [seed.top_ext], [seed.top_poly])
    queue = [0]
    while queue:
        idx = queue.pop(rng.randrange(len(queue)) if rng else 0)
        e0, p0 = mod.eps[idx], mod.psi[idx]
        for x in ops:
            e1 = ext_act(case, x, e0, seed.ext_side)
            p1 = lie_action(case, x, seed.poly_module).apply(p0)
            if not e1:
                if not p1.is_zero():
                    raise PairingError(f"{x.name} kills the exterior slot but not the polynomial slot")
                continue
            coeffs = _in_span(mod.eps, e1)
            if coeffs is None:
                mod.eps.append(e1)
                mod.psi.append(p1)
                queue.append(len(mod.eps) - 1)
            elif p1 != _poly_combo(mod.psi, coeffs):
                raise PairingError(f"{x.name}: exterior image is dependent but the polynomial image is not matched")
    if _poly_rank(mod.psi) != len(mod.eps):
        raise PairingError("exterior and polynomial spans have different dimensions")
    mod.closed = True
    return mod


def character(case: DualPairCase, which: str) -> Dict[Tuple[int, int], GaussianRational]:
    """Scalar by which x in k acts on the cocycle: c * tr(x), as a coefficient dict on diagonal entries."""
    if case.tag != "A":
        return {}
    half = Fraction(case.r - case.s, 2)
    c = {"plus": half, "minus": -half, "full": Fraction(0)}[which]
    if not c:
        return {}
    return {(i, i): GaussianRational(c) for i in range(1, case.dim_v + 1)}


def character_value(case: DualPairCase, x: LieBasisElt, which: str) -> GaussianRational:
    chi = character(case, which)
    return sum((chi[k] * v for k, v in x.matrix if k in chi), ZERO)


def check_equivariance(mod: PairedModule) -> Optional[str]:
    """None if omega(x) psi(eps) = psi(ad(x) eps) + chi(x) psi(eps) for all x in k; else a message."""
    seed = mod.seed
    case = seed.case
    for x in k_basis(case):
        chi = character_value(case, x, seed.which)
        op = lie_action(case, x, seed.poly_module)
        for e0, p0 in zip(mod.eps, mod.psi):
            e1 = ext_act(case, x, e0, seed.ext_side)
            coeffs = _in_span(mod.eps, e1)
            if coeffs is None:
                return f"{x.name} leaves the exterior span"
            lhs = op.apply(p0) - p0.scale(chi)
            if lhs != _poly_combo(mod.psi, coeffs):
                return f"{x.name} breaks equivariance"
    return None


# ---------------------------------------------------------------------------
# Cochains
# ---------------------------------------------------------------------------

def allowed_indices(case: DualPairCase) -> frozenset:
    return frozenset((kind, pair) for kind in (PRIME, DPRIME) for pair in case.pairs)


def cochain_from_module(mod: PairedModule) -> Cochain:
    """sum_i psi_i Omega_i with Omega_i the dual basis of eps_i (zero on the orthogonal complement)."""
    case = mod.seed.case
    side = mod.seed.ext_side
    kind = PRIME if side == "plus" else DPRIME
    d = mod.dim
    G = [[ext_inner(case, mod.eps[k], mod.eps[j], side) for j in range(d)] for k in range(d)]
    Gt = [[G[j][k] for j in range(d)] for k in range(d)]
    C = mat_inverse(Gt)
    norms = _norms(case, side)
    keys = sorted({k for v in mod.eps for k in v})
    terms: Dict[tuple, Poly] = {}
    for T in keys:
        wt = Fraction(1)
        for s in T:
            wt *= norms[s]
        coeff = Poly.zero()
        for i in range(d):
            a = ZERO
            for j in range(d):
                e = mod.eps[j].get(T)
                if e is not None and C[i][j]:
                    a = a + C[i][j] * e.conjugate()
            if a:
                coeff = coeff + mod.psi[i].scale(a * wt)
        if not coeff.is_zero():
            terms[tuple((kind, s) for s in T)] = coeff
    return Cochain(terms, allowed_indices(case))


_PHI_CACHE: Dict[tuple, Cochain] = {}


def build_phi(case: DualPairCase, which: str = "plus", shuffle_seed: Optional[int] = None, force: bool = False) -> Cochain:
    """phi^+ (bidegree (d',0), values in P_-), phi^- ((0,d'), P_+) or phi = phi^+ ^ phi^-."""
    check_ceiling(case, force)
    key = (case, which, shuffle_seed)
    if key in _PHI_CACHE:
        return _PHI_CACHE[key]
    if which in ("plus", "minus"):
        mod = generate_paired_module(seed_pair(case, which), shuffle_seed)
        out = cochain_from_module(mod)
    elif which == "full":
        out = wedge(build_phi(case, "plus", shuffle_seed, force), build_phi(case, "minus", shuffle_seed, force))
    else:
        raise ValueError("which must be plus, minus or full")
    _PHI_CACHE[key] = out
    return out


PHI_MODULE = {"plus": "minus", "minus": "plus", "full": "full"}


def infer_module(c: Cochain) -> str:
    """Fock module carrying the values of c, read off from its variables."""
    kinds = {v[0] for p in c.terms.values() for v in p.variables()}
    if not kinds:
        raise ValueError("cochain has constant values only; pass the module explicitly")
    if kinds == {"um"}:
        return "minus"
    if kinds == {"up"}:
        return "plus"
    return "full"


def rel_differential(case: DualPairCase, c: Cochain, module: Optional[str] = None) -> Cochain:
    """d c = sum_b xi^b ^ omega(b) c over the basis X_s (xi'_s) and Y_s (xi''_s) of p."""
    module = module or infer_module(c)
    allowed = allowed_indices(case)
    out = Cochain({}, allowed)
    for kind, basis in ((PRIME, p_plus_basis(case)), (DPRIME, p_minus_basis(case))):
        for pair, x in zip(case.pairs, basis):
            op = lie_action(case, x, module)
            img = c.map_coefficients(op.apply)
            if img.is_zero():
                continue
            out = out + wedge(Cochain.basis([(kind, pair)], allowed=allowed), img)
    return out


def coadjoint_action(case: DualPairCase, x: LieBasisElt, c: Cochain) -> Cochain:
    """ad*(x) on the form part: ad*(x) xi^i = -sum_j a_ij xi^j with [x, X_j] = sum_i a_ij X_i."""
    tables = {PRIME: ad_table(case, x, "plus"), DPRIME: ad_table(case, x, "minus")}
    terms: Dict[tuple, Poly] = {}
    for key, p in c.terms.items():
        for pos, (kind, i) in enumerate(key):
            for j, row in tables[kind].items():
                a = row.get(i)
                if not a:
                    continue
                new = key[:pos] + ((kind, j),) + key[pos + 1:]
                sign, skey = sort_with_sign(new)
                if sign == 0:
                    continue
                t = p.scale(-a * sign)
                terms[skey] = terms[skey] + t if skey in terms else t
    return Cochain(terms, c.allowed)


@dataclass
class InvarianceReport:
    invariant: bool
    annihilated: bool
    generator: Optional[str] = None
    residual: Optional[Cochain] = None
    annihilation_generator: Optional[str] = None
    annihilation_image: Optional[Poly] = None

    @property
    def ok(self) -> bool:
        return self.invariant and self.annihilated


def check_invariance(case: DualPairCase, c: Cochain, which: Optional[str] = None,
                     module: Optional[str] = None) -> InvarianceReport:
    """(ad* (x) omega)(x) c = chi(x) c for all x in k, and annihilation of the values.

    ``which`` selects the character and the annihilating algebra: "plus"
    (values killed by p-), "minus" (killed by p+), or "full" (no
    annihilation test).
    """
    module = module or infer_module(c)
    if which is None:
        which = {"minus": "plus", "plus": "minus"}.get(module, "full")
    rep = InvarianceReport(True, True)
    for x in k_basis(case):
        op = lie_action(case, x, module)
        total = coadjoint_action(case, x, c) + c.map_coefficients(op.apply)
        chi = character_value(case, x, which)
        if chi:
            total = total - c.scale(chi)
        if not total.is_zero():
            rep.invariant = False
            rep.generator = x.name
            rep.residual = total
            break
    if which in ("plus", "minus"):
        killers = p_minus_basis(case) if which == "plus" else p_plus_basis(case)
        for x in killers:
            op = lie_action(case, x, module)
            for p in c.terms.values():
                img = op.apply(p)
                if not img.is_zero():
                    rep.annihilated = False
                    rep.annihilation_generator = x.name
                    rep.annihilation_image = img
                    return rep
    return rep


def restrict_to_fiber(case: DualPairCase, c: Cochain) -> Cochain:
    """Drop every term containing an index outside I."""
    inside = set(case.index_set)
    return Cochain({k: p for k, p in c.terms.items() if all(i[1] in inside for i in k)}, c.allowed)


def fiber_top_index(case: DualPairCase, kind: int = PRIME) -> tuple:
    return tuple((kind, pair) for pair in sorted(case.index_set))


def p_brackets_in_k(case: DualPairCase) -> Optional[Tuple[str, str]]:
    """None if [X, Y] lies in span(k) for all pairs of p basis elements; else the offending pair."""
    kb = k_basis(case)
    keys = sorted({k for x in kb for k, _ in x.matrix})
    mat = [[dict(x.matrix).get(k, ZERO) for x in kb] for k in keys]
    pb = p_plus_basis(case) + p_minus_basis(case)
    for a in pb:
        for b in pb:
            br = mat_bracket(a.as_dict(), b.as_dict())
            if any(k not in keys for k in br):
                return (a.name, b.name)
            res = solve_exact(mat, [[br.get(k, ZERO) for k in keys]])
            if not res.consistent:
                return (a.name, b.name)
    return None


def invariant_polys(case: DualPairCase, degree: int, module: str = "full") -> List[Poly]:
    """Basis of the homogeneous polynomials of the given degree killed by omega(k)."""
    from itertools import combinations_with_replacement

    model = model_for(case, module)
    variables = sorted(model.variables)
    monos = []
    for combo in combinations_with_replacement(variables, degree):
        m = Monomial()
        for v in combo:
            m = m * Monomial.var(v)
        monos.append(m)
    images = []
    for m in monos:
        p = Poly.monomial(m)
        images.append([lie_action(case, x, module).apply(p) for x in k_basis(case)])
    keys = sorted({(i, k) for row in images for i, q in enumerate(row) for k in q.terms},
                  key=lambda t: (t[0], t[1][0].sort_key(), t[1][1], t[1][2]))
    mat = [[row[i].terms.get(k, ZERO) for row in images] for (i, k) in keys]
    if not keys:
        return [Poly.monomial(m) for m in monos]
    res = solve_exact(mat)
    out = []
    for vec in res.kernel:
        p = Poly.zero()
        for m, c in zip(monos, vec):
            if c:
                p = p + Poly.monomial(m, c)
        out.append(p)
    return out
