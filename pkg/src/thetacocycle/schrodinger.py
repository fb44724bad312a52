"""The intertwiner from the Fock model to polynomial-times-Gaussian vectors.

A Schroedinger vector is stored as ``GaussPoly(poly, gauss)`` meaning
poly(z, zbar) * exp(-pi * gauss * sum |z_ka|^2), with z and zbar treated as
independent symbols.  Operators on such vectors are ordinary
``DiffOperator`` objects in z, zbar; ``twisted`` rewrites an operator that
differentiates the whole product into one that acts on the polynomial part
only, using d/dz (P phi) = (dP/dz - pi * gauss * zbar * P) phi.

Row i of the Fock variable u^+_{ia} or u^-_{ik} becomes row i of z, and the
column index a (or k) becomes the column of z.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Sequence, Union

import numpy as np

from .exactalg import (
    DiffOperator,
    GaussianRational,
    I,
    Monomial,
    ONE_MONO,
    Poly,
    Var,
    var_name,
)
from .fock import DualPairCase

Scalar = Union[int, Fraction]


def z(k: int, a: int) -> Var:
    return ("z", k, a)


def zb(k: int, a: int) -> Var:
    return ("zb", k, a)


def _bar(v: Var) -> Var:
    return ("zb" if v[0] == "z" else "z", v[1], v[2])


@dataclass(frozen=True)
class GaussPoly:
    poly: Poly
    gauss: Fraction = Fraction(1)

    def __add__(self, other: "GaussPoly") -> "GaussPoly":
        if self.gauss != other.gauss:
            raise ValueError("cannot add vectors with different Gaussian widths")
        return GaussPoly(self.poly + other.poly, self.gauss)

    def __sub__(self, other: "GaussPoly") -> "GaussPoly":
        return self + GaussPoly(-other.poly, other.gauss)

    def scale(self, c, pi_pow: int = 0, root2: int = 0) -> "GaussPoly":
        return GaussPoly(self.poly.scale(c, pi_pow, root2), self.gauss)

    def is_zero(self) -> bool:
        return self.poly.is_zero()

    def conjugate(self) -> "GaussPoly":
        terms = {}
        for (m, pp, r2), c in self.poly.terms.items():
            mm = Monomial([(_bar(v), e) for v, e in m.exps])
            terms[(mm, pp, r2)] = c.conjugate()
        return GaussPoly(Poly(terms), self.gauss)

    def to_json_obj(self) -> dict:
        return {"gaussian": True, "width": [self.gauss.numerator, self.gauss.denominator],
                "poly": self.poly.to_json_obj()}


def vacuum(gauss: Scalar = 1) -> GaussPoly:
    """phi_0 = exp(-pi * sum |z|^2)."""
    return GaussPoly(Poly.const(1), Fraction(gauss))


def twisted(op: DiffOperator, gauss: Fraction = Fraction(1)) -> DiffOperator:
    """Conjugate op by phi_0: each d/dz becomes d/dz - pi*gauss*zbar (and d/dzbar likewise)."""
    out = DiffOperator()
    for d, c in op.terms.items():
        term = DiffOperator.mult(c)
        for v, e in d.exps:
            one = DiffOperator.partial(v) - DiffOperator.mult(Poly.var(_bar(v), GaussianRational(gauss)).scale(1, 1))
            for _ in range(e):
                term = term.compose(one)
        out = out + term
    return out


def apply(op: DiffOperator, g: GaussPoly) -> GaussPoly:
    """Apply an operator that differentiates the whole product poly * phi_0."""
    return GaussPoly(twisted(op, g.gauss).apply(g.poly), g.gauss)


# ---------------------------------------------------------------------------
# Conjugated Weyl generators
# ---------------------------------------------------------------------------

def _lin(mult_var: Var, mult_c, d_var: Var, d_c) -> DiffOperator:
    """(1/sqrt2) * (mult_c * pi * mult_var + d_c * d/d d_var)."""
    op = DiffOperator.mult(Poly.var(mult_var, mult_c).scale(1, 1)) + DiffOperator.partial(d_var, d_c)
    return op.scale(1, 0, -1)


def iota_operator(v: Var, p: int) -> DiffOperator:
    """iota o (multiplication by the Fock variable v) o iota^{-1}, acting on the full product."""
    kind, i, c = v
    positive_row = i <= p
    if kind == "up":
        if positive_row:
            return _lin(z(i, c), -2, zb(i, c), 2)
        return _lin(zb(i, c), -2, z(i, c), 2)
    if kind == "um":
        if positive_row:
            return _lin(zb(i, c), 2, z(i, c), -2)
        return _lin(z(i, c), 2, zb(i, c), -2)
    raise ValueError(f"{v} is not a Fock variable")


def partner_operator(v: Var, p: int) -> DiffOperator:
    """iota o (-4*pi d/dv) o iota^{-1}: the image of the W' partner of v."""
    kind, i, c = v
    positive_row = i <= p
    if kind == "up":
        if positive_row:
            return _lin(zb(i, c), 2, z(i, c), 2)
        return _lin(z(i, c), 2, zb(i, c), 2)
    if kind == "um":
        if positive_row:
            return _lin(z(i, c), -2, zb(i, c), -2)
        return _lin(zb(i, c), -2, z(i, c), -2)
    raise ValueError(f"{v} is not a Fock variable")


def _rows(case_or_p) -> int:
    return case_or_p.p if isinstance(case_or_p, DualPairCase) else int(case_or_p)


def iota(poly: Poly, case_or_p) -> GaussPoly:
    """The intertwiner: 1 -> phi_0, and u -> iota_operator(u) on each variable occurrence."""
    p = _rows(case_or_p)
    out = Poly.zero()
    cache: Dict[Var, DiffOperator] = {}
    for (m, pp, r2), c in poly.terms.items():
        vec = Poly.const(1)
        for v, e in m.exps:
            if v not in cache:
                cache[v] = twisted(iota_operator(v, p))
            for _ in range(e):
                vec = cache[v].apply(vec)
        out = out + vec.scale(c, pp, r2)
    return GaussPoly(out)


def iota_product_formula(mono: Monomial, case_or_p) -> GaussPoly:
    """iota of a monomial through the factorized display

    prod sqrt2^(d+) (-sqrt2)^(d-) (d/dzbar - pi z)^.. (d/dz - pi zbar)^.. phi_0,

    used as an independent route to ``iota``.
    """
    p = _rows(case_or_p)
    vec = Poly.const(1)
    for v, e in mono.exps:
        kind, i, c = v
        if (kind == "up") == (i <= p):
            # d/dzbar - pi z on the product
            op = DiffOperator.partial(zb(i, c)) - DiffOperator.mult(Poly.var(z(i, c)).scale(1, 1))
        else:
            op = DiffOperator.partial(z(i, c)) - DiffOperator.mult(Poly.var(zb(i, c)).scale(1, 1))
        op = twisted(op)
        sign = 1 if kind == "up" else -1
        for _ in range(e):
            vec = op.apply(vec).scale(sign, 0, 1)
    return GaussPoly(vec)


def highest_term(g: GaussPoly) -> GaussPoly:
    """Homogeneous part of top total degree in z, zbar."""
    return GaussPoly(g.poly.homogeneous_part(g.poly.degree()), g.gauss)


def closed_form_highest_term(mono: Monomial, case_or_p) -> GaussPoly:
    """Closed-form top term of iota(mono): one factor +-2*sqrt2*pi*(z or zbar) per variable."""
    p = _rows(case_or_p)
    out = Poly.const(1)
    for v, e in mono.exps:
        kind, i, c = v
        pos = i <= p
        if kind == "up":
            zz, sign = (z(i, c) if pos else zb(i, c)), -2
        else:
            zz, sign = (zb(i, c) if pos else z(i, c)), 2
        out = out * (Poly.var(zz).scale(sign, 1, 1) ** e)
    return GaussPoly(out)


def weyl_image(v: Var, role: str, case_or_p) -> DiffOperator:
    """Conjugated image of the W'' element attached to v (role "dprime") or its W' partner ("prime")."""
    p = _rows(case_or_p)
    if role == "dprime":
        return iota_operator(v, p)
    if role == "prime":
        return partner_operator(v, p)
    raise ValueError("role must be 'prime' or 'dprime'")


# ---------------------------------------------------------------------------
# Real coordinates
# ---------------------------------------------------------------------------

def schrodinger_action(direction: str, coord: str, k: int, a: int) -> DiffOperator:
    """rho(e_j) = d/dx_j and rho(f_j) = 2*pi*i*x_j on the full product.

    The real coordinate j is ("x", k, a) = Re z_ka or ("y", k, a) = Im z_ka;
    d/dx = d/dz + d/dzbar, d/dy = i (d/dz - d/dzbar), x = (z + zbar)/2 and
    y = (z - zbar)/(2i).
    """
    if coord not in ("x", "y"):
        raise ValueError("coord must be 'x' or 'y'")
    if direction == "e":
        if coord == "x":
            return DiffOperator.partial(z(k, a)) + DiffOperator.partial(zb(k, a))
        return (DiffOperator.partial(z(k, a)) - DiffOperator.partial(zb(k, a))).scale(I)
    if direction == "f":
        return DiffOperator.mult(real_coordinate(coord, k, a).scale(GaussianRational(0, 2), 1))
    raise ValueError("direction must be 'e' or 'f'")


def real_coordinate(coord: str, k: int, a: int) -> Poly:
    if coord == "x":
        return (Poly.var(z(k, a)) + Poly.var(zb(k, a))).scale(Fraction(1, 2))
    return (Poly.var(z(k, a)) - Poly.var(zb(k, a))).scale(GaussianRational(0, Fraction(-1, 2)))


# ---------------------------------------------------------------------------
# Siegel parabolic
# ---------------------------------------------------------------------------

def modulus_exponent(case: DualPairCase) -> int:
    """Power of t in m'(t Id): half the real dimension of the Schroedinger space."""
    return case.dim_v * case.columns


def siegel_m(t: Scalar, g: GaussPoly, exponent: int) -> GaussPoly:
    """m'(t Id): (P phi)(z) -> t^exponent P(t z) phi(t z)."""
    t = Fraction(t)
    if t <= 0:
        raise ValueError("t must be positive")
    terms = {}
    for (m, pp, r2), c in g.poly.terms.items():
        terms[(m, pp, r2)] = c * (t ** (m.degree + exponent))
    return GaussPoly(Poly(terms), g.gauss * t * t)


def siegel_n(b: np.ndarray, beta: np.ndarray) -> complex:
    """Scalar by which n'(b) acts at a point with moment beta: psi(tr(b beta)/2), psi(x) = e^{2 pi i x}."""
    return cmath.exp(2j * math.pi * 0.5 * complex(np.trace(np.asarray(b) @ np.asarray(beta))))


# ---------------------------------------------------------------------------
# Numeric boundary
# ---------------------------------------------------------------------------

def _coefficient_value(c: GaussianRational, pi_pow: int, root2: int) -> complex:
    return complex(c) * math.pi ** pi_pow * math.sqrt(2) ** root2


def evaluate_poly(poly: Poly, pt: np.ndarray) -> complex:
    pt = np.asarray(pt, dtype=complex)
    total = 0j
    for (m, pp, r2), c in poly.terms.items():
        val = _coefficient_value(c, pp, r2)
        for (kind, k, a), e in m.exps:
            zz = pt[k - 1, a - 1]
            if kind == "zb":
                zz = zz.conjugate()
            elif kind != "z":
                raise ValueError(f"{var_name((kind, k, a))} is not a Schroedinger variable")
            val *= zz ** e
        total += val
    return total


def evaluate(g: GaussPoly, pt: np.ndarray) -> complex:
    """Numeric value at a (p+q) x m complex matrix; pi is instantiated only here."""
    pt = np.asarray(pt, dtype=complex)
    if not np.all(np.isfinite(pt)):
        raise ValueError("evaluation point must be finite")
    gauss = math.exp(-math.pi * float(g.gauss) * float(np.sum(np.abs(pt) ** 2)))
    return evaluate_poly(g.poly, pt) * gauss


def evaluate_many(g: GaussPoly, pts: np.ndarray) -> np.ndarray:
    """Vectorized ``evaluate`` over a stack of points of shape (S, rows, columns)."""
    pts = np.asarray(pts, dtype=complex)
    if not np.all(np.isfinite(pts)):
        raise ValueError("evaluation points must be finite")
    conj = pts.conj()
    total = np.zeros(pts.shape[0], dtype=complex)
    for (m, pp, r2), c in g.poly.terms.items():
        val = np.full(pts.shape[0], _coefficient_value(c, pp, r2), dtype=complex)
        for (kind, k, a), e in m.exps:
            src = pts if kind == "z" else conj
            if kind not in ("z", "zb"):
                raise ValueError(f"{var_name((kind, k, a))} is not a Schroedinger variable")
            val *= src[:, k - 1, a - 1] ** e
        total += val
    gauss = np.exp(-math.pi * float(g.gauss) * np.sum(np.abs(pts) ** 2, axis=(1, 2)))
    return total * gauss


@dataclass
class IntertwineReport:
    monomials: int
    checks: int
    failures: list  # (kind, monomial, detail)

    @property
    def ok(self) -> bool:
        return not self.failures


def intertwining_report(case: DualPairCase, max_degree: int = 3) -> IntertwineReport:
    """Check iota against the product display, its top term against the closed form, and
    iota o rho(w) = (conjugated operator) o iota for every Weyl generator, on all monomials up to max_degree."""
    from .fock import model_for, monomials_up_to

    model = model_for(case, "full")
    monos = monomials_up_to(model.variables, max_degree)
    failures, checks = [], 0
    images = {}
    for v in model.variables:
        i, c = model.index_of(v)
        images[(v, "dprime")] = (model.rho({("pp", i, c): GaussianRational(1)}), weyl_image(v, "dprime", case))
        images[(v, "prime")] = (model.rho({("p", i, c): GaussianRational(1)}), weyl_image(v, "prime", case))
    for m in monos:
        p = Poly.monomial(m)
        ip = iota(p, case)
        checks += 2
        if ip != iota_product_formula(m, case):
            failures.append(("product_formula", repr(m), ""))
        if highest_term(ip) != closed_form_highest_term(m, case):
            failures.append(("highest_term", repr(m), ""))
        for (v, role), (fock_op, schr_op) in images.items():
            checks += 1
            if iota(fock_op.apply(p), case) != apply(schr_op, ip):
                failures.append(("intertwine", repr(m), f"{var_name(v)}:{role}"))
    return IntertwineReport(len(monos), checks, failures)
