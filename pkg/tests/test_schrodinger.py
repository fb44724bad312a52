import math
from fractions import Fraction

import numpy as np
from hypothesis import given, settings, strategies as st

from thetacocycle.exactalg import DiffOperator, GaussianRational, Poly
from thetacocycle.fock import DualPairCase
from thetacocycle.geometry import standard_frame
from thetacocycle.schrodinger import (
    GaussPoly, apply, closed_form_highest_term, evaluate, evaluate_many, highest_term, intertwining_report, iota,
    modulus_exponent, real_coordinate, schrodinger_action, siegel_m, siegel_n, vacuum, z, zb,
)

A2111 = DualPairCase.A(2, 1, 1, 1)
UP11 = Poly.var(("up", 1, 1))


def test_iota_of_one_is_vacuum():
    assert iota(Poly.const(1), A2111) == vacuum()


def test_iota_of_variable():
    assert iota(UP11, A2111) == GaussPoly(Poly.var(z(1, 1)).scale(-2, 1, 1))


def test_highest_term_of_power():
    for d in range(1, 5):
        expected = Poly.var(z(1, 1)).scale(-2, 1, 1) ** d
        assert highest_term(iota(UP11 ** d, A2111)).poly == expected


def test_highest_term_of_square():
    top = highest_term(iota(UP11 ** 2, A2111)).poly
    assert top == (Poly.var(z(1, 1)) ** 2).scale(8, 2)


def test_highest_term_of_minus_product():
    f = Poly.var(("um", 1, 1)) * Poly.var(("um", 3, 2))
    top = highest_term(iota(f, A2111)).poly
    assert top == Poly.var(zb(1, 1)).scale(2, 1, 1) * Poly.var(z(3, 2)).scale(2, 1, 1)
    mono = next(iter(f.terms))[0]
    assert closed_form_highest_term(mono, A2111).poly == top


def test_highest_term_of_monomial_is_itself():
    g = GaussPoly(Poly.var(z(1, 1)) * Poly.var(zb(2, 1)))
    assert highest_term(g) == g


def test_intertwining_small_case():
    rep = intertwining_report(DualPairCase.A(1, 1, 1, 0))
    assert rep.ok and rep.checks > 0


# -- real-coordinate actions -----------------------------------------------

def test_f_on_vacuum():
    img = apply(schrodinger_action("f", "x", 1, 1), vacuum())
    assert img.poly == real_coordinate("x", 1, 1).scale(GaussianRational(0, 2), 1)


def test_e_on_vacuum():
    for coord in ("x", "y"):
        img = apply(schrodinger_action("e", coord, 1, 1), vacuum())
        assert img.poly == real_coordinate(coord, 1, 1).scale(-2, 1)


def _degree_le_2():
    vs = [z(1, 1), zb(1, 1), z(2, 1)]
    out = [Poly.const(1)] + [Poly.var(v) for v in vs]
    out += [Poly.var(a) * Poly.var(b) for a in vs for b in vs]
    return [GaussPoly(p) for p in out]


def test_canonical_commutation():
    for coord in ("x", "y"):
        e = schrodinger_action("e", coord, 1, 1)
        f = schrodinger_action("f", coord, 1, 1)
        for g in _degree_le_2():
            comm = apply(e, apply(f, g)) - apply(f, apply(e, g))
            assert comm == g.scale(GaussianRational(0, 2), 1)


# -- Siegel parabolic ------------------------------------------------------

def test_siegel_identity():
    g = GaussPoly(Poly.var(z(1, 1)) * Poly.var(zb(1, 1)) + Poly.const(3))
    assert siegel_m(1, g, 4) == g


@settings(max_examples=30, deadline=None)
@given(st.fractions(min_value=Fraction(1, 4), max_value=4), st.fractions(min_value=Fraction(1, 4), max_value=4),
       st.integers(0, 3), st.integers(0, 6))
def test_siegel_semigroup(t, s, d, e):
    g = GaussPoly((Poly.var(z(1, 1)) ** d) + Poly.var(zb(2, 1)).scale(2))
    assert siegel_m(t, siegel_m(s, g, e), e) == siegel_m(t * s, g, e)


def test_siegel_modulus_on_vacuum_numeric():
    case = A2111
    e = modulus_exponent(case)
    pt = standard_frame(case) * 0.3
    t = 1.7
    lhs = evaluate(siegel_m(Fraction(17, 10), vacuum(), e), pt)
    assert abs(lhs - t ** e * evaluate(vacuum(), t * pt)) < 1e-12


def test_siegel_n_traceless():
    b = np.array([[1.0, 2.0], [2.0, -1.0]])
    beta = np.eye(2)
    assert abs(siegel_n(b, beta) - 1) < 1e-15


# -- evaluation ------------------------------------------------------------

def test_vacuum_at_origin():
    assert evaluate(vacuum(), np.zeros((3, 2))) == 1.0


def test_vacuum_at_standard_frame():
    x = standard_frame(A2111)
    assert abs(evaluate(vacuum(), x) - math.exp(-math.pi * A2111.columns)) < 1e-15


def test_coordinate_at_unit_point():
    pt = np.zeros((3, 2), dtype=complex)
    pt[0, 0] = 1
    assert abs(evaluate(GaussPoly(Poly.var(z(1, 1))), pt) - math.exp(-math.pi)) < 1e-15


complex_entries = st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(st.lists(complex_entries, min_size=4, max_size=4))
def test_evaluate_conjugation_equivariant(vals):
    pt = np.array(vals, dtype=complex).reshape(2, 2)
    g = iota(Poly.var(("up", 1, 1)) ** 2 * Poly.var(("um", 2, 2)), 1)
    b = evaluate(g, pt).conjugate()
    # conjugate function at the same point
    assert abs(evaluate(g.conjugate(), pt) - b) <= 1e-9 * max(1.0, abs(b))
    # conjugate coefficients at the conjugate point
    coeff_conj = GaussPoly(g.poly.map_coefficients(lambda c: c.conjugate()), g.gauss)
    assert abs(evaluate(coeff_conj, pt.conj()) - b) <= 1e-9 * max(1.0, abs(b))


def test_evaluate_many_matches_evaluate():
    rng = np.random.default_rng(5)
    pts = rng.standard_normal((6, 3, 2)) + 1j * rng.standard_normal((6, 3, 2))
    g = iota(UP11 * Poly.var(("um", 3, 2)), A2111)
    many = evaluate_many(g, pts)
    for k in range(6):
        assert abs(many[k] - evaluate(g, pts[k])) < 1e-12


def test_twisted_derivative_of_vacuum_is_gaussian_slope():
    img = apply(DiffOperator.partial(z(1, 1)), vacuum())
    assert img.poly == Poly.var(zb(1, 1)).scale(-1, 1)
