import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from thetacocycle.exactalg import (
    DPRIME, I, PRIME, Cochain, DiffOperator, GaussianRational, Monomial, Poly,
    mat_vec, poly_det, solve_exact, wedge,
)

U1 = ("um", 1, 1)
U2 = ("um", 1, 2)
U3 = ("um", 2, 1)
VARS = [U1, U2, U3]

fractions = st.fractions(min_value=-5, max_value=5, max_denominator=6)
gaussians = st.builds(GaussianRational, fractions, fractions)


@st.composite
def polys(draw, max_terms=4, max_exp=2):
    out = Poly.zero()
    for _ in range(draw(st.integers(0, max_terms))):
        exps = [(v, draw(st.integers(0, max_exp))) for v in VARS]
        m = Monomial([(v, e) for v, e in exps if e])
        out = out + Poly.monomial(m, draw(gaussians), draw(st.integers(-1, 1)))
    return out


@st.composite
def operators(draw):
    op = DiffOperator()
    for _ in range(draw(st.integers(1, 3))):
        d = Monomial([(v, e) for v in VARS if (e := draw(st.integers(0, 1)))])
        if d.degree > 2:
            continue
        op = op + DiffOperator({d: draw(polys(max_terms=2, max_exp=1))})
    return op


# -- GaussianRational ------------------------------------------------------

def test_gaussian_normalizes():
    g = GaussianRational(Fraction(2, 4), Fraction(-3, 6))
    assert g.re == Fraction(1, 2) and g.im.denominator == 2
    assert g == GaussianRational(Fraction(1, 2), Fraction(-1, 2))
    assert I * I == -1


@given(gaussians, gaussians, gaussians)
def test_gaussian_field_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert (a * b) * c == a * (b * c)
    if b:
        assert (a / b) * b == a


# -- Poly ------------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(polys(), polys(), polys())
def test_ring_axioms(p, q, r):
    assert (p + q) + r == p + (q + r)
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r
    assert p * q == q * p
    assert (p - p).is_zero()


def test_pi_powers_add_under_multiplication():
    a = Poly.const(2, pi_pow=1)
    b = Poly.var(U1).scale(3, pi_pow=2)
    prod = a * b
    assert prod.coefficient(Monomial.var(U1), pi_pow=3) == 6


def test_zero_is_canonical():
    p = Poly.var(U1) - Poly.var(U1)
    assert p.terms == {} and p == Poly.zero()


@settings(max_examples=40, deadline=None)
@given(polys())
def test_json_roundtrip(p):
    assert Poly.from_json_obj(p.to_json_obj()) == p


def test_json_format():
    p = Poly.var(U1).scale(GaussianRational(Fraction(1, 2), 3), pi_pow=1)
    assert p.to_json_obj() == [[{"um_1_1": 1}, [1, 2, 3, 1, 1]]]


# -- poly_det --------------------------------------------------------------

def test_det_1x1():
    u = Poly.var(U1)
    assert poly_det([[u]]) == u


def test_det_2x2():
    a, b, c, d = (Poly.var(("um", i, k)) for i in (1, 2) for k in (1, 2))
    assert poly_det([[a, b], [c, d]]) == a * d - b * c


def test_det_rejects_non_square():
    u = Poly.var(U1)
    with pytest.raises(ValueError):
        poly_det([[u, u]])


def test_det_multiplicative_on_scalars():
    rng = random.Random(3)
    m = [[Poly.const(rng.randint(-3, 3)) for _ in range(3)] for _ in range(3)]
    n = [[Poly.const(rng.randint(-3, 3)) for _ in range(3)] for _ in range(3)]
    mn = [[sum((m[i][k] * n[k][j] for k in range(3)), Poly.zero()) for j in range(3)] for i in range(3)]
    assert poly_det(mn) == poly_det(m) * poly_det(n)


# -- wedge -----------------------------------------------------------------

X1 = (PRIME, (1, 1))
X2 = (PRIME, (1, 2))
Y1 = (DPRIME, (1, 1))


def test_wedge_repeated_index_vanishes():
    p, q = Poly.var(U1), Poly.var(U2)
    assert wedge(Cochain.basis([X1], p), Cochain.basis([X1], q)).is_zero()


def test_wedge_multiplies_coefficients():
    p, q = Poly.var(U1), Poly.var(U2)
    assert wedge(Cochain.basis([X1], p), Cochain.basis([Y1], q)) == Cochain.basis([X1, Y1], p * q)


def test_wedge_sign_normalization():
    assert wedge(Cochain.basis([X2]), Cochain.basis([X1])) == Cochain.basis([X1, X2]).scale(-1)


def test_wedge_rejects_out_of_range():
    with pytest.raises(ValueError):
        Cochain.basis([(PRIME, (5, 5))], allowed=frozenset([X1, X2]))


INDICES = [(PRIME, (1, k)) for k in range(1, 4)] + [(DPRIME, (1, k)) for k in range(1, 4)]


@st.composite
def homogeneous_cochains(draw, degree):
    terms = {}
    for _ in range(draw(st.integers(1, 3))):
        idx = tuple(draw(st.permutations(INDICES))[:degree])
        terms[idx] = draw(polys(max_terms=2, max_exp=1))
    return Cochain(terms)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), st.data())
def test_wedge_graded_commutative(da, db, data):
    a = data.draw(homogeneous_cochains(da))
    b = data.draw(homogeneous_cochains(db))
    assert wedge(a, b) == wedge(b, a).scale((-1) ** (da * db))


@settings(max_examples=30, deadline=None)
@given(st.data())
def test_wedge_bilinear(data):
    a, a2, b = (data.draw(homogeneous_cochains(1)) for _ in range(3))
    assert wedge(a + a2, b) == wedge(a, b) + wedge(a2, b)


# -- DiffOperator ----------------------------------------------------------

def test_apply_derivative():
    u = Poly.var(U1)
    assert DiffOperator.partial(U1).apply(u ** 2) == u.scale(2)


def test_apply_euler_operator():
    u = Poly.var(U1)
    euler = DiffOperator({Monomial.var(U1): u})
    assert euler.apply(u ** 3) == (u ** 3).scale(3)


def test_apply_lambda_scaled_derivative():
    # 2 i lambda with lambda = 2 pi i is -4 pi
    op = DiffOperator.partial(U1, GaussianRational(0, 2) * GaussianRational(0, 2), 1)
    assert op.apply(Poly.var(U1)) == Poly.const(-4, pi_pow=1)


@settings(max_examples=40, deadline=None)
@given(operators(), operators(), polys(max_terms=3, max_exp=2))
def test_compose_matches_sequential_application(a, b, p):
    assert a.compose(b).apply(p) == a.apply(b.apply(p))


# -- solve_exact -----------------------------------------------------------

def test_solve_identity():
    res = solve_exact([[1, 0], [0, 1]], [[1, 0]])
    assert res.solutions[0] == [1, 0]


def test_solve_inconsistent_is_flagged():
    res = solve_exact([[1, 1], [1, 1]], [[1, 0]])
    assert not res.consistent and res.solutions[0] is None
    assert res.rank == 1 and len(res.kernel) == 1


def test_solve_random_invertible():
    rng = random.Random(11)
    while True:
        m = [[GaussianRational(rng.randint(-4, 4), rng.randint(-4, 4)) for _ in range(5)] for _ in range(5)]
        if solve_exact(m).rank == 5:
            break
    b = [GaussianRational(rng.randint(-4, 4), rng.randint(-4, 4)) for _ in range(5)]
    x = solve_exact(m, [b]).solutions[0]
    assert mat_vec(m, x) == b


@settings(max_examples=30, deadline=None)
@given(st.lists(st.lists(gaussians, min_size=3, max_size=3), min_size=2, max_size=4), st.data())
def test_solutions_resubstitute(mat, data):
    rhs = data.draw(st.lists(gaussians, min_size=len(mat), max_size=len(mat)))
    res = solve_exact(mat, [rhs])
    for k in res.kernel:
        assert all(not v for v in mat_vec(mat, k))
    if res.consistent:
        assert mat_vec(mat, res.solutions[0]) == rhs
