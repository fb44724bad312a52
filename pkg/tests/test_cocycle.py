import pytest

from thetacocycle.cocycle import (
    ParameterCeilingError, build_phi, check_ceiling, check_invariance, fiber_top_index,
    generate_paired_module, invariant_polys, p_brackets_in_k, rel_differential, restrict_to_fiber,
    seed_pair, top_wedge, _ext_coords, _poly_rank,
)
from thetacocycle.exactalg import PRIME, Cochain, Poly, solve_exact
from thetacocycle.fock import DualPairCase, lie_action, p_plus_basis, special_harmonic

A1110 = DualPairCase.A(1, 1, 1, 0)
A2111 = DualPairCase.A(2, 1, 1, 1)
A2211 = DualPairCase.A(2, 2, 1, 1)
B21 = DualPairCase.B(2, 1)
C31 = DualPairCase.C(3, 1)
SWEEP = [A1110, A2111, A2211, DualPairCase.A(3, 1, 2, 1), B21, DualPairCase.B(3, 1), C31]


def test_top_wedge_examples():
    assert top_wedge(A2211) == {((1, 3), (1, 4), (2, 3)): 1}
    assert top_wedge(B21) == {((1, 1), (1, 2)): 1}
    assert top_wedge(C31) == {((1, 2), (1, 3)): 1}


def test_one_dimensional_module():
    mod = generate_paired_module(seed_pair(DualPairCase.A(1, 1, 1, 1)))
    assert mod.dim == 1
    assert mod.eps == [{((1, 2),): 1}]
    assert mod.psi == [Poly.const(1)]


def test_paired_spans_have_equal_rank():
    mod = generate_paired_module(seed_pair(B21))
    keys, rows = _ext_coords(mod.eps)
    assert solve_exact(rows).rank == _poly_rank(mod.psi) == mod.dim


def test_phi_plus_rank_one():
    phi = build_phi(A1110, "plus")
    assert phi == Cochain.basis([(PRIME, (1, 2))], Poly.var(("um", 1, 1)))


@pytest.mark.parametrize("case", SWEEP, ids=lambda c: c.label)
def test_single_term_restriction(case):
    restricted = restrict_to_fiber(case, build_phi(case, "plus"))
    assert list(restricted.terms) == [fiber_top_index(case)]
    assert restricted.terms[fiber_top_index(case)] == special_harmonic(case)


@pytest.mark.parametrize("case", [A1110, A2111, B21], ids=lambda c: c.label)
def test_full_bidegree(case):
    assert build_phi(case, "full").bidegrees() == {(case.codim, case.codim)}


def test_restriction_keeps_inside_terms():
    c = Cochain.basis(fiber_top_index(A2211), Poly.var(("um", 1, 1)))
    assert restrict_to_fiber(A2211, c) == c


def test_differential_of_constant():
    one = Cochain.scalar(Poly.const(1))
    d = rel_differential(A2111, one, "minus")
    for x, pair in zip(p_plus_basis(A2111), A2111.pairs):
        assert d.terms[((PRIME, pair),)] == lie_action(A2111, x, "minus").apply(Poly.const(1))


@pytest.mark.parametrize("case", [A1110, A2111, B21], ids=lambda c: c.label)
def test_d_squared_on_invariants(case):
    polys = invariant_polys(case, 2)
    assert polys
    for p in polys:
        c = Cochain.scalar(p)
        assert rel_differential(case, rel_differential(case, c, "full"), "full").is_zero()


def test_phi_plus_closed_small():
    assert rel_differential(A2111, build_phi(A2111, "plus"), "minus").is_zero()


def test_phi_plus_invariant_and_annihilated():
    rep = check_invariance(A2111, build_phi(A2111, "plus"), "plus", "minus")
    assert rep.invariant and rep.annihilated


def test_perturbed_cochain_not_invariant():
    phi = build_phi(A2111, "plus")
    key = next(iter(phi.terms))
    bumped = phi + Cochain.basis(key, Poly.var(("um", 1, 1)))
    rep = check_invariance(A2111, bumped, "plus", "minus")
    assert not rep.ok and (rep.generator or rep.annihilation_generator)


def test_full_phi_k_invariant_b():
    assert check_invariance(B21, build_phi(B21, "full"), "full", "full").invariant


@pytest.mark.parametrize("case", [A2111, B21], ids=lambda c: c.label)
def test_basis_independence(case):
    for seed in (1, 7):
        assert build_phi(case, "plus", shuffle_seed=seed) == build_phi(case, "plus")


@pytest.mark.parametrize("case", SWEEP, ids=lambda c: c.label)
def test_p_brackets_land_in_k(case):
    assert p_brackets_in_k(case) is None


def test_ceiling():
    with pytest.raises(ParameterCeilingError):
        check_ceiling(DualPairCase.A(3, 2, 2, 1))
    check_ceiling(DualPairCase.A(3, 2, 2, 1), force=True)
