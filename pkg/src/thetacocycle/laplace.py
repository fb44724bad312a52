"""Method of Laplace: leading terms of fiber integrals and numeric checks.

A leading term c * t^a * exp(-lam * t^2) is stored with c split as
(-i)^k * odd * 2^two_pow * pi^pi_pow, where odd is a positive rational
with odd numerator and denominator, and lam = rate * pi.

The re-derivation of the fiber asymptotics uses only data computed by the
other modules: the fiber restriction of the full cocycle, the top-degree
part of its Schroedinger image evaluated at the standard frame, the exact
Hessian of the majorant and the Laplace formula in the variable t^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .cocycle import build_phi, fiber_top_index, restrict_to_fiber
from .exactalg import DPRIME, PRIME, GaussianRational, Poly
from .fock import DualPairCase, k_basis, p_minus_basis, p_plus_basis
from .geometry import hessian_analytic, make_context
from .schrodinger import evaluate_many, highest_term, iota, modulus_exponent, siegel_m


# ---------------------------------------------------------------------------
# Exact leading terms
# ---------------------------------------------------------------------------

def _two_adic(x: Fraction) -> Tuple[int, Fraction]:
    """x = 2^k * odd with odd having odd numerator and denominator."""
    if x == 0:
        raise ValueError("zero has no 2-adic decomposition")
    k = 0
    num, den = x.numerator, x.denominator
    while num % 2 == 0:
        num //= 2
        k += 1
    while den % 2 == 0:
        den //= 2
        k -= 1
    return k, Fraction(num, den)


def _isqrt_exact(n: int) -> int:
    r = math.isqrt(n)
    if r * r != n:
        raise ValueError(f"{n} is not a perfect square")
    return r


@dataclass(frozen=True)
class LeadingTerm:
    i_power: int = 0  # unit (-i)^i_power, reduced mod 4
    two_pow: Fraction = Fraction(0)
    pi_pow: Fraction = Fraction(0)
    t_pow: int = 0
    rate: Fraction = Fraction(0)  # Gaussian rate in units of pi
    odd: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "i_power", self.i_power % 4)
        object.__setattr__(self, "two_pow", Fraction(self.two_pow))
        object.__setattr__(self, "pi_pow", Fraction(self.pi_pow))
        object.__setattr__(self, "rate", Fraction(self.rate))
        object.__setattr__(self, "odd", Fraction(self.odd))
        if self.odd <= 0:
            raise ValueError("odd part must be positive")

    def __mul__(self, other: "LeadingTerm") -> "LeadingTerm":
        k, odd = _two_adic(self.odd * other.odd)
        return LeadingTerm(self.i_power + other.i_power, self.two_pow + other.two_pow + k,
                           self.pi_pow + other.pi_pow, self.t_pow + other.t_pow,
                           self.rate + other.rate, odd)

    @classmethod
    def from_scalar(cls, c: GaussianRational, pi_pow: int = 0, root2: int = 0) -> "LeadingTerm":
        """c * pi^pi_pow * sqrt2^root2 for c real or purely imaginary."""
        if c.re and c.im:
            raise ValueError(f"{c} is not a unit multiple of a rational")
        if c.re:
            mag, k = abs(c.re), (0 if c.re > 0 else 2)
        elif c.im:
            mag, k = abs(c.im), (3 if c.im > 0 else 1)
        else:
            raise ValueError("zero coefficient")
        e, odd = _two_adic(mag)
        return cls(k, Fraction(e) + Fraction(root2, 2), pi_pow, 0, 0, odd)

    @classmethod
    def inverse_sqrt_of(cls, x: Fraction) -> "LeadingTerm":
        """x^(-1/2) for a positive rational whose odd part is a square."""
        if x <= 0:
            raise ValueError("need a positive number")
        e, odd = _two_adic(x)
        root = Fraction(_isqrt_exact(odd.numerator), _isqrt_exact(odd.denominator))
        return cls(0, Fraction(-e, 2), 0, 0, 0, 1 / root)

    def coefficient(self) -> complex:
        unit = (1, -1j, -1, 1j)[self.i_power]
        return unit * float(self.odd) * 2.0 ** float(self.two_pow) * math.pi ** float(self.pi_pow)

    def value(self, t: float) -> complex:
        return self.coefficient() * t ** self.t_pow * math.exp(-float(self.rate) * math.pi * t * t)

    def is_zero(self) -> bool:
        return False  # every field combination denotes a nonzero coefficient

    def fields(self) -> Dict[str, object]:
        return {"i_power": self.i_power, "two_pow": self.two_pow, "pi_pow": self.pi_pow,
                "t_pow": self.t_pow, "rate": self.rate, "odd": self.odd}

    def mismatches(self, other: "LeadingTerm") -> List[str]:
        a, b = self.fields(), other.fields()
        return [k for k in a if a[k] != b[k]]

    def to_json_obj(self) -> dict:
        def frac(x: Fraction):
            return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
        return {"unit": f"(-i)^{self.i_power}", "two_pow": frac(self.two_pow), "pi_pow": frac(self.pi_pow),
                "odd": frac(self.odd), "t_pow": self.t_pow, "rate_over_pi": frac(self.rate),
                "text": self.describe()}

    def describe(self) -> str:
        parts = [f"(-i)^{self.i_power}"]
        if self.odd != 1:
            parts.append(str(self.odd))
        parts += [f"2^({self.two_pow})", f"pi^({self.pi_pow})", f"t^{self.t_pow}",
                  f"exp(-({self.rate}) pi t^2)"]
        return " * ".join(parts)


def fiber_leading_closed_form(case: DualPairCase) -> LeadingTerm:
    """The stated closed form of the leading asymptotics of J(t)."""
    r = case.r
    if case.tag == "A":
        p, q, s = case.p, case.q, case.s
        return LeadingTerm(p * s + r * q - r * s, p * s + r * q - 5 * r * s, 2 * p * s + 2 * r * q - 4 * r * s,
                           (p + q) * (r + s) - 2 * r * s, r + s)
    n = case.n
    if case.tag == "B":
        return LeadingTerm((2 * n * r + r - r * r) // 2,
                           5 * n * r + Fraction(15, 4) * r - Fraction(19, 4) * r * r,
                           2 * r * (n - r + 1), 2 * n * r + r - r * r, r)
    return LeadingTerm((2 * n * r - r * r - r) // 2,
                       4 * n * r - Fraction(13, 4) * r - Fraction(15, 4) * r * r,
                       2 * r * (n - r - 1), 2 * n * r - r * r - r, r)


# ---------------------------------------------------------------------------
# Re-derivation from the cocycle
# ---------------------------------------------------------------------------

def _frame_rows(case: DualPairCase) -> List[int]:
    rows = list(range(1, case.r + 1))
    if case.tag == "A":
        rows += list(range(case.p + 1, case.p + case.s + 1))
    return rows


def evaluate_at_frame(poly: Poly, case: DualPairCase) -> Tuple[GaussianRational, int, int]:
    """Exact value of a z, zbar polynomial at the standard frame, as (c, pi power, sqrt2 power)."""
    ones = {(row, col) for col, row in enumerate(_frame_rows(case), start=1)}
    groups: Dict[Tuple[int, int], GaussianRational] = {}
    for (m, pp, r2), c in poly.terms.items():
        if all((k, a) in ones for (_, k, a), _e in m.exps):
            groups[(pp, r2)] = groups.get((pp, r2), GaussianRational(0)) + c
    groups = {k: v for k, v in groups.items() if v}
    if len(groups) != 1:
        raise ValueError(f"value at the frame is not a single pi/sqrt2 monomial: {groups}")
    (pp, r2), c = next(iter(groups.items()))
    return c, pp, r2


def _exact_matrix(x) -> Dict[Tuple[int, int], GaussianRational]:
    return {k: GaussianRational.coerce(v) for k, v in x.matrix}


def exact_majorant_hessian(case: DualPairCase) -> List[List[Fraction]]:
    """Hessian of M at 0 in the interleaved (x_s, y_s) coordinates, with exact entries."""
    half = GaussianRational(Fraction(1, 2))
    ihalf = GaussianRational(0, Fraction(1, 2))
    Xs = dict(zip(case.pairs, (_exact_matrix(x) for x in p_plus_basis(case))))
    Ys = dict(zip(case.pairs, (_exact_matrix(y) for y in p_minus_basis(case))))
    basis = []
    for pair in sorted(case.index_set):
        X, Y = Xs[pair], Ys[pair]
        keys = set(X) | set(Y)
        zero = GaussianRational(0)
        basis.append({k: (X.get(k, zero) + Y.get(k, zero)) * half for k in keys})
        basis.append({k: (X.get(k, zero) - Y.get(k, zero)) * ihalf for k in keys})
    columns = _frame_rows(case)
    images = [[{i: v for (i, j), v in B.items() if j == col} for col in columns] for B in basis]
    n = len(basis)
    H = [[Fraction(0)] * n for _ in range(n)]
    for k in range(n):
        for l in range(n):
            total = GaussianRational(0)
            for ck, cl in zip(images[k], images[l]):
                for i, v in ck.items():
                    if i in cl:
                        total = total + v.conjugate() * cl[i]
            H[k][l] = 4 * total.re
    return H


def exact_det(mat: Sequence[Sequence[Fraction]]) -> Fraction:
    a = [[Fraction(x) for x in row] for row in mat]
    n = len(a)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c]), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        for r in range(c + 1, n):
            f = a[r][c] / a[c][c]
            if f:
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return det


def _permutation_sign(seq: Sequence, key) -> int:
    keys = [key(x) for x in seq]
    inv = sum(1 for i in range(len(keys)) for j in range(i + 1, len(keys)) if keys[i] > keys[j])
    return -1 if inv % 2 else 1


@dataclass
class FiberRederivation:
    case: DualPairCase
    closed_form: LeadingTerm
    rederived: LeadingTerm
    factors: Dict[str, LeadingTerm]
    amplitude_degree: int
    hessian_det: Fraction

    @property
    def match(self) -> bool:
        return self.closed_form == self.rederived

    @property
    def mismatched_fields(self) -> List[str]:
        return self.closed_form.mismatches(self.rederived)

    def to_json_obj(self) -> dict:
        return {"case": self.case.to_json_obj(), "closed_form": self.closed_form.to_json_obj(),
                "rederived": self.rederived.to_json_obj(), "match": self.match,
                "mismatched_fields": self.mismatched_fields,
                "factors": {k: v.to_json_obj() for k, v in self.factors.items()},
                "amplitude_degree": self.amplitude_degree,
                "majorant_hessian_det": str(self.hessian_det)}


class FiberMismatch(AssertionError):
    def __init__(self, report: FiberRederivation):
        super().__init__(f"{report.case.label}: closed form {report.closed_form.describe()} "
                         f"vs re-derived {report.rederived.describe()} (fields {report.mismatched_fields})")
        self.report = report


def rederive_fiber_leading(case: DualPairCase, force: bool = False) -> FiberRederivation:
    """Assemble the leading term of J(t) from the cocycle, the intertwiner and the majorant Hessian."""
    N = case.codim
    restricted = restrict_to_fiber(case, build_phi(case, "full", force=force))
    top_key = fiber_top_index(case, PRIME) + fiber_top_index(case, DPRIME)
    if len(restricted.terms) != 1 or top_key not in restricted.terms:
        raise ValueError(f"fiber restriction is not a single top-degree term: {list(restricted.terms)}")
    amplitude_poly = restricted.terms[top_key]
    top = highest_term(iota(amplitude_poly, case))
    degree = top.poly.degree()
    c, pp, r2 = evaluate_at_frame(top.poly, case)
    factors: Dict[str, LeadingTerm] = {}
    factors["modulus"] = LeadingTerm(t_pow=modulus_exponent(case))
    factors["amplitude"] = LeadingTerm.from_scalar(c, pp, r2) * LeadingTerm(t_pow=degree)
    # xi'_I ^ xi''_I rewritten as the product of xi'_s ^ xi''_s over s in I
    order_sign = _permutation_sign(top_key, key=lambda idx: (idx[1], idx[0]))
    factors["wedge_order"] = LeadingTerm(i_power=0 if order_sign > 0 else 2)
    # xi'_s ^ xi''_s = (-i/2) dx_s ^ dy_s
    factors["volume_form"] = LeadingTerm(i_power=N, two_pow=-N)
    # (2 pi / t^2)^(real dim / 2)
    factors["laplace"] = LeadingTerm(two_pow=N, pi_pow=N, t_pow=-2 * N)
    det = exact_det(exact_majorant_hessian(case))
    factors["hessian"] = LeadingTerm(pi_pow=-N) * LeadingTerm.inverse_sqrt_of(det)
    factors["gaussian"] = LeadingTerm(rate=len(_frame_rows(case)))
    total = LeadingTerm()
    for f in factors.values():
        total = total * f
    return FiberRederivation(case, fiber_leading_closed_form(case), total, factors, degree, det)


def fiber_leading_from_cocycle(case: DualPairCase, force: bool = False) -> LeadingTerm:
    """Re-derived leading term; raises FiberMismatch when it differs from the closed form."""
    report = rederive_fiber_leading(case, force)
    if not report.match:
        raise FiberMismatch(report)
    return report.rederived


# ---------------------------------------------------------------------------
# Laplace problems
# ---------------------------------------------------------------------------

@dataclass
class LaplaceProblem:
    """J(t) = integral of f(x) exp(-t h(x)) dx over R^dim, minimum of h at 0.

    f and h take an array of points of shape (S, dim) and return S values.
    """

    dim: int
    f: Callable[[np.ndarray], np.ndarray]
    h: Callable[[np.ndarray], np.ndarray]
    hessian: Optional[np.ndarray] = None

    def hessian_at_zero(self, step: float = 1e-4) -> np.ndarray:
        if self.hessian is not None:
            return np.asarray(self.hessian, dtype=float)
        n = self.dim
        e = np.eye(n) * step
        pts, idx = [], []
        for k in range(n):
            for l in range(n):
                pts += [e[k] + e[l], e[k] - e[l], -e[k] + e[l], -e[k] - e[l]]
        vals = np.asarray(self.h(np.array(pts)), dtype=float).reshape(n, n, 4)
        H = (vals[..., 0] - vals[..., 1] - vals[..., 2] + vals[..., 3]) / (4 * step ** 2)
        return (H + H.T) / 2


class NotPositiveDefinite(ValueError):
    pass


def _cholesky(H: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(H)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("Hessian of the phase is not positive definite") from exc


def laplace_leading(problem: LaplaceProblem, t: float) -> complex:
    """(2 pi / t)^(n/2) f(0) det(A)^(-1/2) exp(-t h(0))."""
    H = problem.hessian_at_zero()
    L = _cholesky(H)
    det = float(np.prod(np.diag(L)) ** 2)
    zero = np.zeros((1, problem.dim))
    f0 = complex(np.asarray(problem.f(zero))[0])
    h0 = float(np.asarray(problem.h(zero))[0])
    return (2 * math.pi / t) ** (problem.dim / 2) * f0 * det ** -0.5 * math.exp(-t * h0)


def gaussian_moment(exponents: Sequence[int], hessian_diag: Sequence[float], t: float) -> float:
    """Integral of prod x_i^k_i exp(-t sum a_i x_i^2 / 2) over R^n."""
    out = 1.0
    for k, a in zip(exponents, hessian_diag):
        if k % 2:
            return 0.0
        out *= math.gamma((k + 1) / 2) * (2 / (t * a)) ** ((k + 1) / 2)
    return out


@dataclass
class QuadratureResult:
    value: complex
    error: float
    scheme: str
    diagnostics: dict = field(default_factory=dict)


class QuadratureError(RuntimeError):
    def __init__(self, message: str, diagnostics: dict):
        super().__init__(f"{message}: {diagnostics}")
        self.diagnostics = diagnostics


def _gh_tensor(problem: LaplaceProblem, t: float, L: np.ndarray, nodes: int) -> complex:
    """Gauss-Hermite rule after x = sqrt(2/t) L^{-T} y, which turns the quadratic part into exp(-|y|^2)."""
    y, w = np.polynomial.hermite.hermgauss(nodes)
    n = problem.dim
    grids = np.meshgrid(*([y] * n), indexing="ij")
    Y = np.stack([g.ravel() for g in grids], axis=1)
    W = np.prod(np.stack(np.meshgrid(*([w] * n), indexing="ij"), axis=0).reshape(n, -1), axis=0)
    T = math.sqrt(2 / t) * np.linalg.inv(L.T)
    X = Y @ T.T
    h0 = float(np.asarray(problem.h(np.zeros((1, n))))[0])
    g = np.asarray(problem.f(X), dtype=complex) * np.exp(np.sum(Y ** 2, axis=1) - t * (np.asarray(problem.h(X)) - h0))
    return complex(np.sum(W * g)) * abs(np.linalg.det(T)) * math.exp(-t * h0)


def quadrature(problem: LaplaceProblem, t: float, scheme: str = "gauss-hermite", box: Optional[float] = None,
               nodes: int = 40, samples: int = 200_000, seed: int = 0, rtol: float = 1e-6) -> QuadratureResult:
    """Numeric J(t) with an error estimate.

    gauss-hermite: tensor rule adapted to the Hessian at 0; the error is the
    change from nodes to 2*nodes.  monte-carlo: importance sampling from the
    Gaussian matching the Hessian; the error is the standard error.  If box
    is given, the integrand is set to zero outside the cube of that half-width.
    """
    n = problem.dim
    L = _cholesky(problem.hessian_at_zero())
    f = problem.f
    if box is not None:
        def f(x, _f=problem.f):
            return np.where(np.all(np.abs(x) <= box, axis=1), _f(x), 0)
        problem = LaplaceProblem(n, f, problem.h, problem.hessian)
    if scheme == "gauss-hermite":
        a = _gh_tensor(problem, t, L, nodes)
        b = _gh_tensor(problem, t, L, 2 * nodes)
        err = abs(b - a)
        diag = {"nodes": [nodes, 2 * nodes], "coarse": [a.real, a.imag], "fine": [b.real, b.imag]}
        if not np.isfinite(b) or err > rtol * max(abs(b), 1e-300):
            raise QuadratureError("Gauss-Hermite rule did not converge", diag)
        return QuadratureResult(b, err, scheme, diag)
    if scheme == "monte-carlo":
        rng = np.random.default_rng(seed)
        cov_chol = np.linalg.inv(L.T) / math.sqrt(t)  # covariance (t H)^{-1}
        Z = rng.standard_normal((samples, n))
        X = Z @ cov_chol.T
        log_q = -0.5 * np.sum(Z ** 2, axis=1) - n / 2 * math.log(2 * math.pi) - math.log(abs(np.linalg.det(cov_chol)))
        vals = np.asarray(problem.f(X), dtype=complex) * np.exp(-t * np.asarray(problem.h(X)) - log_q)
        mean = complex(np.mean(vals))
        err = float(np.std(vals) / math.sqrt(samples))
        diag = {"samples": samples, "seed": seed}
        if not np.isfinite(mean):
            raise QuadratureError("Monte-Carlo estimate is not finite", diag)
        return QuadratureResult(mean, err, scheme, diag)
    raise ValueError(f"unknown scheme {scheme!r}")


# ---------------------------------------------------------------------------
# Toy problems
# ---------------------------------------------------------------------------

def toy_problem(name: str) -> Tuple[LaplaceProblem, Callable[[float], float]]:
    """A named toy with its reference leading term as a function of t.

    gauss1d: f = 1, h = x^2; moment1d: f = 1 + x^2, h = x^2; moment2d:
    f = x^2 y^2, h = x^2 + y^2, whose amplitude vanishes at 0 so the
    reference is the lowest Gaussian moment instead of f(0).
    """
    if name == "gauss1d":
        prob = LaplaceProblem(1, lambda x: np.ones(len(x)), lambda x: x[:, 0] ** 2, np.array([[2.0]]))
        return prob, lambda t: laplace_leading(prob, t).real
    if name == "moment1d":
        prob = LaplaceProblem(1, lambda x: 1 + x[:, 0] ** 2, lambda x: x[:, 0] ** 2, np.array([[2.0]]))
        return prob, lambda t: laplace_leading(prob, t).real
    if name == "moment2d":
        prob = LaplaceProblem(2, lambda x: x[:, 0] ** 2 * x[:, 1] ** 2, lambda x: x[:, 0] ** 2 + x[:, 1] ** 2,
                              np.diag([2.0, 2.0]))
        return prob, lambda t: gaussian_moment([2, 2], [2.0, 2.0], t)
    raise ValueError(f"unknown toy {name!r}")


TOYS = ("gauss1d", "moment1d", "moment2d")


# ---------------------------------------------------------------------------
# Numeric fiber integral (two real dimensions)
# ---------------------------------------------------------------------------

def _to_numpy(x, size: int) -> np.ndarray:
    out = np.zeros((size, size), dtype=complex)
    for (i, j), v in x.matrix:
        out[i - 1, j - 1] = complex(v)
    return out


def _dexp_translated(Y: np.ndarray, V: np.ndarray) -> np.ndarray:
    """exp(Y) * d/ds exp(-Y - sV) at s = 0, batched over Hermitian Y, via the divided-difference formula."""
    lam, U = np.linalg.eigh(-Y)  # -Y = U diag(lam) U^*
    Uh = np.conj(np.swapaxes(U, -1, -2))
    Bt = Uh @ (-V) @ U
    li, lj = lam[..., :, None], lam[..., None, :]
    diff = li - lj
    same = np.abs(diff) < 1e-12
    gamma = np.where(same, np.exp(li), (np.exp(li) - np.exp(lj)) / np.where(same, 1.0, diff))
    D = U @ (Bt * gamma) @ Uh
    expY = U @ (np.exp(-lam)[..., :, None] * Uh)
    return expY @ D


@dataclass
class NumericFiber:
    value: complex
    stderr: float
    closed_form: complex
    ratio: complex
    samples: int
    seed: int

    def to_json_obj(self) -> dict:
        return {"value": [self.value.real, self.value.imag], "stderr": self.stderr,
                "closed_form": [self.closed_form.real, self.closed_form.imag],
                "ratio": [self.ratio.real, self.ratio.imag], "samples": self.samples, "seed": self.seed}


def numeric_fiber_integral(case: DualPairCase, t: float, samples: int = 1_000_000, seed: int = 0,
                           batch: int = 100_000) -> NumericFiber:
    """Monte-Carlo value of J(t) for a fiber of two real dimensions.

    The invariant form is evaluated at z = exp(-Y) z_0: tangent vectors are
    carried back to z_0 by exp(Y), and the Schroedinger function is
    evaluated at exp(Y) x after the scaling m'(t).
    """
    if case.tag != "A" or case.codim != 1:
        raise ValueError("numeric fiber integral is implemented for two-real-dimensional fibers of case A")
    ctx = make_context(case)
    phi = build_phi(case, "full")
    size = case.dim_v
    plus = [_to_numpy(x, size) for x in p_plus_basis(case)]
    minus = [_to_numpy(y, size) for y in p_minus_basis(case)]
    ks = [_to_numpy(k, size) for k in k_basis(case)]
    flat = np.array([m.ravel() for m in plus + minus + ks]).T
    pinv = np.linalg.pinv(flat)
    pair_pos = {pair: i for i, pair in enumerate(case.pairs)}
    npairs = len(case.pairs)

    def coords(W: np.ndarray) -> np.ndarray:
        return (W.reshape(W.shape[0], -1) @ pinv.T)[:, : 2 * npairs]

    terms = []
    for key, poly in phi.terms.items():
        if len(key) != 2:
            continue
        g = siegel_m(Fraction(t), iota(poly, case), modulus_exponent(case))
        terms.append((key, g))

    def col(idx):
        kind, pair = idx
        return pair_pos[pair] + (0 if kind == PRIME else npairs)

    H = np.pi * hessian_analytic(ctx)
    L = np.linalg.cholesky(t * t * H)
    Linv = np.linalg.inv(L.T)
    rng = np.random.default_rng(seed)
    Ex, Fy = ctx.basis
    total, total_sq, count = 0j, 0.0, 0
    while count < samples:
        m = min(batch, samples - count)
        Z = rng.standard_normal((m, 2))
        Yc = Z @ Linv.T
        log_q = -0.5 * np.sum(Z ** 2, axis=1) - math.log(2 * math.pi) - math.log(abs(np.linalg.det(Linv)))
        Ymat = Yc[:, 0, None, None] * Ex + Yc[:, 1, None, None] * Fy
        Wx = coords(_dexp_translated(Ymat, np.broadcast_to(Ex, Ymat.shape)))
        Wy = coords(_dexp_translated(Ymat, np.broadcast_to(Fy, Ymat.shape)))
        lam, U = np.linalg.eigh(Ymat)
        expY = U @ (np.exp(lam)[..., :, None] * np.conj(np.swapaxes(U, -1, -2)))
        pts = expY @ ctx.frame
        dens = np.zeros(m, dtype=complex)
        for (a, b), g in terms:
            form = Wx[:, col(a)] * Wy[:, col(b)] - Wy[:, col(a)] * Wx[:, col(b)]
            dens += form * evaluate_many(g, pts)
        vals = dens * np.exp(-log_q)
        total += complex(np.sum(vals))
        total_sq += float(np.sum(np.abs(vals) ** 2))
        count += m
    mean = total / count
    var = total_sq / count - abs(mean) ** 2
    closed = fiber_leading_closed_form(case).value(t)
    return NumericFiber(mean, math.sqrt(max(var, 0.0) / count), closed, mean / closed, count, seed)
