"""Majorants and decay estimates on the normal space at the base point.

Everything is anchored at the standard frame: z_0 is spanned by the
negative basis vectors, the majorant norm is the Euclidean norm in the
basis v_1..v_N, and the frame x is (v_1..v_r, v_{p+1}..v_{p+s}) in case A
and (v_1..v_r) in cases B and C.

Real normal coordinates: for each pair s in the index set I,
E_s = (X_s + Y_s)/2 and F_s = i (X_s - Y_s)/2, where X_s spans p+ and
Y_s = X_s^* spans p-.  A normal vector is sum_s x_s E_s + y_s F_s and the
coordinates are ordered (x_s, y_s) pair by pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .fock import DualPairCase, p_minus_basis, p_plus_basis

HERMITIAN_TOL = 1e-12
EIG_CLUSTER_TOL = 1e-9


def _to_numpy(x, size: int) -> np.ndarray:
    out = np.zeros((size, size), dtype=complex)
    for (i, j), v in x.matrix:
        out[i - 1, j - 1] = complex(v)
    return out


@dataclass
class MajorantContext:
    case: DualPairCase
    frame: np.ndarray  # N x m, columns are the frame vectors x_j
    labels: List[Tuple[Tuple[int, int], str]]  # (pair, "x"|"y") per real coordinate
    basis: List[np.ndarray]  # Hermitian matrices matching labels

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def columns(self) -> int:
        return self.frame.shape[1]

    def tangent(self, coeffs: Sequence[float]) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} coordinates")
        return np.tensordot(coeffs, np.array(self.basis), axes=1)


def standard_frame(case: DualPairCase) -> np.ndarray:
    N = case.dim_v
    cols = list(range(1, case.r + 1))
    if case.tag == "A":
        cols += list(range(case.p + 1, case.p + case.s + 1))
    frame = np.zeros((N, len(cols)), dtype=complex)
    for j, i in enumerate(cols):
        frame[i - 1, j] = 1.0
    return frame


def make_context(case: DualPairCase) -> MajorantContext:
    N = case.dim_v
    Xs = {pair: _to_numpy(x, N) for pair, x in zip(case.pairs, p_plus_basis(case))}
    Ys = {pair: _to_numpy(y, N) for pair, y in zip(case.pairs, p_minus_basis(case))}
    labels, basis = [], []
    for pair in sorted(case.index_set):
        X, Y = Xs[pair], Ys[pair]
        if not np.allclose(X.conj().T, Y):
            raise RuntimeError("p- basis is not the adjoint of the p+ basis")
        labels += [(pair, "x"), (pair, "y")]
        basis += [(X + Y) / 2, 1j * (X - Y) / 2]
    return MajorantContext(case, standard_frame(case), labels, basis)


# ---------------------------------------------------------------------------
# Spectral exponential
# ---------------------------------------------------------------------------

def check_hermitian(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(X)))
    if np.linalg.norm(X - X.conj().T) > HERMITIAN_TOL * scale:
        raise ValueError("matrix is not Hermitian")
    return (X + X.conj().T) / 2


@dataclass
class Spectrum:
    eigenvalues: np.ndarray  # distinct (clustered) eigenvalues, ascending
    projections: List[np.ndarray]  # orthogonal projections onto the eigenspaces


def spectral_data(X: np.ndarray) -> Spectrum:
    """Eigenvalues of a Hermitian matrix with the eigenspace projections; close eigenvalues are merged."""
    X = check_hermitian(X)
    w, U = np.linalg.eigh(X)
    values, projs = [], []
    start = 0
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k] - w[k - 1] > EIG_CLUSTER_TOL:
            block = U[:, start:k]
            values.append(float(np.mean(w[start:k])))
            projs.append(block @ block.conj().T)
            start = k
    return Spectrum(np.array(values), projs)


def exp_apply(X: np.ndarray, t: float, v: np.ndarray, spectral: bool = False):
    """exp(-tX) v through the eigendecomposition; optionally also the spectral data."""
    X = check_hermitian(X)
    w, U = np.linalg.eigh(X)
    out = U @ (np.exp(-t * w)[:, None] * (U.conj().T @ np.asarray(v, dtype=complex).reshape(len(w), -1)))
    out = out.reshape(np.shape(v))
    if spectral:
        return out, spectral_data(X)
    return out


def exp_apply_dense(X: np.ndarray, t: float, v: np.ndarray) -> np.ndarray:
    """Reference route: scaling-and-squaring matrix exponential."""
    return scipy.linalg.expm(-t * np.asarray(X, dtype=complex)) @ np.asarray(v, dtype=complex)


def norm2_spectral(X: np.ndarray, t: float, v: np.ndarray) -> float:
    """sum_k ||p_k v||^2 exp(-2 lambda_k t)."""
    spec = spectral_data(X)
    v = np.asarray(v, dtype=complex)
    return float(sum(np.vdot(P @ v, P @ v).real * np.exp(-2 * lam * t)
                     for lam, P in zip(spec.eigenvalues, spec.projections)))


# ---------------------------------------------------------------------------
# Majorant, h and f
# ---------------------------------------------------------------------------

def majorant(ctx: MajorantContext, X: np.ndarray, t: float = 1.0) -> float:
    """M(exp(tX) z_0, x) = sum_j ||exp(-tX) x_j||^2."""
    moved = exp_apply(X, t, ctx.frame)
    return float(np.sum(np.abs(moved) ** 2))


def h_function(ctx: MajorantContext, coeffs: Sequence[float]) -> float:
    """h(Y) = pi * M(exp(Y) z_0, x) on real normal coordinates."""
    return float(np.pi * majorant(ctx, ctx.tangent(coeffs), 1.0))


def f_function(ctx: MajorantContext, X: np.ndarray) -> float:
    """-sum_j sum_{lambda < 0} ||p_lambda(x_j)||^2 lambda."""
    spec = spectral_data(X)
    total = 0.0
    for lam, P in zip(spec.eigenvalues, spec.projections):
        if lam < -EIG_CLUSTER_TOL:
            proj = P @ ctx.frame
            total -= float(np.sum(np.abs(proj) ** 2)) * lam
    return total


def unit_normals(ctx: MajorantContext, count: int, rng: np.random.Generator) -> List[np.ndarray]:
    """Uniform samples of the unit sphere of the normal space (Frobenius norm of the matrix)."""
    out = []
    for _ in range(count):
        X = ctx.tangent(rng.standard_normal(ctx.dim))
        out.append(X / np.linalg.norm(X))
    return out


# ---------------------------------------------------------------------------
# Decay constants
# ---------------------------------------------------------------------------

@dataclass
class DecayCertificate:
    b: float
    c: float
    C: float
    terms: int
    checked: int
    violations: int
    worst_margin: float
    worst_witness: Optional[dict] = None
    rows: List[Tuple[int, float, float, float]] = field(default_factory=list)  # (id, t, M, bound)

    @property
    def ok(self) -> bool:
        return self.violations == 0


class CertificateError(RuntimeError):
    def __init__(self, cert: DecayCertificate):
        super().__init__(f"decay bound violated at {cert.violations} grid points; worst {cert.worst_witness}")
        self.certificate = cert


T_GRID = tuple(0.5 * k for k in range(11))


def decay_constants(ctx: MajorantContext, samples: int = 2000, seed: int = 0, validation: int = 200,
                    t_grid: Sequence[float] = T_GRID, raise_on_failure: bool = True) -> DecayCertificate:
    """Empirical (b, c) with M(exp(tX) z_0, x) >= c exp(2bt), certified on fresh samples.

    C is the sampled minimum of f on the unit sphere, c = C / (number of
    terms in f, at most dim V times the number of frame vectors) and
    b = c / max_j ||x_j||^2.
    """
    rng = np.random.default_rng(seed)
    C = min(f_function(ctx, X) for X in unit_normals(ctx, samples, rng))
    terms = ctx.case.dim_v * ctx.columns
    c = C / terms
    b = c / float(np.max(np.sum(np.abs(ctx.frame) ** 2, axis=0)))
    cert = DecayCertificate(b, c, C, terms, 0, 0, np.inf)
    for idx, X in enumerate(unit_normals(ctx, validation, rng)):
        for t in t_grid:
            M = majorant(ctx, X, t)
            bound = c * np.exp(2 * b * t)
            cert.rows.append((idx, float(t), M, float(bound)))
            cert.checked += 1
            margin = M - bound
            if margin < cert.worst_margin:
                cert.worst_margin = float(margin)
                cert.worst_witness = {"sample": idx, "t": float(t), "M": M, "bound": float(bound)}
            if margin < 0:
                cert.violations += 1
    if raise_on_failure and cert.violations:
        raise CertificateError(cert)
    return cert


# ---------------------------------------------------------------------------
# Sphericality
# ---------------------------------------------------------------------------

def rank_one_direction(case: DualPairCase, j: int, coeffs: Sequence[complex]) -> np.ndarray:
    """sum_mu Re(c_mu) E_{j mu} + Im(c_mu) F_{j mu} over the rows of opposite sign (case A)."""
    if case.tag != "A":
        raise ValueError("rank-one directions are defined for case A")
    N, p = case.dim_v, case.p
    others = range(p + 1, N + 1) if j <= p else range(1, p + 1)
    coeffs = list(coeffs)
    if len(coeffs) != len(others):
        raise ValueError("one coefficient per opposite row")
    X = np.zeros((N, N), dtype=complex)
    for mu, c in zip(others, coeffs):
        a, b = (j, mu) if j <= p else (mu, j)
        E = np.zeros((N, N), dtype=complex)
        E[a - 1, b - 1] = E[b - 1, a - 1] = 1
        F = np.zeros((N, N), dtype=complex)
        F[a - 1, b - 1], F[b - 1, a - 1] = 1j, -1j
        X += np.real(c) * E + np.imag(c) * F
    return X


def sphericality_defect(case: DualPairCase, j: int, coeffs: Sequence[complex]) -> float:
    """|| exp(-X) v_j ||^2 - (cosh^2 t + sinh^2 t) with t the Euclidean length of the coefficients."""
    X = rank_one_direction(case, j, coeffs)
    t = float(np.sqrt(np.sum(np.abs(np.asarray(coeffs)) ** 2)))
    v = np.zeros(case.dim_v, dtype=complex)
    v[j - 1] = 1
    val = float(np.sum(np.abs(exp_apply(X, 1.0, v)) ** 2))
    return val - (np.cosh(t) ** 2 + np.sinh(t) ** 2)


# ---------------------------------------------------------------------------
# Hessian of the majorant
# ---------------------------------------------------------------------------

def hessian_analytic(ctx: MajorantContext) -> np.ndarray:
    """Hessian of M at 0: 4 Re sum_j <B_k x_j, B_l x_j>."""
    BX = [B @ ctx.frame for B in ctx.basis]
    n = ctx.dim
    H = np.zeros((n, n))
    for k in range(n):
        for l in range(n):
            H[k, l] = 4 * np.real(np.sum(BX[k].conj() * BX[l]))
    return H


def gradient_analytic(ctx: MajorantContext) -> np.ndarray:
    """Gradient of M at 0: -2 Re sum_j <x_j, B_k x_j>."""
    return np.array([-2 * np.real(np.sum(ctx.frame.conj() * (B @ ctx.frame))) for B in ctx.basis])


def _m_at(ctx: MajorantContext, coeffs: np.ndarray) -> float:
    return majorant(ctx, ctx.tangent(coeffs), 1.0)


def hessian_fd(ctx: MajorantContext, step: float = 1e-4) -> np.ndarray:
    n = ctx.dim
    H = np.zeros((n, n))
    e = np.eye(n) * step
    m0 = _m_at(ctx, np.zeros(n))
    for k in range(n):
        H[k, k] = (_m_at(ctx, e[k]) - 2 * m0 + _m_at(ctx, -e[k])) / step ** 2
        for l in range(k + 1, n):
            val = (_m_at(ctx, e[k] + e[l]) - _m_at(ctx, e[k] - e[l])
                   - _m_at(ctx, -e[k] + e[l]) + _m_at(ctx, -e[k] - e[l])) / (4 * step ** 2)
            H[k, l] = H[l, k] = val
    return H


def gradient_fd(ctx: MajorantContext, step: float = 1e-5) -> np.ndarray:
    n = ctx.dim
    e = np.eye(n) * step
    return np.array([(_m_at(ctx, e[k]) - _m_at(ctx, -e[k])) / (2 * step) for k in range(n)])


def expected_hessian_diagonal(case: DualPairCase) -> List[int]:
    """Case A diagonal: 8 on pairs whose row and column both carry frame vectors, else 4."""
    if case.tag != "A":
        raise ValueError("closed-form Hessian diagonal is stated for case A")
    out = []
    for (a, mu) in sorted(case.index_set):
        val = 8 if (a <= case.r and mu <= case.p + case.s) else 4
        out += [val, val]
    return out


@dataclass
class HessianReport:
    analytic: np.ndarray
    finite_difference: np.ndarray
    max_rel_error: float
    gradient_norm: float
    determinant: float
    positive_definite: bool


class HessianMismatch(RuntimeError):
    pass


def hessian_of_h(ctx: MajorantContext, step: float = 1e-4, tol: float = 1e-5) -> HessianReport:
    """Hessian of M at 0 (the Hessian of h is pi times this), checked against finite differences."""
    A = hessian_analytic(ctx)
    F = hessian_fd(ctx, step)
    scale = np.max(np.abs(A))
    rel = float(np.max(np.abs(A - F)) / scale)
    if rel > tol:
        raise HessianMismatch(f"finite differences differ from the analytic Hessian by {rel:.2e}")
    try:
        np.linalg.cholesky(A)
        pd = True
    except np.linalg.LinAlgError:
        pd = False
    grad = float(np.linalg.norm(gradient_fd(ctx)))
    return HessianReport(A, F, rel, grad, float(np.linalg.det(A)), pd)


def exact_hessian_diagonal(ctx: MajorantContext) -> Optional[List[int]]:
    """The analytic Hessian as integers when it is diagonal with integral entries."""
    A = hessian_analytic(ctx)
    if np.max(np.abs(A - np.diag(np.diag(A)))) > 1e-12:
        return None
    diag = np.diag(A)
    rounded = np.rint(diag)
    if np.max(np.abs(diag - rounded)) > 1e-12:
        return None
    return [int(x) for x in rounded]
