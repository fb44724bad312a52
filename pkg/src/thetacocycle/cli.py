"""Command line entry point: case selection, checks and report files.

Reports go to $THETACOCYCLE_REPORT_DIR (default ./thetacocycle-reports),
one directory per case.  Every check writes <check>.json; each invocation
also writes a summary listing every check with a descriptive label.  JSON
is written with sorted keys and no timestamps, so identical configs give
identical bytes; pass --timing to record elapsed milliseconds.

Exit codes: 0 all checks pass, 1 some check failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

REPORT_ENV = "THETACOCYCLE_REPORT_DIR"
DEFAULT_REPORT_DIR = "thetacocycle-reports"

LABELS = {
    "build": "cochain construction from the highest-weight pairing",
    "closed": "relative differential vanishes on phi+, phi-, phi",
    "invariance": "K-equivariance up to the determinant character",
    "annihilation": "f_D killed by n, values of phi+ killed by p-",
    "restriction": "fiber restriction of phi+ is the single term f_D * wedge xi'",
    "weights": "k and k' weights of e_D and f_D match the closed forms",
    "action": "derived Lie and Weyl actions match the explicit formulas",
    "intertwine": "intertwiner commutes with the Weyl generators; top terms match",
    "hessian": "majorant Hessian: analytic vs finite differences, determinant, gradient",
    "majorant": "exponential lower bound of the majorant on the validation grid",
    "fiber": "leading term of the fiber integral: re-derived vs closed form",
    "toy": "Laplace leading term vs quadrature on a toy integral",
}

ALL_CHECKS = ("build", "closed", "invariance", "annihilation", "restriction", "weights", "action",
              "intertwine", "hessian", "majorant", "fiber")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    case: object
    checks: List[str]
    seed: int = 0
    out: Path = Path(DEFAULT_REPORT_DIR)
    force: bool = False
    timing: bool = False
    options: dict = field(default_factory=dict)


@dataclass
class CheckResult:
    check: str
    passed: bool
    details: dict
    witness: Optional[object] = None
    elapsed_ms: Optional[int] = None


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _json_default(x):
    from fractions import Fraction

    import numpy as np

    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"cannot serialize {type(x).__name__}")


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n")


def _frac_list(w) -> list:
    from .fock import weight_to_json

    return weight_to_json(w)


def make_case(args) -> object:
    from .fock import DualPairCase

    try:
        if args.case == "A":
            if None in (args.p, args.q, args.r, args.s):
                raise UsageError("case A needs --p --q --r --s")
            return DualPairCase.A(args.p, args.q, args.r, args.s)
        n = args.n if args.n is not None else args.p
        if n is None or args.r is None:
            raise UsageError(f"case {args.case} needs --n --r")
        return DualPairCase.B(n, args.r) if args.case == "B" else DualPairCase.C(n, args.r)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _slug(case) -> str:
    return case.label.replace("(", "_").replace(")", "").replace(",", "_")


def _setup_matplotlib():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "thetacocycle"
    return plt


def _save_png(fig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=100, metadata={"Software": None})


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def check_build(cfg: RunConfig) -> CheckResult:
    from .cocycle import build_phi

    which = cfg.options.get("which", "plus")
    phi = build_phi(cfg.case, which, force=cfg.force)
    write_json(cfg.out / f"cochain_{which}.json", {"case": cfg.case.to_json_obj(), "which": which,
                                                    "cochain": phi.to_json_obj()})
    ok = not phi.is_zero()
    return CheckResult("build", ok, {"which": which, "terms": len(phi.terms),
                                     "bidegree": list(phi.bidegree())})


def check_closed(cfg: RunConfig) -> CheckResult:
    from .cocycle import PHI_MODULE, build_phi, rel_differential

    details, witness = {}, None
    for which in ("plus", "minus", "full"):
        d = rel_differential(cfg.case, build_phi(cfg.case, which, force=cfg.force), PHI_MODULE[which])
        details[which] = d.is_zero()
        if not d.is_zero() and witness is None:
            witness = {"cochain": which, "differential": d.to_json_obj()[:5]}
    return CheckResult("closed", all(details.values()), details, witness)


def check_invariance_cmd(cfg: RunConfig) -> CheckResult:
    from .cocycle import PHI_MODULE, build_phi, check_invariance

    details, witness = {}, None
    for which in ("plus", "minus", "full"):
        rep = check_invariance(cfg.case, build_phi(cfg.case, which, force=cfg.force), which, PHI_MODULE[which])
        details[which] = rep.invariant
        if not rep.invariant and witness is None:
            witness = {"cochain": which, "generator": rep.generator}
    return CheckResult("invariance", all(details.values()), details, witness)


def check_annihilation(cfg: RunConfig) -> CheckResult:
    from .cocycle import build_phi, check_invariance
    from .fock import annihilated_by, special_harmonic

    f = special_harmonic(cfg.case)
    by_n = annihilated_by(cfg.case, f, "n")
    rep = check_invariance(cfg.case, build_phi(cfg.case, "plus", force=cfg.force), "plus", "minus")
    witness = None
    if not by_n.annihilated:
        witness = {"f_D_generator": by_n.generator}
    elif not rep.annihilated:
        witness = {"phi_plus_generator": rep.annihilation_generator}
    return CheckResult("annihilation", by_n.annihilated and rep.annihilated,
                       {"f_D_by_n": by_n.annihilated, "phi_plus_values_by_p_minus": rep.annihilated}, witness)


def check_restriction(cfg: RunConfig) -> CheckResult:
    from .cocycle import build_phi, fiber_top_index, restrict_to_fiber
    from .fock import special_harmonic

    r = restrict_to_fiber(cfg.case, build_phi(cfg.case, "plus", force=cfg.force))
    expected = [(fiber_top_index(cfg.case), special_harmonic(cfg.case))]
    ok = list(r.terms.items()) == expected
    return CheckResult("restriction", ok, {"terms": len(r.terms)},
                       None if ok else {"restricted": r.to_json_obj()})


def check_weights(cfg: RunConfig) -> CheckResult:
    from .cocycle import ext_weight, top_wedge
    from .fock import special_harmonic, stated_weights, weight_of

    case = cfg.case
    got = {"e_D": ext_weight(case, top_wedge(case)),
           "f_D": weight_of(case, special_harmonic(case)),
           "f_D_mirror": weight_of(case, special_harmonic(case, "up"), module="plus"),
           "f_D_kprime": weight_of(case, special_harmonic(case), "kprime"),
           "f_D_mirror_kprime": weight_of(case, special_harmonic(case, "up"), "kprime", "plus")}
    want = stated_weights(case)
    details = {k: {"computed": _frac_list(got[k]), "closed_form": _frac_list(want[k]),
                   "match": tuple(got[k]) == tuple(want[k])} for k in want}
    ok = all(v["match"] for v in details.values())
    return CheckResult("weights", ok, details, None if ok else [k for k, v in details.items() if not v["match"]])


def check_action(cfg: RunConfig) -> CheckResult:
    from .fock import normalization_lock

    rep = normalization_lock(cfg.case, cfg.options.get("degree", 3))
    return CheckResult("action", rep.ok, {"comparisons": rep.checked, "mismatches": len(rep.mismatches)},
                       rep.mismatches[:10] or None)


def check_intertwine(cfg: RunConfig) -> CheckResult:
    from .schrodinger import intertwining_report

    rep = intertwining_report(cfg.case, cfg.options.get("degree", 3))
    return CheckResult("intertwine", rep.ok, {"monomials": rep.monomials, "comparisons": rep.checks,
                                              "failures": len(rep.failures)}, rep.failures[:10] or None)


def check_hessian(cfg: RunConfig) -> CheckResult:
    import numpy as np

    from .geometry import HessianMismatch, exact_hessian_diagonal, expected_hessian_diagonal, hessian_of_h, make_context
    from .laplace import exact_det, exact_majorant_hessian

    case = cfg.case
    ctx = make_context(case)
    try:
        rep = hessian_of_h(ctx)
    except HessianMismatch as exc:
        return CheckResult("hessian", False, {}, str(exc))
    det = exact_det(exact_majorant_hessian(case))
    details = {"coordinates": [f"{c}{a},{b}" for (a, b), c in ctx.labels],
               "analytic_diagonal": exact_hessian_diagonal(ctx),
               "fd_max_rel_error": rep.max_rel_error, "gradient_norm": rep.gradient_norm,
               "positive_definite": rep.positive_definite, "exact_det": str(det)}
    ok = rep.positive_definite and rep.gradient_norm < 1e-8 and rep.max_rel_error < 1e-5
    if case.tag == "A":
        expected_diag = expected_hessian_diagonal(case)
        expected_det = 4 ** (2 * case.r * case.q + 2 * case.p * case.s - case.r * case.s)
        details["closed_form_diagonal"] = expected_diag
        details["closed_form_det"] = str(expected_det)
        ok = ok and details["analytic_diagonal"] == expected_diag and det == expected_det
    plt = _setup_matplotlib()
    fig, ax = plt.subplots(figsize=(5, 4))
    im = ax.imshow(rep.finite_difference, cmap="viridis")
    fig.colorbar(im, ax=ax)
    ax.set_title(f"finite-difference Hessian of M, {case.label}")
    _save_png(fig, cfg.out / "hessian.png")
    plt.close(fig)
    np.savetxt(cfg.out / "hessian.csv", rep.finite_difference, delimiter=",", fmt="%.12g")
    return CheckResult("hessian", ok, details)


def check_majorant(cfg: RunConfig) -> CheckResult:
    import numpy as np

    from .geometry import decay_constants, make_context, sphericality_defect

    case = cfg.case
    samples = cfg.options.get("samples", 2000)
    tmax = cfg.options.get("tmax", 5.0)
    grid = tuple(float(x) for x in np.arange(0.0, tmax + 1e-9, 0.5))
    ctx = make_context(case)
    cert = decay_constants(ctx, samples=samples, seed=cfg.seed, t_grid=grid, raise_on_failure=False)
    with open(cfg.out / "majorant.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["X_id", "t", "M", "bound"])
        for idx, t, M, bound in cert.rows:
            w.writerow([idx, f"{t:.2f}", f"{M:.12g}", f"{bound:.12g}"])
    details = {"b": cert.b, "c": cert.c, "sphere_minimum_of_f": cert.C, "terms": cert.terms,
               "grid_points": cert.checked, "violations": cert.violations, "worst_margin": cert.worst_margin,
               "samples": samples, "seed": cfg.seed}
    ok = cert.ok
    if case.tag == "A":
        rng = np.random.default_rng(cfg.seed)
        worst = 0.0
        for _ in range(50):
            coeffs = rng.standard_normal(case.q) + 1j * rng.standard_normal(case.q)
            worst = max(worst, abs(sphericality_defect(case, 1, coeffs)))
        details["sphericality_max_defect"] = worst
        ok = ok and worst < 1e-9
    plt = _setup_matplotlib()
    rows = np.array([(t, M, b) for _, t, M, b in cert.rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(rows[:, 0], rows[:, 1], ".", alpha=0.3, label="M(exp(tX) z0, x)")
    ts = np.array(grid)
    ax.semilogy(ts, cert.c * np.exp(2 * cert.b * ts), "r-", label="c exp(2bt)")
    ax.set_xlabel("t")
    ax.legend()
    ax.set_title(f"majorant along unit normals, {case.label}")
    _save_png(fig, cfg.out / "majorant.png")
    plt.close(fig)
    return CheckResult("majorant", ok, details, cert.worst_witness if not ok else None)


def check_fiber(cfg: RunConfig) -> CheckResult:
    import numpy as np

    from .laplace import numeric_fiber_integral, rederive_fiber_leading

    case = cfg.case
    t = float(cfg.options.get("t", 3.0))
    rep = rederive_fiber_leading(case, force=cfg.force)
    out = rep.to_json_obj()
    out["t"] = t
    out["closed_form_value"] = rep.closed_form.value(t)
    out["rederived_value"] = rep.rederived.value(t)
    numeric = None
    if cfg.options.get("numeric"):
        numeric = numeric_fiber_integral(case, t, samples=cfg.options.get("mc_samples", 1_000_000), seed=cfg.seed)
        out["numeric"] = numeric.to_json_obj()
        out["numeric"]["ratio_to_rederived"] = numeric.value / rep.rederived.value(t)
    plt = _setup_matplotlib()
    ts = np.linspace(1.0, max(4.0, t + 1), 60)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(ts, [abs(rep.closed_form.value(x)) for x in ts], "-", label="|closed form|")
    ax.semilogy(ts, [abs(rep.rederived.value(x)) for x in ts], "--", label="|re-derived|")
    if numeric is not None:
        ax.errorbar([t], [abs(numeric.value)], yerr=[numeric.stderr], fmt="o", label="|Monte-Carlo|")
    if not rep.match:
        ax.text(0.03, 0.05, "differs in: " + ", ".join(rep.mismatched_fields), transform=ax.transAxes)
    ax.set_xlabel("t")
    ax.legend()
    ax.set_title(f"fiber integral leading term, {case.label}")
    _save_png(fig, cfg.out / "fiber.png")
    plt.close(fig)
    ok = rep.match
    return CheckResult("fiber", ok, out, None if ok else {"mismatched_fields": rep.mismatched_fields})


def check_toy(cfg: RunConfig) -> CheckResult:
    from .laplace import quadrature, toy_problem

    name = cfg.options.get("toy", "moment1d")
    scheme = cfg.options.get("scheme", "gauss-hermite")
    prob, leading = toy_problem(name)
    ts = sorted({10.0, 30.0, 100.0, float(cfg.options.get("t", 50.0))})
    rows = []
    for t in ts:
        q = quadrature(prob, t, scheme=scheme, seed=cfg.seed)
        rows.append({"t": t, "quadrature": q.value.real, "error": q.error, "leading": leading(t),
                     "ratio": q.value.real / leading(t)})
    tol = cfg.options.get("tol", 0.02)
    target = [r for r in rows if r["t"] == float(cfg.options.get("t", 50.0))][0]
    ok = abs(target["ratio"] - 1) <= tol
    plt = _setup_matplotlib()
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.semilogx([r["t"] for r in rows], [r["ratio"] for r in rows], "o-")
    ax.axhline(1.0, color="gray", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("quadrature / leading")
    ax.set_title(f"Laplace toy {name}")
    _save_png(fig, cfg.out / f"toy_{name}.png")
    plt.close(fig)
    return CheckResult("toy", ok, {"toy": name, "scheme": scheme, "tolerance": tol, "rows": rows})


CHECKS: Dict[str, Callable[[RunConfig], CheckResult]] = {
    "build": check_build, "closed": check_closed, "invariance": check_invariance_cmd,
    "annihilation": check_annihilation, "restriction": check_restriction, "weights": check_weights,
    "action": check_action, "intertwine": check_intertwine, "hessian": check_hessian,
    "majorant": check_majorant, "fiber": check_fiber, "toy": check_toy,
}

SYMBOLIC = {"build", "closed", "invariance", "annihilation", "restriction", "fiber"}


def run_suite(cfg: RunConfig, summary_name: str = "summary") -> int:
    from .cocycle import check_ceiling

    if cfg.case is not None and SYMBOLIC.intersection(cfg.checks):
        check_ceiling(cfg.case, cfg.force)
    cfg.out.mkdir(parents=True, exist_ok=True)
    summary = []
    for name in cfg.checks:
        start = time.perf_counter()
        res = CHECKS[name](cfg)
        if cfg.timing:
            res.elapsed_ms = int((time.perf_counter() - start) * 1000)
        report = {"check": name, "label": LABELS[name],
                  "case": cfg.case.to_json_obj() if cfg.case is not None else None,
                  "status": "pass" if res.passed else "fail", "witness": res.witness,
                  "details": res.details, "elapsed_ms": res.elapsed_ms}
        write_json(cfg.out / f"{name}.json", report)
        summary.append({"check": name, "label": LABELS[name], "status": report["status"]})
        print(f"{'PASS' if res.passed else 'FAIL'}  {name:<13} {LABELS[name]}")
    write_json(cfg.out / f"{summary_name}.json", {"checks": summary, "seed": cfg.seed,
                                                 "all_pass": all(s["status"] == "pass" for s in summary)})
    return 0 if all(s["status"] == "pass" for s in summary) else 1


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _case_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--case", choices=("A", "B", "C"), required=required)
    for name in ("p", "q", "r", "s", "n"):
        p.add_argument(f"--{name}", type=int)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--report-dir", default=None, help=f"report directory (default ${REPORT_ENV} or ./{DEFAULT_REPORT_DIR})")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--force", action="store_true", help="override the desk-scale parameter ceiling")
    common.add_argument("--timing", action="store_true", help="record elapsed_ms in reports")

    parser = _Parser(prog="thetacocycle", description="Exact checks of theta cocycles and their fiber asymptotics.")
    groups = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def verb(group_parser, name, help_text):
        p = group_parser.add_parser(name, parents=[common], help=help_text)
        _case_args(p)
        return p

    g = groups.add_parser("cocycle", help="build and verify phi+, phi-, phi")
    gv = g.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    b = verb(gv, "build", "write the cochain as JSON")
    b.add_argument("--which", choices=("plus", "minus", "full"), default="plus")
    v = verb(gv, "verify", "run cocycle checks")
    v.add_argument("--check", action="append", choices=("closed", "invariance", "annihilation", "restriction"))

    g = groups.add_parser("fock", help="Fock model weights and actions")
    gv = g.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    verb(gv, "weights", "weights of e_D and f_D")
    a = verb(gv, "action", "derived actions vs explicit formulas")
    a.add_argument("--degree", type=int, default=3)

    g = groups.add_parser("schrodinger", help="Fock to Schroedinger intertwiner")
    gv = g.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    i = verb(gv, "intertwine", "intertwining and top-term checks")
    i.add_argument("--degree", type=int, default=3)

    g = groups.add_parser("geometry", help="majorants and the Hessian of h")
    gv = g.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    m = verb(gv, "majorant", "decay constants with a certificate grid")
    m.add_argument("--samples", type=int, default=2000)
    m.add_argument("--tmax", type=float, default=5.0)
    verb(gv, "hessian", "Hessian of the majorant at the base point")

    g = groups.add_parser("laplace", help="fiber asymptotics and Laplace toys")
    gv = g.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    f = verb(gv, "fiber", "leading term of the fiber integral")
    f.add_argument("--t", type=float, default=3.0)
    f.add_argument("--numeric", action="store_true", help="Monte-Carlo fiber integral (two real dimensions only)")
    f.add_argument("--mc-samples", type=int, default=1_000_000)
    t = gv.add_parser("toy", parents=[common], help="Laplace leading term vs quadrature")
    t.add_argument("--toy", choices=("gauss1d", "moment1d", "moment2d"), default="moment1d")
    t.add_argument("--t", type=float, default=50.0)
    t.add_argument("--scheme", choices=("gauss-hermite", "monte-carlo"), default="gauss-hermite")
    t.add_argument("--tol", type=float, default=0.02)

    v = groups.add_parser("verify", parents=[common], help="run any set of checks for one case")
    _case_args(v)
    v.add_argument("--check", action="append", choices=ALL_CHECKS)
    v.add_argument("--t", type=float, default=3.0)
    v.add_argument("--samples", type=int, default=2000)
    v.add_argument("--tmax", type=float, default=5.0)
    return parser


def _config(args) -> RunConfig:
    case = make_case(args) if getattr(args, "case", None) else None
    base = Path(args.report_dir or os.environ.get(REPORT_ENV) or DEFAULT_REPORT_DIR)
    out = base / (_slug(case) if case is not None else "toys")
    options = {k: getattr(args, k) for k in ("which", "degree", "samples", "tmax", "t", "numeric", "mc_samples",
                                             "toy", "scheme", "tol") if getattr(args, k, None) is not None}
    return RunConfig(case, [], args.seed, out, args.force, args.timing, options)


VERB_CHECKS = {
    ("cocycle", "build"): ["build"],
    ("fock", "weights"): ["weights"],
    ("fock", "action"): ["action"],
    ("schrodinger", "intertwine"): ["intertwine"],
    ("geometry", "majorant"): ["majorant"],
    ("geometry", "hessian"): ["hessian"],
    ("laplace", "fiber"): ["fiber"],
    ("laplace", "toy"): ["toy"],
}


def main(argv: Optional[List[str]] = None) -> int:
    from .cocycle import ParameterCeilingError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _config(args)
        if args.group == "verify":
            cfg.checks = args.check or ["closed", "invariance", "annihilation", "restriction", "weights"]
            summary = "summary_verify"
        elif args.group == "cocycle" and args.verb == "verify":
            cfg.checks = args.check or ["closed", "invariance", "annihilation", "restriction"]
            summary = "summary_cocycle_verify"
        else:
            cfg.checks = VERB_CHECKS[(args.group, args.verb)]
            summary = f"summary_{args.group}_{args.verb}"
        return run_suite(cfg, summary)
    except (UsageError, ParameterCeilingError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
