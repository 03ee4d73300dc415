"""Command-line surface: analysis reports, prestress certification,
truncation profiles with figures, SVG export, and the randomized oracle
suites.

Exit codes: 0 success, 1 property-suite failure, 2 input error,
3 internal inconsistency.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from . import __version__
from .cones import InternalInconsistencyError
from .infinite import (
    DyadicSquares,
    FAMILIES,
    SequenceSpace,
    bps_probe,
    infinite_energy_report,
    make_generator,
    solve_symmetric_stress,
    summability_report,
    truncation_residual_profile,
    uniform_structure_check,
    weak_pairing_profile,
)
from .model import (
    DEFAULT_TOL,
    FrameworkError,
    MemberKind,
    ToleranceContext,
    expand_to_cable_strut,
    parse_framework,
    validate,
)
from .prestress import prestress_stability, second_derivative_check, stress_space
from .rigidity import bar_first_order_rigidity, bar_rigidity_matrix, flex_space
from .suites import run_dichotomy_suite, run_double_dual_suite, run_projection_suite
from .svg import render_svg
from .tensegrity import first_order_rigidity_direct, roth_whiteley_certify

EXIT_OK = 0
EXIT_SUITE_FAILURE = 1
EXIT_INPUT_ERROR = 2
EXIT_INCONSISTENT = 3

REPORT_SCHEMA = "rigicert-analysis-report-v1"


def _tolerances(args) -> ToleranceContext:
    return ToleranceContext(rank_tol=args.tol_rank, cert_tol=args.tol_cert, fd_step=DEFAULT_TOL.fd_step)


def _base_report(command: str, args, tol: ToleranceContext) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "tool": {"name": "rigicert", "version": __version__},
        "command": command,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "seed": getattr(args, "seed", None),
        "tolerances": {"rank_tol": tol.rank_tol, "cert_tol": tol.cert_tol, "fd_step": tol.fd_step},
    }


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_framework(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_framework(fh.read())


def _stress_to_json(stress, members) -> dict:
    return {m.label(): float(v) for m, v in zip(members, stress.values)}


def _witness_to_json(witness) -> Optional[list[list[float]]]:
    if witness is None:
        return None
    return [list(row) for row in witness.values]


def _certificate_to_json(cert, members) -> dict:
    return {
        "verdict": cert.verdict,
        "method": cert.method,
        "bar_rigid": cert.bar_rigid,
        "proper_stress": _stress_to_json(cert.proper_stress, members) if cert.proper_stress else None,
        "stress_residual": cert.stress_residual,
        "witness_flex": _witness_to_json(cert.witness_flex),
        "witness_min_slack": cert.witness_min_slack,
        "witness_nontriviality": cert.witness_nontriviality,
    }


def cmd_analyze(args) -> int:
    tol = _tolerances(args)
    framework = _load_framework(args.file)
    report = _base_report("analyze", args, tol)
    report["input"] = {
        "path": args.file,
        "dimension": framework.dimension,
        "n_vertices": framework.n_vertices,
        "member_count": framework.member_count,
        "mode": args.mode,
    }
    diagnostics = validate(framework, tol)
    report["diagnostics"] = [str(d) for d in diagnostics]
    if any(d.severity == "error" for d in diagnostics):
        raise FrameworkError("; ".join(str(d) for d in diagnostics if d.severity == "error"))

    if args.mode == "bar":
        if any(m.kind is not MemberKind.BAR for m in framework.members):
            raise FrameworkError("bar mode requires a bars-only framework; use --mode tensegrity")
        verdict = bar_first_order_rigidity(framework, tol)
        space = stress_space(framework, tol)
        results = {
            "rank": verdict.rank,
            "trivial_dim": verdict.trivial_dim,
            "flex_dim": verdict.flex_dim,
            "verdict": "rigid" if verdict.rigid else "flexible",
            "stress_space_dim": space.dimension,
        }
        if framework.n_vertices <= 64:
            results["flex_basis"] = [list(map(float, row)) for row in verdict.flex_basis.basis]
            results["stress_basis"] = [list(map(float, row)) for row in space.basis]
    else:
        tensegrity = expand_to_cable_strut(framework)
        direct = first_order_rigidity_direct(tensegrity, tol, exact=args.exact or None)
        certified = roth_whiteley_certify(tensegrity, tol, exact=args.exact or None)
        results = {
            "member_count_expanded": tensegrity.member_count,
            "direct": _certificate_to_json(direct, tensegrity.members),
            "roth_whiteley": _certificate_to_json(certified, tensegrity.members),
            "methods_agree": direct.verdict == certified.verdict,
        }
    report["results"] = results
    if args.dump_matrix:
        matrix = bar_rigidity_matrix(framework).matrix
        with open(args.dump_matrix, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            for row in matrix:
                writer.writerow([f"{x:.17g}" for x in row])
        report["matrix_csv"] = args.dump_matrix
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_prestress(args) -> int:
    tol = _tolerances(args)
    framework = _load_framework(args.file)
    if any(m.kind is not MemberKind.BAR for m in framework.members):
        raise FrameworkError("prestress analysis requires a bar framework")
    report = _base_report("prestress", args, tol)
    report["input"] = {
        "path": args.file,
        "dimension": framework.dimension,
        "n_vertices": framework.n_vertices,
        "member_count": framework.member_count,
    }
    verdict = prestress_stability(framework, tol, search_budget=args.budget, seed=args.seed)
    results = {
        "state": verdict.state,
        "min_eigenvalue": None if verdict.min_eigenvalue == float("inf") else verdict.min_eigenvalue,
        "reduced_form": [list(map(float, row)) for row in verdict.reduced_form],
        "detail": verdict.detail,
        "stress": _stress_to_json(verdict.stress, framework.members) if verdict.stress else None,
    }
    # Second-derivative validation block along a flex (or seeded) direction.
    basis = flex_space(framework, tol)
    rng = np.random.default_rng(args.seed)
    if basis.dimension:
        direction = basis.basis[0].reshape(framework.n_vertices, framework.dimension)
    else:
        direction = rng.normal(size=(framework.n_vertices, framework.dimension))
    space = stress_space(framework, tol)
    if verdict.stress is not None and any(v != 0 for v in verdict.stress.values):
        probe_stress = verdict.stress
        equilibrium = True
    elif space.dimension:
        probe_stress = space.fields()[0]
        equilibrium = True
    else:
        from .model import StressField

        probe_stress = StressField(tuple(float(x) for x in rng.uniform(-1, 1, framework.member_count)))
        equilibrium = False
    derivative = second_derivative_check(framework, probe_stress, framework.placement_array, direction, tol=tol, equilibrium=equilibrium)
    results["second_derivative"] = {
        "analytic": derivative.analytic,
        "finite_difference": derivative.finite_difference,
        "abs_error": derivative.abs_error,
        "first_difference": derivative.first_difference,
        "first_difference_ok": derivative.first_difference_ok,
    }
    report["results"] = results
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    return EXIT_OK


def _infinite_summary(family, family_name: str, levels: list[int], space: SequenceSpace, seed: int, tol) -> tuple[list, dict, dict]:
    reports, residual_summary = truncation_residual_profile(family, levels, space.dual(), tol=tol)
    pair = weak_pairing_profile(family, levels, tol=tol)
    summ = summability_report(family, levels)
    energy = infinite_energy_report(family, levels)
    probe_level = min(max(levels), 6)
    probe = bps_probe(family, probe_level, tol=tol, seed=seed)
    structure = uniform_structure_check(family, levels)
    summary = {
        "level": "summary",
        "family": family_name,
        "space": space.label(),
        "dual_space": space.dual().label(),
        "strong_decay": residual_summary["strong_decay"],
        "residual_fitted_ratio": residual_summary["fitted_ratio"],
        "weak_decay": pair["weak_decay"],
        "weak_fitted_ratios": pair["fitted_ratios"],
        "summable": summ["summable"],
        "abs_sum_window": summ["limit_window"],
        "energy_finite": energy["finite"],
        "final_partial_energy": energy["rows"][-1]["partial_energy"],
        "bps": {"level": probe_level, "verdict": probe["verdict"], "reason": probe.get("reason", "")},
        "uniform_structure": structure,
    }
    if isinstance(family, DyadicSquares) and family.name == "dyadic" and max(levels) >= 3:
        solve = solve_symmetric_stress(family, max(max(levels), 3), tol)
        summary["symmetric_stress"] = {
            "fitted_ratio": solve["fitted_ratio"],
            "ratio_variation": solve["ratio_variation"],
            "reference_ratios": solve["reference_ratios"],
            "balance_equation": solve["balance_equation"],
            "sign_consistent": solve["sign_consistent"],
            "square_values": solve["square_values"],
        }
    return reports, pair, summary


def cmd_infinite(args) -> int:
    tol = _tolerances(args)
    if args.family not in FAMILIES:
        raise FrameworkError(f"unknown family {args.family!r}; known: {sorted(FAMILIES)}")
    if args.levels < 1:
        raise FrameworkError("levels must be >= 1")
    params = {}
    if args.family == "strip" and args.two_sided:
        params["two_sided"] = True
    family = make_generator(args.family, **params)
    levels = list(range(1, args.levels + 1))
    space = SequenceSpace.from_label(args.space)
    reports, pair, summary = _infinite_summary(family, args.family, levels, space, args.seed, tol)
    for report, level in zip(reports, levels):
        report.weak_pairings = [pair["pairings"][name][level - levels[0]] for name in pair["pairings"]]
    lines = []
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(
            ["level", "residual_sup", "residual_norm", "partial_abs_sum", "partial_energy", "partial_abs_energy"]
        )
        for r in reports:
            writer.writerow([r.level, r.residual_sup, r.residual_norm, r.partial_abs_sum, r.partial_energy, r.partial_abs_energy])
        text = buf.getvalue()
    else:
        for r in reports:
            lines.append(json.dumps(r.to_json_dict()))
        lines.append(json.dumps(summary))
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    if args.plot:
        from .plots import render_profile_figure

        render_profile_figure(reports, args.plot, title=f"{args.family} truncation profile", pairings=pair["pairings"])
    return EXIT_OK


def cmd_export_svg(args) -> int:
    tol = _tolerances(args)
    framework = _load_framework(args.file)
    flex = None
    stress = None
    overlay = args.overlay
    if overlay.startswith("flex"):
        index = 0
        if ":" in overlay:
            index = int(overlay.split(":", 1)[1]) - 1
        has_bars_only = all(m.kind is MemberKind.BAR for m in framework.members)
        if has_bars_only:
            basis = flex_space(framework, tol)
        else:
            basis = flex_space(expand_to_cable_strut(framework).bar_closure(), tol)
        if index < 0 or index >= basis.dimension:
            raise FrameworkError(f"flex index {index + 1} out of range; flex dimension is {basis.dimension}")
        flex = basis.basis[index].reshape(framework.n_vertices, framework.dimension)
    elif overlay == "stress":
        if all(m.kind is MemberKind.BAR for m in framework.members):
            space = stress_space(framework, tol)
            if space.dimension == 0:
                raise FrameworkError("stress overlay requested but the stress space is zero")
            vec = space.basis[0]
            nonzero = np.abs(vec) > 1e-12
            scale = np.abs(vec[nonzero]).min()
            vec = vec / scale
            first = vec[nonzero][0] if nonzero.any() else 1.0
            if first > 0:
                vec = -vec
            from .model import StressField

            stress = StressField(tuple(float(x) for x in vec))
        else:
            tens = expand_to_cable_strut(framework)
            cert = roth_whiteley_certify(tens, tol)
            if cert.proper_stress is None:
                raise FrameworkError("stress overlay requested but no proper stress exists")
            stress = cert.proper_stress
            framework = tens.framework
    elif overlay != "none":
        raise FrameworkError(f"unknown overlay {args.overlay!r}; use none, flex[:k], or stress")
    text = render_svg(framework, flex=flex, stress=stress)
    _emit(text, args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    tol = _tolerances(args)
    runners = {
        "dichotomy": run_dichotomy_suite,
        "projection": run_projection_suite,
        "doubledual": run_double_dual_suite,
    }
    if args.kind not in runners:
        raise FrameworkError(f"unknown oracle kind {args.kind!r}; known: {sorted(runners)}")
    if args.trials < 1:
        raise FrameworkError("trials must be >= 1")
    result = runners[args.kind](args.trials, seed=args.seed, tol=tol)
    report = _base_report("oracle", args, tol)
    report["results"] = result
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    return EXIT_OK if result["failed"] == 0 else EXIT_SUITE_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rigicert", description="Rigidity certificates for frameworks and tensegrities")
    parser.add_argument("--version", action="version", version=f"rigicert {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--tol-rank", type=float, default=DEFAULT_TOL.rank_tol)
        p.add_argument("--tol-cert", type=float, default=DEFAULT_TOL.cert_tol)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--exact", action="store_true", help="force the exact rational path where available")
        p.add_argument("--format", choices=["json", "csv"], default="json")
        p.add_argument("--out", default=None, help="write output to this file instead of stdout")

    p = sub.add_parser("analyze", help="rigidity analysis of a framework file")
    p.add_argument("file")
    p.add_argument("--mode", choices=["bar", "tensegrity"], default="bar")
    p.add_argument("--dump-matrix", default=None, help="write the bar rigidity matrix to this CSV file")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("prestress", help="prestress-stability certification of a bar framework")
    p.add_argument("file")
    p.add_argument("--budget", type=int, default=32, help="restart budget for the stress search")
    common(p)
    p.set_defaults(func=cmd_prestress)

    p = sub.add_parser("infinite", help="truncation diagnostics for an infinite family")
    p.add_argument("--family", required=True, choices=sorted(FAMILIES))
    p.add_argument("--levels", type=int, required=True, help="profile levels 1..N")
    p.add_argument("--space", default="c0", help="velocity sequence space (c0, l^1, l^2, ...)")
    p.add_argument("--two-sided", action="store_true", help="two-sided strip variant")
    p.add_argument("--plot", default=None, help="render the profile figure to this PNG path")
    common(p)
    p.set_defaults(func=cmd_infinite)

    p = sub.add_parser("export-svg", help="render a planar framework to SVG")
    p.add_argument("file")
    p.add_argument("--overlay", default="none", help="none | flex[:k] | stress")
    common(p)
    p.set_defaults(func=cmd_export_svg)

    p = sub.add_parser("oracle", help="run a randomized property suite")
    p.add_argument("--kind", required=True, choices=["dichotomy", "projection", "doubledual"])
    p.add_argument("--trials", type=int, default=100)
    common(p)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FrameworkError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except InternalInconsistencyError as exc:
        print(f"internal inconsistency: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT


if __name__ == "__main__":
    sys.exit(main())
