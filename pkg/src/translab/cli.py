"""Command-line front end: bowl, catenoid, verify, list.

Exit codes: 0 success, 1 check failure, 2 usage/config error, 3 solver error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .barrier import (
    BarrierSpec,
    admissible_slope_range,
    compare_orderings,
    log_grid,
    verify_inequality,
)
from .bowl import fit_tail, growth_exponent, solve_bowl
from .catenoid import solve_catenoid, upper_growth_exponent
from .cliio import RunManifest, emit_plot_script, load_config, write_csv, write_json
from .curvature import check_homogeneity, classify_degeneracy, from_key, registry_keys
from .errors import ParameterError, TranslabError
from .implicit import ImplicitBranch


def _parse_args(argv):
    p = argparse.ArgumentParser(prog="translab", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", default=None, help="key=value config file")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--quiet", action="store_true")

    b = sub.add_parser("bowl", help="bowl-type translator profile and asymptotics")
    b.add_argument("--curvature", default=None)
    b.add_argument("--rmax", type=float, default=None)
    b.add_argument("--regime", choices=("auto", "nondegenerate", "degenerate"), default=None)
    b.add_argument("--fit-lo", type=float, default=None)
    b.add_argument("--fit-hi", type=float, default=None)
    common(b)

    c = sub.add_parser("catenoid", help="catenoidal translator W_R")
    c.add_argument("--curvature", default=None)
    c.add_argument("--R", type=float, default=None)
    c.add_argument("--rmax", type=float, default=None)
    c.add_argument("--handoff", default=None, help="pi8, pi6, or tangent value")
    common(c)

    v = sub.add_parser("verify", help="property suites")
    v.add_argument("--suite", default=None,
                   choices=("homogeneity", "implicit", "ordering", "barrier", "all"))
    v.add_argument("--curvature", default=None)
    common(v)

    ls = sub.add_parser("list", help="enumerate registry keys")
    common(ls)
    return p.parse_args(argv)


_DEFAULTS = {
    "bowl": {"rmax": 500.0, "regime": "auto", "fit_lo": None, "fit_hi": None},
    "catenoid": {"rmax": 50.0, "handoff": "pi8", "R": None},
    "verify": {"suite": None},
}
_CONFIG_MAP = {
    "bowl": {"curvature": "curvature", "rmax": "rmax", "regime": "regime",
             "fit_lo": "fit_lo", "fit_hi": "fit_hi"},
    "catenoid": {"curvature": "curvature", "R": "R", "rmax": "rmax", "handoff": "handoff"},
    "verify": {"curvature": "curvature", "suite": "suite"},
}
_FLOAT_KEYS = {"rmax", "fit_lo", "fit_hi", "R"}


def _merge_config(args, cfg: dict) -> None:
    """Config fills arguments not given on the command line."""
    section = cfg.get(args.command, {})
    for cfg_key, attr in _CONFIG_MAP.get(args.command, {}).items():
        if getattr(args, attr, None) is None and cfg_key.lower() in section:
            raw = section[cfg_key.lower()]
            setattr(args, attr, float(raw) if cfg_key in _FLOAT_KEYS else raw)
    glob = cfg.get("global", {})
    if args.out is None and "out" in glob:
        args.out = glob["out"]
    if args.seed is None and "seed" in glob:
        args.seed = int(glob["seed"])
    for attr, default in _DEFAULTS.get(args.command, {}).items():
        if getattr(args, attr, None) is None and default is not None:
            setattr(args, attr, default)
    if args.out is None:
        args.out = "out"
    if args.seed is None:
        args.seed = 0
    required = {"bowl": ["curvature"], "catenoid": ["curvature", "R"],
                "verify": ["curvature", "suite"], "list": []}
    for attr in required[args.command]:
        if getattr(args, attr, None) is None:
            raise ParameterError(f"missing required option --{attr}")


def _echo(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("command",) and v is not None}


def cmd_bowl(args) -> int:
    try:
        f = from_key(args.curvature)
        if args.rmax <= 0:
            raise ParameterError(f"rmax must be positive, got {args.rmax}")
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    manifest = RunManifest(out, "bowl", _echo(args))
    try:
        profile = solve_bowl(f, args.rmax)
        regime = args.regime
        if regime == "auto":
            regime = "degenerate" if f.is_one_degenerate else "nondegenerate"
        window = None
        if args.fit_lo and args.fit_hi:
            window = (args.fit_lo, args.fit_hi)
        report = fit_tail(profile, regime, window)
        gexp = growth_exponent(profile, window)
    except TranslabError as exc:
        write_json(out / "error.json", {"error": type(exc).__name__, "message": str(exc)})
        print(f"solver error: {exc}", file=sys.stderr)
        return 3

    csv_path = out / "profile.csv"
    write_csv(csv_path, "r,u,v,residual", [profile.r, profile.u, profile.v, profile.residuals])
    manifest.record_file(csv_path)
    payload = {
        "curvature_key": f.name,
        "alpha": f.alpha_float,
        "beta": f.beta,
        "lambda0": profile.lambda0,
        "termination": profile.termination,
        "regime": report.regime,
        "formula": report.formula,
        "fitted": report.fitted,
        "rel_errors": report.rel_errors,
        "fit_window": list(report.fit_window),
        "growth_exponent_u": gexp,
        "max_residual": float(profile.residuals.max()),
        "seed": args.seed,
    }
    json_path = out / "bowl.json"
    write_json(json_path, payload)
    manifest.record_file(json_path)
    gp = out / "bowl_plot.gp"
    emit_plot_script(gp, f"bowl profile {f.name}", [("profile.csv", "1:2", "u(r)"),
                                                   ("profile.csv", "1:3", "v(r)")])
    manifest.record_file(gp)

    manifest.record_check("residual", profile.residuals.max() <= 1e-8,
                          f"max={profile.residuals.max():.2e}")
    tol = {"a": 0.01, "b": 0.05, "d_gamma": 0.02, "A_gamma": 0.02}
    for key, rel in report.rel_errors.items():
        manifest.record_check(f"fit_{key}", rel <= tol.get(key, 0.05), f"rel={rel:.2e}")
    manifest.write()
    if not args.quiet:
        for name, chk in manifest.checks.items():
            print(f"{'PASS' if chk['passed'] else 'FAIL'} {name} {chk['detail']}")
    return 0 if manifest.all_passed else 1


def cmd_catenoid(args) -> int:
    try:
        f = from_key(args.curvature)
        if not f.is_signed:
            print(f"error: curvature function {f.name} is not signed", file=sys.stderr)
            return 2
        if args.R <= 0 or args.rmax <= 0:
            raise ParameterError("R and rmax must be positive")
        handoff = {"pi8": math.tan(math.pi / 8), "pi6": math.tan(math.pi / 6)}.get(
            args.handoff
        )
        if handoff is None:
            handoff = float(args.handoff)
    except (ParameterError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    manifest = RunManifest(out, "catenoid", _echo(args))
    try:
        res = solve_catenoid(f, args.R, args.rmax, handoff_tan=handoff)
        gexp = upper_growth_exponent(res)
    except TranslabError as exc:
        write_json(out / "error.json", {"error": type(exc).__name__, "message": str(exc)})
        print(f"solver error: {exc}", file=sys.stderr)
        return 3

    for side, prof in (("upper", res.upper), ("lower", res.lower)):
        path = out / f"{side}.csv"
        write_csv(path, "s,r,u,theta,kappa,residual",
                  [prof.s, prof.r, prof.u, prof.theta, prof.kappa, prof.residuals])
        manifest.record_file(path)
    payload = {
        "curvature_key": f.name,
        "alpha": f.alpha_float,
        "R": res.R,
        "case": res.case,
        "s0": res.s0,
        "s1": res.s1,
        "n_pi2_events": res.n_pi2_events,
        "n_theta_min_events": res.n_theta_min_events,
        "C_plus": res.C_plus,
        "C_minus": res.C_minus,
        "end_behavior": res.end_behavior,
        "embeddedness": res.embeddedness,
        "upper_growth_exponent": gexp,
        "handoff_tan": res.handoff_tan,
        "seed": args.seed,
    }
    json_path = out / "catenoid.json"
    write_json(json_path, payload)
    manifest.record_file(json_path)
    gp = out / "catenoid_plot.gp"
    emit_plot_script(gp, f"catenoidal translator {f.name} R={args.R}",
                     [("upper.csv", "2:3", "upper branch"),
                      ("lower.csv", "2:3", "lower branch")])
    manifest.record_file(gp)

    emb = res.embeddedness
    manifest.record_check("embeddedness", bool(emb.get("min_gap", 0) > 0) if emb.get("conclusive") else True,
                          str(emb))
    manifest.record_check("growth_exponent",
                          abs(gexp - (f.alpha_float + 1)) <= 0.02 * (f.alpha_float + 1),
                          f"fitted={gexp:.4f}")
    manifest.write()
    if not args.quiet:
        for name, chk in manifest.checks.items():
            print(f"{'PASS' if chk['passed'] else 'FAIL'} {name} {chk['detail']}")
    return 0 if manifest.all_passed else 1


def cmd_verify(args) -> int:
    try:
        f = from_key(args.curvature)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    manifest = RunManifest(out, "verify", _echo(args))
    suites = (
        ["homogeneity", "implicit", "ordering", "barrier"]
        if args.suite == "all"
        else [args.suite]
    )
    results = {}
    try:
        branch = ImplicitBranch(f)
        if "homogeneity" in suites:
            rep = check_homogeneity(f, samples=200, seed=args.seed)
            ok = rep["max_defect"] <= 1e-10
            manifest.record_check("homogeneity", ok, f"max_defect={rep['max_defect']:.2e}")
            results["homogeneity"] = rep
            rng = np.random.default_rng(args.seed + 1)
            mono_ok = True
            for _ in range(100):
                xx, yy = f.sample_cone_point(rng)
                gx, gy = f.grad(xx, yy)
                mono_ok &= gx > 0 and gy > 0
            manifest.record_check("monotonicity", bool(mono_ok), "grad > 0 on cone samples")
        if "implicit" in suites:
            rng = np.random.default_rng(args.seed)
            worst_rt = 0.0
            worst_cf = 0.0
            n_cf = 0
            for _ in range(200):
                xx, yy = f.sample_cone_point(rng)
                z = f.value(xx, yy)
                try:
                    x_num = branch.g_plus(yy, z)
                except TranslabError:
                    continue
                worst_rt = max(worst_rt, abs(f.value(x_num, yy) - z))
                try:
                    x_cf = f.solve_x(yy, z)
                    worst_cf = max(worst_cf, abs(x_num - x_cf))
                    n_cf += 1
                except TranslabError:
                    pass
            manifest.record_check("roundtrip", worst_rt <= 1e-10, f"max={worst_rt:.2e}")
            if n_cf:
                manifest.record_check("closed_form", worst_cf <= 1e-9, f"max={worst_cf:.2e}")
            results["implicit"] = {"roundtrip": worst_rt, "closed_form": worst_cf}
        if "ordering" in suites:
            rng = np.random.default_rng(args.seed)
            v_lo, v_hi = admissible_slope_range(f, 1.0)
            pairs = [tuple(sorted(rng.uniform(v_lo, v_hi, 2))) for _ in range(10)]
            rep = compare_orderings(f, pairs, 1.0, 100.0)
            manifest.record_check("ordering", rep["all_ordered"], f"min_gap={rep['min_gap']:.2e}")
            results["ordering"] = {"min_gap": rep["min_gap"], "pairs": rep["pairs"]}
        if "barrier" in suites:
            if branch.has_minus_level():
                try:
                    b = branch.dg_minus_dy_at_zero()
                except TranslabError:
                    b = -1.0  # divergent g_- at the origin: any b < 0 works
                grid = log_grid(2.0, 1e3, per_decade=400)
                rep = verify_inequality(
                    BarrierSpec("power", a=0.5, b=b, valid_range=(1.0, 1e4)), f, grid
                )
                ok = rep.r_star_nonneg is not None or rep.verdict == "verified_super"
                manifest.record_check(
                    "barrier_power", ok,
                    f"verdict={rep.verdict} min_margin={rep.min_margin:.2e}",
                )
                results["barrier"] = {"verdict": rep.verdict, "min_margin": rep.min_margin}
            else:
                manifest.record_check("barrier_power", True, "no -1 level; skipped")
    except TranslabError as exc:
        write_json(out / "error.json", {"error": type(exc).__name__, "message": str(exc)})
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    deg = classify_degeneracy(f)
    payload = {
        "curvature_key": f.name,
        "degeneracy": deg.kind,
        "value_at_01": deg.value_at_01,
        "suites": results,
        "seed": args.seed,
    }
    json_path = out / "verify.json"
    write_json(json_path, payload)
    manifest.record_file(json_path)
    manifest.write()
    if not args.quiet:
        for name, chk in manifest.checks.items():
            print(f"{'PASS' if chk['passed'] else 'FAIL'} {name} {chk['detail']}")
    return 0 if manifest.all_passed else 1


def cmd_list(args) -> int:
    print("family patterns:")
    print("  mean:n=N | gauss:n=N | hq:k=K,l=L,n=N | qk:k=K,n=N | sk:k=K,n=N")
    print("  knorm:k=K,n=N | kconv:k=K,n=N")
    print("registered examples:")
    for key in registry_keys():
        f = from_key(key)
        tags = []
        tags.append("degenerate" if f.is_one_degenerate else "nondegenerate")
        if f.is_signed:
            tags.append("signed")
        print(f"  {key:20s} alpha={f.alpha}  [{', '.join(tags)}]")
    return 0


def main(argv=None) -> int:
    args = _parse_args(argv if argv is not None else sys.argv[1:])
    try:
        cfg = load_config(args.config)
        _merge_config(args, cfg)
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    handler = {
        "bowl": cmd_bowl,
        "catenoid": cmd_catenoid,
        "verify": cmd_verify,
        "list": cmd_list,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    raise SystemExit(main())
