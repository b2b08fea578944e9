"""Command-line front end.

Subcommands: ``run`` a case, ``compare`` two run directories (or a run with
the bundled cavity reference), map the scheme's ``stability``, execute a
reproduction ``suite`` or list the builtin ``cases``.

Exit codes: 0 success, 1 solver failure, 2 invalid input, 3 suite failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import sparse
from .cases import BUILTIN_CASES, CaseError, builtin_case, ghia_reference, load_case, with_resolution
from .cht import RunError, centerline_profile, run_transient
from .output import RunManifest, read_csv, write_csv, write_field_csv, write_vtk
from .vonneumann import StabilityParams, random_params, run_sweep, sweep_grid

log = logging.getLogger("cht_fvm")

EXIT_OK, EXIT_SOLVER, EXIT_INPUT, EXIT_SUITE = 0, 1, 2, 3


class InputError(ValueError):
    pass


def worker_count():
    """Worker cap from ``CHT_FVM_THREADS`` (default 1)."""
    raw = os.environ.get("CHT_FVM_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"CHT_FVM_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise InputError(f"CHT_FVM_THREADS must be a positive integer, got {raw!r}")
    return n


# ------------------------------------------------------------------------ run
def _overrides(args, spec):
    ov = {}
    if args.method:
        ov["solver.method"] = args.method
    if args.coupling:
        ov["solver.coupling"] = args.coupling
    if args.nr is not None:
        ov["solver.n_r"] = args.nr
    if args.relaxation is not None:
        ov["solver.relaxation"] = args.relaxation
    if args.tol is not None:
        ov["solver.tol"] = args.tol
    if args.t_end is not None:
        ov["solver.t_end"] = args.t_end
    if args.until_steady:
        ov["solver.until_steady"] = True
    if args.cfl is not None:
        if "cfl" not in spec.solver:
            raise InputError(f"--cfl does not apply to {spec.kind} cases")
        blk = spec.geometry["fluid"]
        dx = (blk["extent"][0][1] - blk["extent"][0][0]) / blk["cells"][0]
        speed = spec.physics.get("u_lid", spec.physics.get("U_in", 1.0))
        ov["solver.cfl"] = args.cfl
        ov["solver.dt"] = args.cfl * dx / speed
    if args.dt is not None:
        ov["solver.dt"] = args.dt
    for item in args.set or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise InputError(f"--set expects key=value, got {item!r}")
        ov[key] = yaml.safe_load(val)
    return ov


def resolve_case(args):
    try:
        spec = load_case(args.case)
        if args.h is not None:
            spec = with_resolution(spec, args.h)
        ov = _overrides(args, spec)
        if ov:
            if args.case in BUILTIN_CASES and args.h is None:
                spec = builtin_case(args.case, ov)
            else:
                spec = _apply(spec, ov)
    except (CaseError, ValueError, KeyError, TypeError) as exc:
        raise InputError(str(exc)) from exc
    return spec


def _apply(spec, ov):
    from .cases import CaseSpec, _set_path

    tree = spec.to_dict()
    for k, v in ov.items():
        if spec.provenance.get(k) == "literature":
            tree["metadata"].setdefault("warnings", []).append(f"override of literature-fixed parameter {k}")
        _set_path(tree, k, v)
    tree["metadata"].setdefault("overrides", {}).update(ov)
    return CaseSpec.from_dict(tree)


def _row_profile(block, field, y):
    s = (y - block.y0) / block.dy - 0.5
    j0 = int(np.clip(np.floor(s), 0, block.ny - 2))
    w = s - j0
    return block.xc, (1 - w) * field[:, j0] + w * field[:, j0 + 1]


def _block_fields(res, side):
    spec, setup = res.spec, res.setup
    blk = getattr(setup.grid, side)
    out = {}
    if side == "fluid" and res.fluid is not None:
        out.update(u=res.fluid.u, v=res.fluid.v, p=res.fluid.p)
    if res.thermal is not None:
        T = res.thermal.T_f if side == "fluid" else res.thermal.T_s
        out["T"] = T
        if spec.kind == "diffusion":
            from .cases import manufactured_exact

            out["error"] = T - manufactured_exact(*blk.centers())
        if spec.kind == "natural-convection":
            ph = spec.physics
            out["theta"] = (T - ph["T_c"]) / (ph["T_h"] - ph["T_c"])
    return blk, out


def write_outputs(res, out: Path, manifest: RunManifest):
    out.mkdir(parents=True, exist_ok=True)
    spec, setup = res.spec, res.setup
    files = [out / "case.yaml"]
    files[0].write_text(spec.to_yaml())
    for side in ("fluid", "solid"):
        if getattr(setup.grid, side) is None:
            continue
        blk, fields = _block_fields(res, side)
        if fields:
            files.append(write_vtk(out / f"fields_{side}.vtk", blk, fields, f"{spec.name} {side}"))
            files.append(write_field_csv(out / f"fields_{side}.csv", blk, fields))
    for ts, (fl, th) in sorted(res.snapshots.items()):
        snap = type(res)(spec, setup, fl, th)
        for side in ("fluid", "solid"):
            if getattr(setup.grid, side) is None:
                continue
            blk, fields = _block_fields(snap, side)
            files.append(write_vtk(out / f"fields_{side}_t{ts!r}.vtk", blk, fields, f"{spec.name} {side} t={ts!r}"))
    files.extend(_write_profiles(res, out))
    if res.probes and res.probes.get("t"):
        keys = list(res.probes)
        files.append(write_csv(out / "probes.csv", keys, zip(*(res.probes[k] for k in keys))))
    files.append(_write_iterations(res, out))
    for f in files:
        manifest.add_file(f, out)
    return files


def _write_profiles(res, out):
    files = []
    spec, setup = res.spec, res.setup
    for prof in spec.output.get("profiles", []):
        name, fieldname, line = prof["name"], prof["field"], prof["line"]
        path = out / f"{name}.csv"
        if line == "interface":
            if res.thermal is None:
                continue
            tf, ts = setup.heat.face_temperatures(res.thermal)
            xi = setup.heat.interface.xi
            if fieldname == "T_rel":
                ph = spec.physics
                val = (tf - ph["T_in"]) / (ph["T_0"] - ph["T_in"])
            elif fieldname == "theta":
                ph = spec.physics
                val = (tf - ph["T_c"]) / (ph["T_h"] - ph["T_c"])
            else:
                val = tf
            files.append(write_csv(path, ["s", fieldname], zip(xi, val)))
        elif fieldname in ("u", "v"):
            blk = setup.grid.fluid
            f = getattr(res.fluid, fieldname)
            lid = spec.physics.get("u_lid", 0.0)
            high = lid if (fieldname == "u" and line == "x") else 0.0
            s, val = centerline_profile(blk, f, line, prof["at"], 0.0, high)
            files.append(write_csv(path, ["y" if line == "x" else "x", fieldname], zip(s, val)))
        elif fieldname == "theta" and line == "y":
            rows = []
            ph = spec.physics
            for side, T in (("fluid", res.thermal.T_f), ("solid", res.thermal.T_s)):
                blk = getattr(setup.grid, side)
                x, val = _row_profile(blk, (T - ph["T_c"]) / (ph["T_h"] - ph["T_c"]), prof["at"])
                rows.extend(zip(x, val, [side] * x.size))
            files.append(write_csv(path, ["x", "theta", "block"], rows))
    return files


def _write_iterations(res, out):
    it = res.iterations
    path = out / "iterations.csv"
    if "outer" in it:
        rows = [(k + 1, o, sum(i), max(f)) for k, (o, i, f) in
                enumerate(zip(it["outer"], it["inner_sqp"], it["fluid_subiterations"]))]
        return write_csv(path, ["step", "outer", "inner_sqp_total", "fluid_subiterations_max"], rows)
    if "fluid_per_step" in it:
        return write_csv(path, ["step", "fluid_iterations"], enumerate(it["fluid_per_step"], 1))
    return write_csv(path, ["coupling", "iterations"], [(it.get("coupling", ""), it.get("iterations", 0))])


def cmd_run(args):
    spec = resolve_case(args)
    out = Path(args.out or f"runs/{spec.name}")
    sparse.reset_stats()
    t0 = time.perf_counter()

    def progress(n, state):
        if n % 10 == 0:
            log.info("step %d t=%.6g outer=%d", n, state.t, state.diagnostics[-1].outer)

    try:
        res = run_transient(spec, progress=progress)
    except RunError as exc:
        print(f"error: solver failure in {spec.name}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"error: solver failure in {spec.name}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    manifest = RunManifest(spec.name, spec.digest())
    manifest.timings = dict(res.timings, wall=time.perf_counter() - t0, **sparse.stats())
    manifest.iterations = res.iterations
    manifest.info = dict(res.info, steady=res.steady, steps=res.steps, warnings=spec.metadata.get("warnings", []))
    write_outputs(res, out, manifest)
    manifest.write(out)
    print(_run_summary(res, out))
    return EXIT_OK


def _run_summary(res, out):
    it = res.iterations
    parts = [f"{res.spec.name}: {res.steps} step(s)"]
    if res.spec.kind in ("cavity", "heated-plate"):
        parts.append(f"steady={res.steady}")
    if "coupling" in it:
        parts.append(f"{it['coupling']} iterations {it['iterations']}")
    if "outer" in it and it["outer"]:
        parts.append(f"outer iterations first {it['outer'][0]} last {it['outer'][-1]}")
    parts.append(f"outputs in {out}")
    return ", ".join(parts)


# -------------------------------------------------------------------- compare
def _load_fields(run: Path, side):
    path = run / f"fields_{side}.csv"
    if not path.exists():
        return None
    return read_csv(path)


def _interpolate(src, dst, name):
    from scipy.interpolate import RegularGridInterpolator

    xs, ys = np.unique(src["x"]), np.unique(src["y"])
    vals = src[name].reshape(xs.size, ys.size)
    f = RegularGridInterpolator((xs, ys), vals, bounds_error=False, fill_value=None)
    return f(np.column_stack([dst["x"], dst["y"]]))


def compare_runs(a: Path, b: Path, fields=None, interpolate=False):
    """Per-field max and RMS differences plus the relative velocity change."""
    report = {}
    for side in ("fluid", "solid"):
        fa, fb = _load_fields(a, side), _load_fields(b, side)
        if fa is None or fb is None:
            continue
        same = fa["x"].shape == fb["x"].shape and np.allclose(fa["x"], fb["x"]) and np.allclose(fa["y"], fb["y"])
        if not same and not interpolate:
            raise InputError(f"{side} grids differ ({fa['x'].size} vs {fb['x'].size} cells); pass --interpolate")
        for name in fa:
            if name in ("i", "j", "x", "y") or name not in fb or (fields and name not in fields):
                continue
            vb = fb[name] if same else _interpolate(fb, fa, name)
            d = fa[name] - vb
            report[f"{side}.{name}"] = {"max": float(np.max(np.abs(d))), "l2": float(np.sqrt(np.mean(d**2)))}
        if "u" in fa and "u" in fb:
            ua = np.concatenate([fa["u"], fa["v"]])
            ub = np.concatenate([fb["u"], fb["v"]]) if same else np.concatenate(
                [_interpolate(fb, fa, "u"), _interpolate(fb, fa, "v")])
            den = np.linalg.norm(ub)
            report[f"{side}.velocity_err"] = {"max": float(np.linalg.norm(ua - ub) / den) if den else 0.0}
    if not report:
        raise InputError(f"no common fields between {a} and {b}")
    return report


def compare_ghia(a: Path):
    spec = load_case(str(a / "case.yaml"))
    re = int(round(spec.physics.get("reynolds", 0)))
    ref = ghia_reference(re)
    pu = read_csv(a / "centerline_u.csv")
    pv = read_csv(a / "centerline_v.csv")
    du = np.interp(ref.y, pu["y"], pu["u"]) - ref.u
    dv = np.interp(ref.x, pv["x"], pv["v"]) - ref.v
    return {"centerline_u": {"max": float(np.abs(du).max()), "l2": float(np.sqrt(np.mean(du**2)))},
            "centerline_v": {"max": float(np.abs(dv).max()), "l2": float(np.sqrt(np.mean(dv**2)))}}, ref.tolerance


def cmd_compare(args):
    a = Path(args.a)
    if not (a / "manifest.json").exists():
        raise InputError(f"{a} is not a run directory")
    tol = args.tol
    if args.b == "ghia":
        try:
            report, ref_tol = compare_ghia(a)
        except (CaseError, OSError, KeyError) as exc:
            raise InputError(f"cannot compare {a} with the cavity reference: {exc}") from exc
        tol = ref_tol if tol is None else tol
    else:
        b = Path(args.b)
        if not (b / "manifest.json").exists():
            raise InputError(f"{b} is not a run directory")
        report = compare_runs(a, b, args.field, args.interpolate)
    ok = True
    for key, m in report.items():
        status = ""
        if tol is not None:
            passed = m["max"] <= tol
            ok &= passed
            status = " PASS" if passed else " FAIL"
        extra = f" l2 {m['l2']!r}" if "l2" in m else ""
        print(f"{key}: max {m['max']!r}{extra}{status}")
    if args.out:
        Path(args.out).write_text(json.dumps({"report": report, "tol": tol, "passed": ok}, indent=2) + "\n")
    return EXIT_OK if ok else EXIT_SUITE


# ------------------------------------------------------------------ stability
def cmd_stability(args):
    if args.random:
        if args.random < 1:
            raise InputError("empty stability sweep: --random must be positive")
        params = random_params(np.random.default_rng(args.seed), args.random,
                               {"C_m": (args.cm_min, args.cm_max)})
    else:
        if args.cm_steps < 1 or args.theta_steps < 1:
            raise InputError("empty stability sweep: --cm-steps and --theta-steps must be positive")
        if args.cm_min > args.cm_max:
            raise InputError("empty stability sweep: --cm-min exceeds --cm-max")
        cms = np.linspace(args.cm_min, args.cm_max, args.cm_steps)
        try:
            params = list(sweep_grid(cms, args.theta_steps, args.cs, args.cmu, args.rho0, args.split))
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    rows = []
    summary = run_sweep(params, rows=rows)
    out = Path(args.out or "stability")
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "stability.csv", StabilityParams.columns() + ["max_modulus"], rows)
    line = f"samples {summary.count} max modulus {summary.max_modulus!r}"
    if summary.first_unstable is not None:
        p = summary.first_unstable
        line += (f" UNSTABLE first at C_m1={float(p.C_m1)!r} C_m2={float(p.C_m2)!r} "
                 f"theta1={float(p.theta1)!r} theta2={float(p.theta2)!r}")
    else:
        line += " stable (<= 1 + 1e-10)"
    line += f" lemma mismatches {summary.lemma_mismatches}"
    if args.random:
        line += f" seed {args.seed}"
    print(line)
    return EXIT_OK


# ---------------------------------------------------------------------- suite
def _run_suite_part(name, index, seed):
    from . import suites

    fn = suites.SUITES[name][index]
    if fn is suites.theorem1_checks:
        return fn(seed=seed)
    return fn()


def cmd_suite(args):
    from . import suites

    names = list(suites.SUITES) if args.name == "all" else [args.name]
    for n in names:
        if n not in suites.SUITES:
            raise InputError(f"unknown suite {n!r}; available: {', '.join(suites.SUITES)}, all")
    jobs = [(n, i) for n in names for i in range(len(suites.SUITES[n]))]
    workers = min(worker_count(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_suite_part, *zip(*jobs), [args.seed] * len(jobs)))
    else:
        results = [_run_suite_part(n, i, args.seed) for n, i in jobs]
    checks = [c for part in results for c in part]
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "suite.csv", ["criterion", "check", "passed", "detail"],
                  [(c.criterion, c.name, "1" if c.passed else "0", c.detail) for c in checks])
    return EXIT_OK if failed == 0 else EXIT_SUITE


def cmd_cases(args):
    if args.show:
        try:
            print(builtin_case(args.show).to_yaml(), end="")
        except CaseError as exc:
            raise InputError(str(exc)) from exc
    else:
        print("\n".join(BUILTIN_CASES))
    return EXIT_OK


# ---------------------------------------------------------------------- parser
def build_parser():
    p = argparse.ArgumentParser(prog="cht-fvm", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a builtin case or a YAML case file")
    r.add_argument("case", help="builtin case name or path to a case file")
    r.add_argument("--method", choices=["semi-implicit", "simple"])
    r.add_argument("--coupling", choices=["ob", "reduced-ob", "dtn"])
    r.add_argument("--nr", type=int, help="number of interface modes for reduced OB")
    r.add_argument("--relaxation", type=float, help="DtN relaxation factor")
    r.add_argument("--cfl", type=float, help="CFL number; sets the time step")
    r.add_argument("--dt", type=float, help="time step (overrides --cfl)")
    r.add_argument("--t-end", type=float)
    r.add_argument("--until-steady", action="store_true")
    r.add_argument("--tol", type=float, help="coupling tolerance")
    r.add_argument("--h", type=int, metavar="N", help="grid resolution 1/N per unit length")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="dotted-path case override")
    r.add_argument("--out", help="output directory (default runs/<case>)")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="difference statistics between two runs")
    c.add_argument("a", help="run directory")
    c.add_argument("b", help="second run directory, or 'ghia' for the cavity reference")
    c.add_argument("--field", action="append", help="restrict to these fields")
    c.add_argument("--tol", type=float, help="pass/fail threshold on the max difference")
    c.add_argument("--interpolate", action="store_true", help="interpolate b onto a's grid")
    c.add_argument("--out", help="write the report as JSON")
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("stability", help="root-modulus map of the amplification polynomial")
    s.add_argument("--cm-min", type=float, default=0.0)
    s.add_argument("--cm-max", type=float, default=1.0)
    s.add_argument("--cm-steps", type=int, default=11)
    s.add_argument("--theta-steps", type=int, default=33)
    s.add_argument("--cs", type=float, default=1.0, help="acoustic number per direction")
    s.add_argument("--cmu", type=float, default=0.0, help="diffusion number per direction")
    s.add_argument("--rho0", type=float, default=1.0)
    s.add_argument("--split", type=float, default=0.5, help="share of C_m along x")
    s.add_argument("--random", type=int, default=0, metavar="N", help="N random draws instead of a grid")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="output directory (default ./stability)")
    s.set_defaults(func=cmd_stability)

    u = sub.add_parser("suite", help="run a named reproduction suite")
    u.add_argument("name", help="table1, cavity-profiles, stability, heated-plate, natural-convection, "
                                "conservation or all")
    u.add_argument("--seed", type=int, default=0)
    u.add_argument("--out")
    u.set_defaults(func=cmd_suite)

    k = sub.add_parser("cases", help="list builtin cases or print one as YAML")
    k.add_argument("--show", metavar="NAME")
    k.set_defaults(func=cmd_cases)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
