"""Command-line front end: ``minkflow {translator,flow,barriers,legendre,check}``.

Every command writes into a per-run directory (``--out``, or a directory
named after the command and a digest of its resolved parameters under the
output root) together with ``manifest.json``: command, parameters with their
source (cli / config / default), inputs, seed and SHA-256 of each artifact.
The output root is ``./runs`` unless ``MINKFLOW_OUTPUT_ROOT`` is set.

Exit codes: 0 success, 1 usage or parameter error, 2 numerical
non-convergence.  ``check`` exits with its number of failed checks.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (ComparisonError, ConvergenceError, DomainError,
                     IntegrationError, MinkflowError, ParameterError,
                     StiffnessError)

OUTPUT_ENV = "MINKFLOW_OUTPUT_ROOT"
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

FLOW_DEFAULTS = {
    "n": 2,
    "k": 1,
    "a": 1.0,
    "L": 6.0,
    "h": None,
    "dt_safety": 0.4,
    "t_end": 50.0,
    "bc_mode": "translator_dirichlet",
    "tol_converged": 1e-3,
    "bump": 0.3,
    "representation": "radial",
    "scheme": "auto",
    "dt_implicit": 0.05,
    "output_interval": 0.5,
    "C": None,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with the usage-error exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- run directories and manifests -------------------------------------------

def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, Path):
        return str(x)
    return x


def _dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_dir(command, params, out):
    if out is not None:
        d = Path(out)
    else:
        blob = json.dumps(_jsonable(params), sort_keys=True).encode()
        tag = hashlib.sha256(blob).hexdigest()[:12]
        d = Path(os.environ.get(OUTPUT_ENV, "runs")) / f"{command}-{tag}"
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_manifest(run_dir, command, params, sources, outputs, inputs=None, seed=None):
    manifest = {
        "command": command,
        "version": __version__,
        "parameters": {k: {"value": params[k], "source": sources.get(k, "default")}
                       for k in sorted(params)},
        "inputs": {k: {"path": str(v), "sha256": _sha256(v)}
                   for k, v in (inputs or {}).items()},
        "outputs": {name: _sha256(run_dir / name) for name in sorted(outputs)},
        "seed": seed,
    }
    _dump_json(manifest, run_dir / "manifest.json")
    return manifest


def _resolve(args, names, defaults, config=None):
    """CLI flag > config file > default, with the source of each value."""
    params, sources = {}, {}
    config = config or {}
    for name in names:
        cli_val = getattr(args, name, None)
        if cli_val is not None:
            params[name], sources[name] = cli_val, "cli"
        elif name in config:
            params[name], sources[name] = config[name], "config"
        else:
            params[name], sources[name] = defaults.get(name), "default"
    return params, sources


# -- translator ------------------------------------------------------------------

def cmd_translator(args):
    from .radial import (RadialParams, check_bounds, limit_profile,
                         profile_summary, verify_residual, write_profile_csv)

    names = ["n", "k", "a", "r_max", "tol"]
    defaults = {"n": 2, "k": 2, "a": 1.0, "r_max": 12.0, "tol": 1e-10}
    params, sources = _resolve(args, names, defaults)
    p = RadialParams(params["n"], params["k"], params["a"], params["r_max"], params["tol"])
    prof = limit_profile(p, cross_check=True)
    r = np.linspace(0.0, 0.5 * p.r_max, 257)
    residual = float(np.max(verify_residual(prof, r, relative=True)))
    bound_r = np.linspace(0.1, min(3.0, p.r_max), 200)
    violation = check_bounds(prof, bound_r)
    summary = profile_summary(prof, residual_sup=residual, bounds_ok=bool(violation <= 0),
                              bounds_violation=violation, r_max=p.r_max)
    run_dir = _run_dir("translator", params, args.out)
    write_profile_csv(prof, run_dir / "profile.csv")
    _dump_json(summary, run_dir / "summary.json")
    _write_manifest(run_dir, "translator", params, sources, ["profile.csv", "summary.json"])
    print(json.dumps(_jsonable(summary), sort_keys=True))
    return EXIT_OK


# -- flow ---------------------------------------------------------------------

def _flow_setup(params):
    from .flow import FlowConfig, FlowState, RadialGraph
    from .geometry import GraphFunction
    from .radial import RadialParams, limit_profile

    n, k, a, L = params["n"], params["k"], params["a"], params["L"]
    rep = params["representation"]
    if rep not in ("radial", "grid"):
        raise ParameterError("representation must be 'radial' or 'grid'")
    h = params["h"]
    if h is None:
        h = 0.02 if rep == "radial" else 1.0 / 32
    if rep == "grid" and n != 2:
        raise ParameterError("grid flows need n = 2")
    reach = L * (math.sqrt(2.0) if rep == "grid" else 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        target = limit_profile(RadialParams(n, k, a, r_max=max(12.0, reach + 1.0)))
    bump = params["bump"]

    def initial(r):
        return target.height(r) + bump * np.exp(-r * r)

    if rep == "radial":
        graph = RadialGraph.sample(initial, L, h, n)
    else:
        graph = GraphFunction.radial(initial, L, h)
    state = FlowState(graph, 0.0, a, k)
    barrier = graph.values if params["bc_mode"] == "barrier_dirichlet" else None
    config = FlowConfig(t_end=params["t_end"], target=target, dt_safety=params["dt_safety"],
                        bc_mode=params["bc_mode"], tol_converged=params["tol_converged"],
                        barrier=barrier, scheme=params["scheme"],
                        dt_implicit=params["dt_implicit"],
                        output_interval=params["output_interval"])
    return state, config, target, h


def cmd_flow(args):
    from .flow import (check_initial_admissible, read_config, run_normalized,
                       write_history_csv, write_snapshot_csv)

    config_file = read_config(args.config) if args.config else {}
    params, sources = _resolve(args, list(FLOW_DEFAULTS), FLOW_DEFAULTS, config_file)
    state, config, target, h = _flow_setup(params)
    params["h"] = h
    report = check_initial_admissible(state, params["C"])
    res = run_normalized(state, config, on_violation="record")
    run_dir = _run_dir("flow", params, args.out)
    write_history_csv(res.history, run_dir / "history.csv")
    write_snapshot_csv(state, run_dir / "initial.csv", target)
    write_snapshot_csv(res.state, run_dir / "final.csv", target)
    summary = {
        "converged": res.converged,
        "t_converged": res.t_converged,
        "t_final": res.state.t,
        "final_sup_dist": res.history[-1].sup_dist,
        "monotone": res.monotone,
        "sandwich_ok": res.sandwich_ok,
        "max_phi_over_v": max(r.max_phi_over_v for r in res.history),
        "min_margin": min(r.min_margin for r in res.history),
        "admissible": report.admissible,
        "strictly_convex": report.strictly_convex,
        "a_max": report.a_max,
        "a_in_range": report.a_in_range,
        "admissibility_messages": list(report.messages),
        "violations": list(res.violations),
    }
    _dump_json(summary, run_dir / "summary.json")
    inputs = {"config": Path(args.config)} if args.config else None
    _write_manifest(run_dir, "flow", params, sources,
                    ["history.csv", "initial.csv", "final.csv", "summary.json"], inputs)
    print(json.dumps(_jsonable(summary), sort_keys=True))
    if not res.converged or not res.sandwich_ok:
        return EXIT_NUMERIC
    return EXIT_OK


# -- barriers -----------------------------------------------------------------

def cmd_barriers(args):
    from .barriers import (SphereFunction, asymptotic_gap, barrier_grid,
                           make_barrier_pair, read_sphere_csv, write_barrier_csv)
    from .radial import RadialParams, limit_profile

    names = ["k", "a", "M", "L", "h", "m"]
    defaults = {"k": 2, "a": 1.0, "M": None, "L": 6.0, "h": 0.12, "m": 256}
    params, sources = _resolve(args, names, defaults)
    if args.phi:
        phi = read_sphere_csv(args.phi)
    else:
        phi = SphereFunction(np.zeros(params["m"]))
    params["phi"] = str(args.phi) if args.phi else "zero"
    L = params["L"]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        base = limit_profile(RadialParams(2, params["k"], 1.0,
                                          r_max=max(12.0, params["a"] * (L * math.sqrt(2) + 10.0))))
    pair = make_barrier_pair(base, phi, params["a"], params["M"])
    q1, q2 = barrier_grid(pair, L, params["h"])
    excess = float(np.max(q1.values - q2.values))
    radii = args.radii if args.radii else [0.5 * L, 0.8 * L]
    gaps = {f"{R:g}": asymptotic_gap(pair, R) for R in radii}
    report = {"M": pair.M, "ordering_excess": excess, "ordered": excess <= 1e-10,
              "asymptotic_gap": gaps}
    params["radii"] = list(radii)
    run_dir = _run_dir("barriers", params, args.out)
    write_barrier_csv(q1, q2, run_dir / "barriers.csv")
    _dump_json(report, run_dir / "report.json")
    inputs = {"phi": Path(args.phi)} if args.phi else None
    _write_manifest(run_dir, "barriers", params, sources, ["barriers.csv", "report.json"], inputs)
    print(json.dumps(_jsonable(report), sort_keys=True))
    return EXIT_OK if report["ordered"] else EXIT_NUMERIC


# -- legendre -----------------------------------------------------------------

def cmd_legendre(args):
    from .geometry import GraphFunction
    from .legendre import dual_residual, legendre_transform, write_dual_csv
    from .radial import RadialParams, limit_profile

    names = ["n", "k", "a", "L", "h", "r"]
    defaults = {"n": 2, "k": 2, "a": 1.0, "L": 2.0, "h": 1.0 / 64, "r": 0.6}
    params, sources = _resolve(args, names, defaults)
    n, k, a = params["n"], params["k"], params["a"]
    if n not in (1, 2):
        raise ParameterError("legendre supports n = 1, 2")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        prof = limit_profile(RadialParams(n, k, a, r_max=max(12.0, 2 * params["L"])))
    g = GraphFunction.radial(prof.height, params["L"], params["h"], n)
    d = legendre_transform(g, r=params["r"])
    residual = dual_residual(d, k, a)
    summary = {"dual_residual": residual, "unresolved_fraction": d.unresolved_fraction,
               "convex": d.is_convex()}
    run_dir = _run_dir("legendre", params, args.out)
    write_dual_csv(d, run_dir / "dual.csv")
    _dump_json(summary, run_dir / "summary.json")
    _write_manifest(run_dir, "legendre", params, sources, ["dual.csv", "summary.json"])
    print(json.dumps(_jsonable(summary), sort_keys=True))
    return EXIT_OK


# -- check --------------------------------------------------------------------

SUITES = ("symfunc", "radial", "geometry", "barriers", "flow", "legendre")


def cmd_check(args):
    from .checks import run_suite

    suite = args.suite
    if suite not in SUITES + ("all",):
        raise UsageError(f"unknown suite {suite!r}; choose from {', '.join(SUITES + ('all',))}")
    names = SUITES if suite == "all" else (suite,)
    results = []
    for name in names:
        results.extend(run_suite(name, args.seed))
    failures = sum(1 for r in results if not r["passed"])
    report = {"suite": suite, "seed": args.seed, "checks": results, "failures": failures}
    text = json.dumps(_jsonable(report), indent=2, sort_keys=True)
    print(text)
    if args.out:
        run_dir = _run_dir("check", {"suite": suite, "seed": args.seed}, args.out)
        (run_dir / "report.json").write_text(text + "\n")
        _write_manifest(run_dir, "check", {"suite": suite, "seed": args.seed},
                        {"suite": "cli", "seed": "cli"}, ["report.json"], seed=args.seed)
    return min(failures, 125)


# -- entry point --------------------------------------------------------------

def build_parser():
    parser = _Parser(prog="minkflow", description="Translating solutions of σ_k curvature "
                     "flow of spacelike graphs in Minkowski space.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("translator", help="solve the radial translator ODE")
    p.add_argument("--n", type=int, help="dimension (default 2)")
    p.add_argument("--k", type=int, help="curvature order, 1 <= k <= n (default 2)")
    p.add_argument("--a", type=float, help="translation velocity (default 1)")
    p.add_argument("--r-max", dest="r_max", type=float, help="radial range (default 12)")
    p.add_argument("--tol", type=float, help="ODE tolerance (default 1e-10)")
    p.add_argument("--out", help="run directory (default $MINKFLOW_OUTPUT_ROOT/<command>-<hash>)")
    p.set_defaults(func=cmd_translator)

    p = sub.add_parser("flow", help="run the normalized flow toward a translator")
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--n", type=int, help="dimension (default 2)")
    p.add_argument("--k", type=int, help="curvature order (default 1)")
    p.add_argument("--a", type=float, help="translation velocity (default 1)")
    p.add_argument("--L", type=float, help="domain radius or half-width (default 6)")
    p.add_argument("--h", type=float, help="mesh width (default 0.02 radial, 1/32 grid)")
    p.add_argument("--dt-safety", dest="dt_safety", type=float,
                   help="fraction of the explicit stability limit (default 0.4)")
    p.add_argument("--t-end", dest="t_end", type=float, help="final time (default 50)")
    p.add_argument("--bc-mode", dest="bc_mode",
                   choices=["translator_dirichlet", "barrier_dirichlet"],
                   help="boundary values from the target translator or from the initial "
                   "data (default translator_dirichlet)")
    p.add_argument("--tol-converged", dest="tol_converged", type=float,
                   help="sup distance that ends the run (default 1e-3)")
    p.add_argument("--bump", type=float,
                   help="amplitude of the e^{-r^2} perturbation (default 0.3)")
    p.add_argument("--representation", choices=["radial", "grid"],
                   help="radial ODE grid or 2-d Cartesian grid (default radial)")
    p.add_argument("--scheme", choices=["auto", "explicit", "implicit"],
                   help="time stepping (default auto)")
    p.add_argument("--dt-implicit", dest="dt_implicit", type=float,
                   help="backward Euler step (default 0.05)")
    p.add_argument("--output-interval", dest="output_interval", type=float,
                   help="time between history records (default 0.5)")
    p.add_argument("--C", dest="C", type=float,
                   help="speed bound for the admissibility check (default: measured)")
    p.add_argument("--out", help="run directory (default $MINKFLOW_OUTPUT_ROOT/<command>-<hash>)")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("barriers", help="build the sub/supersolution envelopes (n = 2)")
    p.add_argument("--phi", help="CSV with columns theta,phi (uniform θ)")
    p.add_argument("--k", type=int, help="curvature order of the base translator (default 2)")
    p.add_argument("--a", type=float, help="translation velocity (default 1)")
    p.add_argument("--M", type=float, help="offset (default: C^2 norm of φ)")
    p.add_argument("--L", type=float, help="grid half-width (default 6)")
    p.add_argument("--h", type=float, help="mesh width (default 0.12)")
    p.add_argument("--m", type=int, help="samples of φ = 0 when no CSV is given")
    p.add_argument("--radii", type=float, nargs=2, help="two radii for the asymptotic gap")
    p.add_argument("--out", help="run directory (default $MINKFLOW_OUTPUT_ROOT/<command>-<hash>)")
    p.set_defaults(func=cmd_barriers)

    p = sub.add_parser("legendre", help="Legendre transform of a translator and dual residual")
    p.add_argument("--n", type=int, help="dimension (default 2)")
    p.add_argument("--k", type=int, help="curvature order (default 2)")
    p.add_argument("--a", type=float, help="translation velocity (default 1)")
    p.add_argument("--L", type=float, help="grid half-width (default 2)")
    p.add_argument("--h", type=float, help="mesh width (default 1/64)")
    p.add_argument("--r", type=float, help="dual disc radius")
    p.add_argument("--out", help="run directory (default $MINKFLOW_OUTPUT_ROOT/<command>-<hash>)")
    p.set_defaults(func=cmd_legendre)

    p = sub.add_parser("check", help="run an invariant suite and print a JSON report")
    p.add_argument("suite", help="symfunc, radial, geometry, barriers, flow, legendre or all")
    p.add_argument("--seed", type=int, default=0, help="seed of the random generator (default 0)")
    p.add_argument("--out", help="run directory (default $MINKFLOW_OUTPUT_ROOT/<command>-<hash>)")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ParameterError, FileNotFoundError) as exc:
        print(f"minkflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, IntegrationError, StiffnessError, ComparisonError,
            DomainError) as exc:
        print(f"minkflow: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MinkflowError as exc:
        print(f"minkflow: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
