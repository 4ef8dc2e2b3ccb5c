"""Command-line entry point: ``driftdiff <subcommand> [options]``.

Exit status: 0 success, 2 invalid input or usage, 3 numerical failure.
Every run that gets past argument parsing writes ``manifest.json`` to the
output directory. Data files contain no timings, so identical config and
seed give byte-identical CSV/JSON; wall time lives only in the manifest.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import os
import platform
import sys
import tempfile
import time

import numpy as np

from . import __version__, config, estimator, kernels, qsim, solvers, spectral
from .errors import GridTooLarge, NumericalError, ValidationError
from .model import DDEProblem, DeltaP0, Grid, TableP0, Tolerances, TrigP0, init_field, size_grid, theorem1_bound

CSV_SCHEMA = "1"
DEFAULT_SEED = 20240601
DEFAULT_OUT = "driftdiff_out"
MAX_WORK = 2e9  # n_t * n_x^d ceiling for a single CLI run
PROBLEM_KEYS = ("a", "D", "L", "T", "d", "zeta")
TOL_KEYS = ("eps_c", "eps_q", "delta")


def _fmt(x):
    return format(float(x), ".17g")


def _write_atomic(path, text):
    path = os.path.abspath(path)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path), prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


# --------------------------------------------------------------------------
# configuration


def _parse_p0(spec):
    if spec is None:
        return DeltaP0()
    kind = spec.get("kind", "delta")
    if kind == "delta":
        return DeltaP0()
    if kind == "trig":
        modes = []
        for m in spec["modes"]:
            c = m["c"]
            c = complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c)
            modes.append((tuple(int(v) for v in m["k"]), c))
        return TrigP0(tuple(modes))
    if kind == "cosines":
        return TrigP0.cosines(spec.get("constant", 1.0),
                              [(tuple(t["k"]), float(t["amp"])) for t in spec["terms"]])
    if kind == "table":
        return TableP0(tuple(float(v) for v in spec["values"]))
    raise ValidationError(f"unknown p0 kind {kind!r}")


def load_config(args):
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ValidationError("config must be a JSON object")
    if getattr(args, "table_ii", False):
        for k, v in estimator.TABLE_II.items():
            cfg.setdefault(k, v)
    for key in PROBLEM_KEYS + TOL_KEYS + ("n_x", "n_t", "seed", "dense_cap"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg.setdefault("seed", DEFAULT_SEED)
    return cfg


def build_problem(cfg):
    missing = [k for k in ("a", "D", "L", "T") if k not in cfg]
    if missing:
        raise ValidationError(
            "missing required parameter(s): " + ", ".join("--" + k for k in missing)
            + " (give them as flags or in --config)"
        )
    return DDEProblem(a=float(cfg["a"]), D=float(cfg["D"]), L=float(cfg["L"]), T=float(cfg["T"]),
                      d=int(cfg.get("d", 1)), zeta=float(cfg.get("zeta", 1.0)),
                      p0=_parse_p0(cfg.get("p0")))


def build_grid(cfg, problem):
    if "n_x" in cfg or "n_t" in cfg:
        if not ("n_x" in cfg and "n_t" in cfg):
            raise ValidationError("give both --n-x and --n-t, or neither")
        grid = Grid.from_problem(problem, int(cfg["n_x"]), int(cfg["n_t"]))
    else:
        grid = size_grid(problem, float(cfg.get("eps_c", 0.1)))
    work = float(grid.n_t) * float(grid.n_x) ** grid.d
    if work > MAX_WORK:
        raise GridTooLarge(
            f"grid n_x={grid.n_x}, n_t={grid.n_t}, d={grid.d} is too large for a desk run; "
            "override with --n-x/--n-t"
        )
    return grid


def tolerances(cfg):
    return Tolerances(float(cfg.get("eps_c", 0.1)), float(cfg.get("eps_q", 0.1)),
                      float(cfg.get("delta", 0.05)))


def _grid_dict(grid):
    return {"n_x": grid.n_x, "n_t": grid.n_t, "dx": grid.dx, "dt": grid.dt, "d": grid.d}


def _field_rows(field):
    grid = field.grid
    coords = grid.coords()
    for flat, idx in enumerate(np.ndindex(*grid.shape)):
        yield list(idx) + [float(c) for c in coords[flat]] + [float(field.values[flat])]


def _field_header(d):
    return [f"i_{j + 1}" for j in range(d)] + [f"x_{j + 1}" for j in range(d)] + ["p"]


# --------------------------------------------------------------------------
# subcommands


def run_method(method, field0, problem, cfg, threads=1):
    if method == "timestep":
        return solvers.solve_timestep(field0, problem).final
    if method == "cg":
        return solvers.solve_cg(field0, problem, eps_c=float(cfg.get("cg_eps", 1e-9))).final
    if method == "fft":
        return solvers.solve_fft(field0, problem)
    if method == "walk":
        pos = solvers.sample_walk(field0, problem, field0.grid.n_t, int(cfg.get("samples", 100000)),
                                  seed=int(cfg["seed"]), n_workers=threads)
        return solvers.empirical_distribution(pos, field0.grid)
    raise ValidationError(f"unknown method {method!r}")


def cmd_solve(args, cfg, out):
    problem = build_problem(cfg)
    grid = build_grid(cfg, problem)
    field0 = init_field(problem, grid)
    if args.samples is not None:
        cfg["samples"] = args.samples
    final = run_method(args.method, field0, problem, cfg, args.threads)
    data = args.out or os.path.join(out, "solve.csv")
    _write_atomic(data, _csv_text(_field_header(grid.d), _field_rows(final)))
    summary = {
        "method": args.method,
        "grid": _grid_dict(grid),
        "mass": final.mass,
        "max": float(final.values.max()),
        "min": float(final.values.min()),
        "seed": cfg["seed"],
    }
    try:
        summary["theorem1_bound"] = theorem1_bound(problem, grid)
    except ValidationError:
        summary["theorem1_bound"] = None
    if args.method == "walk":
        summary["samples"] = int(cfg.get("samples", 100000))
    _write_atomic(os.path.splitext(data)[0] + ".json", _json_text(summary))
    return [data], summary


def cmd_spectrum(args, cfg, out):
    problem = build_problem(cfg)
    grid = build_grid(cfg, problem)
    lam = spectral.l_eig_all(grid, problem)
    rows = [list(j) + [float(v.real), float(v.imag), float(abs(v))]
            for j, v in zip(np.ndindex(*grid.shape), lam)]
    header = [f"j_{m + 1}" for m in range(grid.d)] + ["re", "im", "abs"]
    data = args.out or os.path.join(out, "spectrum.csv")
    _write_atomic(data, _csv_text(header, rows))
    est = spectral.kappa_A(grid, problem)
    summary = {
        "grid": _grid_dict(grid),
        "max_abs_l": float(np.abs(lam).max()),
        "min_abs_l": float(np.abs(lam).min()),
        "kappa_L": spectral.kappa_L_spectral(grid, problem),
        "kappa_A_estimate": est.kappa,
        "kappa_A_regime": est.regime,
        "kappa_A_bracket": [est.lower, est.upper],
    }
    if args.dense:
        k, smin, smax = spectral.kappa_A_dense(problem, grid)
        summary.update(kappa_A_dense=k, sigma_min=smin, sigma_max=smax)
    _write_atomic(os.path.splitext(data)[0] + ".json", _json_text(summary))
    return [data], summary


def cmd_qsim(args, cfg, out):
    problem = build_problem(cfg)
    grid = build_grid(cfg, problem)
    field0 = init_field(problem, grid)
    tol = tolerances(cfg)
    summary = {"mode": args.mode, "grid": _grid_dict(grid), "seed": cfg["seed"]}
    ref = solvers.solve_timestep(field0, problem).final.values if grid.n_t else field0.values
    if args.mode == "diag":
        res = qsim.qft_diag_solve(field0, problem)
        target = ref / np.linalg.norm(ref)
        summary.update(
            success_prob=res.success_prob,
            repetitions=res.repetitions,
            classical_norm_sq=float(ref @ ref),
            inf_error=float(np.abs(res.final.values - target).max()),
            return_prob_bound=spectral.return_prob_bound(max(grid.n_t, 1), grid.d),
        )
    elif args.mode == "walk":
        state, cost = qsim.walk_reference(field0, problem, grid.n_t, tol.eps_c)
        target = ref / np.linalg.norm(ref)
        summary.update(query_cost=cost,
                       inf_error=float(np.abs(state.amps.real - target).max()))
    else:
        from .model import Field

        truth = Field(ref, grid)
        stats = qsim.run_trials(lambda: qsim.prepare_state(truth), truth, tol, args.trials,
                                seed=int(cfg["seed"]))
        summary.update(
            trials=stats.trials, successes=stats.successes, success_frequency=stats.frequency,
            max_inf_error=stats.max_error, samples_N=stats.n_samples,
            repetitions_R=stats.repetitions, eps_q=tol.eps_q, delta=tol.delta,
        )
    data = args.out or os.path.join(out, "qsim.json")
    _write_atomic(data, _json_text(summary))
    return [data], summary


def cmd_estimate(args, cfg, out):
    problem = build_problem(cfg)
    eps_c = float(cfg.get("eps_c", 1.0 if args.table_ii else 0.1))
    eps_q = float(cfg.get("eps_q", 1.0 if args.table_ii else 0.1))
    methods = estimator.METHODS if args.method == "all" else (args.method,)
    ests = [estimator.estimate(m, problem, eps_c, eps_q, args.with_logs) for m in methods]
    rows = []
    for e in ests:
        printed = estimator.TABLE_III[e.method][0]
        factors = ";".join(f"{s}^{_fmt(x)}={_fmt(c)}" for s, x, c in e.factors)
        rows.append([e.method, e.value, printed, factors])
    data = args.out or os.path.join(out, "estimate.csv")
    _write_atomic(data, _csv_text(["method", "value", "table_iii", "factors"], rows))
    summary = {
        "eps_c": eps_c, "eps_q": eps_q, "with_logs": args.with_logs,
        "estimates": {e.method: {"value": e.value,
                                 "factors": [[s, x, c] for s, x, c in e.factors]} for e in ests},
        "advantage_threshold": estimator.advantage_threshold(problem, eps_c).threshold,
    }
    rep = estimator.grid_report(problem, eps_c, estimator.TABLE_II_PRINTED if args.table_ii else None)
    summary["grid_report"] = rep.__dict__
    _write_atomic(os.path.splitext(data)[0] + ".json", _json_text(summary))
    return [data], summary


def cmd_crossover(args, cfg, out):
    problem = build_problem(cfg)
    sweep = np.geomspace(args.eps_c_max, args.eps_c_min, args.points)
    rows = [list(r) for r in estimator.crossover_sweep(problem, sweep)]
    data = args.out or os.path.join(out, "crossover.csv")
    _write_atomic(data, _csv_text(["eps_c", "threshold_inv_eps_q", "fft_over_qft"], rows))
    return [data], {"points": len(rows)}


def cmd_compare(args, cfg, out):
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if len(methods) < 2:
        raise ValidationError("compare needs at least two methods")
    problem = build_problem(cfg)
    grid = build_grid(cfg, problem)
    field0 = init_field(problem, grid)
    if args.samples is not None:
        cfg["samples"] = args.samples
    results, runtimes = {}, {}
    for m in methods:
        t0 = time.perf_counter()
        try:
            results[m] = run_method(m, field0, problem, cfg, args.threads).values
        except (ValidationError, NumericalError) as exc:
            raise type(exc)(f"[{m}] {exc}") from exc
        runtimes[m] = time.perf_counter() - t0
    pairs = []
    for m1, m2 in itertools.combinations(methods, 2):
        diff = results[m1] - results[m2]
        pairs.append({"a": m1, "b": m2, "inf": float(np.abs(diff).max()),
                      "l2": float(np.linalg.norm(diff)), "l1": float(np.abs(diff).sum()),
                      "tv": 0.5 * float(np.abs(diff).sum())})
    summary = {
        "grid": _grid_dict(grid), "methods": methods, "pairs": pairs,
        "mass_deviation": {m: float(abs(v.sum() - 1.0)) for m, v in results.items()},
        "seed": cfg["seed"],
    }
    data = args.out or os.path.join(out, "compare.json")
    _write_atomic(data, _json_text(summary))
    return [data], dict(summary, runtimes=runtimes)


# --------------------------------------------------------------------------
# parser and dispatch


def _common():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("problem")
    for key, typ in (("a", float), ("D", float), ("L", float), ("T", float), ("d", int),
                     ("zeta", float)):
        g.add_argument(f"--{key}", type=typ, default=None)
    g.add_argument("--eps-c", dest="eps_c", type=float, default=None)
    g.add_argument("--eps-q", dest="eps_q", type=float, default=None)
    g.add_argument("--delta", type=float, default=None)
    g.add_argument("--n-x", dest="n_x", type=int, default=None)
    g.add_argument("--n-t", dest="n_t", type=int, default=None)
    r = p.add_argument_group("run")
    r.add_argument("--config", default=None, help="JSON file with parameters (flags override)")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--out-dir", default=DEFAULT_OUT)
    r.add_argument("--out", default=None, help="primary output file")
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--dense-cap", dest="dense_cap", type=int, default=None)
    r.add_argument("--table-ii", action="store_true", help="use the representative finance parameters")
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="driftdiff", description="Drift-diffusion workbench")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common], help="run one classical solver")
    s.add_argument("--method", choices=["cg", "timestep", "walk", "fft"], required=True)
    s.add_argument("--samples", type=int, default=None)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("spectrum", parents=[common], help="eigenvalues of L and condition numbers")
    s.add_argument("--dense", action="store_true", help="also SVD the dense block matrix")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("qsim", parents=[common], help="statevector simulations")
    s.add_argument("--mode", choices=["diag", "walk", "measure"], required=True)
    s.add_argument("--trials", type=int, default=200)
    s.set_defaults(func=cmd_qsim)

    s = sub.add_parser("estimate", parents=[common], help="cost formulas")
    s.add_argument("--method", default="all", choices=("all",) + estimator.METHODS)
    s.add_argument("--with-logs", action="store_true")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("crossover", parents=[common], help="advantage threshold over eps_c")
    s.add_argument("--eps-c-min", type=float, default=1e-4)
    s.add_argument("--eps-c-max", type=float, default=1.0)
    s.add_argument("--points", type=int, default=17)
    s.set_defaults(func=cmd_crossover)

    s = sub.add_parser("compare", parents=[common], help="cross-solver differences")
    s.add_argument("--methods", required=True, help="comma-separated, e.g. timestep,fft")
    s.add_argument("--samples", type=int, default=None)
    s.set_defaults(func=cmd_compare)
    return parser


def _versions():
    import scipy

    return {"driftdiff": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version(), "backend": kernels.BACKEND}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on usage errors
    out = args.out_dir
    manifest = {"command": args.command, "argv": list(sys.argv[1:] if argv is None else argv),
                "versions": _versions(), "csv_schema": CSV_SCHEMA}
    t0 = time.perf_counter()
    status, files, cfg = 0, [], {}
    try:
        cfg = load_config(args)
        if "dense_cap" in cfg:
            config.set_dense_cap(cfg["dense_cap"])
        files, summary = args.func(args, cfg, out)
        if "runtimes" in summary:
            manifest["runtimes"] = summary["runtimes"]
    except (ValidationError, ValueError) as exc:
        status = 2
        manifest["error"] = str(exc)
        print(f"driftdiff {args.command}: error: {exc}", file=sys.stderr)
    except OSError as exc:
        status = 2
        manifest["error"] = str(exc)
        print(f"driftdiff {args.command}: cannot write output: {exc}", file=sys.stderr)
    except NumericalError as exc:
        status = 3
        manifest["error"] = str(exc)
        print(f"driftdiff {args.command}: numerical failure: {exc}", file=sys.stderr)
    finally:
        config.set_dense_cap(None)
    manifest.update(config=_jsonable(cfg), seed=cfg.get("seed"), outputs=files, exit_status=status,
                    wall_time=time.perf_counter() - t0)
    try:
        _write_atomic(os.path.join(out, "manifest.json"), _json_text(manifest))
    except OSError as exc:
        print(f"driftdiff: cannot write manifest: {exc}", file=sys.stderr)
        return status or 2
    return status


def _jsonable(obj):
    return json.loads(json.dumps(obj, default=str))


if __name__ == "__main__":
    sys.exit(main())
