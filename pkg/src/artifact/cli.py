"""Batch driver: scenario files in, result bundles and plot-ready CSV out.

Subcommands
    solve   one scenario -> field CSV + JSON bundle (+oracle summary)
    verify  inline solve + selected checks -> verify.json, exit 1 on failure
    sweep   estimate-ratio or lifespan tables -> CSV + JSON

Exit codes: 0 success, 1 verification failure, 2 usage/config error,
3 solver error.  Identical (config, seed) -> byte-identical outputs; every
bundle embeds the resolved config and the tolerance set it was judged by.
Default output directory comes from $ARTIFACT_OUT, else ./artifact-out.
"""

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import verify as V
from .cauchy import LineData, solve_cauchy
from .contour import build_real_line_rule
from .dispersion import DispersionContext
from .errors import ArtifactError, IncompatibleData
from .halfline import (solve_linear_by_decomposition, solve_linear_full,
                       solve_reduced)
from .nonlinear import lifespan_probe, picard_solve
from .norms import solution_space_norm
from .scenario import Scenario, check_compatibility

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3

ENV_OUT = "ARTIFACT_OUT"

SOLVERS = ("linear-full", "linear-decomposition", "reduced", "cauchy",
           "nonlinear")

TOL_SETS = {
    "default": {
        "oracle_max": 1e-6,
        "robin": 1e-6,
        "initial": 1e-6,
        "global_relation": 1e-6,
        "refinement_band": 0.2,
        "picard_residual": 1e-6,
        "lambda_band": (1.9, 3.0),
        "laplace_slack": 1e-3,
    },
    "strict": {
        "oracle_max": 1e-8,
        "robin": 1e-8,
        "initial": 1e-8,
        "global_relation": 1e-8,
        "refinement_band": 0.1,
        "picard_residual": 1e-8,
        "lambda_band": (1.9, 3.0),
        "laplace_slack": 1e-4,
    },
    "loose": {
        "oracle_max": 1e-4,
        "robin": 1e-4,
        "initial": 1e-4,
        "global_relation": 1e-4,
        "refinement_band": 0.3,
        "picard_residual": 1e-4,
        "lambda_band": (1.9, 3.0),
        "laplace_slack": 1e-2,
    },
}


class ConfigError(Exception):
    """Invalid run configuration (maps to exit 2)."""


@dataclass
class RunConfig:
    """Fully serializable description of one run."""

    scenario: dict
    grid: dict = field(default_factory=lambda: {
        "x_min": 0.0, "x_max": 10.0, "nx": 64, "nt": 64})
    solver: str = "linear-full"
    verification: list = field(default_factory=list)
    solver_options: dict = field(default_factory=dict)
    oracle: list = field(default_factory=list)   # [{"x": spec, "t": spec}]
    sweep: dict = field(default_factory=dict)
    out_dir: str = ""
    seed: int = 0
    jobs: int = 1
    tol_set: str = "default"

    @classmethod
    def from_file(cls, path, args=None):
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError("cannot read config %s: %s" % (path, exc))
        except json.JSONDecodeError as exc:
            raise ConfigError(
                "%s: line %d column %d: %s"
                % (path, exc.lineno, exc.colno, exc.msg))
        if not isinstance(raw, dict):
            raise ConfigError("%s: top level must be an object" % path)
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError("%s: unknown keys %s" % (path, sorted(unknown)))
        if "scenario" not in raw:
            raise ConfigError("%s: missing required key 'scenario'" % path)
        if isinstance(raw["scenario"], str):
            sc_path = os.path.join(os.path.dirname(path), raw["scenario"])
            try:
                with open(sc_path) as fh:
                    raw["scenario"] = json.load(fh)
            except OSError as exc:
                raise ConfigError("cannot read scenario %s: %s"
                                  % (sc_path, exc))
            except json.JSONDecodeError as exc:
                raise ConfigError("%s: line %d column %d: %s"
                                  % (sc_path, exc.lineno, exc.colno, exc.msg))
        if not isinstance(raw["scenario"], dict):
            raise ConfigError(
                "%s: 'scenario' must be an object or a file path" % path)
        cfg = cls(**raw)
        if args is not None:
            if args.seed is not None:
                cfg.seed = args.seed
            if args.out is not None:
                cfg.out_dir = args.out
            if args.jobs is not None:
                cfg.jobs = args.jobs
            if args.tol_set is not None:
                cfg.tol_set = args.tol_set
        if not cfg.out_dir:
            cfg.out_dir = os.environ.get(ENV_OUT, "artifact-out")
        if cfg.solver not in SOLVERS:
            raise ConfigError("unknown solver %r (choose from %s)"
                              % (cfg.solver, ", ".join(SOLVERS)))
        if cfg.tol_set not in TOL_SETS:
            raise ConfigError("unknown tol-set %r" % cfg.tol_set)
        for key in ("x_min", "x_max", "nx", "nt"):
            if key not in cfg.grid:
                raise ConfigError("grid: missing %r" % key)
        if cfg.grid["nx"] < 2 or cfg.grid["nt"] < 2:
            raise ConfigError("grid: nx and nt must be >= 2")
        if cfg.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        return cfg

    def resolved(self):
        d = asdict(self)
        d["tolerances"] = {k: list(v) if isinstance(v, tuple) else v
                           for k, v in TOL_SETS[self.tol_set].items()}
        return d


def _fmt(v):
    return "%.17g" % v


def _write_field_csv(path, fld):
    with open(path, "w") as fh:
        fh.write("x,t,u,ut\n")
        for j, t in enumerate(fld.t_grid):
            for i, x in enumerate(fld.x_grid):
                fh.write("%s,%s,%s,%s\n" % (_fmt(x), _fmt(t),
                                            _fmt(fld.u[i, j].real),
                                            _fmt(fld.ut[i, j].real)))


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    # callables and rich objects: a stable name, never a repr with an id
    return getattr(obj, "__qualname__", type(obj).__name__)


def _run_solver(cfg, scn, ctx):
    g = cfg.grid
    x = np.linspace(float(g["x_min"]), float(g["x_max"]), int(g["nx"]))
    t = np.linspace(0.0, scn.horizon_T, int(g["nt"]))
    opts = dict(cfg.solver_options)
    report = None
    if cfg.solver == "linear-full":
        fld = solve_linear_full(ctx, scn, x, t, **opts)
    elif cfg.solver == "linear-decomposition":
        fld = solve_linear_by_decomposition(ctx, scn, x, t, **opts)
    elif cfg.solver == "reduced":
        fld = solve_reduced(ctx, scn.alpha, scn.beta, x, t, **opts)
    elif cfg.solver == "cauchy":
        rule = build_real_line_rule(opts.pop("line_k_max", 24.0),
                                    opts.pop("line_n", 192))
        data = LineData(U0=scn.u0, U1=scn.u1, F=scn.forcing)
        fld = solve_cauchy(data, rule, x, t, **opts)
    else:
        fld, rep = picard_solve(ctx, scn, x, t, **opts)
        report = rep.to_dict()
    return fld, report


def _oracle_summary(cfg, fld):
    from .scenario import FunctionSpec
    terms = [(FunctionSpec.from_dict(p["x"]), FunctionSpec.from_dict(p["t"]))
             for p in cfg.oracle]
    ue = sum(np.outer(fx(fld.x_grid), ft(fld.t_grid)) for fx, ft in terms)
    ute = sum(np.outer(fx(fld.x_grid), ft.derivative()(fld.t_grid))
              for fx, ft in terms)
    return {"max_error_u": float(np.max(np.abs(fld.u.real - ue))),
            "max_error_ut": float(np.max(np.abs(fld.ut.real - ute)))}


def cmd_solve(cfg):
    scn = Scenario.from_dict(cfg.scenario)
    ctx = DispersionContext.build(scn.gamma, scn.delta,
                                  horizon_T=scn.horizon_T)
    fld, iteration = _run_solver(cfg, scn, ctx)
    os.makedirs(cfg.out_dir, exist_ok=True)
    _write_field_csv(os.path.join(cfg.out_dir, "field.csv"), fld)
    norm, nrep = solution_space_norm(fld, max(scn.s, 0.0))
    # wall times vary run to run and would break bundle determinism
    diag = {k: v for k, v in fld.diagnostics.items() if k != "wall_time"}
    bundle = {
        "config": cfg.resolved(),
        "scenario_hash": scn.data_hash(),
        "diagnostics": _jsonable(diag),
        "norms": _jsonable(nrep.to_dict()),
        "solution_norm": norm,
    }
    if iteration is not None:
        bundle["iteration"] = _jsonable(iteration)
    if cfg.oracle:
        summary = _oracle_summary(cfg, fld)
        bundle["oracle"] = summary
        _write_json(os.path.join(cfg.out_dir, "oracle.json"),
                    {"config": cfg.resolved(), "oracle": summary})
    _write_json(os.path.join(cfg.out_dir, "bundle.json"), bundle)
    return EXIT_OK


_CHECKS = ("compatibility", "residuals", "refinement", "global-relation",
           "lambda-band", "laplace-bound")


def cmd_verify(cfg):
    tol = TOL_SETS[cfg.tol_set]
    checks = cfg.verification or ["residuals"]
    for name in checks:
        if name not in _CHECKS:
            raise ConfigError("unknown verification %r (choose from %s)"
                              % (name, ", ".join(_CHECKS)))
    scn = Scenario.from_dict(cfg.scenario)
    ctx = DispersionContext.build(scn.gamma, scn.delta,
                                  horizon_T=scn.horizon_T)
    results = []

    def record(name, passed, details):
        results.append({"check": name, "passed": bool(passed),
                        "details": _jsonable(details)})

    if "compatibility" in checks:
        try:
            rep = check_compatibility(scn, strict=True)
            record("compatibility", rep.passed,
                   {"residuals": list(rep.residuals)})
        except IncompatibleData as exc:
            record("compatibility", False, {"error": str(exc)})

    needs_field = {"residuals", "global-relation"} & set(checks)
    fld = None
    if needs_field:
        fld, _ = _run_solver(cfg, scn, ctx)

    if "residuals" in checks:
        rob = V.robin_residuals(fld, scn) if fld.traces else {}
        ini = V.initial_residuals(fld, scn)
        ok = all(v < tol["robin"] for v in rob.values()) \
            and all(v < tol["initial"] for v in ini.values())
        record("residuals", ok, {"robin": rob, "initial": ini})

    if "refinement" in checks:
        nonlin = cfg.solver == "nonlinear"

        def solve_fn(xg, tg):
            f, _ = _run_solver(
                RunConfig(scenario=cfg.scenario, solver=cfg.solver,
                          solver_options=dict(cfg.solver_options,
                                              with_traces=False)
                          if cfg.solver.startswith("linear")
                          else dict(cfg.solver_options),
                          grid={"x_min": xg[0], "x_max": xg[-1],
                                "nx": xg.size, "nt": tg.size}),
                scn, ctx)
            return f

        g = cfg.grid
        fac = V.refinement_study(solve_fn, scn,
                                 x_span=(float(g["x_min"]),
                                         float(g["x_max"])),
                                 nonlinear=nonlin)
        band = tol["refinement_band"]
        ok = (not fac["t_measurable"]
              or abs(fac["t_factor"] - 4.0) <= 4.0 * band) \
            and (not fac["x_measurable"]
                 or abs(fac["x_factor"] - 16.0) <= 16.0 * band)
        record("refinement", ok, fac)

    if "global-relation" in checks:
        # the transform quadrature interpolates the field in x; 257 grid
        # points keep the spline error below the tolerance
        if int(cfg.grid["nx"]) < 257:
            cfg_gr = RunConfig(scenario=cfg.scenario, solver=cfg.solver,
                               solver_options=dict(cfg.solver_options),
                               grid=dict(cfg.grid, nx=257))
            fld, _ = _run_solver(cfg_gr, scn, ctx)
        rng = np.random.default_rng(cfg.seed)
        radius = rng.uniform(0.5, 5.0, 20)
        angle = rng.uniform(-np.pi, 0.0, 20)
        ks = radius * np.exp(1j * angle)
        ks[:4] = rng.uniform(-5, 5, 4)
        rows = V.global_relation_residual(fld, scn, ctx, ks)
        worst = max(r["residual"] / r["scale"] for r in rows)
        record("global-relation", worst < tol["global_relation"],
               {"worst_relative": worst, "n_samples": len(rows)})

    if "lambda-band" in checks:
        rep = V.lambda_asymptote_check(ctx, band=tuple(tol["lambda_band"]))
        record("lambda-band", rep["ok"], rep)

    if "laplace-bound" in checks:
        rep = V.laplace_bound_check(50, seed=cfg.seed)
        record("laplace-bound", rep["ok"],
               {"max_ratio": max(rep["ratios"]), "bound": rep["bound"]})

    os.makedirs(cfg.out_dir, exist_ok=True)
    _write_json(os.path.join(cfg.out_dir, "verify.json"),
                {"config": cfg.resolved(), "results": results})
    return EXIT_OK if all(r["passed"] for r in results) else EXIT_VERIFY


def cmd_sweep(cfg):
    sw = cfg.sweep
    kind = sw.get("kind", "estimate")
    os.makedirs(cfg.out_dir, exist_ok=True)
    if kind == "estimate":
        T_list = sw.get("T_list", [])
        if not T_list:
            raise ConfigError("sweep.T_list must be nonempty")
        out = V.estimate_ratio_sweep(
            sw.get("theorem", "linear-high"),
            int(sw.get("n_samples", 50)), [float(T) for T in T_list],
            seed=cfg.seed, cap=sw.get("cap"), s=float(sw.get("s", 2.0)),
            jobs=cfg.jobs)
        path = os.path.join(cfg.out_dir, "sweep.csv")
        with open(path, "w") as fh:
            fh.write("sample,T,ratio\n")
            for row in out["rows"]:
                fh.write("%d,%s,%s\n" % (row["sample"], _fmt(row["T"]),
                                         _fmt(row["ratio"])))
        _write_json(os.path.join(cfg.out_dir, "sweep.json"),
                    {"config": cfg.resolved(),
                     "max_per_T": _jsonable(out["max_per_T"]),
                     "spread": out["spread"], "ok": out["ok"]})
        return EXIT_OK if out["ok"] else EXIT_VERIFY
    if kind == "lifespan":
        T_list = sw.get("T_list", [])
        if not T_list:
            raise ConfigError("sweep.T_list must be nonempty")
        scn = Scenario.from_dict(cfg.scenario)
        ctx = DispersionContext.build(scn.gamma, scn.delta)
        rows = lifespan_probe(ctx, scn, [float(T) for T in T_list],
                              **cfg.solver_options)
        path = os.path.join(cfg.out_dir, "lifespan.csv")
        with open(path, "w") as fh:
            fh.write("T,converged,ratio,iterations,lifespan_value\n")
            for row in rows:
                fh.write("%s,%d,%s,%d,%s\n"
                         % (_fmt(row["T"]), int(row["converged"]),
                            _fmt(row["ratio"]), row["iterations"],
                            _fmt(row["lifespan_value"])))
        _write_json(os.path.join(cfg.out_dir, "lifespan.json"),
                    {"config": cfg.resolved(), "rows": _jsonable(rows)})
        return EXIT_OK
    raise ConfigError("unknown sweep kind %r" % kind)


def _parser():
    p = argparse.ArgumentParser(
        prog="artifact",
        description="half-line dispersive solver and verification driver")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in (("solve", cmd_solve), ("verify", cmd_verify),
                     ("sweep", cmd_sweep)):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--jobs", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--tol-set", dest="tol_set", default=None,
                        choices=sorted(TOL_SETS))
        sp.set_defaults(fn=fn)
    return p


def main(argv=None):
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses exit 2 for usage errors already
        return int(exc.code or 0)
    try:
        cfg = RunConfig.from_file(args.config, args)
        return args.fn(cfg)
    except (ConfigError, ValueError, KeyError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except IncompatibleData as exc:
        print("incompatible data: %s" % exc, file=sys.stderr)
        return EXIT_VERIFY
    except ArtifactError as exc:
        print("solver error: %s" % exc, file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
