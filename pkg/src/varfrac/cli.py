"""Command-line entry point.

Exit status: 0 when every check in scope passes, 1 on a validation failure,
2 when the config cannot be parsed, 3 on a numerical failure.  A report is
written in every case.

Heavy modules are imported after argument parsing so ``--threads`` can set
the BLAS thread count before numpy loads.
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from pathlib import Path

EXIT_OK, EXIT_INVALID, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

COMMANDS = ("validate-kernel", "norm", "seminorm", "compare-spaces", "embedding-scan",
            "operator-probe", "solve", "solve-kirchhoff", "properties")


# -- serialization -----------------------------------------------------------

def fmt_float(x: float) -> str:
    """17 significant digits, which round-trips every double."""
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    return format(x, ".17g")


def to_json(obj, indent=2, _level=0) -> str:
    """Deterministic JSON; the stdlib encoder cannot fix the float format."""
    import json

    import numpy as np

    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, np.generic):
        obj = obj.item()
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    return json.dumps(str(obj))


def _cell(v):
    return fmt_float(float(v)).strip('"') if isinstance(v, float) else str(v)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def write_solution(path: Path, u):
    g = u.grid
    header = ["node"] + [f"x{k + 1}" for k in range(g.dim)] + ["value"]
    rows = ([k, *map(float, g.nodes[k]), float(u.values[k])] for k in range(g.n))
    write_csv(path, header, rows)


# -- commands -----------------------------------------------------------------

class Context:
    """Objects shared by the commands, built lazily from the config."""

    def __init__(self, cfg, args):
        self.cfg = cfg
        self.args = args
        self.out = Path(args.out) if args.out else cfg.out_dir
        self.samples_rows = None
        self.samples_header = None
        self.solution = None

    def setup(self):
        g = self.cfg.grid()
        p = self.cfg.exponent(g)
        return g, p, self.cfg.kernel(p)

    def samples(self, header, rows):
        self.samples_header = header
        self.samples_rows = list(rows)


def cmd_validate_kernel(ctx):
    from .kernel import validate_kernel

    g, p, K = ctx.setup()
    rep = validate_kernel(K, p)
    rep["exponent"] = p.report()
    return rep, rep["passed"]


def cmd_norm(ctx):
    from .lebesgue import check_modular_norm_relations, luxemburg_norm, modular_lebesgue
    from .sobolev import full_norm, gagliardo_seminorm

    g, p, K = ctx.setup()
    u = ctx.cfg.function(g)
    if ctx.args.space == "lebesgue":
        q = ctx.cfg.lebesgue_exponent(p)
        rep = {"space": "lebesgue", "exponent": q.name, "norm": luxemburg_norm(u, q),
               "modular": modular_lebesgue(u, q)}
        if u.max_abs() > 0:
            rel = check_modular_norm_relations(u, q, ctx.cfg.tol("checks"))
            rep["relations"] = rel
            return rep, rel["passed"]
        return rep, True
    rep = {"space": "sobolev", "kernel": K.name, "exponent": p.report(),
           "norm": full_norm(u, K, p), "seminorm": gagliardo_seminorm(u, K, p).seminorm}
    return rep, True


def cmd_seminorm(ctx):
    from .sobolev import (check_modular_seminorm_relations, fractional_seminorm,
                          gagliardo_modular, gagliardo_seminorm)

    g, p, K = ctx.setup()
    u = ctx.cfg.function(g)
    res = gagliardo_seminorm(u, K, p)
    rep = {"kernel": K.name, "exponent": p.report(), "seminorm": res.seminorm,
           "modular": gagliardo_modular(u, K, p), "modular_at_unit": res.modular_at_unit,
           "bisection_iterations": res.iterations,
           "fractional_seminorm_omega": fractional_seminorm(u, p)}
    ok = True
    if res.seminorm > 0:
        rel = check_modular_seminorm_relations(u, K, p, ctx.cfg.tol("checks"))
        rep["relations"] = rel
        ok = rel["passed"]
    return rep, ok


def cmd_compare_spaces(ctx):
    from .lebesgue import random_bump_function
    from .sobolev import compare_spaces

    g, p, K = ctx.setup()
    rng = ctx.cfg.rng()
    rows = []
    for k in range(ctx.cfg.samples):
        sem_s, sem_k, kt = compare_spaces(random_bump_function(g, rng), K, p)
        rows.append([k, sem_s, sem_k, kt, sem_s <= kt * sem_k * (1 + 1e-12)])
    ctx.samples(["sample", "seminorm_s", "seminorm_K", "ktilde", "holds"], rows)
    bad = sum(not r[-1] for r in rows)
    rep = {"kernel": K.name, "k0": K.k0, "ktilde": rows[0][3] if rows else None,
           "samples": len(rows), "violations": bad,
           "max_ratio": max((r[1] / (r[3] * r[2]) for r in rows), default=None)}
    return rep, bad == 0


def cmd_embedding_scan(ctx):
    from .exponent import critical_exponent, scalar_from_spec
    from .lebesgue import random_bump_function
    from .sobolev import ZERO_INPUT, embedding_ratio

    g, p, K = ctx.setup()
    pstar = critical_exponent(p)
    rng = ctx.cfg.rng()
    rs = [scalar_from_spec(r, g) for r in ctx.cfg.raw["embedding"]["r"]]
    funcs = [random_bump_function(g, rng) for _ in range(ctx.cfg.samples)]
    rows, per_r = [], []
    for r in rs:
        admissible = bool(r.q_plus < pstar.q_minus or
                          (r.values[g.omega_index] < pstar.values[g.omega_index]).all())
        if not admissible:
            per_r.append({"r": r.name, "admissible": False})
            continue
        ratios = []
        for k, u in enumerate(funcs):
            val = embedding_ratio(u, r, K, p)
            rows.append([r.name, k, "" if val == ZERO_INPUT else val])
            if val != ZERO_INPUT:
                ratios.append(val)
        per_r.append({"r": r.name, "admissible": True, "max_ratio": max(ratios),
                      "finite": all(math.isfinite(x) for x in ratios)})
    ctx.samples(["r", "sample", "ratio"], rows)
    rep = {"critical_min": pstar.q_minus, "critical_max": pstar.q_plus, "scan": per_r}
    ok = all(e.get("finite", True) for e in per_r)
    return rep, ok


def cmd_operator_probe(ctx):
    from .lebesgue import random_bump_function
    from .operator import (apply_weak, boundedness_probe, coercivity_probe,
                           monotonicity_probe, weak_operator)
    from .sobolev import gagliardo_modular

    g, p, K = ctx.setup()
    rng = ctx.cfg.rng()
    L = weak_operator(K, p)
    rows = []
    for k in range(ctx.cfg.samples):
        u = random_bump_function(g, rng, amplitude=float(rng.uniform(0.1, 5)))
        v = random_bump_function(g, rng)
        rho = gagliardo_modular(u, K, p)
        rows.append([k, abs(apply_weak(L, u, u) - rho) / rho, monotonicity_probe(u, v, K, p),
                     coercivity_probe(u, K, p)["passed"], boundedness_probe(u, v, K, p)["passed"]])
    ctx.samples(["sample", "identity_rel_error", "monotonicity", "coercive", "bounded"], rows)
    rep = {
        "samples": len(rows),
        "identity_max_rel_error": max(r[1] for r in rows),
        "monotonicity_min": min(r[2] for r in rows),
        "coercivity_failures": sum(not r[3] for r in rows),
        "boundedness_failures": sum(not r[4] for r in rows),
    }
    ok = (rep["identity_max_rel_error"] <= 1e-12 and rep["monotonicity_min"] > 0
          and rep["coercivity_failures"] == 0 and rep["boundedness_failures"] == 0)
    return rep, ok


def cmd_solve(ctx):
    from .solver import solve_dirichlet

    g, p, K = ctx.setup()
    tol = ctx.args.tol if ctx.args.tol is not None else ctx.cfg.tol("dirichlet")
    rep = solve_dirichlet(ctx.cfg.source(g), K, p, tol=tol, seed=ctx.cfg.rng_seed())
    ctx.solution = rep.solution
    ctx.samples(["iteration", "energy"], enumerate(rep.history))
    out = {"tol": tol, **rep.summary()}
    return out, rep.residual <= tol and rep.agreement <= 10 * tol


def cmd_solve_kirchhoff(ctx):
    from .solver import (mountain_pass_geometry, ps_boundedness_probe, solve_kirchhoff,
                         validate_kirchhoff)

    g, p, K = ctx.setup()
    tol = ctx.args.tol if ctx.args.tol is not None else ctx.cfg.tol("kirchhoff")
    data = ctx.cfg.kirchhoff(g)
    seed = ctx.cfg.rng_seed()
    val = validate_kirchhoff(data, p)
    rep = {"tol": tol, "hypotheses": val}
    if not val["ok"]:
        rep["error"] = f"hypotheses violated: {val['violations']}"
        return rep, False
    geo = mountain_pass_geometry(data, K, p, seed=seed)
    rep["geometry"] = geo.summary()
    if not geo.found:
        rep["error"] = f"mountain-pass geometry not found: {geo.reason}"
        return rep, False
    sol = solve_kirchhoff(data, K, p, tol=tol, seed=seed, geometry=geo)
    ctx.solution = sol.solution
    summary = sol.summary()
    norms = summary.pop("iterate_seminorms")
    ctx.samples(["iterate", "seminorm"], enumerate(norms))
    rep["solve"] = summary
    rep["palais_smale"] = ps_boundedness_probe(data, K, p, sol.iterates)
    ok = sol.residual <= tol and summary["nontrivial"]
    return rep, ok


def cmd_properties(ctx):
    from .properties import run_properties

    entries = run_properties(ctx.cfg, ctx.cfg.rng_seed())
    failed = [e["name"] for e in entries if not e["passed"]]
    return {"invariants": entries, "failed": failed, "count": len(entries)}, not failed


HANDLERS = {
    "validate-kernel": cmd_validate_kernel,
    "norm": cmd_norm,
    "seminorm": cmd_seminorm,
    "compare-spaces": cmd_compare_spaces,
    "embedding-scan": cmd_embedding_scan,
    "operator-probe": cmd_operator_probe,
    "solve": cmd_solve,
    "solve-kirchhoff": cmd_solve_kirchhoff,
    "properties": cmd_properties,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="varfrac", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="YAML run configuration")
        sp.add_argument("--seed", type=int, help="overrides the config seed")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--threads", type=int, default=0, help="BLAS threads (0 = auto)")
        sp.add_argument("--tol", type=float, help="solver tolerance")
        if name == "norm":
            sp.add_argument("--space", choices=("lebesgue", "sobolev"), default="lebesgue")
    return parser


def _write_outputs(ctx, out_dir: Path, report):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(to_json(report) + "\n")
    if ctx is None:
        return
    if ctx.solution is not None:
        write_solution(out_dir / "solution.csv", ctx.solution)
    if ctx.samples_rows is not None:
        write_csv(out_dir / "samples.csv", ctx.samples_header, ctx.samples_rows)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads and args.threads > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)

    from numpy.linalg import LinAlgError

    from .config import ConfigError, load_config
    from .errors import ConvergenceError, DomainError, ExponentError, KernelError, X0Error
    from .expr import ExpressionError

    head = {"command": args.command}
    out_dir = Path(args.out) if args.out else Path("out")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.raw["seed"] = args.seed
        if not args.out:
            out_dir = cfg.out_dir
        head["seed"] = cfg.seed
    except (ConfigError, ExpressionError) as exc:
        _write_outputs(None, out_dir, {**head, "status": "config-error", "error": str(exc)})
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    ctx = Context(cfg, args)
    try:
        body, ok = HANDLERS[args.command](ctx)
    except (ConfigError, ExpressionError, KeyError, TypeError) as exc:
        report = {**head, "status": "config-error", "error": f"{type(exc).__name__}: {exc}"}
        code = EXIT_CONFIG
    except (DomainError, ExponentError, KernelError, X0Error, ValueError) as exc:
        report = {**head, "status": "invalid", "error": f"{type(exc).__name__}: {exc}"}
        code = EXIT_INVALID
    except (ConvergenceError, LinAlgError, FloatingPointError, ArithmeticError) as exc:
        report = {**head, "status": "numerical-failure", "error": f"{type(exc).__name__}: {exc}"}
        code = EXIT_NUMERIC
    else:
        report = {**head, "status": "pass" if ok else "fail", **body}
        code = EXIT_OK if ok else EXIT_INVALID
    _write_outputs(ctx, out_dir, report)
    print(f"{args.command}: {report['status']} -> {out_dir / 'report.json'}")
    if code != EXIT_OK and "error" in report:
        print(report["error"], file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
