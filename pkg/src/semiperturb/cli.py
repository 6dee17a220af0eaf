"""Batch verification runs driven by a JSON config.

Usage::

    semiperturb --scenario metzler_random --seed 1 --out reports/
    semiperturb --config run.json --format both
    semiperturb --list [--json]

Exit status: 0 when every non-marginal verdict passes, 2 on any failing verdict, 3
on precision or hypothesis errors, 64 on usage errors, 74 when reports cannot be
written.
"""

import argparse
import csv
import datetime
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .errors import DivergenceError, HypothesisError, PrecisionError
from .scenarios import (
    DEFAULT_LAMBDA_OFFSETS,
    DEFAULT_T_GRID,
    random_positive_pair,
    scenario_delay,
    scenario_heat_drift,
    scenario_metzler_random,
    scenario_rank_one_Linfty,
    scenario_rank_one_Lp,
)
from .verifier import (
    StatementReport,
    check_corollary,
    check_extra_assumption,
    check_statement_a,
    check_statement_b,
    check_statement_c,
    check_strong_inequality,
    check_voc_identity,
    default_st_grid,
    smallest_C3,
)

EXIT_OK, EXIT_FAIL, EXIT_PRECISION, EXIT_USAGE, EXIT_IO = 0, 2, 3, 64, 74
FORMATS = {"json": ("json",), "csv": ("csv",), "both": ("json", "csv")}
VOLATILE_KEYS = ("generated_at", "tool_version")
CHECKS = ("a", "b", "c", "strong", "voc", "corollary")


class UsageError(Exception):
    pass


# -- scenario registry -----------------------------------------------------------

def _build_metzler(params, seed):
    return scenario_metzler_random(params.get("n", 4), seed, params.get("gap", 0.5))


def _build_heat(params, seed):
    return scenario_heat_drift(
        params.get("d", 1), params.get("extent", 4.0), params.get("nodes", 33),
        params.get("b", 1.0), params.get("t_ref", 0.1),
    )


def _pair_from(params, seed):
    n = params.get("n", 4)
    w, A_S, A_T = random_positive_pair(n, seed, params.get("omega", -0.5))
    w = np.asarray(params.get("weights", w), dtype=float)
    A_S = np.asarray(params.get("A_S", A_S), dtype=float)
    A_T = np.asarray(params.get("A_T", A_T), dtype=float)
    return w, A_S, A_T


def _build_linfty(params, seed):
    return scenario_rank_one_Linfty(*_pair_from(params, seed))


def _build_lp(params, seed):
    w, A_S, A_T = _pair_from(params, seed)
    f = params.get("f", np.ones(w.size))
    g = params.get("gprime", np.ones(w.size))
    return scenario_rank_one_Lp(params.get("p", 2.0), params.get("q", 2.0), f, g, A_S, A_T, w)


def _build_delay(params, seed):
    return scenario_delay(
        params.get("A0", [[-1.0]]), params.get("eta", 1.0), params.get("rho", 1.0),
        params.get("p", 2.0), params.get("q", 2.0), params.get("m", 20),
    )


# name -> (builder, parameter schema, default checks)
REGISTRY = {
    "metzler_random": (
        _build_metzler,
        {"n": "int in [2, 8] (default 4)", "gap": "float >= 0 (default 0.5)"},
        ("a", "b", "c"),
    ),
    "heat_drift": (
        _build_heat,
        {"d": "1 or 2 (default 1)", "extent": "float (default 4.0)",
         "nodes": "int >= 16 per axis (default 33)",
         "b": "float or list of nonnegative drift values (default 1.0)",
         "t_ref": "float (default 0.1)"},
        ("a", "b", "c"),
    ),
    "rank_one_Linfty": (
        _build_linfty,
        {"n": "int (default 4)", "omega": "float growth bound of the random pair (default -0.5)",
         "weights": "optional list", "A_S": "optional matrix", "A_T": "optional matrix"},
        ("a", "b", "c", "corollary"),
    ),
    "rank_one_Lp": (
        _build_lp,
        {"p": "float in [1, inf) (default 2)", "q": "float in [1, inf) (default 2)",
         "n": "int (default 4)", "f": "optional nonnegative list", "gprime": "optional nonnegative list",
         "weights": "optional list", "A_S": "optional matrix", "A_T": "optional matrix"},
        ("a", "b", "c"),
    ),
    "delay": (
        _build_delay,
        {"A0": "matrix (default [[-1]])", "eta": "float or list of m values (default 1.0)",
         "rho": "float or list of m values (default 1.0)", "p": "float (default 2)",
         "q": "float (default 2)", "m": "int >= 4 (default 20)"},
        ("a", "b", "c", "strong", "voc"),
    ),
}


def list_scenarios(as_json=False):
    """Registered builders with their parameter schemas."""
    entries = {name: {"params": schema, "default_checks": list(checks)}
               for name, (_, schema, checks) in sorted(REGISTRY.items())}
    if as_json:
        return json.dumps(entries, indent=2, sort_keys=True) + "\n"
    lines = []
    for name, entry in entries.items():
        lines.append(name)
        for key, desc in entry["params"].items():
            lines.append(f"    {key}: {desc}")
        lines.append(f"    checks: {', '.join(entry['default_checks'])}")
    return "\n".join(lines) + "\n"


# -- serialisation -----------------------------------------------------------

def _num17(x):
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps17(obj, indent=1, _level=0):
    """JSON text in which every float is written with 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(bool(obj) if obj is not None else None)
    if isinstance(obj, (float, np.floating)):
        return _num17(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return dumps17(obj.tolist(), indent, _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps17(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps17(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps17(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def statement_to_dict(report: StatementReport):
    d = report.summary()
    d["grid_kind"] = report.grid_kind
    d["grid"] = [list(g) if isinstance(g, tuple) else g for g in report.grid]
    d["slacks"] = report.slacks
    return d


def _grid_cell(g):
    if g is None:
        return ""
    if isinstance(g, tuple):
        return ":".join(repr(float(v)) for v in g)
    return repr(float(g))


def report_csv(statements):
    """CSV text: one row per (statement, grid point, x sample, v sample)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["statement", "t_or_lambda", "x_index", "vprime_index", "slack", "verdict"])
    for rep in statements:
        for stmt, g, i, j, s, verdict in rep.rows():
            writer.writerow([stmt, _grid_cell(g), i, j, repr(s), verdict])
    return buf.getvalue()


def report_json(document):
    return dumps17(document) + "\n"


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_report(document, statements, fmt, out_dir):
    """Write ``report.json`` and/or ``slacks.csv`` into ``out_dir``; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for kind in FORMATS[fmt] if fmt in FORMATS else (fmt,):
        if kind == "json":
            path = os.path.join(out_dir, "report.json")
            _atomic_write(path, report_json(document))
        elif kind == "csv":
            path = os.path.join(out_dir, "slacks.csv")
            _atomic_write(path, report_csv(statements))
        else:
            raise UsageError(f"unknown format {kind!r}")
        paths.append(path)
    return paths


def strip_volatile(document):
    """Copy of a report document without timestamp/version fields."""
    if isinstance(document, dict):
        return {k: strip_volatile(v) for k, v in document.items() if k not in VOLATILE_KEYS}
    if isinstance(document, list):
        return [strip_volatile(v) for v in document]
    return document


# -- running -------------------------------------------------------------------

def resolve_config(raw, args=None):
    """Merge a config document with command-line overrides and validate it."""
    cfg = dict(raw or {})
    if args is not None:
        for key, attr in (("scenario", "scenario"), ("seed", "seed"), ("tol", "tol"),
                          ("out", "out")):
            val = getattr(args, attr, None)
            if val is not None:
                cfg[key] = val
        if getattr(args, "format", None):
            cfg["formats"] = list(FORMATS[args.format])
        if getattr(args, "tmax", None) is not None:
            T = float(args.tmax)
            cfg["t_grid"] = [T / 20.0, T / 4.0, T / 2.0, T]
        if getattr(args, "lambda_max", None) is not None:
            L = float(args.lambda_max)
            cfg["lambda_offsets"] = [L / 10.0, L / 5.0, L / 2.0, L]
    name = cfg.get("scenario")
    if isinstance(name, dict):
        cfg.setdefault("params", name.get("params", {}))
        name = cfg["scenario"] = name.get("name")
    if not name:
        raise UsageError("no scenario selected (use --scenario NAME or a config file)")
    if name not in REGISTRY:
        raise UsageError(f"unknown scenario {name!r}; known: {', '.join(sorted(REGISTRY))}")
    cfg.setdefault("params", {})
    cfg.setdefault("seed", 0)
    cfg.setdefault("t_grid", list(DEFAULT_T_GRID))
    cfg.setdefault("lambda_offsets", list(DEFAULT_LAMBDA_OFFSETS))
    cfg.setdefault("formats", ["json"])
    cfg.setdefault("out", "reports")
    cfg.setdefault("checks", list(REGISTRY[name][2]))
    if not cfg["t_grid"] or not (cfg.get("lambda_grid") or cfg["lambda_offsets"]):
        raise UsageError("grids must be nonempty")
    if cfg.get("tol") is not None and not float(cfg["tol"]) > 0:
        raise UsageError("tol must be > 0")
    unknown = [c for c in cfg["checks"] if c not in CHECKS]
    if unknown:
        raise UsageError(f"unknown checks {unknown}; known: {', '.join(CHECKS)}")
    bad = [f for f in cfg["formats"] if f not in ("json", "csv")]
    if bad:
        raise UsageError(f"unknown output formats {bad}")
    return cfg


def execute(cfg):
    """Build the scenario and run the configured checks.

    Returns ``(document, statement_reports, exit_status)``.
    """
    builder = REGISTRY[cfg["scenario"]][0]
    seed = int(cfg["seed"])
    try:
        scn = builder(cfg["params"], seed)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid parameters for {cfg['scenario']!r}: {exc}") from exc
    tol = scn.tol if cfg.get("tol") is None else float(cfg["tol"])
    t_grid = [float(t) for t in cfg["t_grid"]]
    lambdas = [float(l) for l in cfg.get("lambda_grid") or
               [scn.omega + o for o in cfg["lambda_offsets"]]]

    statements, checks, errors = [], [], []
    status = EXIT_OK if scn.hypothesis_passed else EXIT_PRECISION
    if not scn.hypothesis_passed:
        errors.append("hypothesis battery failed")
    else:
        for name in cfg["checks"]:
            try:
                if name == "a":
                    statements.append(check_statement_a(scn, t_grid, tol))
                elif name == "b":
                    statements.append(check_statement_b(scn, lambdas, tol))
                elif name == "c":
                    statements.append(check_statement_c(scn, tol))
                elif name == "strong":
                    statements.append(check_strong_inequality(scn, t_grid, tol))
                elif name == "voc":
                    checks.append(check_voc_identity(scn, t_grid))
                elif name == "corollary":
                    M, om = 1.0, scn.omega
                    extra = check_extra_assumption(scn, M, om, default_st_grid(t_grid), tol)
                    statements.append(extra)
                    C3 = smallest_C3(scn)
                    statements.extend(check_corollary(
                        scn, M, om, M * C3, M * C3, C3, t_grid,
                        [l for l in lambdas if l > om], tol, extra=extra,
                    ))
            except (PrecisionError, HypothesisError, DivergenceError) as exc:
                errors.append(f"{name}: {exc}")
                status = EXIT_PRECISION

    if status == EXIT_OK:
        failed = any(r.verdict == "fail" for r in statements) or any(not c.passed for c in checks)
        status = EXIT_FAIL if failed else EXIT_OK

    decided = {r.statement: r.verdict for r in statements
               if r.statement in ("a", "b", "c") and r.verdict != "marginal"}
    document = {
        "tool": "semiperturb",
        "tool_version": __version__,
        "generated_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config": {k: cfg[k] for k in sorted(cfg) if k != "out"},
        "scenario": {
            "label": scn.label, "n": scn.n, "M": scn.M, "omega": scn.omega, "tol": tol,
            "meta": {k: v for k, v in scn.meta.items()
                     if isinstance(v, (bool, int, float, str, dict)) or v is None},
        },
        "hypothesis": [r.to_dict() for r in scn.hypothesis],
        "statements": [statement_to_dict(r) for r in statements],
        "checks": [c.to_dict() for c in checks],
        "equivalence": {"verdicts": decided, "agreement": len(set(decided.values())) <= 1},
        "errors": errors,
        "exit_status": status,
    }
    return document, statements, status


def run(cfg):
    """Execute a resolved config and persist its reports. Returns the exit status."""
    document, statements, status = execute(cfg)
    try:
        for fmt in cfg["formats"]:
            emit_report(document, statements, fmt, cfg["out"])
    except OSError as exc:
        print(f"semiperturb: cannot write reports to {cfg['out']!r}: {exc}", file=sys.stderr)
        return EXIT_IO
    return status


def _parser():
    p = argparse.ArgumentParser(
        prog="semiperturb",
        description="Verify tested perturbation inequalities for consistent semigroups.",
    )
    p.add_argument("--config", metavar="PATH", help="JSON run configuration")
    p.add_argument("--scenario", metavar="NAME", help="registered scenario builder")
    p.add_argument("--seed", type=int, metavar="N")
    p.add_argument("--tol", type=float, metavar="X")
    p.add_argument("--tmax", type=float, metavar="T", help="largest time of the t grid")
    p.add_argument("--lambda-max", type=float, metavar="L",
                   help="largest lambda offset above omega")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--format", choices=sorted(FORMATS))
    p.add_argument("--list", action="store_true", help="list scenario builders and exit")
    p.add_argument("--json", action="store_true", help="with --list: machine-readable output")
    return p


def main(argv=None):
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.list:
        sys.stdout.write(list_scenarios(args.json))
        return EXIT_OK
    raw = {}
    try:
        if args.config:
            try:
                with open(args.config) as fh:
                    raw = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise UsageError(f"cannot read config {args.config!r}: {exc}")
        cfg = resolve_config(raw, args)
        return run(cfg)
    except UsageError as exc:
        print(f"semiperturb: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
