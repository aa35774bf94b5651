"""Command line harness: ``aga <subcommand> ...``.

Exit codes: 0 success, 1 operation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import almostrep as ar
from . import homotopy as hm
from . import invariants as inv
from .numerics import BranchCutError, NumericsError, matrix_from_json, matrix_to_json
from .presentation import BUILTINS, PresentationError, builtin_presentation, parse_presentation


class OperationError(RuntimeError):
    pass


class UsageError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# output helpers


def fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format(x, ".17g")
    if x is None:
        return ""
    return str(x)


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    raise TypeError(type(x))


def render(rows: list[dict], fmt_name: str) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    if fmt_name == "json":
        return json.dumps(rows if len(rows) > 1 else rows[0], indent=2, default=_json_default) + "\n"
    if fmt_name == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([fmt(r[c]) for c in cols])
        return buf.getvalue()
    cells = [[fmt(r[c]) if not isinstance(r[c], float) else format(r[c], ".10g") for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip()]
    for row in cells:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def out_dir(args) -> Path:
    if args.out:
        d = Path(args.out)
    else:
        d = Path("out") / f"{args.command}-{time.strftime('%Y%m%d-%H%M%S')}"
    d.mkdir(parents=True, exist_ok=True)
    return d


def require_seed(args):
    if args.seed is None:
        raise UsageError(f"'{args.command}' is randomized here: pass --seed")
    return args.seed


def read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise OperationError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise OperationError(f"{path}: invalid JSON: {exc}") from None


def read_matrix(path: str) -> np.ndarray:
    try:
        return matrix_from_json(read_json(path))
    except NumericsError as exc:
        raise OperationError(f"{path}: {exc}") from None


def dry_run(args, **resolved) -> int:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func",)}
    cfg.update(resolved)
    print(json.dumps(cfg, indent=2, sort_keys=True, default=str))
    return 0


# --------------------------------------------------------------------------
# subcommands


def cmd_parse(args) -> int:
    if args.builtin:
        p = builtin_presentation(args.builtin, args.param)
    elif args.file:
        try:
            text = Path(args.file).read_text()
        except OSError as exc:
            raise OperationError(f"cannot read {args.file}: {exc}") from None
        p = parse_presentation(text)
    else:
        raise UsageError("give a presentation file or --builtin")
    if args.dry_run:
        return dry_run(args)
    if args.format == "json":
        print(json.dumps({"name": p.name, "generators": list(p.generators),
                          "relators": [str(r) for r in p.relators], "text": p.to_text()}, indent=2))
    else:
        sys.stdout.write(p.to_text())
    return 0


def sweep_row(n: int) -> dict:
    rep = ar.voiculescu_family(n)
    a, c = rep["a"], rep["c"]
    try:
        w = inv.winding_number(a, c).value
    except BranchCutError:
        w = "undefined (branch cut)"
    lac, _ = inv.spectral_lacuna(a)
    return {
        "n": n,
        "defect": ar.max_defect(rep),
        "winding": w,
        "lacuna": lac,
        "halfplane_count": inv.halfplane_count(rep["b"]).count,
    }


def cmd_sweep(args) -> int:
    if not 2 <= args.n_min <= args.n_max <= 512:
        raise UsageError("need 2 <= n_min <= n_max <= 512")
    if args.dry_run:
        return dry_run(args)
    rows = [sweep_row(n) for n in range(args.n_min, args.n_max + 1)]
    text = render(rows, args.format)
    sys.stdout.write(text)
    if args.out:
        d = out_dir(args)
        (d / f"sweep.{ 'txt' if args.format == 'table' else args.format}").write_text(text)
    return 0


def _builtin_rep(args) -> ar.AlmostRep:
    kind = args.builtin
    if kind == "voiculescu":
        return ar.voiculescu_family(args.n)
    seed = require_seed(args)
    rng = np.random.default_rng(seed)
    if kind == "z2-perturbed":
        base = ar.random_commuting_rep(builtin_presentation("free_abelian", 2), args.n, rng)
        return ar.perturb(base, args.magnitude, seed)
    if kind == "surface-perturbed":
        base = ar.random_surface_rep(args.genus, args.n, rng)
        return ar.perturb_to_defect(base, args.eps, seed)
    raise UsageError(f"unknown builtin {kind!r}")


def _load_rep(args) -> ar.AlmostRep:
    if args.rep:
        try:
            return ar.rep_from_json(read_json(args.rep))
        except (KeyError, ValueError) as exc:
            raise OperationError(f"{args.rep}: {exc}") from None
    if args.builtin:
        return _builtin_rep(args)
    raise UsageError("give --rep FILE or --builtin")


def _write_trace(args, trace: hm.FlowTrace) -> Path:
    d = out_dir(args)
    (d / "trace.csv").write_text(trace.to_csv())
    (d / "trace.jsonl").write_text(trace.to_jsonl())
    return d


def cmd_flow(args) -> int:
    rep = _load_rep(args)
    cfg = hm.FlowConfig(
        budget=args.budget,
        tolerance=args.tolerance,
        stride=args.stride,
        track_invariants=not args.no_invariants,
        seed=args.seed if args.seed is not None else 0,
    )
    if args.dry_run:
        return dry_run(args, dimension=rep.dimension, presentation=rep.presentation.name)
    trace = hm.flow_minimize(rep, cfg)
    d = _write_trace(args, trace)
    summary = {
        "status": trace.status,
        "final_defect": trace.final.defect,
        "steps": trace.steps,
        "samples": len(trace.samples),
        "out": str(d),
    }
    inv_cols = trace.invariant_columns()
    for c in inv_cols:
        vals = {s.invariants.get(c) for s in trace.samples}
        summary[c] = next(iter(vals)) if len(vals) == 1 else "varies"
    sys.stdout.write(render([summary], args.format))
    return 0


def cmd_surface_reduce(args) -> int:
    rep = _load_rep(args)
    if args.dry_run:
        return dry_run(args, dimension=rep.dimension, initial_defect=ar.max_defect(rep))
    try:
        trace = hm.surface_reduce(rep, args.delta, hm.SurfaceConfig(seed=args.seed or 0))
    except hm.SurfaceReductionError as exc:
        raise OperationError(str(exc)) from None
    d = _write_trace(args, trace)
    eps = trace.samples[0].defect
    m = rep.presentation.rank // 2
    eye = np.eye(rep.dimension)
    end_dev = max(float(np.linalg.norm(trace.final.rep[f"{x}{i}"] - eye, 2))
                  for i in range(2, m + 1) for x in "ab")
    summary = {
        "initial_defect": eps,
        "max_trace_defect": float(trace.defects().max()),
        "final_defect": trace.final.defect,
        "reduced_handles_deviation": end_dev,
        "samples": len(trace.samples),
        "out": str(d),
    }
    sys.stdout.write(render([summary], args.format))
    return 0


def _load_c_path(path: str) -> list[np.ndarray]:
    obj = read_json(path)
    samples = obj["samples"] if isinstance(obj, dict) else obj
    try:
        return [matrix_from_json(m) for m in samples]
    except NumericsError as exc:
        raise OperationError(f"{path}: {exc}") from None


def cmd_lift(args) -> int:
    u = read_matrix(args.u)
    v = read_matrix(args.v)
    if args.c_path:
        cs = _load_c_path(args.c_path)
    elif args.geodesic:
        cs = hm.su_geodesic_to_identity(inv.commutator(u, v), args.geodesic)
    else:
        raise UsageError("give --c-path FILE or --geodesic SAMPLES")
    cfg = hm.LiftConfig(max_gap=args.max_gap, seed=args.seed or 0)
    try:
        hm.validate_c_path(cs, u, v, args.delta, cfg.max_gap)
    except hm.LiftError as exc:
        raise OperationError(str(exc)) from None
    if args.dry_run:
        return dry_run(args, samples=len(cs))
    res = hm.lift_commutator_path(u, v, cs, args.delta, cfg)
    d = out_dir(args)
    with open(d / "lift.jsonl", "w") as fh:
        for (t, ut, vt), r in zip(res.lifted_path, res.residuals):
            fh.write(json.dumps({"t": t, "residual": r, "u": matrix_to_json(ut), "v": matrix_to_json(vt)}) + "\n")
    summary = {"status": res.status, "max_residual": res.max_residual,
               "stalled_at": res.stalled_at, "samples": len(res.lifted_path), "out": str(d)}
    sys.stdout.write(render([summary], args.format))
    return 0 if res.success else 1


def cmd_winding(args) -> int:
    u = read_matrix(args.u)
    v = read_matrix(args.v)
    if args.dry_run:
        return dry_run(args, dimension=u.shape[0])
    try:
        rep = inv.winding_number(u, v)
    except BranchCutError as exc:
        raise OperationError(f"winding undefined: {exc}") from None
    except ValueError as exc:
        raise OperationError(str(exc)) from None
    if args.format == "table":
        print(rep.value)
    else:
        sys.stdout.write(render([rep.to_dict()], args.format))
    return 0


def cmd_obstruction(args) -> int:
    a = read_matrix(args.a)
    b = read_matrix(args.b)
    if args.dry_run:
        return dry_run(args, dimension=a.shape[0])
    try:
        report = inv.trace_obstruction(a, b, args.n_small, args.m_pad, args.eps_prime)
    except ValueError as exc:
        raise OperationError(str(exc)) from None
    sys.stdout.write(render([report.to_dict()], args.format))
    if args.format == "table":
        print(f"contradiction={fmt(report.contradiction)}")
    return 0


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--format", choices=("table", "csv", "json"), default="table")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--tolerance", type=float, default=1e-8)
    common.add_argument("--budget", type=int, default=10_000)
    common.add_argument("--dry-run", action="store_true")

    parser = argparse.ArgumentParser(prog="aga", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", parents=[common], help="validate a presentation file")
    p.add_argument("file", nargs="?")
    p.add_argument("--builtin", choices=sorted(BUILTINS))
    p.add_argument("--param", type=int, default=None)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("sweep-voiculescu", parents=[common], help="defect/winding/lacuna table")
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=32)
    p.set_defaults(func=cmd_sweep)

    def rep_source(p):
        p.add_argument("--rep", help="AlmostRep JSON file")
        p.add_argument("--builtin", choices=("voiculescu", "z2-perturbed", "surface-perturbed"))
        p.add_argument("--n", type=int, default=8)
        p.add_argument("--magnitude", type=float, default=0.2)
        p.add_argument("--genus", type=int, default=2)
        p.add_argument("--eps", type=float, default=0.05)

    p = sub.add_parser("flow", parents=[common], help="defect-minimizing flow")
    rep_source(p)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--no-invariants", action="store_true")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("surface-reduce", parents=[common], help="push handles 2..m to the identity")
    rep_source(p)
    p.add_argument("--delta", type=float, default=None)
    p.set_defaults(func=cmd_surface_reduce)

    p = sub.add_parser("lift", parents=[common], help="lift a path through the commutator map")
    p.add_argument("--u", required=True)
    p.add_argument("--v", required=True)
    p.add_argument("--c-path")
    p.add_argument("--geodesic", type=int, metavar="SAMPLES")
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--max-gap", type=float, default=0.1)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("winding", parents=[common], help="winding number of a pair")
    p.add_argument("u")
    p.add_argument("v")
    p.set_defaults(func=cmd_winding)

    p = sub.add_parser("obstruction", parents=[common], help="trace obstruction report")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--n-small", type=int, required=True)
    p.add_argument("--m-pad", type=int, required=True)
    p.add_argument("--eps-prime", type=float, required=True)
    p.set_defaults(func=cmd_obstruction)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (OperationError, PresentationError, NumericsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
