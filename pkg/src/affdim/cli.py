"""Command line front end: config ingestion, dispatch, CSV/JSON reporting.

One config file per run, no prompts.  Identical config and seeds produce
byte-identical outputs: floats are serialised with repr (shortest
round-trip), JSON keys are sorted, and every artifact embeds the config
hash and tool version (as '#' header comments in CSV, as a "meta" object
in JSON).  Exit codes: 0 success, 1 validation failure, 2 infeasible at
the requested size.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import __version__
from .attractor import (
    box_dimension,
    dimension_experiment,
    generate_points,
    resolve_classes,
    sample_translations,
    write_boxcounts_csv,
    write_points_csv,
)
from .codetree import sample_tree, validate_family
from .config import ExperimentConfig, parse_config
from .decomposer import decompose, verify_star
from .errors import (
    AffdimError,
    ConfigError,
    DepthError,
    FeasibilityError,
    ResolutionError,
)
from .netmeasure import affinity_dim, best_cover
from .pressure import pressure_curve, pressure_zero

COMMANDS = (
    "validate",
    "pressure",
    "zero",
    "affinity",
    "cover",
    "decompose",
    "attractor",
    "experiment",
)


def _meta_lines(cfg: ExperimentConfig, params: dict) -> list[str]:
    parts = " ".join(f"{k}={v!r}" for k, v in sorted(params.items()))
    return [
        f"# affdim {__version__} config_sha256={cfg.sha256}",
        f"# {parts}" if parts else "#",
    ]


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def _json_text(cfg: ExperimentConfig, params: dict, payload: dict) -> str:
    doc = {
        "meta": {
            "tool_version": __version__,
            "config_sha256": cfg.sha256,
            "params": {k: v for k, v in sorted(params.items())},
        }
    }
    doc.update(payload)
    return json.dumps(doc, sort_keys=True, indent=2)


def _csv_text(cfg, params, header: list[str], rows: list[list]) -> str:
    lines = _meta_lines(cfg, params)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def _tree_of(cfg: ExperimentConfig):
    return sample_tree(cfg.measure, cfg.tree.n_blocks, cfg.tree.seed)


def _cmd_validate(cfg, args, out):
    report = validate_family(cfg.family)
    lines = ["ok"] if report.ok else list(report.violations)
    _emit("\n".join(lines), out)
    return 0 if report.ok else 1


def _cmd_pressure(cfg, args, out):
    p = cfg.pressure
    s = p.s if args.s is None else args.s
    necks = p.necks if args.necks is None else args.necks
    tree = _tree_of(cfg)
    curve = pressure_curve(
        tree, s, necks, word_cap=p.word_cap, mc_samples=p.mc_samples,
        seed=cfg.tree.seed,
    )
    rows = [
        [i + 1, e.level, e.s, e.log_sum, e.value] for i, e in enumerate(curve)
    ]
    text = _csv_text(
        cfg, {"s": s, "necks": necks, "tree_seed": cfg.tree.seed},
        ["neck_index", "level", "s", "log_partition_sum", "estimate"], rows,
    )
    _emit(text, out)
    return 0


def _cmd_zero(cfg, args, out):
    p = cfg.pressure
    tol = p.tol if args.tol is None else args.tol
    necks = p.necks if args.necks is None else args.necks
    tree = _tree_of(cfg)
    bracket = pressure_zero(tree, necks, tol, word_cap=p.word_cap)
    payload = {
        "s_lo": bracket.lo,
        "s_hi": bracket.hi,
        "s0_hat": bracket.s0_hat,
        "level": bracket.level,
    }
    _emit(_json_text(cfg, {"necks": necks, "tol": tol, "tree_seed": cfg.tree.seed}, payload), out)
    return 0


def _cmd_affinity(cfg, args, out):
    a = cfg.affinity
    tol = a.tol if args.tol is None else args.tol
    necks = a.necks if args.necks is None else args.necks
    tree = _tree_of(cfg)
    est = affinity_dim(tree, necks, tol, False)
    est_neck = affinity_dim(tree, necks, tol, True)

    def row(e):
        return {"s_lo": e.s_lo, "s_hi": e.s_hi, "s_hat": e.s_hat, "depth_necks": e.depth_used}

    payload = {"alpha": row(est), "alpha_neck": row(est_neck)}
    _emit(_json_text(cfg, {"necks": necks, "tol": tol, "tree_seed": cfg.tree.seed}, payload), out)
    return 0


def _cmd_cover(cfg, args, out):
    c = cfg.cover
    s = c.s if args.s is None else args.s
    tree = _tree_of(cfg)
    sol = best_cover(tree, s, c.min_depth, c.max_depth, c.neck_only)
    rows = [["-".join(str(sym) for sym in w), len(w)] for w in sol.nodes]
    params = {
        "s": s, "min_depth": c.min_depth, "max_depth": c.max_depth,
        "neck_only": c.neck_only, "log_cost": sol.log_cost, "tree_seed": cfg.tree.seed,
    }
    _emit(_csv_text(cfg, params, ["word", "depth"], rows), out)
    return 0


def _cmd_decompose(cfg, args, out):
    dc = cfg.decompose
    s = dc.s if args.s is None else args.s
    horizon = dc.horizon if args.necks is None else args.necks
    window = dc.window if args.window is None else args.window
    tree = _tree_of(cfg)
    result = decompose(tree, horizon, window, s)
    star = verify_star(tree, horizon, window, s, word_cap=cfg.pressure.word_cap)
    payload = {
        "horizon": horizon,
        "window": window,
        "s": s,
        "q_l": result.q_l,
        "non_member_fraction": result.non_member_fraction,
        "units": result.unit_counts(),
        "star": {"lhs": star.lhs, "rhs": star.rhs, "ok": star.ok},
    }
    _emit(_json_text(cfg, {"tree_seed": cfg.tree.seed}, payload), out)
    return 0


def _cmd_attractor(cfg, args, out):
    at = cfg.attractor
    depth = at.depth if args.depth is None else args.depth
    seed = at.seed if args.seed is None else args.seed
    tree = _tree_of(cfg)
    class_ids = resolve_classes(cfg.family, at.classes)
    scheme = sample_translations(cfg.family, class_ids, at.box_halfwidth, seed)
    cloud = generate_points(tree, scheme, depth, at.max_points, seed)
    params = {"depth": depth, "seed": seed, "tree_seed": cfg.tree.seed}
    meta = _meta_lines(cfg, params)
    if out is None:
        raise ConfigError("attractor needs --out PATH for the points CSV")
    write_points_csv(cloud, out, meta)
    boxes = box_dimension(cloud, at.scale_hi, at.scale_lo, at.n_scales)
    write_boxcounts_csv(boxes, f"{out}.boxcounts.csv", meta)
    return 0


def _cmd_experiment(cfg, args, out):
    at = cfg.attractor
    if args.seeds is not None:
        cfg = dataclasses.replace(cfg, attractor=dataclasses.replace(at, seeds=args.seeds))
    report = dimension_experiment(cfg)
    rows = [
        [seed, report.s0.s0_hat, report.alpha.s_hat, report.alpha_neck.s_hat, slope]
        for seed, slope, _ in report.box_rows
    ]
    params = {
        "tree_seed": cfg.tree.seed,
        "boxdim_mean": report.boxdim_mean,
        "boxdim_std": report.boxdim_std,
        "reference_min_s0_d": report.reference,
        "caveat": report.caveat,
    }
    for i, w in enumerate(report.warnings):
        params[f"warning_{i}"] = w
    text = _csv_text(
        cfg, params,
        ["seed", "s0_hat", "alpha_hat", "alpha_neck_hat", "boxdim_hat"], rows,
    )
    _emit(text, out)
    return 0


_HANDLERS = {
    "validate": _cmd_validate,
    "pressure": _cmd_pressure,
    "zero": _cmd_zero,
    "affinity": _cmd_affinity,
    "cover": _cmd_cover,
    "decompose": _cmd_decompose,
    "attractor": _cmd_attractor,
    "experiment": _cmd_experiment,
}


def run(command: str, cfg: ExperimentConfig, args=None, out: str | None = None) -> int:
    """Execute one command against a parsed config; returns the exit code."""
    if args is None:
        args = argparse.Namespace(
            s=None, tol=None, necks=None, window=None, depth=None, seed=None,
            seeds=None,
        )
    try:
        return _HANDLERS[command](cfg, args, out)
    except (FeasibilityError, DepthError, ResolutionError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        for line in exc.errors:
            print(line, file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="affdim",
        description="pressure, cover-measure and box-dimension estimators "
        "for random affine code-tree fractals",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="path to the JSON experiment config")
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--seed", type=int, default=None, help="translation seed override")
        p.add_argument("--seeds", type=int, default=None, help="number of translation seeds")
        p.add_argument("--depth", type=int, default=None, help="tree depth override")
        p.add_argument("--necks", type=int, default=None, help="neck count override")
        p.add_argument("--window", type=int, default=None, help="cover window override")
        p.add_argument("--s", type=float, default=None, help="exponent override")
        p.add_argument("--tol", type=float, default=None, help="tolerance override")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        for line in exc.errors:
            print(line, file=sys.stderr)
        return 1
    try:
        return run(args.command, cfg, args, args.out)
    except AffdimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
