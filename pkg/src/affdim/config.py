"""Experiment configuration: JSON schema, parsing and validation.

One config file drives every CLI command.  Parsing either returns a fully
validated :class:`ExperimentConfig` or raises :class:`ConfigError` carrying
one precise message per offending field, so nothing downstream needs to
re-check inputs.  See the README for the schema.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .codetree import (
    BlockMeasure,
    BlockTemplate,
    IfsFamily,
    Word,
    check_block,
    uniform_block,
    validate_family,
)
from .errors import ConfigError
from .svf import AffineMap

MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class TreeParams:
    n_blocks: int
    seed: int


@dataclass(frozen=True)
class PressureParams:
    necks: int = 8
    tol: float = 1e-9
    s: float = 1.0
    word_cap: int = 2**24
    mc_samples: int | None = None


@dataclass(frozen=True)
class AffinityParams:
    necks: int = 8
    tol: float = 1e-3


@dataclass(frozen=True)
class CoverParams:
    s: float = 1.0
    min_depth: int = 1
    max_depth: int = 4
    neck_only: bool = False


@dataclass(frozen=True)
class DecomposeParams:
    horizon: int = 6
    window: int = 2
    s: float = 1.0


@dataclass(frozen=True)
class AttractorParams:
    depth: int = 8
    classes: object = "finest"
    box_halfwidth: float = 1.0
    max_points: int = 2**20
    scale_hi: float = 0.5
    scale_lo: float = 0.01
    n_scales: int = 10
    seed: int = 0
    seeds: int = 1


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    dim: int
    family: IfsFamily
    measure: BlockMeasure
    tree: TreeParams
    pressure: PressureParams = field(default_factory=PressureParams)
    affinity: AffinityParams = field(default_factory=AffinityParams)
    cover: CoverParams = field(default_factory=CoverParams)
    decompose: DecomposeParams = field(default_factory=DecomposeParams)
    attractor: AttractorParams = field(default_factory=AttractorParams)
    sha256: str = ""
    path: str = ""


class _Collector:
    def __init__(self):
        self.errors: list[str] = []

    def add(self, where: str, msg: str) -> None:
        self.errors.append(f"{where}: {msg}")

    def number(self, obj, where, lo=None, hi=None, integer=False):
        if not isinstance(obj, (int, float)) or isinstance(obj, bool):
            self.add(where, f"expected a number, got {obj!r}")
            return None
        if integer and int(obj) != obj:
            self.add(where, f"expected an integer, got {obj!r}")
            return None
        val = int(obj) if integer else float(obj)
        if lo is not None and val < lo:
            self.add(where, f"must be >= {lo}, got {val}")
            return None
        if hi is not None and val > hi:
            self.add(where, f"must be <= {hi}, got {val}")
            return None
        return val


def _parse_word(key: str, where: str, errs: _Collector) -> Word | None:
    if key == "":
        return ()
    try:
        return tuple(int(part) for part in key.split("."))
    except ValueError:
        errs.add(where, f"node path {key!r} is not dot-separated integers")
        return None


def _parse_family(obj, dim: int, errs: _Collector) -> IfsFamily | None:
    if not isinstance(obj, dict):
        errs.add("family", "expected an object")
        return None
    lo = errs.number(obj.get("sigma_lo"), "family.sigma_lo", lo=0.0)
    hi = errs.number(obj.get("sigma_hi"), "family.sigma_hi", lo=0.0)
    bound = errs.number(obj.get("trans_bound"), "family.trans_bound", lo=0.0)
    systems_obj = obj.get("systems")
    if not isinstance(systems_obj, list) or not systems_obj:
        errs.add("family.systems", "expected a non-empty array of systems")
        return None
    systems = []
    for lam, sys_obj in enumerate(systems_obj):
        where = f"family.systems[{lam}]"
        if not isinstance(sys_obj, list) or not sys_obj:
            errs.add(where, "expected a non-empty array of maps")
            return None
        maps = []
        for i, map_obj in enumerate(sys_obj):
            mwhere = f"{where}[{i}]"
            if not isinstance(map_obj, dict):
                errs.add(mwhere, "expected an object with linear/translation")
                return None
            lin = map_obj.get("linear")
            tr = map_obj.get("translation", [0.0] * dim)
            try:
                lin_arr = np.array(lin, dtype=float)
                tr_arr = np.array(tr, dtype=float)
            except (TypeError, ValueError):
                errs.add(mwhere, "linear/translation are not numeric arrays")
                return None
            if lin_arr.shape != (dim, dim):
                errs.add(mwhere, f"linear must be {dim}x{dim} row-major, got shape {lin_arr.shape}")
                return None
            if tr_arr.shape != (dim,):
                errs.add(mwhere, f"translation must have length {dim}, got shape {tr_arr.shape}")
                return None
            maps.append(AffineMap(lin_arr, tr_arr))
        systems.append(tuple(maps))
    if lo is None or hi is None or bound is None:
        return None
    family = IfsFamily(tuple(systems), lo, hi, bound)
    report = validate_family(family)
    for violation in report.violations:
        errs.add("family", violation)
    return family


def _parse_blocks(obj, family: IfsFamily, errs: _Collector) -> list[BlockTemplate]:
    if not isinstance(obj, list) or not obj:
        errs.add("blocks", "expected a non-empty array of block templates")
        return []
    out = []
    for i, block_obj in enumerate(obj):
        where = f"blocks[{i}]"
        if not isinstance(block_obj, dict):
            errs.add(where, "expected an object")
            continue
        depth = errs.number(block_obj.get("depth"), f"{where}.depth", lo=1, integer=True)
        if depth is None:
            continue
        if "nodes" in block_obj:
            nodes_obj = block_obj["nodes"]
            if not isinstance(nodes_obj, dict):
                errs.add(f"{where}.nodes", "expected an object of path -> label")
                continue
            labels: dict[Word, int] = {}
            bad = False
            for key, val in nodes_obj.items():
                word = _parse_word(str(key), f"{where}.nodes[{key!r}]", errs)
                lab = errs.number(val, f"{where}.nodes[{key!r}]", lo=0, integer=True)
                if word is None or lab is None:
                    bad = True
                    continue
                labels[word] = lab
            if bad:
                continue
            block = BlockTemplate(depth, labels)
            for msg in check_block(family, block):
                errs.add(where, msg)
            out.append(block)
        elif "label" in block_obj:
            lab = errs.number(block_obj["label"], f"{where}.label", lo=0, integer=True)
            if lab is None:
                continue
            if lab >= family.n_labels:
                errs.add(f"{where}.label", f"label {lab} outside family range")
                continue
            out.append(uniform_block(family, depth, lab))
        else:
            errs.add(where, "needs either a uniform 'label' or explicit 'nodes'")
    return out


def _parse_measure(obj, family, blocks, errs: _Collector) -> BlockMeasure | None:
    if not isinstance(obj, dict):
        errs.add("measure", "expected an object")
        return None
    idx_obj = obj.get("templates")
    weights_obj = obj.get("weights")
    if not isinstance(idx_obj, list) or not idx_obj:
        errs.add("measure.templates", "expected a non-empty array of block indices")
        return None
    if not isinstance(weights_obj, list) or len(weights_obj) != len(idx_obj):
        errs.add("measure.weights", "expected one weight per template")
        return None
    templates = []
    for j, raw in enumerate(idx_obj):
        idx = errs.number(raw, f"measure.templates[{j}]", lo=0, integer=True)
        if idx is None:
            return None
        if idx >= len(blocks):
            errs.add(f"measure.templates[{j}]", f"block index {idx} out of range")
            return None
        templates.append(blocks[idx])
    weights = []
    for j, raw in enumerate(weights_obj):
        w = errs.number(raw, f"measure.weights[{j}]", lo=0.0)
        if w is None:
            return None
        weights.append(w)
    if abs(sum(weights) - 1.0) > 1e-12:
        errs.add("measure.weights", f"weights must sum to 1, got {sum(weights)!r}")
        return None
    return BlockMeasure(family, tuple(templates), tuple(weights))


def _section(raw: dict, name: str, cls, errs: _Collector, specs: dict):
    """Build a params dataclass from an optional config section."""
    obj = raw.get(name, {})
    if not isinstance(obj, dict):
        errs.add(name, "expected an object")
        return cls()
    kwargs = {}
    for key, (kind, lo) in specs.items():
        if key not in obj:
            continue
        where = f"{name}.{key}"
        val = obj[key]
        if kind == "int":
            val = errs.number(val, where, lo=lo, integer=True)
        elif kind == "float":
            val = errs.number(val, where, lo=lo)
        elif kind == "posfloat":
            val = errs.number(val, where)
            if val is not None and val <= 0:
                errs.add(where, f"must be positive, got {val}")
                val = None
        elif kind == "bool":
            if not isinstance(val, bool):
                errs.add(where, f"expected a boolean, got {val!r}")
                val = None
        elif kind == "seed":
            val = errs.number(val, where, lo=0, hi=MAX_SEED, integer=True)
        if val is not None:
            kwargs[key] = val
    if name == "attractor" and "classes" in obj:
        kwargs["classes"] = obj["classes"]
    try:
        return cls(**kwargs)
    except TypeError as exc:
        errs.add(name, str(exc))
        return cls()


def parse_config(path: str) -> ExperimentConfig:
    """Read and fully validate a config file; raises ConfigError on any defect."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    errs = _Collector()
    dim = errs.number(raw.get("dim"), "dim", lo=1, hi=4, integer=True)
    if dim is None:
        raise ConfigError(errs.errors)
    family = _parse_family(raw.get("family"), dim, errs)
    if family is None:
        raise ConfigError(errs.errors)
    blocks = _parse_blocks(raw.get("blocks"), family, errs)
    measure = None
    if blocks and not errs.errors:
        measure = _parse_measure(raw.get("measure"), family, blocks, errs)
    tree_obj = raw.get("tree")
    tree = None
    if isinstance(tree_obj, dict):
        n_blocks = errs.number(tree_obj.get("n_blocks"), "tree.n_blocks", lo=1, integer=True)
        seed = errs.number(tree_obj.get("seed", 0), "tree.seed", lo=0, hi=MAX_SEED, integer=True)
        if n_blocks is not None and seed is not None:
            tree = TreeParams(n_blocks, seed)
    else:
        errs.add("tree", "expected an object with n_blocks and seed")
    pressure = _section(
        raw, "pressure", PressureParams, errs,
        {"necks": ("int", 1), "tol": ("posfloat", None), "s": ("float", 0.0),
         "word_cap": ("int", 1), "mc_samples": ("int", 1)},
    )
    affinity = _section(
        raw, "affinity", AffinityParams, errs,
        {"necks": ("int", 1), "tol": ("posfloat", None)},
    )
    cover = _section(
        raw, "cover", CoverParams, errs,
        {"s": ("float", 0.0), "min_depth": ("int", 0), "max_depth": ("int", 0),
         "neck_only": ("bool", None)},
    )
    decomp = _section(
        raw, "decompose", DecomposeParams, errs,
        {"horizon": ("int", 1), "window": ("int", 1), "s": ("float", 0.0)},
    )
    attr = _section(
        raw, "attractor", AttractorParams, errs,
        {"depth": ("int", 0), "box_halfwidth": ("float", 0.0), "max_points": ("int", 1),
         "scale_hi": ("posfloat", None), "scale_lo": ("posfloat", None),
         "n_scales": ("int", 3), "seed": ("seed", None), "seeds": ("int", 1)},
    )
    if errs.errors or measure is None or tree is None:
        raise ConfigError(errs.errors or ["incomplete configuration"])
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return ExperimentConfig(
        dim=dim, family=family, measure=measure, tree=tree, pressure=pressure,
        affinity=affinity, cover=cover, decompose=decomp, attractor=attr,
        sha256=digest, path=str(path),
    )
