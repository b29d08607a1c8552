"""Translation-class schemes, attractor point clouds and box-counting.

Attractor points are truncations f_w(0) of the infinite compositions along
tree words; the remaining tail is a geometric series, which gives every
cloud a certified truncation radius.  Box counting stands in for the
Hausdorff and packing dimensions throughout: the identities between the
three hold almost surely over tree and translation draws, so individual
seeds may stray and only aggregate statistics are meaningful.  Every
report carries that caveat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .codetree import (
    IfsFamily,
    NeckCodeTree,
    affine_products,
    sample_paths,
    sample_tree,
    validate_family,
    word_count,
)
from .errors import DepthError, DomainError, ResolutionError, SchemeError
from .netmeasure import DimensionEstimate, affinity_dim
from .pressure import ZeroBracket, pressure_zero
from .svf import AffineMap

SEED_CAVEAT = (
    "dimension equalities hold almost surely over tree and translation draws; "
    "individual seeds may deviate, compare aggregate statistics"
)


@dataclass(frozen=True, eq=False)
class TranslationScheme:
    """Assignment of every (label, map) pair to a translation class.

    Maps sharing a class share a translation vector; two maps of the same
    system must not share a class, so distinct branches stay distinct.
    """

    class_ids: dict[tuple[int, int], int]
    offsets: np.ndarray

    def __post_init__(self):
        offsets = np.array(self.offsets, dtype=float)
        if offsets.ndim != 2:
            raise SchemeError(f"offsets must be (classes, dim), got shape {offsets.shape}")
        offsets.setflags(write=False)
        object.__setattr__(self, "class_ids", dict(self.class_ids))
        object.__setattr__(self, "offsets", offsets)

    @property
    def n_classes(self) -> int:
        return self.offsets.shape[0]


def finest_classes(family: IfsFamily) -> dict[tuple[int, int], int]:
    """Every (label, map) pair gets its own translation class."""
    out: dict[tuple[int, int], int] = {}
    for lam, sys in enumerate(family.systems):
        for i in range(len(sys)):
            out[(lam, i)] = len(out)
    return out


def shared_index_classes(family: IfsFamily) -> dict[tuple[int, int], int]:
    """Maps with equal in-system index share a class across labels."""
    return {
        (lam, i): i
        for lam, sys in enumerate(family.systems)
        for i in range(len(sys))
    }


def _check_classes(family: IfsFamily, class_ids: Mapping[tuple[int, int], int]) -> int:
    for lam, sys in enumerate(family.systems):
        seen: dict[int, int] = {}
        for i in range(len(sys)):
            if (lam, i) not in class_ids:
                raise SchemeError(f"missing class for label {lam} map {i}")
            c = class_ids[(lam, i)]
            if c < 0:
                raise SchemeError(f"negative class id {c} for label {lam} map {i}")
            if c in seen:
                raise SchemeError(
                    f"label {lam}: maps {seen[c]} and {i} share class {c}"
                )
            seen[c] = i
    return max(class_ids.values()) + 1


def sample_translations(
    family: IfsFamily,
    class_ids: Mapping[tuple[int, int], int],
    box_halfwidth: float,
    seed: int,
) -> TranslationScheme:
    """Draw one translation per class, uniform on the centred cube; seeded."""
    n_classes = _check_classes(family, class_ids)
    if box_halfwidth < 0:
        raise DomainError(f"box halfwidth must be >= 0, got {box_halfwidth}")
    rng = np.random.default_rng(seed)
    offsets = rng.uniform(-box_halfwidth, box_halfwidth, size=(n_classes, family.dim))
    return TranslationScheme(dict(class_ids), offsets)


def apply_scheme(family: IfsFamily, scheme: TranslationScheme) -> IfsFamily:
    """Family with every translation replaced by its class representative."""
    _check_classes(family, scheme.class_ids)
    systems = tuple(
        tuple(
            AffineMap(f.linear, scheme.offsets[scheme.class_ids[(lam, i)]])
            for i, f in enumerate(sys)
        )
        for lam, sys in enumerate(family.systems)
    )
    bound = float(max(np.linalg.norm(scheme.offsets, axis=1), default=0.0)) if scheme.offsets.size else 0.0
    return IfsFamily(systems, family.sigma_lo, family.sigma_hi, bound)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Depth-k truncations of the attractor with their truncation radius."""

    points: np.ndarray
    depth: int
    error_radius: float


def generate_points(
    tree: NeckCodeTree,
    scheme: TranslationScheme,
    depth: int,
    max_points: int,
    seed: int,
) -> PointCloud:
    """Evaluate f_w(0) for all depth-``depth`` words, or a path sample.

    Exhaustive below ``max_points`` words, otherwise ``max_points`` paths by
    seeded uniform child descent.  Every returned point is within
    sigma_hi^depth * bound / (1 - sigma_hi) of a true attractor point (the
    geometric tail of the composition).
    """
    if depth < 0 or depth > tree.last_level:
        raise DepthError(f"depth {depth} outside materialised range [0, {tree.last_level}]")
    if max_points < 1:
        raise ValueError(f"max_points must be >= 1, got {max_points}")
    fam = apply_scheme(tree.family, scheme)
    sub = replace(tree, family=fam, _cache={})
    if word_count(sub, depth) <= max_points:
        _, points = affine_products(sub, depth)
    else:
        rng = np.random.default_rng(seed)
        _, _, points = sample_paths(sub, depth, max_points, rng, affine=True)
    bound = max(
        (float(np.linalg.norm(f.translation)) for sys in fam.systems for f in sys),
        default=0.0,
    )
    radius = fam.sigma_hi**depth * bound / (1.0 - fam.sigma_hi)
    return PointCloud(points, depth, radius)


@dataclass(frozen=True, eq=False)
class BoxCountResult:
    """Grid occupation counts over a ladder of scales and the fitted slope."""

    scales: np.ndarray
    counts: np.ndarray
    slope: float
    r2: float


def _occupied_boxes(points: np.ndarray, origin: np.ndarray, scale: float) -> int:
    idx = np.floor((points - origin) / scale).astype(np.int64)
    dims = idx.max(axis=0) - idx.min(axis=0) + 1
    keys = np.ravel_multi_index((idx - idx.min(axis=0)).T, dims)
    return int(np.unique(keys).size)


def box_dimension(
    cloud: PointCloud, scale_hi: float, scale_lo: float, n_scales: int
) -> BoxCountResult:
    """Least-squares slope of log box count against log(1/scale).

    Grids are axis-aligned with origin at the cloud's bounding-box corner,
    so identical inputs give identical counts.  Scales must stay at least
    twice the truncation radius, otherwise counts measure truncation noise.
    """
    if n_scales < 3:
        raise ValueError(f"need at least 3 scales, got {n_scales}")
    if not 0 < scale_lo < scale_hi:
        raise DomainError(f"need 0 < scale_lo < scale_hi, got ({scale_lo}, {scale_hi})")
    if scale_lo < 2.0 * cloud.error_radius:
        raise ResolutionError(
            f"scale_lo {scale_lo} below twice the truncation radius "
            f"{cloud.error_radius}; increase the depth or coarsen the scales"
        )
    points = np.asarray(cloud.points, dtype=float)
    origin = points.min(axis=0)
    scales = np.geomspace(scale_hi, scale_lo, n_scales)
    counts = np.array([_occupied_boxes(points, origin, sc) for sc in scales])
    x = np.log(1.0 / scales)
    y = np.log(counts.astype(float))
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    scales.setflags(write=False)
    counts.setflags(write=False)
    return BoxCountResult(scales, counts, float(slope), r2)


@dataclass(frozen=True)
class ExperimentReport:
    """Side-by-side dimension estimates for one sampled tree."""

    s0: ZeroBracket
    alpha: DimensionEstimate
    alpha_neck: DimensionEstimate
    box_rows: tuple[tuple[int, float, float], ...]  # (seed, slope, r2)
    boxdim_mean: float
    boxdim_std: float
    reference: float
    warnings: tuple[str, ...]
    caveat: str = SEED_CAVEAT


def dimension_experiment(cfg) -> ExperimentReport:
    """Run the full estimator stack of an :class:`~affdim.config.ExperimentConfig`.

    Pressure zero and both affinity estimates on the sampled tree, then a
    box-dimension estimate per translation seed, compared against
    min(s0, d).  A contraction bound of 1/2 or more voids the dimension
    identity, so it is flagged as a warning while the numbers still run.
    """
    warnings: list[str] = []
    report = validate_family(cfg.family)
    if not report.ok:
        warnings.extend(report.violations)
    if cfg.family.sigma_hi >= 0.5:
        warnings.append(
            f"sigma_hi = {cfg.family.sigma_hi} >= 1/2: dimension equality is not "
            "guaranteed; estimates are still computed"
        )
    tree = sample_tree(cfg.measure, cfg.tree.n_blocks, cfg.tree.seed)
    s0 = pressure_zero(tree, cfg.pressure.necks, cfg.pressure.tol, word_cap=cfg.pressure.word_cap)
    alpha = affinity_dim(tree, cfg.affinity.necks, cfg.affinity.tol, False)
    alpha_neck = affinity_dim(tree, cfg.affinity.necks, cfg.affinity.tol, True)
    at = cfg.attractor
    class_ids = resolve_classes(cfg.family, at.classes)
    rows = []
    for seed in translation_seeds(at.seed, at.seeds):
        scheme = sample_translations(cfg.family, class_ids, at.box_halfwidth, seed)
        cloud = generate_points(tree, scheme, at.depth, at.max_points, seed)
        box = box_dimension(cloud, at.scale_hi, at.scale_lo, at.n_scales)
        rows.append((seed, box.slope, box.r2))
    slopes = np.array([r[1] for r in rows])
    mean = float(np.mean(slopes))
    std = float(np.std(slopes, ddof=1)) if len(rows) > 1 else 0.0
    reference = min(s0.s0_hat, float(cfg.family.dim))
    return ExperimentReport(
        s0, alpha, alpha_neck, tuple(rows), mean, std, reference, tuple(warnings)
    )


def translation_seeds(first: int, count: int) -> list[int]:
    return [first + i for i in range(count)]


def resolve_classes(family: IfsFamily, spec) -> dict[tuple[int, int], int]:
    """Class map from a config value: "finest", "by_index" or explicit triples."""
    if spec == "finest":
        return finest_classes(family)
    if spec == "by_index":
        return shared_index_classes(family)
    if isinstance(spec, Mapping):
        return {tuple(k): v for k, v in spec.items()}
    if isinstance(spec, Sequence):
        return {(int(lam), int(i)): int(c) for lam, i, c in spec}
    raise SchemeError(f"unrecognised class specification: {spec!r}")


def write_points_csv(cloud: PointCloud, path, meta_lines: Sequence[str] = ()) -> None:
    """Point cloud as CSV: one point per row, columns x1..xd."""
    d = cloud.points.shape[1]
    lines = list(meta_lines)
    lines.append(",".join(f"x{i + 1}" for i in range(d)))
    for row in cloud.points:
        lines.append(",".join(repr(float(v)) for v in row))
    _write_lines(path, lines)


def write_boxcounts_csv(result: BoxCountResult, path, meta_lines: Sequence[str] = ()) -> None:
    """Box-count table as CSV with columns (scale, count)."""
    lines = list(meta_lines)
    lines.append("scale,count")
    for sc, ct in zip(result.scales, result.counts):
        lines.append(f"{float(sc)!r},{int(ct)}")
    _write_lines(path, lines)


def _write_lines(path, lines: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
