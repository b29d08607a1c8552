"""Families of affine iterated function systems and neck code trees.

A code tree assigns one system of the family to every node; a node labelled
``lam`` has exactly as many children as the system ``lam`` has maps.  A neck
is a depth at which all subtrees rooted there are identical.  This module
enforces that homogeneity by construction: the labels between consecutive
necks come from a single :class:`BlockTemplate` shared by every node at the
top of the stratum, so illegal (inhomogeneous) states are unrepresentable.

Trees, families and templates are immutable after construction.  The
per-object caches are append-only, and enumeration is deterministic
(lexicographic in the child indices), so concurrent readers are safe.

The tree's random source is a concrete block measure: templates drawn
i.i.d. per stratum.  An i.i.d. draw is invariant and ergodic under the
neck shift and has finite expected first-neck depth, which is everything
the downstream estimators require; Markov or otherwise correlated block
sequences would slot in behind :func:`sample_tree` but are not provided.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DepthError, EmptyShiftError
from .svf import TOL, AffineMap, batched_singular_values

Word = tuple[int, ...]


@dataclass(frozen=True, eq=False)
class IfsFamily:
    """Finite labelled collection of affine systems with uniform bounds.

    ``sigma_lo``/``sigma_hi`` bound every singular value of every linear
    part, ``trans_bound`` bounds every translation norm.  The bounds are
    declared, not derived; :func:`validate_family` checks them.
    """

    systems: tuple[tuple[AffineMap, ...], ...]
    sigma_lo: float
    sigma_hi: float
    trans_bound: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        systems = tuple(tuple(sys) for sys in self.systems)
        if not systems:
            raise ConfigError("family must contain at least one system")
        dims = {f.dim for sys in systems for f in sys}
        if len(dims) > 1:
            raise ConfigError(f"systems mix ambient dimensions: {sorted(dims)}")
        object.__setattr__(self, "systems", systems)

    @property
    def dim(self) -> int:
        return self.systems[0][0].dim

    @property
    def n_labels(self) -> int:
        return len(self.systems)

    @property
    def max_branch(self) -> int:
        return max(len(sys) for sys in self.systems)

    @property
    def branch_counts(self) -> np.ndarray:
        if "branch_counts" not in self._cache:
            counts = np.array([len(sys) for sys in self.systems], dtype=np.intp)
            counts.setflags(write=False)
            self._cache["branch_counts"] = counts
        return self._cache["branch_counts"]

    def padded_maps(self) -> tuple[np.ndarray, np.ndarray]:
        """(n_labels, max_branch, d, d) linear and (..., d) translation stacks."""
        if "padded" not in self._cache:
            d = self.dim
            lin = np.zeros((self.n_labels, self.max_branch, d, d))
            tr = np.zeros((self.n_labels, self.max_branch, d))
            for lam, sys in enumerate(self.systems):
                for i, f in enumerate(sys):
                    lin[lam, i] = f.linear
                    tr[lam, i] = f.translation
            lin.setflags(write=False)
            tr.setflags(write=False)
            self._cache["padded"] = (lin, tr)
        return self._cache["padded"]


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def _leq(a: float, b: float) -> bool:
    return a <= b + 1e-9 * max(1.0, abs(b))


def validate_family(family: IfsFamily) -> ValidationReport:
    """Check the declared uniform bounds map by map.

    Violations are report entries, never exceptions, so invalid candidate
    families can be inspected.
    """
    v: list[str] = []
    if not (0.0 < family.sigma_lo <= family.sigma_hi < 1.0):
        v.append(
            f"singular value bounds must satisfy 0 < lo <= hi < 1, got "
            f"({family.sigma_lo}, {family.sigma_hi})"
        )
    if not (np.isfinite(family.trans_bound) and family.trans_bound >= 0):
        v.append(f"translation bound must be finite and >= 0, got {family.trans_bound}")
    for lam, sys in enumerate(family.systems):
        if not sys:
            v.append(f"label {lam}: system has no maps")
            continue
        for i, f in enumerate(sys):
            det = abs(float(np.linalg.det(f.linear)))
            if det <= TOL.singular_det:
                v.append(f"label {lam} map {i}: linear part is not a non-singular mapping")
                continue
            sig = batched_singular_values(f.linear)
            if not _leq(float(sig[0]), family.sigma_hi):
                v.append(
                    f"label {lam} map {i}: top singular value {sig[0]:.6g} exceeds "
                    f"sigma_hi {family.sigma_hi}"
                )
            if not _leq(family.sigma_lo, float(sig[-1])):
                v.append(
                    f"label {lam} map {i}: least singular value {sig[-1]:.6g} below "
                    f"sigma_lo {family.sigma_lo}"
                )
            norm = float(np.linalg.norm(f.translation))
            if not _leq(norm, family.trans_bound):
                v.append(
                    f"label {lam} map {i}: translation norm {norm:.6g} exceeds "
                    f"bound {family.trans_bound}"
                )
    return ValidationReport(tuple(v))


@dataclass(frozen=True, eq=False)
class BlockTemplate:
    """Labels of one inter-neck stratum.

    ``labels`` assigns a family label to every node of relative depth
    < ``depth``; a node labelled ``lam`` has exactly as many children as
    system ``lam`` has maps.  Nodes at relative depth == ``depth`` are the
    stratum's leaves and take their labels from the next block.
    """

    depth: int
    labels: dict[Word, int]

    def __post_init__(self):
        if self.depth < 1:
            raise ConfigError(f"block depth must be >= 1, got {self.depth}")
        object.__setattr__(
            self, "labels", {tuple(k): int(v) for k, v in self.labels.items()}
        )


def uniform_block(family: IfsFamily, depth: int, label: int) -> BlockTemplate:
    """Template assigning a single label to every node of the stratum."""
    if not 0 <= label < family.n_labels:
        raise ConfigError(f"label {label} outside family range 0..{family.n_labels - 1}")
    labels: dict[Word, int] = {}
    frontier: list[Word] = [()]
    for _ in range(depth):
        nxt: list[Word] = []
        for w in frontier:
            labels[w] = label
            nxt.extend(w + (i,) for i in range(len(family.systems[label])))
        frontier = nxt
    return BlockTemplate(depth, labels)


def check_block(family: IfsFamily, block: BlockTemplate) -> list[str]:
    """Structural errors of a template against a family; empty when legal."""
    errors: list[str] = []
    seen: set[Word] = set()
    frontier: list[Word] = [()]
    for _ in range(block.depth):
        nxt: list[Word] = []
        for w in frontier:
            if w not in block.labels:
                errors.append(f"node {w} of depth {len(w)} has no label")
                continue
            seen.add(w)
            lam = block.labels[w]
            if not 0 <= lam < family.n_labels:
                errors.append(f"node {w}: label {lam} outside family range")
                continue
            nxt.extend(w + (i,) for i in range(len(family.systems[lam])))
        frontier = nxt
    extra = set(block.labels) - seen
    if extra:
        errors.append(f"labels present for nodes outside the template: {sorted(extra)[:3]}")
    return errors


@dataclass(frozen=True, eq=False)
class BlockMeasure:
    """i.i.d. block measure: a finite set of templates with draw weights."""

    family: IfsFamily
    templates: tuple[BlockTemplate, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        templates = tuple(self.templates)
        weights = tuple(float(w) for w in self.weights)
        if not templates:
            raise ConfigError("block measure needs at least one template")
        if len(weights) != len(templates):
            raise ConfigError(
                f"{len(weights)} weights for {len(templates)} templates"
            )
        if any(w < 0 for w in weights):
            raise ConfigError("weights must be non-negative")
        total = sum(weights)
        if abs(total - 1.0) > 1e-12:
            raise ConfigError(f"weights must sum to 1, got {total!r}")
        errors = [
            f"template {i}: {msg}"
            for i, t in enumerate(templates)
            for msg in check_block(self.family, t)
        ]
        if errors:
            raise ConfigError(errors)
        object.__setattr__(self, "templates", templates)
        object.__setattr__(self, "weights", weights)


@dataclass(frozen=True, eq=False)
class NeckCodeTree:
    """A finite neck code tree: family plus one template per stratum."""

    family: IfsFamily
    blocks: tuple[BlockTemplate, ...]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise ConfigError("tree needs at least one block")
        errors = [
            f"block {i}: {msg}"
            for i, b in enumerate(blocks)
            for msg in check_block(self.family, b)
        ]
        if errors:
            raise ConfigError(errors)
        object.__setattr__(self, "blocks", blocks)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def necks(self) -> tuple[int, ...]:
        if "necks" not in self._cache:
            depths = np.cumsum([b.depth for b in self.blocks])
            self._cache["necks"] = tuple(int(x) for x in depths)
        return self._cache["necks"]

    @property
    def last_level(self) -> int:
        return self.necks[-1]

    def block_coords(self, level: int) -> tuple[int, int]:
        """(block index, relative depth) of tree level ``level`` < last_level."""
        if not 0 <= level < self.last_level:
            raise DepthError(f"level {level} outside materialised range [0, {self.last_level})")
        bi = bisect.bisect_right(self.necks, level)
        base = self.necks[bi - 1] if bi else 0
        return bi, level - base

    def label_at(self, word: Word) -> int:
        bi, rel = self.block_coords(len(word))
        base = len(word) - rel
        try:
            return self.blocks[bi].labels[tuple(word[base:])]
        except KeyError:
            raise ConfigError(f"word {word} is not a node of this tree") from None

    def branching_at(self, word: Word) -> int:
        return len(self.family.systems[self.label_at(word)])

    def is_word(self, word: Word) -> bool:
        if len(word) > self.last_level:
            return False
        for k in range(len(word)):
            prefix = tuple(word[:k])
            try:
                branch = self.branching_at(prefix)
            except ConfigError:
                return False
            if not 0 <= word[k] < branch:
                return False
        return True

    # -- per-block caches -------------------------------------------------

    def _block_words(self, bi: int, rel: int) -> list[Word]:
        """Relative words of length ``rel`` inside block ``bi``, lex order."""
        key = ("bwords", id(self.blocks[bi]), rel)
        if key not in self._cache:
            block = self.blocks[bi]
            words: list[Word] = [()]
            for r in range(rel):
                nxt: list[Word] = []
                for w in words:
                    lam = block.labels[w]
                    nxt.extend(w + (i,) for i in range(len(self.family.systems[lam])))
                words = nxt
            self._cache[key] = words
        return self._cache[key]

    def block_leaf_count(self, bi: int) -> int:
        return len(self._block_words(bi, self.blocks[bi].depth))

    def _block_level_meta(self, bi: int, rel: int) -> tuple[np.ndarray, np.ndarray]:
        """(labels, child start offsets) for block ``bi`` at relative depth ``rel``."""
        key = ("bmeta", id(self.blocks[bi]), rel)
        if key not in self._cache:
            block = self.blocks[bi]
            words = self._block_words(bi, rel)
            labels = np.array([block.labels[w] for w in words], dtype=np.intp)
            branch = self.family.branch_counts[labels]
            starts = np.concatenate(([0], np.cumsum(branch)[:-1])).astype(np.intp)
            labels.setflags(write=False)
            starts.setflags(write=False)
            self._cache[key] = (labels, starts)
        return self._cache[key]

    def _block_partial_affine(self, bi: int, rel: int) -> tuple[np.ndarray, np.ndarray]:
        """Affine products along every relative word of length ``rel`` of block ``bi``."""
        key = ("baff", id(self.blocks[bi]), rel)
        if key not in self._cache:
            d = self.family.dim
            lin = np.eye(d)[None]
            tr = np.zeros((1, d))
            for r in range(rel):
                labels, _ = self._block_level_meta(bi, r)
                new_lin = []
                new_tr = []
                for j, lam in enumerate(labels):
                    for f in self.family.systems[lam]:
                        new_lin.append(lin[j] @ f.linear)
                        new_tr.append(lin[j] @ f.translation + tr[j])
                lin = np.array(new_lin)
                tr = np.array(new_tr)
            lin.setflags(write=False)
            tr.setflags(write=False)
            self._cache[key] = (lin, tr)
        return self._cache[key]


def sample_tree(measure: BlockMeasure, n_blocks: int, seed: int) -> NeckCodeTree:
    """Draw ``n_blocks`` templates i.i.d. from the measure; seeded, reproducible."""
    if n_blocks < 1:
        raise ConfigError(f"n_blocks must be >= 1, got {n_blocks}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(measure.templates), size=n_blocks, p=measure.weights)
    return NeckCodeTree(measure.family, tuple(measure.templates[i] for i in idx))


def shift(tree: NeckCodeTree) -> NeckCodeTree:
    """Drop the stratum above the first neck; necks renumber to N_{m+1} - N_1."""
    if tree.n_blocks < 2:
        raise EmptyShiftError("cannot shift a single-block tree")
    return NeckCodeTree(tree.family, tree.blocks[1:])


def word_count(tree: NeckCodeTree, level: int) -> int:
    """Number of tree words of length ``level`` (computed without enumeration)."""
    if level < 0 or level > tree.last_level:
        raise DepthError(f"level {level} outside materialised range [0, {tree.last_level}]")
    if level == 0:
        return 1
    count = 1
    for bi, block in enumerate(tree.blocks):
        top = tree.necks[bi]
        if top <= level:
            count *= tree.block_leaf_count(bi)
            if top == level:
                break
        else:
            rel = level - (tree.necks[bi - 1] if bi else 0)
            count *= len(tree._block_words(bi, rel))
            break
    return count


def neck_word_count(tree: NeckCodeTree, n: int, m: int) -> int:
    """Number of inter-neck words from neck index ``n`` to ``m`` (n < m)."""
    if not 0 <= n < m <= tree.n_blocks:
        raise ValueError(f"need 0 <= n < m <= {tree.n_blocks}, got ({n}, {m})")
    count = 1
    for bi in range(n, m):
        count *= tree.block_leaf_count(bi)
    return count


def words_at(tree: NeckCodeTree, k: int):
    """Yield (word, linear product, affine product) for every length-k word.

    Lexicographic order; the products are the left-to-right compositions
    along the path, with ``k = 0`` yielding the empty word and identities.
    Reference implementation: the vectorised level engine is checked
    against it.
    """
    if k < 0 or k > tree.last_level:
        raise DepthError(f"level {k} outside materialised range [0, {tree.last_level}]")
    d = tree.family.dim

    def rec(word: Word, lin: np.ndarray, tr: np.ndarray):
        if len(word) == k:
            yield word, lin, AffineMap(lin, tr)
            return
        lam = tree.label_at(word)
        for i, f in enumerate(tree.family.systems[lam]):
            yield from rec(word + (i,), lin @ f.linear, lin @ f.translation + tr)

    yield from rec((), np.eye(d), np.zeros(d))


# -- vectorised level engine ----------------------------------------------


def _expand_linear(
    mats: np.ndarray, logs: np.ndarray, bmats: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    n, d, _ = mats.shape
    b = bmats.shape[0]
    out = np.einsum("nij,bjk->nbik", mats, bmats).reshape(n * b, d, d)
    logs = np.repeat(logs, b)
    scale = np.max(np.abs(out), axis=(1, 2))
    out /= scale[:, None, None]
    return out, logs + np.log(scale)


def linear_products(tree: NeckCodeTree, level: int) -> tuple[np.ndarray, np.ndarray]:
    """All length-``level`` linear path products, each rescaled to unit max entry.

    Returns (matrices, log_scales); the true product is matrix * exp(scale).
    Rescaling keeps arbitrarily deep products representable.
    """
    if level < 0 or level > tree.last_level:
        raise DepthError(f"level {level} outside materialised range [0, {tree.last_level}]")
    d = tree.family.dim
    mats = np.eye(d)[None]
    logs = np.zeros(1)
    done = 0
    for bi, block in enumerate(tree.blocks):
        if done >= level:
            break
        rel = min(block.depth, level - done)
        bmats, _ = tree._block_partial_affine(bi, rel)
        mats, logs = _expand_linear(mats, logs, bmats)
        done += rel
    return mats, logs


def affine_products(tree: NeckCodeTree, level: int) -> tuple[np.ndarray, np.ndarray]:
    """All length-``level`` affine path products as (linears, translations)."""
    if level < 0 or level > tree.last_level:
        raise DepthError(f"level {level} outside materialised range [0, {tree.last_level}]")
    d = tree.family.dim
    lin = np.eye(d)[None]
    tr = np.zeros((1, d))
    done = 0
    for bi, block in enumerate(tree.blocks):
        if done >= level:
            break
        rel = min(block.depth, level - done)
        blin, btr = tree._block_partial_affine(bi, rel)
        n, b = lin.shape[0], blin.shape[0]
        new_tr = (np.einsum("nij,bj->nbi", lin, btr) + tr[:, None, :]).reshape(n * b, d)
        lin = np.einsum("nij,bjk->nbik", lin, blin).reshape(n * b, d, d)
        tr = new_tr
        done += rel
    return lin, tr


def level_log_singulars(tree: NeckCodeTree, level: int) -> np.ndarray:
    """Log singular values (descending) of every length-``level`` path product.

    Cached per level on the tree, so repeated evaluation at many exponents
    (bisection) pays for the product expansion once.
    """
    key = ("logsig", level)
    if key not in tree._cache:
        mats, logs = linear_products(tree, level)
        sig = batched_singular_values(mats)
        out = np.log(sig) + logs[:, None]
        out.setflags(write=False)
        tree._cache[key] = out
    return tree._cache[key]


def level_meta(tree: NeckCodeTree, level: int) -> tuple[np.ndarray, np.ndarray]:
    """(labels, child start offsets) of all nodes at ``level``, lex order."""
    key = ("lmeta", level)
    if key not in tree._cache:
        bi, rel = tree.block_coords(level)
        labels, _ = tree._block_level_meta(bi, rel)
        base = tree.necks[bi - 1] if bi else 0
        reps = word_count(tree, base)
        labels = np.tile(labels, reps)
        branch = tree.family.branch_counts[labels]
        starts = np.concatenate(([0], np.cumsum(branch)[:-1])).astype(np.intp)
        labels.setflags(write=False)
        starts.setflags(write=False)
        tree._cache[key] = (labels, starts)
    return tree._cache[key]


def sample_paths(
    tree: NeckCodeTree, k: int, n: int, rng: np.random.Generator, affine: bool = False
):
    """Uniform-child descent of ``n`` independent paths to depth ``k``.

    Returns (log branching products, linears) or, with ``affine``,
    (log branching products, linears, translations).  Vectorised over the
    sample axis; the generator is advanced once per level.
    """
    if k < 0 or k > tree.last_level:
        raise DepthError(f"level {k} outside materialised range [0, {tree.last_level}]")
    d = tree.family.dim
    lin_all, tr_all = tree.family.padded_maps()
    branch_counts = tree.family.branch_counts
    lin = np.tile(np.eye(d), (n, 1, 1))
    tr = np.zeros((n, d))
    log_branch = np.zeros(n)
    state = np.zeros(n, dtype=np.intp)
    for level in range(k):
        bi, rel = tree.block_coords(level)
        labels_arr, starts_arr = tree._block_level_meta(bi, rel)
        labels = labels_arr[state]
        branch = branch_counts[labels]
        child = np.minimum((rng.random(n) * branch).astype(np.intp), branch - 1)
        log_branch += np.log(branch)
        step_lin = lin_all[labels, child]
        if affine:
            step_tr = tr_all[labels, child]
            tr = np.einsum("nij,nj->ni", lin, step_tr) + tr
        lin = np.einsum("nij,njk->nik", lin, step_lin)
        if rel + 1 == tree.blocks[bi].depth:
            state = np.zeros(n, dtype=np.intp)
        else:
            state = starts_arr[state] + child
    if affine:
        return log_branch, lin, tr
    return log_branch, lin
