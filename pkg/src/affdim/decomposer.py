"""Tree decomposition into cheap-cover and full-slab subtrees, and the
partition-sum bound it certifies.

The decomposition walks the tree neck by neck.  Wherever the shifted tree
admits a neck cover of cost below 1 within the first ``window`` necks, a
"cover" unit is attached; elsewhere a "slab" unit expands every word down
to the next such neck (or to the horizon).  Units rooted at the same neck
index are identical by neck homogeneity, so the whole decomposition is a
map from shift index to unit; instances only matter when expanding leaf
cylinders, which stays lazy.

Membership of a shift index is the deterministic predicate "cover cost of
the first ``window`` necks < 1".  That is an empirical stand-in for the
measure-theoretic almost-uniform membership set the bound is usually stated
with; it is exactly the property the bound consumes, but the correspondence
is heuristic and the non-member fraction is reported so users can judge it.
Units are only ever rooted at neck levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .codetree import NeckCodeTree, Word, neck_word_count, shift, words_at
from .errors import DepthError
from .netmeasure import CoverSolution, best_cover, f_n
from .pressure import DEFAULT_WORD_CAP, partition_sum
from .svf import TOL


@dataclass(frozen=True)
class DecompositionUnit:
    """One tagged subtree: a cheap cover or a fully expanded slab.

    Neck indices are absolute (relative to the undecomposed tree); a slab
    unit's leaves all sit ``slab_span`` necks below its root.
    """

    kind: str  # "cover" | "slab"
    first_neck: int
    last_neck: int
    leaf_necks: tuple[int, ...]
    leaf_count: int
    cover: CoverSolution | None = None
    slab_span: int = 0


@dataclass
class DecompositionTree:
    """Decomposition of a tree to ``horizon`` necks with cover window ``window``."""

    tree: NeckCodeTree
    horizon: int
    window: int
    s: float
    units: dict[int, DecompositionUnit]
    membership: dict[int, bool]
    q_l: int
    _shifts: dict[int, NeckCodeTree] = field(default_factory=dict, repr=False)

    @property
    def non_member_fraction(self) -> float:
        return self.q_l / self.tree.necks[self.horizon - 1]

    def unit_counts(self) -> dict[str, int]:
        out = {"cover": 0, "slab": 0}
        for unit in self.units.values():
            out[unit.kind] += 1
        return out

    def shifted(self, k: int) -> NeckCodeTree:
        return self._shifts[k] if k in self._shifts else _shift_chain(self._shifts, k)

    def _unit_leaf_words(self, k: int):
        unit = self.units[k]
        if unit.kind == "cover":
            yield from zip(unit.cover.nodes, unit.leaf_necks)
        else:
            sub = self.shifted(k)
            level = sub.necks[unit.slab_span - 1]
            for word, _, _ in words_at(sub, level):
                yield word, unit.first_neck + unit.slab_span

    def residual_leaf_words(self):
        """Absolute words of the uncovered bottom stratum, with neck indices.

        These are the leaves of the decomposition that were not recursed
        into; their neck indices lie in (horizon - window, horizon].
        Expansion is exponential in the worst case, so this is meant for
        small horizons (tests, diagnostics).
        """
        cutoff = self.horizon - self.window

        def rec(prefix: Word, k: int):
            for rel_word, leaf_neck in self._unit_leaf_words(k):
                word = prefix + rel_word
                if leaf_neck <= cutoff:
                    yield from rec(word, leaf_neck)
                else:
                    yield word, leaf_neck

        yield from rec((), 0)


def _shift_chain(shifts: dict[int, NeckCodeTree], k: int) -> NeckCodeTree:
    base = max(i for i in shifts if i <= k)
    tree = shifts[base]
    for i in range(base + 1, k + 1):
        tree = shift(tree)
        shifts[i] = tree
    return shifts[k]


def membership(tree: NeckCodeTree, s: float, window: int) -> bool:
    """True when the first ``window`` necks admit a cover of cost below 1."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if window > tree.n_blocks:
        raise DepthError(f"window {window} exceeds {tree.n_blocks} blocks")
    return f_n(tree, s, window) < 1.0


def _require_blocks(tree: NeckCodeTree, horizon: int, window: int) -> None:
    if window < 1 or horizon < window:
        raise ValueError(f"need horizon >= window >= 1, got ({horizon}, {window})")
    needed = horizon + window - 1
    if tree.n_blocks < needed:
        raise DepthError(
            f"membership at shift {horizon - 1} needs {needed} blocks, tree has "
            f"{tree.n_blocks}"
        )


def decompose(tree: NeckCodeTree, horizon: int, window: int, s: float) -> DecompositionTree:
    """Decompose the tree to ``horizon`` necks into cover and slab units.

    At a member shift index the unit is the witness cover over the next
    ``window`` necks; at a non-member index the unit expands every word to
    the first member neck below (or to the horizon).  Units recurse at
    every leaf neck index <= horizon - window, so all remaining leaves sit
    within ``window`` necks of the horizon.  Deterministic throughout.
    """
    _require_blocks(tree, horizon, window)
    shifts: dict[int, NeckCodeTree] = {0: tree}
    member: dict[int, bool] = {}

    def is_member(k: int) -> bool:
        if k not in member:
            member[k] = membership(_shift_chain(shifts, k), s, window)
        return member[k]

    units: dict[int, DecompositionUnit] = {}

    def build(k0: int) -> None:
        if k0 in units:
            return
        sub = _shift_chain(shifts, k0)
        if is_member(k0):
            sol = best_cover(sub, s, 1, window, neck_only=True)
            neck_of_level = {sub.necks[j - 1]: j for j in range(1, window + 1)}
            leaf_necks = tuple(k0 + neck_of_level[len(w)] for w in sol.nodes)
            unit = DecompositionUnit(
                kind="cover",
                first_neck=k0,
                last_neck=max(leaf_necks),
                leaf_necks=leaf_necks,
                leaf_count=len(sol.nodes),
                cover=sol,
            )
        else:
            span = horizon - k0
            for j in range(1, horizon - k0):
                if is_member(k0 + j):
                    span = j
                    break
            unit = DecompositionUnit(
                kind="slab",
                first_neck=k0,
                last_neck=k0 + span,
                leaf_necks=(k0 + span,),
                leaf_count=neck_word_count(sub, 0, span),
                slab_span=span,
            )
        units[k0] = unit
        for q in sorted(set(unit.leaf_necks)):
            if q <= horizon - window:
                build(q)

    build(0)
    q_l = 0
    for k in range(horizon):
        if not is_member(k):
            q_l += tree.blocks[k].depth
    return DecompositionTree(tree, horizon, window, s, units, member, q_l, shifts)


def q_l(decomposition: DecompositionTree) -> int:
    """Total depth of the non-member strata above the horizon."""
    return decomposition.q_l


@dataclass(frozen=True)
class StarReport:
    lhs: float
    rhs: float
    ok: bool
    q_l: int


def verify_star(
    tree: NeckCodeTree,
    horizon: int,
    window: int,
    s: float,
    *,
    word_cap: int = DEFAULT_WORD_CAP,
) -> StarReport:
    """Check log S(N_horizon, s) <= (Q + N_horizon - N_{horizon-window}) log M.

    Q sums the depths of the non-member strata.  The right-hand side is the
    decomposition bound: cover units cost below 1, slab units are counted
    crudely by the branching bound, and the bottom ``window`` necks are
    padded the same way.
    """
    _require_blocks(tree, horizon, window)
    shifts: dict[int, NeckCodeTree] = {0: tree}
    q = 0
    for k in range(horizon):
        if not membership(_shift_chain(shifts, k), s, window):
            q += tree.blocks[k].depth
    n_top = tree.necks[horizon - 1]
    n_cut = tree.necks[horizon - window - 1] if horizon > window else 0
    lhs = partition_sum(tree, n_top, s, word_cap=word_cap)
    rhs = (q + n_top - n_cut) * math.log(tree.family.max_branch)
    return StarReport(lhs, rhs, lhs <= rhs + TOL.star_slack, q)
