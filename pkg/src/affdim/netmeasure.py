"""Optimal antichain covers, the neck-restricted cover functional and
affinity-dimension estimation.

Cylinders are nested, so an optimal cover of the whole symbol space within a
depth window can be taken to be an antichain of tree nodes; the bottom-up
dynamic programme below searches exactly those and is therefore an exact
minimiser, not a heuristic.  Costs live in the log domain throughout.  The
DP is a pure fold over immutable per-level arrays; per-level singular value
spectra are cached on the tree, so a bisection over the exponent pays for
the product expansion once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codetree import (
    NeckCodeTree,
    Word,
    level_log_singulars,
    level_meta,
    shift,
    word_count,
)
from .errors import DepthError, DomainError, FeasibilityError
from .svf import TOL, log_phi_from_log_singulars, segment_log_sum_exp

DEFAULT_COVER_CAP = 2**22


@dataclass(frozen=True)
class CoverSolution:
    """An optimal antichain cover within a depth window.

    ``nodes`` are pairwise non-prefix words whose cylinders cover the whole
    symbol space; ``log_cost`` is log of the summed Phi^s weights.
    """

    nodes: tuple[Word, ...]
    log_cost: float
    min_depth: int
    max_depth: int
    neck_only: bool

    @property
    def cost(self) -> float:
        return math.exp(self.log_cost)


@dataclass(frozen=True)
class DimensionEstimate:
    """Bisection bracket for the exponent where the cover cost crosses 1."""

    s_lo: float
    s_hi: float
    depth_used: int
    threshold: float
    neck_only: bool

    @property
    def s_hat(self) -> float:
        return 0.5 * (self.s_lo + self.s_hi)


@dataclass(frozen=True)
class SandwichReport:
    """One-shift comparison of cover costs, all in the log domain."""

    lower: float
    value: float
    upper: float
    ok: bool


def best_cover(
    tree: NeckCodeTree,
    s: float,
    min_depth: int,
    max_depth: int,
    neck_only: bool = False,
    *,
    word_cap: int = DEFAULT_COVER_CAP,
) -> CoverSolution:
    """Exact minimum-cost antichain cover with node depths in the window.

    With ``neck_only`` the window is read in neck indices and nodes may only
    sit at neck levels.  Bottom-up over the materialised tree:
    cost(v) = min(take(v), sum over children), take(v) = Phi^s(product at v)
    where the depth is admissible, and nodes at the window bottom are taken.
    """
    if s < 0:
        raise DomainError(f"exponent s must be non-negative, got {s}")
    if neck_only:
        if min_depth < 1 or min_depth > max_depth:
            raise ValueError(
                f"need 1 <= min <= max neck index, got ({min_depth}, {max_depth})"
            )
        if max_depth > tree.n_blocks:
            raise DepthError(f"neck index {max_depth} beyond {tree.n_blocks} blocks")
        admissible = {tree.necks[j - 1] for j in range(min_depth, max_depth + 1)}
        bottom = tree.necks[max_depth - 1]
    else:
        if min_depth < 0 or min_depth > max_depth:
            raise ValueError(f"need 0 <= min <= max depth, got ({min_depth}, {max_depth})")
        if max_depth > tree.last_level:
            raise DepthError(f"depth {max_depth} beyond materialised {tree.last_level}")
        admissible = set(range(min_depth, max_depth + 1))
        bottom = max_depth
    if word_count(tree, bottom) > word_cap:
        raise FeasibilityError(
            f"{word_count(tree, bottom)} words at depth {bottom} exceed cap {word_cap}"
        )

    take: dict[int, np.ndarray] = {
        k: log_phi_from_log_singulars(level_log_singulars(tree, k), s)
        for k in admissible
    }
    cost = take[bottom].copy()
    flags: dict[int, np.ndarray] = {bottom: np.ones(cost.shape[0], dtype=bool)}
    branch: dict[int, np.ndarray] = {}
    starts: dict[int, np.ndarray] = {}
    for k in range(bottom - 1, -1, -1):
        labels, st = level_meta(tree, k)
        br = tree.family.branch_counts[labels]
        child_sum = segment_log_sum_exp(cost, st)
        if k in admissible:
            tk = take[k]
            fl = tk <= child_sum
            cost = np.where(fl, tk, child_sum)
        else:
            fl = np.zeros(child_sum.shape[0], dtype=bool)
            cost = child_sum
        flags[k] = fl
        branch[k] = br
        starts[k] = st

    log_cost = float(cost[0])
    nodes: list[Word] = []
    active: list[tuple[Word, int]] = [((), 0)]
    for k in range(0, bottom + 1):
        fl = flags[k]
        nxt: list[tuple[Word, int]] = []
        for w, idx in active:
            if fl[idx]:
                nodes.append(w)
            else:
                base = starts[k][idx]
                for c in range(int(branch[k][idx])):
                    nxt.append((w + (c,), int(base) + c))
        active = nxt
        if not active:
            break
    nodes.sort()
    return CoverSolution(tuple(nodes), log_cost, min_depth, max_depth, neck_only)


def f_n(tree: NeckCodeTree, s: float, n: int, *, word_cap: int = DEFAULT_COVER_CAP) -> float:
    """Cheapest neck-level cover cost using necks 1..n; non-increasing in n."""
    if n < 1:
        raise ValueError(f"neck index must be >= 1, got {n}")
    if n > tree.n_blocks:
        raise DepthError(f"neck index {n} beyond {tree.n_blocks} blocks")
    return best_cover(tree, s, 1, n, neck_only=True, word_cap=word_cap).cost


def witness_cover(
    tree: NeckCodeTree, s: float, r: int, *, word_cap: int = DEFAULT_COVER_CAP
) -> CoverSolution | None:
    """The optimal neck cover over necks 1..r when its cost is below 1, else None."""
    sol = best_cover(tree, s, 1, r, neck_only=True, word_cap=word_cap)
    return sol if sol.log_cost < 0.0 else None


def affinity_dim(
    tree: NeckCodeTree,
    max_neck_index: int,
    tol: float,
    neck_only: bool = False,
    *,
    word_cap: int = DEFAULT_COVER_CAP,
) -> DimensionEstimate:
    """Bisect the exponent where the optimal cover cost crosses 1.

    ``max_neck_index`` is a neck index for both variants, so the restricted
    and unrestricted estimates search down to the same tree level and are
    directly comparable.  A crossing outside [0, 2d] is reported as a
    degenerate boundary bracket.
    """
    if not 1 <= max_neck_index <= tree.n_blocks:
        raise DepthError(f"neck index {max_neck_index} outside [1, {tree.n_blocks}]")
    if tol <= 0:
        raise DomainError(f"tolerance must be positive, got {tol}")

    def log_cost(s: float) -> float:
        if neck_only:
            return best_cover(
                tree, s, 1, max_neck_index, neck_only=True, word_cap=word_cap
            ).log_cost
        return best_cover(
            tree, s, 1, tree.necks[max_neck_index - 1], word_cap=word_cap
        ).log_cost

    hi = 2.0 * tree.family.dim
    lo = 0.0
    if log_cost(hi) >= 0.0:
        return DimensionEstimate(hi, hi, max_neck_index, 1.0, neck_only)
    if log_cost(lo) < 0.0:
        return DimensionEstimate(lo, lo, max_neck_index, 1.0, neck_only)
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if log_cost(mid) < 0.0:
            hi = mid
        else:
            lo = mid
    return DimensionEstimate(lo, hi, max_neck_index, 1.0, neck_only)


def sandwich_check(
    tree: NeckCodeTree,
    s: float,
    n: int,
    max_depth: int,
    *,
    word_cap: int = DEFAULT_COVER_CAP,
) -> SandwichReport:
    """Squeeze the cover cost of a tree between scaled costs of its shift.

    With V the optimal cover of the tree in depth window [N_1 + n, D] and
    V' that of the shifted tree in [n, D - N_1], checks
    sigma_lo^(s N_1) V' <= V <= (M sigma_hi^s)^(N_1) V' in the log domain.
    """
    n1 = tree.necks[0]
    if n < 0 or n1 + n > max_depth:
        raise ValueError(f"window start {n1 + n} exceeds max depth {max_depth}")
    if max_depth > tree.last_level:
        raise DepthError(f"depth {max_depth} beyond materialised {tree.last_level}")
    value = best_cover(tree, s, n1 + n, max_depth, word_cap=word_cap).log_cost
    shifted = best_cover(shift(tree), s, n, max_depth - n1, word_cap=word_cap).log_cost
    fam = tree.family
    lower = shifted + s * n1 * math.log(fam.sigma_lo)
    upper = shifted + n1 * (math.log(fam.max_branch) + s * math.log(fam.sigma_hi))
    ok = (lower - TOL.ineq_slack <= value) and (value <= upper + TOL.ineq_slack)
    return SandwichReport(lower, value, upper, ok)
