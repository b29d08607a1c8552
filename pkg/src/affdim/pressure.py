"""Partition sums, finite-level pressure estimates and the pressure zero.

The partition sum at depth k adds Phi^s over every length-k word of the
tree; its log-per-level quotient estimates the pressure.  Estimates here
are quenched: they belong to the one sampled tree at hand.  Almost-sure
constancy across draws is a cross-seed property checked by the test suite,
not something a single run can certify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codetree import (
    NeckCodeTree,
    batched_singular_values,
    level_log_singulars,
    sample_paths,
    word_count,
)
from .errors import DepthError, DomainError, FeasibilityError
from .svf import log_phi_from_log_singulars, log_sum_exp

DEFAULT_WORD_CAP = 2**24


@dataclass(frozen=True)
class PressureEstimate:
    """One finite-level quotient log S(level, s) / level."""

    level: int
    s: float
    log_sum: float
    value: float
    mc_stderr: float | None = None


@dataclass(frozen=True)
class ZeroBracket:
    """Bisection bracket around the pressure zero: p(lo) >= 0 >= p(hi)."""

    lo: float
    hi: float
    s0_hat: float
    level: int


def _check_level(tree: NeckCodeTree, k: int) -> None:
    if k < 0 or k > tree.last_level:
        raise DepthError(f"level {k} outside materialised range [0, {tree.last_level}]")


def partition_sum(
    tree: NeckCodeTree, k: int, s: float, *, word_cap: int = DEFAULT_WORD_CAP
) -> float:
    """log S(k, s): log-sum-exp of log Phi^s over all length-k words."""
    _check_level(tree, k)
    if s < 0:
        raise DomainError(f"exponent s must be non-negative, got {s}")
    count = word_count(tree, k)
    if count > word_cap:
        raise FeasibilityError(
            f"{count} words at level {k} exceed the cap {word_cap}; "
            "use partition_sum_mc"
        )
    log_sig = level_log_singulars(tree, k)
    return log_sum_exp(log_phi_from_log_singulars(log_sig, s))


def partition_sum_mc(
    tree: NeckCodeTree,
    k: int,
    s: float,
    n_samples: int,
    seed: int,
    *,
    word_cap: int = DEFAULT_WORD_CAP,
) -> tuple[float, float]:
    """Monte Carlo estimate of log S(k, s) with a delta-method standard error.

    Paths descend by uniform child choice; the weight of a path is the
    product of branching factors times Phi^s of its matrix product, which
    makes the sample mean unbiased for S in the linear domain.  A budget of
    at least the full word count short-circuits to exact enumeration (the
    zero-variance limit of the estimator), reported with stderr 0.
    """
    _check_level(tree, k)
    if s < 0:
        raise DomainError(f"exponent s must be non-negative, got {s}")
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    count = word_count(tree, k)
    if count <= min(n_samples, word_cap):
        return partition_sum(tree, k, s, word_cap=word_cap), 0.0
    rng = np.random.default_rng(seed)
    log_branch, lin = sample_paths(tree, k, n_samples, rng)
    scale = np.max(np.abs(lin), axis=(1, 2))
    sig = batched_singular_values(lin / scale[:, None, None])
    log_sig = np.log(sig) + np.log(scale)[:, None]
    log_w = log_branch + log_phi_from_log_singulars(log_sig, s)
    estimate = log_sum_exp(log_w) - math.log(n_samples)
    if n_samples == 1:
        return estimate, 0.0
    shift_val = float(np.max(log_w))
    w = np.exp(log_w - shift_val)
    mean = float(np.mean(w))
    var = float(np.var(w, ddof=1))
    stderr = math.sqrt(var / n_samples) / mean
    return estimate, stderr


def pressure_curve(
    tree: NeckCodeTree,
    s: float,
    max_neck_index: int,
    *,
    word_cap: int = DEFAULT_WORD_CAP,
    mc_samples: int | None = None,
    seed: int = 0,
) -> tuple[PressureEstimate, ...]:
    """Finite-level pressure estimates at neck levels N_1 .. N_L.

    Falls back to Monte Carlo past the enumeration cap when ``mc_samples``
    is given, otherwise raises.  Each term of the homogeneous-tree sequence
    upper-bounds the limit, so deeper levels only tighten the estimate.
    """
    if not 1 <= max_neck_index <= tree.n_blocks:
        raise DepthError(
            f"neck index {max_neck_index} outside [1, {tree.n_blocks}]"
        )
    out = []
    for m in range(1, max_neck_index + 1):
        level = tree.necks[m - 1]
        stderr: float | None = None
        if word_count(tree, level) <= word_cap:
            log_sum = partition_sum(tree, level, s, word_cap=word_cap)
        elif mc_samples is not None:
            log_sum, stderr = partition_sum_mc(
                tree, level, s, mc_samples, seed + m, word_cap=word_cap
            )
        else:
            raise FeasibilityError(
                f"level {level} exceeds the enumeration cap; pass mc_samples"
            )
        out.append(PressureEstimate(level, s, log_sum, log_sum / level, stderr))
    return tuple(out)


def pressure_zero(
    tree: NeckCodeTree,
    max_neck_index: int,
    tol: float,
    *,
    word_cap: int = DEFAULT_WORD_CAP,
) -> ZeroBracket:
    """Bisect the unique zero of the finite-level pressure estimate.

    Uses the deepest neck level at or below ``max_neck_index`` whose word
    count fits the enumeration cap.  The estimate s -> log S(level, s) is
    strictly decreasing, so plain bisection brackets the zero; the bracket
    is returned once its width drops to ``tol``.
    """
    if not 1 <= max_neck_index <= tree.n_blocks:
        raise DepthError(f"neck index {max_neck_index} outside [1, {tree.n_blocks}]")
    if tol <= 0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    level = 0
    for m in range(1, max_neck_index + 1):
        if word_count(tree, tree.necks[m - 1]) <= word_cap:
            level = tree.necks[m - 1]
    if level == 0:
        raise FeasibilityError(
            f"no neck level up to index {max_neck_index} fits the cap {word_cap}"
        )
    log_sig = level_log_singulars(tree, level)

    def estimate(s: float) -> float:
        return log_sum_exp(log_phi_from_log_singulars(log_sig, s)) / level

    if estimate(0.0) <= 0.0:
        return ZeroBracket(0.0, 0.0, 0.0, level)
    d = tree.family.dim
    lo = 0.0
    hi = float(d + 2)
    s_cap = max(2.0 * d, hi)
    while estimate(hi) > 0.0:
        if hi >= s_cap:
            raise FeasibilityError(
                f"pressure estimate still positive at s = {hi}; no zero below {s_cap}"
            )
        hi = min(2.0 * hi, s_cap)
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if estimate(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    return ZeroBracket(lo, hi, 0.5 * (lo + hi), level)


__all__ = [
    "DEFAULT_WORD_CAP",
    "PressureEstimate",
    "ZeroBracket",
    "partition_sum",
    "partition_sum_mc",
    "pressure_curve",
    "pressure_zero",
]
