"""Small dense linear algebra and the multiplicative singular value function.

The singular value function interpolates the product of the top singular
values of a matrix: for m-1 <= s < m it is sigma_1 ... sigma_{m-1} *
sigma_m^(s-m+1), and beyond s = d the last singular value keeps absorbing
the excess exponent.  All sums of such weights are accumulated in the log
domain, because the products underflow quickly along deep composition
chains.

Everything here is a pure function of its arguments, safe to call from any
number of concurrent workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidMatrixError, ShapeError


@dataclass(frozen=True)
class Tolerances:
    """Numeric tolerances used across the library and its test suite."""

    identity_rel: float = 1e-12   # relative slack for exact identities
    log_abs: float = 1e-12        # absolute slack for log-domain agreement
    ineq_slack: float = 1e-10     # additive slack for provable inequalities
    star_slack: float = 1e-9      # additive slack for the decomposition bound
    singular_det: float = 1e-14   # |det| at or below this counts as singular
    jacobi_off: float = 1e-15     # off-diagonal stop threshold, Jacobi sweeps


TOL = Tolerances()


@dataclass(frozen=True, eq=False)
class AffineMap:
    """The map x -> linear @ x + translation on R^d."""

    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        lin = np.array(self.linear, dtype=float)
        tr = np.array(self.translation, dtype=float)
        if lin.ndim != 2 or lin.shape[0] != lin.shape[1]:
            raise ShapeError(f"linear part must be square, got shape {lin.shape}")
        if tr.ndim != 1 or tr.shape[0] != lin.shape[0]:
            raise ShapeError(
                f"translation of length {tr.shape} does not match linear part {lin.shape}"
            )
        lin.setflags(write=False)
        tr.setflags(write=False)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "translation", tr)

    @property
    def dim(self) -> int:
        return self.linear.shape[0]

    def __call__(self, x):
        return self.linear @ np.asarray(x, dtype=float) + self.translation

    @staticmethod
    def identity(dim: int) -> "AffineMap":
        return AffineMap(np.eye(dim), np.zeros(dim))


def compose(outer: AffineMap, inner: AffineMap) -> AffineMap:
    """Composition outer after inner, again an affine map."""
    if outer.dim != inner.dim:
        raise ShapeError(f"dimension mismatch: {outer.dim} vs {inner.dim}")
    return AffineMap(
        outer.linear @ inner.linear,
        outer.linear @ inner.translation + outer.translation,
    )


def batched_singular_values(mats: np.ndarray, max_sweeps: int = 40) -> np.ndarray:
    """Singular values, sorted descending, of a stack of small square matrices.

    One-sided Jacobi: rotate column pairs until they are mutually orthogonal
    and read off the column norms.  For d <= 4 a handful of sweeps reaches
    machine precision, and the small singular values keep their relative
    accuracy (no squaring of the condition number as with eigenvalues of
    T^T T).
    """
    a = np.asarray(mats, dtype=float)
    squeeze = a.ndim == 2
    if squeeze:
        a = a[None]
    if a.ndim != 3 or a.shape[1] != a.shape[2] or a.shape[1] < 1:
        raise InvalidMatrixError(f"expected square matrices, got shape {a.shape}")
    d = a.shape[1]
    if d == 1:
        out = np.abs(a[:, :, 0])
        return out[0] if squeeze else out
    a = a.copy()
    for _ in range(max_sweeps):
        rotated = False
        for p in range(d - 1):
            for q in range(p + 1, d):
                cp = a[:, :, p]
                cq = a[:, :, q]
                app = np.einsum("ni,ni->n", cp, cp)
                aqq = np.einsum("ni,ni->n", cq, cq)
                apq = np.einsum("ni,ni->n", cp, cq)
                active = np.abs(apq) > TOL.jacobi_off * np.sqrt(app * aqq)
                if not active.any():
                    continue
                rotated = True
                with np.errstate(divide="ignore", invalid="ignore"):
                    tau = (aqq - app) / (2.0 * apq)
                    t = np.sign(tau) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
                    t = np.where(np.abs(tau) == np.inf, 0.0, t)
                t = np.where(active, np.nan_to_num(t), 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                new_p = c[:, None] * cp - s[:, None] * cq
                new_q = s[:, None] * cp + c[:, None] * cq
                a[:, :, p] = new_p
                a[:, :, q] = new_q
        if not rotated:
            break
    sig = np.sqrt(np.einsum("nij,nij->nj", a, a))
    sig = np.sort(sig, axis=1)[:, ::-1]
    return sig[0] if squeeze else sig


def singular_values(mat) -> np.ndarray:
    """All singular values of a non-singular square matrix, descending."""
    a = np.asarray(mat, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InvalidMatrixError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidMatrixError("matrix entries must be finite")
    if abs(float(np.linalg.det(a))) <= TOL.singular_det:
        raise InvalidMatrixError("matrix is singular within tolerance")
    return batched_singular_values(a)


def svf_exponents(s: float, dim: int) -> np.ndarray:
    """Exponent carried by each singular value (largest first) in Phi^s."""
    if s < 0:
        raise DomainError(f"exponent s must be non-negative, got {s}")
    e = np.clip(s - np.arange(dim, dtype=float), 0.0, 1.0)
    e[-1] = max(s - dim + 1.0, 0.0)
    return e


def phi(mat, s: float) -> float:
    """Singular value function Phi^s evaluated in the linear domain."""
    sig = singular_values(mat)
    return float(np.prod(sig ** svf_exponents(s, sig.shape[0])))


def log_phi(mat, s: float) -> float:
    """log Phi^s, stable for deep products where Phi^s underflows."""
    sig = singular_values(mat)
    return float(np.log(sig) @ svf_exponents(s, sig.shape[0]))


def log_phi_from_log_singulars(log_sig: np.ndarray, s: float) -> np.ndarray:
    """Vectorised log Phi^s from rows of descending log singular values."""
    log_sig = np.asarray(log_sig, dtype=float)
    return log_sig @ svf_exponents(s, log_sig.shape[-1])


def phi_bounds(s: float, sigma_lo: float, sigma_hi: float) -> tuple[float, float]:
    """Two-sided bound on Phi^s over all maps with spectrum in [sigma_lo, sigma_hi].

    Phi^s is a product of singular values with exponents summing to s, so it
    is squeezed between sigma_lo^s and sigma_hi^s.
    """
    if not (0.0 < sigma_lo <= sigma_hi < 1.0):
        raise DomainError(
            f"bounds must satisfy 0 < lo <= hi < 1, got ({sigma_lo}, {sigma_hi})"
        )
    if s < 0:
        raise DomainError(f"exponent s must be non-negative, got {s}")
    return (sigma_lo**s, sigma_hi**s)


def log_sum_exp(values) -> float:
    """log(sum(exp(values))) with the usual max shift; -inf for empty input."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        return float("-inf")
    m = float(np.max(x))
    if not np.isfinite(m):
        return m
    return m + float(np.log(np.sum(np.exp(x - m))))


def segment_log_sum_exp(values: np.ndarray, starts: np.ndarray) -> np.ndarray:
    """Log-sum-exp over contiguous segments given by start offsets.

    Deterministic reduction order (left to right within each segment), so
    repeated runs produce bit-identical results.
    """
    x = np.asarray(values, dtype=float)
    starts = np.asarray(starts, dtype=np.intp)
    m = np.maximum.reduceat(x, starts)
    lengths = np.diff(np.append(starts, x.size))
    safe_m = np.where(np.isfinite(m), m, 0.0)
    shifted = np.exp(x - np.repeat(safe_m, lengths))
    sums = np.add.reduceat(shifted, starts)
    with np.errstate(divide="ignore"):
        out = safe_m + np.log(sums)
    return np.where(np.isfinite(m), out, m)
