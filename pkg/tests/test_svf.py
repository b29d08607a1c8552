import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affdim import (
    AffineMap,
    DomainError,
    InvalidMatrixError,
    ShapeError,
    compose,
    log_phi,
    log_sum_exp,
    phi,
    phi_bounds,
    singular_values,
)
from affdim.svf import batched_singular_values, segment_log_sum_exp, svf_exponents


def charpoly_singulars_2x2(mat):
    """Independent oracle: eigenvalues of T^T T from the characteristic polynomial."""
    g = mat.T @ mat
    tr = g[0, 0] + g[1, 1]
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    disc = math.sqrt(tr * tr - 4.0 * det)
    return np.sqrt([(tr + disc) / 2.0, (tr - disc) / 2.0])


def test_singular_values_identity():
    assert np.allclose(singular_values(np.eye(2)), [1.0, 1.0])


def test_singular_values_diagonal():
    sig = singular_values(np.diag([0.5, 1.0 / 3.0]))
    assert np.allclose(sig, [0.5, 1.0 / 3.0], rtol=1e-14)


def test_singular_values_upper_triangular():
    mat = np.array([[0.3, 0.1], [0.0, 0.2]])
    sig = singular_values(mat)
    assert np.allclose(sig, charpoly_singulars_2x2(mat), rtol=1e-12)
    assert sig == pytest.approx([0.325662, 0.184240], abs=1e-6)
    assert np.prod(sig) == pytest.approx(0.06, rel=1e-12)


def test_singular_values_errors():
    with pytest.raises(InvalidMatrixError):
        singular_values(np.zeros((2, 2)))
    with pytest.raises(InvalidMatrixError):
        singular_values(np.ones((2, 3)))
    with pytest.raises(InvalidMatrixError):
        singular_values(np.array([[1.0, 2.0], [2.0, 4.0]]))


@pytest.mark.parametrize("dim", [1, 2, 3, 4])
def test_singular_values_match_lapack(dim):
    rng = np.random.default_rng(7 + dim)
    mats = rng.normal(size=(200, dim, dim))
    ours = batched_singular_values(mats)
    ref = np.linalg.svd(mats, compute_uv=False)
    assert np.allclose(ours, ref, rtol=1e-10, atol=1e-12)


def test_singular_values_accuracy_on_deep_products():
    # product of 40 rotated contractions: smallest singular value stays accurate
    rng = np.random.default_rng(11)
    prod = np.eye(2)
    for _ in range(40):
        theta = rng.uniform(0, 2 * np.pi)
        rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        prod = prod @ rot @ np.diag(rng.uniform(0.3, 0.45, size=2))
    ours = np.log(batched_singular_values(prod[None])[0])
    ref = np.log(np.linalg.svd(prod, compute_uv=False))
    assert np.allclose(ours, ref, atol=1e-9)


def test_spectrum_product_equals_det():
    rng = np.random.default_rng(3)
    for _ in range(50):
        mat = rng.normal(size=(3, 3))
        sig = singular_values(mat)
        assert np.prod(sig) == pytest.approx(abs(np.linalg.det(mat)), rel=1e-12)


def test_phi_at_zero_is_one():
    rng = np.random.default_rng(5)
    for _ in range(10):
        assert phi(rng.normal(size=(2, 2)) + 2 * np.eye(2), 0.0) == pytest.approx(1.0)


def test_phi_diag_examples():
    mat = np.diag([0.5, 1.0 / 3.0])
    assert phi(mat, 1.5) == pytest.approx(0.5 * (1.0 / 3.0) ** 0.5, rel=1e-12)
    assert phi(mat, 1.5) == pytest.approx(0.2886751, abs=1e-7)
    assert phi(mat, 2.0) == pytest.approx(1.0 / 6.0, rel=1e-12)
    assert phi(mat, 3.0) == pytest.approx(0.5 * (1.0 / 3.0) ** 2, rel=1e-12)
    assert phi(mat, 3.0) == pytest.approx(0.0555556, abs=1e-7)


def test_phi_domain_errors():
    with pytest.raises(DomainError):
        phi(np.eye(2), -0.1)
    with pytest.raises(InvalidMatrixError):
        phi(np.zeros((2, 2)), 1.0)


def test_log_phi_agrees_with_log_of_phi():
    rng = np.random.default_rng(9)
    for _ in range(50):
        mat = rng.normal(size=(2, 2))
        if abs(np.linalg.det(mat)) < 1e-6:
            continue
        s = rng.uniform(0, 4)
        assert log_phi(mat, s) == pytest.approx(math.log(phi(mat, s)), abs=1e-12)


def test_svf_exponents_sum_to_s():
    for dim in (1, 2, 3, 4):
        for s in (0.0, 0.5, 1.0, 1.7, dim - 0.3, float(dim), dim + 2.5):
            if s < 0:
                continue
            e = svf_exponents(s, dim)
            assert e.sum() == pytest.approx(min(s, dim) + max(s - dim, 0.0))
            assert np.all(e >= 0)


def test_phi_submultiplicative_and_lower_bound():
    rng = np.random.default_rng(21)
    for _ in range(200):
        dim = int(rng.integers(1, 4))
        sig = rng.uniform(0.2, 0.6, size=(2, dim))
        mats = []
        for k in range(2):
            u, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
            v, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
            mats.append(u @ np.diag(np.sort(sig[k])[::-1]) @ v.T)
        a, b = mats
        s = rng.uniform(0, 2 * dim)
        lhs = log_phi(a @ b, s)
        assert lhs <= log_phi(a, s) + log_phi(b, s) + 1e-10
        assert lhs >= log_phi(a, s) + s * math.log(singular_values(b)[-1]) - 1e-10


def test_log_phi_piecewise_linear_breakpoints_only_at_integers():
    rng = np.random.default_rng(13)
    mat = rng.normal(size=(3, 3)) + 2 * np.eye(3)
    # slopes constant strictly inside each unit interval, for s beyond d as well
    for lo, hi in [(0.0, 1.0), (1.0, 2.0), (2.0, 3.0), (3.0, 5.0)]:
        grid = np.linspace(lo + 1e-3, hi - 1e-3, 7)
        vals = [log_phi(mat, s) for s in grid]
        slopes = np.diff(vals) / np.diff(grid)
        assert np.allclose(slopes, slopes[0], atol=1e-9)


def test_phi_strictly_decreasing_when_contracting():
    mat = np.diag([0.9, 0.4])
    values = [phi(mat, s) for s in np.linspace(0, 5, 21)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_compose_identity_and_chain():
    g = AffineMap([[1.0 / 3.0]], [2.0 / 3.0])
    ident = AffineMap.identity(1)
    out = compose(ident, g)
    assert np.allclose(out.linear, g.linear) and np.allclose(out.translation, g.translation)

    f = AffineMap([[1.0 / 3.0]], [2.0 / 3.0])
    h = compose(f, AffineMap([[1.0 / 3.0]], [0.0]))
    assert h.linear[0, 0] == pytest.approx(1.0 / 9.0)
    assert h.translation[0] == pytest.approx(2.0 / 3.0)

    acc = AffineMap.identity(1)
    step = AffineMap([[1.0 / 3.0]], [0.0])
    for _ in range(5):
        acc = compose(acc, step)
    assert acc.linear[0, 0] == pytest.approx(3.0**-5)


def test_compose_dim_mismatch():
    with pytest.raises(ShapeError):
        compose(AffineMap.identity(2), AffineMap.identity(3))


@given(st.integers(0, 10**6))
@settings(max_examples=40, deadline=None)
def test_compose_associative(seed):
    rng = np.random.default_rng(seed)
    maps = [AffineMap(rng.normal(size=(2, 2)), rng.normal(size=2)) for _ in range(3)]
    left = compose(compose(maps[0], maps[1]), maps[2])
    right = compose(maps[0], compose(maps[1], maps[2]))
    assert np.allclose(left.linear, right.linear)
    assert np.allclose(left.translation, right.translation, atol=1e-12)


def test_phi_bounds_examples():
    assert phi_bounds(1.0, 0.2, 0.4) == (0.2, 0.4)
    assert phi_bounds(0.0, 0.3, 0.5) == (1.0, 1.0)
    lo, hi = phi_bounds(2.0, 0.3, 0.5)
    assert lo == pytest.approx(0.09) and hi == pytest.approx(0.25)
    with pytest.raises(DomainError):
        phi_bounds(1.0, 0.0, 0.5)
    with pytest.raises(DomainError):
        phi_bounds(1.0, 0.5, 1.2)


def test_phi_bounds_contain_phi():
    rng = np.random.default_rng(2)
    for _ in range(100):
        dim = int(rng.integers(1, 4))
        sig = np.sort(rng.uniform(0.25, 0.45, size=dim))[::-1]
        u, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
        v, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
        mat = u @ np.diag(sig) @ v.T
        s = rng.uniform(0, 2 * dim)
        lo, hi = phi_bounds(s, 0.25, 0.45)
        assert lo * (1 - 1e-9) <= phi(mat, s) <= hi * (1 + 1e-9)


@given(st.lists(st.floats(-600, 600), min_size=1, max_size=50))
@settings(max_examples=60, deadline=None)
def test_log_sum_exp_matches_direct(xs):
    ours = log_sum_exp(xs)
    shift = max(xs)
    direct = shift + math.log(sum(math.exp(x - shift) for x in xs))
    assert ours == pytest.approx(direct, abs=1e-12)


def test_log_sum_exp_edge_cases():
    assert log_sum_exp([]) == float("-inf")
    assert log_sum_exp([-1e5, -1e5]) == pytest.approx(-1e5 + math.log(2))
    assert log_sum_exp([float("-inf"), 0.0]) == pytest.approx(0.0)


def test_segment_log_sum_exp_matches_loop():
    rng = np.random.default_rng(17)
    x = rng.uniform(-700, 10, size=50)
    starts = np.array([0, 3, 10, 11, 30])
    out = segment_log_sum_exp(x, starts)
    bounds = list(starts) + [len(x)]
    for i in range(len(starts)):
        assert out[i] == pytest.approx(log_sum_exp(x[bounds[i] : bounds[i + 1]]), abs=1e-12)
