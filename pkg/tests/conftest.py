import numpy as np
import pytest

from affdim import AffineMap, BlockMeasure, BlockTemplate, IfsFamily, sample_tree, uniform_block

THIRD = 1.0 / 3.0


def make_cantor_family():
    return IfsFamily(
        ((AffineMap([[THIRD]], [0.0]), AffineMap([[THIRD]], [2.0 / 3.0])),),
        sigma_lo=THIRD,
        sigma_hi=THIRD,
        trans_bound=2.0 / 3.0,
    )


def make_diag_family():
    """Three copies of diag(1/2, 1/3) with simple translations."""
    lin = [[0.5, 0.0], [0.0, THIRD]]
    maps = tuple(
        AffineMap(lin, tr) for tr in ([0.0, 0.0], [0.25, 0.5], [0.5, 0.25])
    )
    return IfsFamily((maps,), sigma_lo=THIRD, sigma_hi=0.5, trans_bound=1.0)


def make_two_template_measure():
    """d=1 mixture used by the estimator-agreement study."""
    fam = IfsFamily(
        (
            (AffineMap([[0.35]], [0.1]), AffineMap([[0.3]], [0.6])),
            (AffineMap([[0.62]], [0.2]), AffineMap([[0.62]], [-0.2])),
            (AffineMap([[0.5]], [0.0]),),
        ),
        sigma_lo=0.3,
        sigma_hi=0.62,
        trans_bound=0.7,
    )
    blk_a = uniform_block(fam, 1, 0)
    blk_b = BlockTemplate(2, {(): 1, (0,): 2, (1,): 2})
    return BlockMeasure(fam, (blk_a, blk_b), (0.5, 0.5))


def random_contraction(rng, dim, sig_lo, sig_hi):
    """Random map with spectrum drawn exactly inside [sig_lo, sig_hi]."""
    sig = np.sort(rng.uniform(sig_lo, sig_hi, size=dim))[::-1]
    if dim == 1:
        lin = np.array([[sig[0] * rng.choice([-1.0, 1.0])]])
    else:
        u, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
        v, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
        lin = u @ np.diag(sig) @ v.T
    return AffineMap(lin, rng.uniform(-1.0, 1.0, size=dim))


def random_family(seed, dim=2, n_labels=2, max_maps=2, sig_lo=0.25, sig_hi=0.45):
    rng = np.random.default_rng(seed)
    systems = []
    for _ in range(n_labels):
        n_maps = int(rng.integers(1, max_maps + 1))
        systems.append(
            tuple(random_contraction(rng, dim, sig_lo, sig_hi) for _ in range(n_maps))
        )
    return IfsFamily(tuple(systems), sig_lo, sig_hi, trans_bound=float(np.sqrt(dim)))


def random_template(rng, family, max_depth=2):
    depth = int(rng.integers(1, max_depth + 1))
    labels = {}
    frontier = [()]
    for _ in range(depth):
        nxt = []
        for w in frontier:
            lam = int(rng.integers(family.n_labels))
            labels[w] = lam
            nxt.extend(w + (i,) for i in range(len(family.systems[lam])))
        frontier = nxt
    return BlockTemplate(depth, labels)


def random_measure(seed, dim=2, n_templates=2, **family_kwargs):
    rng = np.random.default_rng(seed)
    family = random_family(rng.integers(2**32), dim=dim, **family_kwargs)
    templates = tuple(random_template(rng, family) for _ in range(n_templates))
    weights = rng.uniform(0.2, 1.0, size=n_templates)
    weights /= weights.sum()
    weights[-1] = 1.0 - float(weights[:-1].sum())
    return BlockMeasure(family, templates, tuple(float(w) for w in weights))


def random_sampled_tree(seed, n_blocks=8, dim=2, **kwargs):
    measure = random_measure(seed, dim=dim, **kwargs)
    return sample_tree(measure, n_blocks, seed + 1)


@pytest.fixture
def cantor_family():
    return make_cantor_family()


@pytest.fixture
def cantor_tree(cantor_family):
    block = uniform_block(cantor_family, 1, 0)
    measure = BlockMeasure(cantor_family, (block,), (1.0,))
    return sample_tree(measure, 30, 1)


@pytest.fixture
def diag_family():
    return make_diag_family()


@pytest.fixture
def diag_tree(diag_family):
    block = uniform_block(diag_family, 1, 0)
    measure = BlockMeasure(diag_family, (block,), (1.0,))
    return sample_tree(measure, 14, 1)


@pytest.fixture
def two_template_measure():
    return make_two_template_measure()
