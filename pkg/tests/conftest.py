import math

import numpy as np
import pytest

from dettree import (
    BuildConfig,
    Condition,
    DetTree,
    Ensemble,
    GaussianSpec,
    build_tree,
    det_density,
    marginal_density,
    sample_gaussian,
)

REF_COV = np.array([[0.35, 0.25, 0.5], [0.25, 0.4, 0.6], [0.5, 0.6, 1.0]])


@pytest.fixture(scope="session")
def ref_gaussian():
    return GaussianSpec(mu=np.zeros(3), cov=REF_COV)


@pytest.fixture(scope="session")
def gaussian_tree_small(ref_gaussian):
    """Tree from 10^3 draws of the 3-D reference Gaussian."""
    data = sample_gaussian(ref_gaussian, 424, 1000)
    return build_tree(Ensemble(data), BuildConfig())


def random_ensemble(seed: int, n: int, d: int) -> Ensemble:
    """Mixed-shape test data: correlated Gaussian plus a uniform block."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((d, d))
    core = rng.standard_normal((n * 3 // 4, d)) @ (np.eye(d) + 0.5 * a)
    block = rng.uniform(-2.0, 2.0, size=(n - core.shape[0], d))
    return Ensemble(np.vstack([core, block]))


def build_random_tree(seed: int, n: int = 1000, d: int = 2, **config):
    return build_tree(random_ensemble(seed, n, d), BuildConfig(**config))


def exhaustive_conditioned_leaves(tree: DetTree, cond: Condition):
    """Brute-force oracle: scan every leaf, apply the containment convention
    and the weight formula directly (same arithmetic order as the library)."""
    root_upper = tree.root.cuboid.upper
    leaves = []
    weights = []
    for de in tree.iter_leaves():
        ok = True
        for dim, value in cond.entries:
            lo = de.cuboid.lower[dim]
            hi = de.cuboid.upper[dim]
            closed = hi == root_upper[dim]
            if not (value >= lo and (value < hi or (closed and value <= hi))):
                ok = False
                break
        if not ok:
            continue
        w = de.count / tree.n
        for dim, value in cond.entries:
            w *= marginal_density(de.marginals[dim], float(de.cuboid.lower[dim]), float(de.cuboid.upper[dim]), value)
        leaves.append(de)
        weights.append(w)
    return leaves, np.array(weights)


def leafwise_quadrature_total(tree: DetTree) -> float:
    """Independent mass oracle: 2-point tensor Gauss-Legendre per leaf (exact
    for the per-dimension linear densities), summed through det_density."""
    nodes = np.array([-1.0, 1.0]) / math.sqrt(3.0)
    total = 0.0
    d = tree.dims
    for de in tree.iter_leaves():
        lower, upper = de.cuboid.lower, de.cuboid.upper
        half = (upper - lower) / 2.0
        center = (upper + lower) / 2.0
        leaf_total = 0.0
        for combo in np.ndindex(*([2] * d)):
            x = center + half * nodes[list(combo)]
            leaf_total += det_density(tree, x)
        total += leaf_total * float(np.prod(half))
    return total
