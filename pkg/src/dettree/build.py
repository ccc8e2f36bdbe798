"""Tree construction: recursive equal-size splitting driven by a local
goodness-of-fit test.

At each node the marginal model is fitted per dimension (moment-matched
theta for linear order, theta = 0 for constant order) and compared with the
samples through two-sided binomial tests of the observed cell counts below
the normalized quartile points 1/4, 1/2, 3/4 against the mass the fitted
marginal puts there, Bonferroni-combined into one per-dimension p-value.
The half-mass statistic alone is blind to misfit that is symmetric about
the midpoint (a centered bell inside a cell matches its lower-half mass
exactly), so the quartile thresholds are what let refinement reach regions
where the density is curved but balanced. The node is split along the least
compatible dimension when the combined test rejects; otherwise it becomes a
leaf. Construction is a pure function of (ensemble, config), so rebuilding
from identical input yields a bit-identical tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    Cuboid,
    DetNode,
    DetTree,
    DistributionElement,
    MarginalModel,
    MarginalOrder,
    Split,
)

__all__ = [
    "Ensemble",
    "BuildConfig",
    "root_cuboid",
    "estimate_theta",
    "split_pvalue",
    "fit_pvalue",
    "build_tree",
]

# Node sizes up to this use the exact binomial tail; larger ones use the
# normal approximation with continuity correction.
EXACT_BINOMIAL_LIMIT = 30


@dataclass(frozen=True, eq=False)
class Ensemble:
    """n x d matrix of samples plus column names (default x1..xd)."""

    data: np.ndarray
    column_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValueError("ensemble data must be a 2-D array")
        n, d = data.shape
        if n < 1 or d < 1:
            raise ValueError("ensemble needs at least one sample and one dimension")
        if not np.all(np.isfinite(data)):
            raise ValueError("ensemble data must be finite")
        data.setflags(write=False)
        names = tuple(self.column_names)
        if not names:
            names = tuple(f"x{i + 1}" for i in range(d))
        if len(names) != d:
            raise ValueError("need one column name per dimension")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dims(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class BuildConfig:
    order: MarginalOrder = MarginalOrder.LINEAR
    alpha: float = 0.01
    min_leaf_count: int = 10
    max_depth: int = 40
    bounds_padding_rel: float = 1e-9

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.min_leaf_count < 1:
            raise ValueError("min_leaf_count must be at least 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if not self.bounds_padding_rel >= 0.0:
            raise ValueError("bounds_padding_rel must be nonnegative")


def root_cuboid(ensemble: Ensemble, padding_rel: float) -> Cuboid:
    """Bounding box of the data, each side padded by ``padding_rel`` times the
    per-dimension range. A zero-range dimension is padded by
    ``padding_rel * max(1, |value|)`` so every width is strictly positive.
    """
    lo = ensemble.data.min(axis=0)
    hi = ensemble.data.max(axis=0)
    span = hi - lo
    degenerate = span == 0.0
    pad = padding_rel * np.where(degenerate, np.maximum(1.0, np.abs(lo)), span)
    if np.any(degenerate) and padding_rel == 0.0:
        raise ValueError("degenerate data range needs a positive bounds padding")
    lower = lo - pad
    upper = hi + pad
    # Guard against padding that vanishes in rounding on a degenerate range.
    bad = ~(lower < upper)
    if np.any(bad):
        lower = np.where(bad, np.nextafter(lo, -np.inf), lower)
        upper = np.where(bad, np.nextafter(hi, np.inf), upper)
    return Cuboid(lower, upper)


def estimate_theta(values: np.ndarray, lo: float, hi: float) -> float:
    """Moment-matched slope: E[t] = 1/2 + theta/6 for the linear marginal, so
    theta_hat = 6*(mean(t) - 1/2), clamped into [-1, 1]. Empty input gives 0.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return 0.0
    t = (values - lo) / (hi - lo)
    theta = 6.0 * (float(t.mean()) - 0.5)
    return min(max(theta, -1.0), 1.0)


def split_pvalue(values: np.ndarray, lo: float, hi: float, theta: float) -> float:
    """Two-sided binomial test of the count below the midpoint against the
    fitted marginal's lower-half mass F(1/2) = 1/2 - theta/4.

    Exact doubled-tail for up to EXACT_BINOMIAL_LIMIT values, normal
    approximation with continuity correction beyond.
    """
    return _threshold_pvalue(values, lo, hi, theta, 0.5)


def fit_pvalue(values: np.ndarray, lo: float, hi: float, theta: float) -> float:
    """Per-dimension goodness-of-fit p-value used by the builder: binomial
    threshold tests at the normalized quartile points 1/4, 1/2, 3/4,
    Bonferroni-combined (so the false-split rate stays below alpha). Strictly
    more sensitive than the half-mass test alone.
    """
    ps = (
        _threshold_pvalue(values, lo, hi, theta, 0.25),
        _threshold_pvalue(values, lo, hi, theta, 0.5),
        _threshold_pvalue(values, lo, hi, theta, 0.75),
    )
    return min(1.0, 3.0 * min(ps))


def _threshold_pvalue(values: np.ndarray, lo: float, hi: float, theta: float, t: float) -> float:
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("need at least one value")
    # the midpoint form must match the split-assignment arithmetic exactly
    cut = (lo + hi) / 2.0 if t == 0.5 else lo + t * (hi - lo)
    k = int(np.count_nonzero(values < cut))
    m = int(values.size)
    p0 = t * (1.0 + theta * (t - 1.0))  # fitted marginal's mass below t
    if m <= EXACT_BINOMIAL_LIMIT:
        return _binomial_two_sided_exact(k, m, p0)
    return _binomial_two_sided_normal(k, m, p0)


def build_tree(ensemble: Ensemble, config: BuildConfig) -> DetTree:
    """Recursive subdivision: fit marginals, test per-dimension compatibility,
    split the least compatible dimension at its midpoint (ties to the lowest
    index) while the node holds more than ``min_leaf_count`` samples, is
    shallower than ``max_depth``, and some p-value falls below ``alpha``;
    otherwise emit a leaf.

    Samples on a split position go to the upper child (closed-below
    convention), so each sample lands in exactly one leaf. A node whose
    samples are all identical becomes a leaf directly: no split can separate
    them, and the box-halving cascade around the point would otherwise run to
    max_depth.
    """
    box = root_cuboid(ensemble, config.bounds_padding_rel)
    data = ensemble.data
    root = _grow(data, np.arange(ensemble.n), box, 0, config)
    return DetTree(root=root, n=ensemble.n, order=config.order, column_names=ensemble.column_names)


def _grow(data: np.ndarray, idx: np.ndarray, box: Cuboid, depth: int, config: BuildConfig) -> DetNode:
    d = box.dims
    count = int(idx.size)
    if config.order is MarginalOrder.LINEAR and count > 0:
        thetas = [estimate_theta(data[idx, i], float(box.lower[i]), float(box.upper[i])) for i in range(d)]
    else:
        thetas = [0.0] * d

    separable = count > 1 and bool(np.any(data[idx] != data[idx[0]]))
    if separable and count > config.min_leaf_count and depth < config.max_depth:
        pvalues = [
            fit_pvalue(data[idx, i], float(box.lower[i]), float(box.upper[i]), thetas[i])
            for i in range(d)
        ]
        best = min(range(d), key=lambda i: (pvalues[i], i))
        if pvalues[best] < config.alpha:
            position, lo_box, up_box = box.split(best)
            below = data[idx, best] < position
            lower_child = _grow(data, idx[below], lo_box, depth + 1, config)
            upper_child = _grow(data, idx[~below], up_box, depth + 1, config)
            return DetNode(cuboid=box, body=Split(best, position, lower_child, upper_child))

    marginals = tuple(MarginalModel(order=config.order, theta=t) for t in thetas)
    return DetNode(cuboid=box, body=DistributionElement(cuboid=box, count=count, marginals=marginals))


def _binomial_two_sided_exact(k: int, m: int, p0: float) -> float:
    q0 = 1.0 - p0
    pmf = [math.comb(m, j) * p0**j * q0 ** (m - j) for j in range(m + 1)]
    lower = sum(pmf[: k + 1])
    upper = sum(pmf[k:])
    return min(1.0, 2.0 * min(lower, upper))


def _binomial_two_sided_normal(k: int, m: int, p0: float) -> float:
    mean = m * p0
    sd = math.sqrt(m * p0 * (1.0 - p0))
    lower = _norm_cdf((k + 0.5 - mean) / sd)
    upper = _norm_cdf(-(k - 0.5 - mean) / sd)
    return min(1.0, 2.0 * min(lower, upper))


def _norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))
