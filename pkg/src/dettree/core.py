"""Domain types and exact density/CDF/quantile evaluation for distribution
element trees.

A distribution element (DE) is an axis-aligned cuboid carrying a sample count
and, per dimension, a constant or linear marginal density. A tree of equal-size
cuboid splits whose leaves are DEs defines the density estimate: the sum of the
leaf densities, which at any point reduces to the single containing leaf.

Containment convention: leaf intervals are closed below and open above,
[l, u), except that a face lying on the root cuboid's upper boundary is
closed. This makes the leaves an exact partition of the root cuboid, so every
point (including split boundaries) belongs to exactly one leaf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional, Union

import numpy as np

__all__ = [
    "MarginalOrder",
    "MarginalModel",
    "Cuboid",
    "DistributionElement",
    "Split",
    "DetNode",
    "DetTree",
    "marginal_density",
    "marginal_cdf",
    "marginal_quantile",
    "element_density",
    "det_density",
    "det_density_many",
    "leaf_mass",
    "validate_tree",
]

# Below this, the linear quantile formula degrades to the uniform one.
THETA_TINY = 1e-10


class MarginalOrder(Enum):
    """Polynomial order of the per-dimension marginal densities."""

    CONSTANT = "constant"
    LINEAR = "linear"


@dataclass(frozen=True)
class MarginalModel:
    """Marginal density on one dimension of an element, in normalized
    coordinates t = (x - lo)/(hi - lo):

        p(t | theta) = 1 + theta * (2t - 1),   theta in [-1, 1].

    theta = 0 is the constant (uniform) model; |theta| <= 1 keeps the density
    nonnegative, and the family is self-normalizing on [0, 1].
    """

    order: MarginalOrder
    theta: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ValueError("theta must be finite")
        if not -1.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [-1, 1], got {self.theta}")
        if self.order is MarginalOrder.CONSTANT and self.theta != 0.0:
            raise ValueError("constant-order marginal requires theta = 0")


@dataclass(frozen=True, eq=False)
class Cuboid:
    """Axis-aligned box with strictly positive widths and finite bounds."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.ascontiguousarray(self.lower, dtype=np.float64)
        upper = np.ascontiguousarray(self.upper, dtype=np.float64)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError("lower and upper must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("cuboid bounds must be finite")
        if not np.all(lower < upper):
            raise ValueError("cuboid widths must be strictly positive")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dims(self) -> int:
        return self.lower.shape[0]

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def midpoint(self, dim: int) -> float:
        return (float(self.lower[dim]) + float(self.upper[dim])) / 2.0

    def contains(self, x: np.ndarray, upper_closed=None) -> bool:
        """Containment test under the closed-below/open-above convention.

        ``upper_closed`` marks faces that lie on the root boundary and are
        therefore closed; ``None`` treats every upper face as closed (a
        standalone cuboid is its own root).
        """
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.lower.shape:
            raise ValueError(f"point has {x.shape[0] if x.ndim else 0} components, expected {self.dims}")
        if upper_closed is None:
            upper_ok = np.all(x <= self.upper)
        else:
            upper_ok = np.all((x < self.upper) | (upper_closed & (x <= self.upper)))
        return bool(np.all(x >= self.lower) and upper_ok)

    def split(self, dim: int) -> tuple[float, "Cuboid", "Cuboid"]:
        """Equal-size split: two children partitioning this cuboid at the
        midpoint of ``dim``. Bound arrays are shared except along ``dim``, so
        boundary coordinates stay bit-identical across levels.
        """
        position = self.midpoint(dim)
        lo_upper = self.upper.copy()
        lo_upper[dim] = position
        hi_lower = self.lower.copy()
        hi_lower[dim] = position
        return position, Cuboid(self.lower, lo_upper), Cuboid(hi_lower, self.upper)


@dataclass(frozen=True, eq=False)
class DistributionElement:
    """Atom of the estimator: a cuboid, the number of samples it received,
    and one marginal model per dimension. Empty elements carry theta = 0
    everywhere and zero mass.
    """

    cuboid: Cuboid
    count: int
    marginals: tuple[MarginalModel, ...]

    def __post_init__(self):
        if len(self.marginals) != self.cuboid.dims:
            raise ValueError("need exactly one marginal model per dimension")
        if self.count < 0:
            raise ValueError("count must be nonnegative")
        if self.count == 0 and any(m.theta != 0.0 for m in self.marginals):
            raise ValueError("empty element must have theta = 0 in every dimension")

    @property
    def thetas(self) -> np.ndarray:
        return np.array([m.theta for m in self.marginals])


@dataclass(frozen=True, eq=False)
class Split:
    """Internal-node payload: dimension, midpoint position, two children."""

    dim: int
    position: float
    lower_child: "DetNode"
    upper_child: "DetNode"


@dataclass(frozen=True, eq=False)
class DetNode:
    """Binary-tree node: either a leaf holding a DistributionElement or an
    equal-size split with two children."""

    cuboid: Cuboid
    body: Union[DistributionElement, Split]

    @property
    def is_leaf(self) -> bool:
        return isinstance(self.body, DistributionElement)


@dataclass(frozen=True, eq=False)
class DetTree:
    """Distribution element tree over a root cuboid.

    Immutable after construction; density evaluation is pure, so any number
    of threads may read concurrently.
    """

    root: DetNode
    n: int
    order: MarginalOrder
    column_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("tree must be built from at least one sample")
        names = tuple(self.column_names)
        if not names:
            names = tuple(f"x{i + 1}" for i in range(self.dims))
        if len(names) != self.dims:
            raise ValueError("need one column name per dimension")
        object.__setattr__(self, "column_names", names)

    @property
    def dims(self) -> int:
        return self.root.cuboid.dims

    def iter_leaves(self) -> Iterator[DistributionElement]:
        """Leaves in depth-first order, lower child before upper child."""
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                yield node.body
            else:
                stack.append(node.body.upper_child)
                stack.append(node.body.lower_child)

    def leaf_list(self) -> list[DistributionElement]:
        return list(self.iter_leaves())

    def leaf_for(self, x) -> Optional[DistributionElement]:
        """The unique leaf containing ``x``, or None outside the root cuboid."""
        x = np.asarray(x, dtype=np.float64)
        if not self.root.cuboid.contains(x):
            return None
        node = self.root
        while not node.is_leaf:
            split = node.body
            node = split.upper_child if x[split.dim] >= split.position else split.lower_child
        return node.body

    def upper_closed(self, cuboid: Cuboid) -> np.ndarray:
        """Per-dimension flags: which upper faces of ``cuboid`` lie on the
        root boundary (and are therefore closed)."""
        return cuboid.upper == self.root.cuboid.upper


def marginal_density(model: MarginalModel, lo: float, hi: float, x: float) -> float:
    """Density p[x | theta] = (1 + theta*(2t - 1)) / (hi - lo) with
    t = (x - lo)/(hi - lo). Nonnegative on [lo, hi] and integrates to one.
    """
    t = _normalize(lo, hi, x)
    return (1.0 + model.theta * (2.0 * t - 1.0)) / (hi - lo)


def marginal_cdf(model: MarginalModel, lo: float, hi: float, x: float) -> float:
    """CDF of the marginal: F(t) = (1 - theta)*t + theta*t^2, evaluated as
    t*(1 + theta*(t - 1)) so the endpoints land on exactly 0 and 1.
    """
    t = _normalize(lo, hi, x)
    return t * (1.0 + model.theta * (t - 1.0))


def marginal_quantile(model: MarginalModel, lo: float, hi: float, y: float) -> float:
    """Inverse CDF. Solves theta*t^2 + (1 - theta)*t = y via the
    cancellation-stable root t = 2y / ((1 - theta) + sqrt((1-theta)^2 + 4*theta*y));
    near theta = 0 this degrades to the uniform quantile t = y.
    """
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"quantile argument must lie in [0, 1], got {y}")
    theta = model.theta
    if y == 0.0:
        return lo
    if y == 1.0:
        return hi
    if abs(theta) < THETA_TINY:
        t = y
    else:
        disc = (1.0 - theta) ** 2 + 4.0 * theta * y
        t = 2.0 * y / ((1.0 - theta) + math.sqrt(max(disc, 0.0)))
        t = min(max(t, 0.0), 1.0)
    return lo + t * (hi - lo)


def element_density(de: DistributionElement, x, n: int, upper_closed=None) -> float:
    """Density contributed by one element: (count/n) times the product of its
    marginal densities, or 0 outside the cuboid (under the containment
    convention; see ``Cuboid.contains`` for the ``upper_closed`` flags).
    """
    if n < 1:
        raise ValueError("total sample count must be at least 1")
    x = np.asarray(x, dtype=np.float64)
    if not de.cuboid.contains(x, upper_closed):
        return 0.0
    value = de.count / n
    for i, model in enumerate(de.marginals):
        value *= marginal_density(model, float(de.cuboid.lower[i]), float(de.cuboid.upper[i]), float(x[i]))
    return value


def det_density(tree: DetTree, x) -> float:
    """Estimated density at ``x``: the containing leaf's element density
    (equivalently the sum over all leaves, the others vanishing by
    disjointness); 0 outside the root cuboid.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (tree.dims,):
        raise ValueError(f"point has shape {x.shape}, expected ({tree.dims},)")
    leaf = tree.leaf_for(x)
    if leaf is None:
        return 0.0
    return element_density(leaf, x, tree.n, upper_closed=tree.upper_closed(leaf.cuboid))


def det_density_many(tree: DetTree, points) -> np.ndarray:
    """Vectorized ``det_density`` over an (m, d) batch: one tree descent with
    index partitioning instead of m walks. Arithmetic matches the scalar path
    operation for operation, so results are bit-identical to it.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != tree.dims:
        raise ValueError(f"points must have shape (m, {tree.dims})")
    out = np.zeros(pts.shape[0])
    root = tree.root
    inside = np.all(pts >= root.cuboid.lower, axis=1) & np.all(pts <= root.cuboid.upper, axis=1)
    stack: list[tuple[DetNode, np.ndarray]] = [(root, np.flatnonzero(inside))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if node.is_leaf:
            de = node.body
            if de.count == 0:
                continue
            values = np.full(idx.size, de.count / tree.n)
            for i, model in enumerate(de.marginals):
                lo = float(de.cuboid.lower[i])
                hi = float(de.cuboid.upper[i])
                t = (pts[idx, i] - lo) / (hi - lo)
                values *= (1.0 + model.theta * (2.0 * t - 1.0)) / (hi - lo)
            out[idx] = values
        else:
            split = node.body
            below = pts[idx, split.dim] < split.position
            stack.append((split.lower_child, idx[below]))
            stack.append((split.upper_child, idx[~below]))
    return out


def leaf_mass(de: DistributionElement, n: int) -> float:
    """Probability mass of an element, count/n: the marginals integrate to
    one, so the element's integral over its cuboid is just its sample share.
    """
    if n < 1:
        raise ValueError("total sample count must be at least 1")
    return de.count / n


def validate_tree(tree: DetTree) -> None:
    """Check the structural invariants; raises ValueError on violation.

    Verifies split positions are exact midpoints, children exactly partition
    their parent, leaf counts sum to n, empty leaves carry zero theta, and
    every theta is in range (the MarginalModel constructor enforces the last
    on the happy path, but deserialized documents go through here too).
    """
    total = 0
    stack = [tree.root]
    while stack:
        node = stack.pop()
        cub = node.cuboid
        if node.is_leaf:
            de = node.body
            if de.cuboid is not cub and not (
                np.array_equal(de.cuboid.lower, cub.lower) and np.array_equal(de.cuboid.upper, cub.upper)
            ):
                raise ValueError("leaf element cuboid differs from its node cuboid")
            total += de.count
        else:
            split = node.body
            if not 0 <= split.dim < tree.dims:
                raise ValueError(f"split dimension {split.dim} out of range")
            if split.position != cub.midpoint(split.dim):
                raise ValueError("split position is not the cuboid midpoint")
            lo_c, up_c = split.lower_child.cuboid, split.upper_child.cuboid
            expect_lo_upper = cub.upper.copy()
            expect_lo_upper[split.dim] = split.position
            expect_hi_lower = cub.lower.copy()
            expect_hi_lower[split.dim] = split.position
            if not (
                np.array_equal(lo_c.lower, cub.lower)
                and np.array_equal(lo_c.upper, expect_lo_upper)
                and np.array_equal(up_c.lower, expect_hi_lower)
                and np.array_equal(up_c.upper, cub.upper)
            ):
                raise ValueError("children do not exactly partition their parent cuboid")
            stack.append(split.lower_child)
            stack.append(split.upper_child)
    if total != tree.n:
        raise ValueError(f"leaf counts sum to {total}, expected n = {tree.n}")


def _normalize(lo: float, hi: float, x: float) -> float:
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if x < lo or x > hi:
        raise ValueError(f"{x} outside the marginal support [{lo}, {hi}]")
    return (x - lo) / (hi - lo)
