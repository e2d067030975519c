"""Parametric compact sets with exact distance oracles and h-net discretizations.

Every variant has Lebesgue measure zero in its ambient space and coinciding
box-counting and Hausdorff dimensions:

* ``FinitePoints``: dimension 0.
* ``Segment``: dimension 1.
* ``Sphere``: the (d-1)-sphere, dimension d-1 (in d = 1, the two points c ± R).
* ``CantorDust``: self-similar with ``m`` copies scaled by ``ρ``; the open set
  condition is checked on construction, so both dimensions equal
  ``ln m / ln(1/ρ)``.
* ``Product``: dimensions add because each factor has equal box and
  Hausdorff dimension.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

#: Every level net is ``c·h``-separated with this constant.
NET_SEPARATION = 0.5


@dataclass(frozen=True)
class Discretization:
    """Points within ``h`` of every point of the set, pairwise at least ``spacing`` apart."""

    points: np.ndarray
    h: float
    level: int
    spacing: float

    def __len__(self):
        return len(self.points)


def _min_separation(points):
    if len(points) < 2:
        return math.inf
    dist, _ = cKDTree(points).query(points, k=2)
    return float(dist[:, 1].min())


def _thin(points, radius):
    """Greedy maximal subset whose points are pairwise >= radius apart."""
    tree = cKDTree(points)
    keep = np.ones(len(points), dtype=bool)
    for i in range(len(points)):
        if not keep[i]:
            continue
        for j in tree.query_ball_point(points[i], radius * (1 - 1e-12)):
            if j != i:
                keep[j] = False
    return points[keep]


def _as_points(x, dim):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[-1] != dim:
        raise ValueError(f"point dimension {x.shape[-1]} does not match ambient dimension {dim}")
    return x, single


class CompactSet:
    """Base class: subclasses implement ``_distance`` and ``_net``."""

    dim: int
    dimensions_coincide = True

    def distance(self, x, **kw):
        """Euclidean distance from x (shape (d,) or (n, d)) to the set."""
        pts, single = _as_points(x, self.dim)
        out = self._distance(pts, **kw)
        return float(out[0]) if single else out

    def discretize(self, level: int) -> Discretization:
        if level < 0:
            raise ValueError("level must be >= 0")
        points, h = self._net(level)
        points = np.asarray(points, dtype=float).reshape(-1, self.dim)
        return Discretization(points, float(h), level, _min_separation(points))

    @property
    def is_finite(self) -> bool:
        return False

    @property
    def similarity_dimension(self) -> float:
        raise NotImplementedError

    def bounding_box(self):
        pts = self.discretize(0).points
        return pts.min(axis=0), pts.max(axis=0)

    def spec(self) -> dict:
        raise NotImplementedError


class FinitePoints(CompactSet):
    """A finite (possibly empty) set of points."""

    def __init__(self, points, dim=None):
        pts = np.asarray(points, dtype=float)
        if pts.size == 0:
            if dim is None:
                raise ValueError("an empty point set needs an explicit dimension")
            pts = pts.reshape(0, int(dim))
        elif pts.ndim == 1:
            pts = pts.reshape(-1, 1) if dim in (None, 1) else pts.reshape(1, -1)
        self.points = pts
        self.dim = int(pts.shape[1])

    @property
    def is_finite(self):
        return True

    @property
    def similarity_dimension(self):
        return 0.0

    def _distance(self, x):
        if len(self.points) == 0:
            return np.full(len(x), math.inf)
        return cKDTree(self.points).query(x)[0]

    def _net(self, level):
        return self.points.copy(), 0.0

    def spec(self):
        return {"variant": "points", "dim": self.dim, "points": self.points.tolist()}


class Segment(CompactSet):
    def __init__(self, start, end):
        self.start = np.atleast_1d(np.asarray(start, dtype=float))
        self.end = np.atleast_1d(np.asarray(end, dtype=float))
        if self.start.shape != self.end.shape:
            raise ValueError("segment endpoints must share a dimension")
        self.dim = len(self.start)
        self.length = float(np.linalg.norm(self.end - self.start))
        if self.length == 0:
            raise ValueError("degenerate segment; use FinitePoints")

    @property
    def similarity_dimension(self):
        return 1.0

    def _distance(self, x):
        v = self.end - self.start
        t = np.clip((x - self.start) @ v / (v @ v), 0.0, 1.0)
        foot = self.start + t[:, None] * v
        return np.linalg.norm(x - foot, axis=1)

    def _net(self, level):
        n = 2 ** level
        t = np.linspace(0.0, 1.0, n + 1)[:, None]
        return self.start + t * (self.end - self.start), self.length / n

    def spec(self):
        return {"variant": "segment", "start": self.start.tolist(), "end": self.end.tolist()}


class Sphere(CompactSet):
    def __init__(self, center, radius, dim=None):
        c = np.atleast_1d(np.asarray(center, dtype=float))
        if dim is not None and c.size == 1 and dim > 1:
            c = np.full(int(dim), float(c[0]))
        self.center = c
        self.radius = float(radius)
        self.dim = len(c)
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def similarity_dimension(self):
        return float(self.dim - 1)

    def _distance(self, x):
        return np.abs(np.linalg.norm(x - self.center, axis=1) - self.radius)

    def _net(self, level):
        R, d = self.radius, self.dim
        h = R * 2.0 ** (-level)
        if d == 1:
            return self.center + np.array([[-R], [R]]), 0.0
        if d == 2:
            n = max(3, math.ceil(2 * math.pi * R / h))
            th = 2 * math.pi * np.arange(n) / n
            pts = np.column_stack([np.cos(th), np.sin(th)]) * R + self.center
            return pts, h
        # dense radial projection of a cube-surface grid, then thinned
        k = max(2, math.ceil(4 * math.sqrt(d) * R / h))
        g = np.linspace(-1.0, 1.0, k + 1)
        faces = []
        for axis in range(d):
            for sign in (-1.0, 1.0):
                grids = np.meshgrid(*([g] * (d - 1)), indexing="ij")
                face = np.stack([gr.ravel() for gr in grids], axis=1)
                faces.append(np.insert(face, axis, sign, axis=1))
        cloud = np.unique(np.concatenate(faces), axis=0)
        cloud = cloud / np.linalg.norm(cloud, axis=1, keepdims=True)
        # radial projection is 1-Lipschitz off the ball: cloud covering radius < h/4
        pts = _thin(cloud * R, h / 2) + self.center
        return pts, h

    def spec(self):
        return {"variant": "sphere", "center": self.center.tolist(), "radius": self.radius}


class CantorDust(CompactSet):
    """Self-similar dust ``K = ∪_i (ρ K + t_i)`` inside the unit cube.

    The default template (``copies = 2**dim``) puts the copies in the cube
    corners, giving the d-fold product of the middle-(1-2ρ) Cantor set.
    Distances are exact for the depth-k approximant (union of level-k cells);
    the limit set lies within ``error_radius(k)`` of it.
    """

    def __init__(self, dim=1, ratio=1 / 3, copies=None, template=None):
        self.dim = int(dim)
        self.ratio = float(ratio)
        if not 0 < self.ratio < 0.5:
            raise ValueError("contraction ratio must lie in (0, 1/2)")
        if template is None:
            copies = 2 ** self.dim if copies is None else int(copies)
            if copies != 2 ** self.dim:
                raise ValueError("a non-corner template must be given explicitly")
            template = list(itertools.product([0.0, 1.0 - self.ratio], repeat=self.dim))
        self.template = np.asarray(template, dtype=float).reshape(-1, self.dim)
        self.copies = len(self.template)
        if copies is not None and int(copies) != self.copies:
            raise ValueError("copies does not match template length")
        if np.any(self.template < 0) or np.any(self.template + self.ratio > 1):
            raise ValueError("template cells must lie in the unit cube")
        for i, j in itertools.combinations(range(self.copies), 2):
            if np.all(np.abs(self.template[i] - self.template[j]) < self.ratio):
                raise ValueError("template cells overlap; open set condition fails")
        self.diameter_bound = math.sqrt(self.dim)

    @property
    def similarity_dimension(self):
        return math.log(self.copies) / math.log(1.0 / self.ratio)

    def error_radius(self, depth):
        return self.ratio ** depth * self.diameter_bound

    def depth_for(self, tol):
        """Smallest depth whose approximant is within ``tol`` of the limit set."""
        return max(0, math.ceil(math.log(tol / self.diameter_bound) / math.log(self.ratio)))

    def cells(self, depth):
        """Lower corners of the level-``depth`` cells (side ``ratio**depth``)."""
        corners = np.zeros((1, self.dim))
        for _ in range(depth):
            corners = (self.template[:, None, :] + self.ratio * corners[None, :, :]).reshape(-1, self.dim)
        return corners

    def _distance(self, x, depth=12):
        # branch and bound down the cell tree; a cell's cube contains its subtree
        n = len(x)
        qi = np.arange(n)
        corner = np.zeros((n, self.dim))
        side = 1.0
        for _ in range(depth):
            side *= self.ratio
            qi = np.repeat(qi, self.copies)
            corner = (corner[:, None, :] + self.template[None, :, :] * (side / self.ratio)).reshape(-1, self.dim)
            gap = np.maximum(np.maximum(corner - x[qi], x[qi] - corner - side), 0.0)
            lb = np.linalg.norm(gap, axis=1)
            ub = np.full(n, np.inf)
            np.minimum.at(ub, qi, lb + side * math.sqrt(self.dim))
            keep = lb <= ub[qi]
            qi, corner = qi[keep], corner[keep]
        gap = np.maximum(np.maximum(corner - x[qi], x[qi] - corner - side), 0.0)
        out = np.full(n, np.inf)
        np.minimum.at(out, qi, np.linalg.norm(gap, axis=1))
        return out

    def _net(self, level):
        side = self.ratio ** level
        pts = self.cells(level) + side / 2.0
        return pts, side * math.sqrt(self.dim) / 2.0

    def spec(self):
        return {"variant": "cantor", "dim": self.dim, "ratio": self.ratio,
                "template": self.template.tolist()}


class Product(CompactSet):
    """Cartesian product ``A × B`` in dimension ``A.dim + B.dim``."""

    def __init__(self, first: CompactSet, second: CompactSet):
        self.first, self.second = first, second
        self.dim = first.dim + second.dim

    @property
    def is_finite(self):
        return self.first.is_finite and self.second.is_finite

    @property
    def similarity_dimension(self):
        return self.first.similarity_dimension + self.second.similarity_dimension

    def _distance(self, x):
        a = self.first.distance(x[:, : self.first.dim])
        b = self.second.distance(x[:, self.first.dim:])
        return np.hypot(np.atleast_1d(a), np.atleast_1d(b))

    def _net(self, level):
        A, B = self.first.discretize(level), self.second.discretize(level)
        pa = np.repeat(A.points, len(B.points), axis=0)
        pb = np.tile(B.points, (len(A.points), 1))
        pts = np.hstack([pa, pb])
        h0 = math.hypot(A.h, B.h)
        if h0 == 0:
            return pts, 0.0
        # products of nets are nets but only (1/(2√2))-separated; thin at h0
        return _thin(pts, h0), 2 * h0

    def spec(self):
        return {"variant": "product", "first": self.first.spec(), "second": self.second.spec()}


def from_spec(spec: dict) -> CompactSet:
    """Rebuild a set from the dictionary produced by ``CompactSet.spec``."""
    v = spec["variant"]
    if v == "points":
        return FinitePoints(spec["points"], dim=spec.get("dim"))
    if v == "segment":
        return Segment(spec["start"], spec["end"])
    if v == "sphere":
        return Sphere(spec["center"], spec["radius"])
    if v == "cantor":
        return CantorDust(spec.get("dim", 1), spec.get("ratio", 1 / 3), template=spec.get("template"))
    if v == "product":
        return Product(from_spec(spec["first"]), from_spec(spec["second"]))
    raise ValueError(f"unknown set variant {v!r}")


@dataclass(frozen=True)
class BoxDimension:
    estimate: float
    r_squared: float
    scales: np.ndarray
    counts: np.ndarray = field(repr=False)


def box_dimension(cset: CompactSet, scales, max_points=2_000_000) -> BoxDimension:
    """Least-squares slope of log N(δ) against log(1/δ) over the given box sizes."""
    scales = np.asarray(sorted(scales, reverse=True), dtype=float)
    if len(scales) < 3:
        raise ValueError("box_dimension needs at least three scales")
    x = np.log(1.0 / scales)
    if np.ptp(x) == 0:
        raise ValueError("degenerate regression: all scales equal")
    level = 0
    net = cset.discretize(0)
    while net.h > scales[-1] / 4 and not cset.is_finite:
        nxt = cset.discretize(level + 1)
        if len(nxt) > max_points:
            break
        level += 1
        net = nxt
    counts = np.array([len(np.unique(np.floor(net.points / s + 1e-9), axis=0)) for s in scales])
    y = np.log(counts)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 if ss == 0 else 1.0 - np.sum(resid ** 2) / ss
    return BoxDimension(float(max(slope, 0.0)), float(r2), scales, counts)


def dimension_thresholds(alpha: float, d: int):
    """Critical dimensions ``(d - α, d - 2α)`` for Markov uniqueness and essential self-adjointness."""
    return (d - alpha, d - 2 * alpha)
