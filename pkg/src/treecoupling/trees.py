"""Merge trees, their metric realizations, and basic constructions.

A merge tree is a finite rooted tree whose vertex heights strictly increase
from child to parent.  Its metric realization glues an interval to every
edge and an infinite upward ray to the root; points of that space are
represented by :class:`MetricPoint`.

Main entry points
-----------------
validate_tree        build a :class:`MergeTree` from raw records
single_linkage_tree  dendrogram of a point cloud (Vietoris-Rips in dim 0)
perturb_to_generic   deterministic tie-breaking jitter on heights
len_lvl              the depth/level bookkeeping used by the bottom-up solver
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ValidationError

# relation codes between two vertices of the same tree
LT, GT, EQ, INC = -1, 1, 0, 2


@dataclass(frozen=True)
class MetricPoint:
    """A location on the metric realization of a merge tree.

    ``carrier`` is the child vertex of the edge the point lies on, or
    ``None`` for the root ray.  Points are canonical: the carrier is the
    unique vertex ``c`` with ``f(c) <= height < f(parent(c))`` (up to the
    tree's tolerance), so equality of points is plain field equality up to
    height tolerance.
    """

    carrier: Optional[str]
    height: float


class MergeTree:
    """Immutable rooted tree with strictly increasing heights.

    Use :func:`validate_tree` to construct one; the constructor assumes the
    caller already checked the invariants.
    """

    def __init__(self, heights, parent, generic, strict):
        self.height: Dict[str, float] = dict(heights)
        self.parent: Dict[str, Optional[str]] = dict(parent)
        self.ids: Tuple[str, ...] = tuple(sorted(self.height))
        self.children: Dict[str, Tuple[str, ...]] = {v: () for v in self.ids}
        root = None
        for v in self.ids:
            p = self.parent[v]
            if p is None:
                root = v
            else:
                self.children[p] = self.children[p] + (v,)
        self.root: str = root
        self.leaves: Tuple[str, ...] = tuple(
            v for v in self.ids if not self.children[v]
        )
        self.generic = bool(generic)
        self.strict = bool(strict)

        # ancestor chains, v -> (v, parent(v), ..., root)
        self._anc: Dict[str, Tuple[str, ...]] = {}
        for v in self.ids:
            chain = [v]
            while self.parent[chain[-1]] is not None:
                chain.append(self.parent[chain[-1]])
            self._anc[v] = tuple(chain)
        self._anc_set = {v: frozenset(c) for v, c in self._anc.items()}

        hs = [self.height[v] for v in self.ids]
        self.span: float = max(hs) - min(hs) if len(hs) > 1 else 0.0
        self.tol: float = 1e-9 * max(self.span, 1.0)

        # subtree aggregates
        self._sub: Dict[str, Tuple[str, ...]] = {v: () for v in self.ids}
        for v in self.ids:
            for a in self._anc[v]:
                self._sub[a] = self._sub[a] + (v,)
        self.min_height: Dict[str, float] = {
            v: min(self.height[u] for u in self._sub[v]) for v in self.ids
        }
        self.min_vertex: Dict[str, str] = {
            v: min(
                (u for u in self._sub[v]),
                key=lambda u: (self.height[u], u),
            )
            for v in self.ids
        }
        self.sub_leaves: Dict[str, Tuple[str, ...]] = {
            v: tuple(u for u in self._sub[v] if not self.children[u])
            for v in self.ids
        }
        self._subtree_cache: Dict[str, "MergeTree"] = {}

    # ----- combinatorial order -------------------------------------------

    def f(self, v: str) -> float:
        return self.height[v]

    def has(self, v: str) -> bool:
        return v in self.height

    def leq(self, a: str, b: str) -> bool:
        """a <= b in the tree order (b is an ancestor of a or a itself)."""
        return b in self._anc_set[a]

    def lt(self, a: str, b: str) -> bool:
        return a != b and b in self._anc_set[a]

    def comparable(self, a: str, b: str) -> bool:
        return b in self._anc_set[a] or a in self._anc_set[b]

    def relation(self, a: str, b: str) -> int:
        if a == b:
            return EQ
        if b in self._anc_set[a]:
            return LT
        if a in self._anc_set[b]:
            return GT
        return INC

    def ancestors(self, v: str) -> Tuple[str, ...]:
        """(v, parent(v), ..., root)."""
        return self._anc[v]

    def descendants(self, v: str) -> Tuple[str, ...]:
        """All vertices of sub(v), v included."""
        return self._sub[v]

    def lca(self, vertices: Iterable[str]) -> str:
        vs = list(vertices)
        if not vs:
            raise ValidationError("lca of an empty vertex set")
        for v in vs:
            if v not in self.height:
                raise ValidationError("unknown vertex id %r" % (v,))
        common = set(self._anc_set[vs[0]])
        for v in vs[1:]:
            common &= self._anc_set[v]
        return min(common, key=lambda u: (self.height[u], u))

    def len_lvl(self) -> Dict[str, Tuple[int, int]]:
        """vertex -> (len, lvl) with len(x) = #ancestors of x, x included."""
        lens = {v: len(self._anc[v]) for v in self.ids}
        len_t = max(lens.values())
        return {v: (lens[v], len_t - lens[v]) for v in self.ids}

    def subtree(self, v: str) -> "MergeTree":
        """The merge tree rooted at v (cached)."""
        if v not in self._subtree_cache:
            keep = set(self._sub[v])
            h = {u: self.height[u] for u in keep}
            p = {
                u: (self.parent[u] if u != v else None)
                for u in keep
            }
            self._subtree_cache[v] = MergeTree(h, p, self.generic, False)
        return self._subtree_cache[v]

    # ----- metric points --------------------------------------------------

    def point(self, carrier: Optional[str], height: float) -> MetricPoint:
        """Canonical point at ``height`` on the upward path from ``carrier``.

        ``carrier=None`` addresses the root ray.  The height may exceed the
        carrier's edge; the carrier is then walked up to the right edge.
        """
        h = float(height)
        if carrier is None:
            if h < self.height[self.root] - self.tol:
                raise ValidationError(
                    "height %g below the root ray start %g"
                    % (h, self.height[self.root])
                )
            return MetricPoint(None, max(h, self.height[self.root]))
        if carrier not in self.height:
            raise ValidationError("unknown carrier %r" % (carrier,))
        if h < self.height[carrier] - self.tol:
            raise ValidationError(
                "height %g below carrier %r at %g"
                % (h, carrier, self.height[carrier])
            )
        # the carrier walks up with a tol slack so that float error cannot
        # strand a point on the wrong branch, but the height is kept exact
        c = carrier
        while True:
            p = self.parent[c]
            if p is None:
                if h >= self.height[c] - self.tol:
                    return MetricPoint(None, h)
                return MetricPoint(c, h)
            if h >= self.height[p] - self.tol:
                c = p
                continue
            return MetricPoint(c, h)

    def vertex_point(self, v: str) -> MetricPoint:
        return self.point(v, self.height[v])

    def lowest_vertex(self, p: MetricPoint) -> str:
        """L(p): the highest vertex on or below p along its edge."""
        return self.root if p.carrier is None else p.carrier

    def point_leq(self, p: MetricPoint, q: MetricPoint) -> bool:
        if p.height > q.height + self.tol:
            return False
        if q.carrier is None:
            return True
        if p.carrier is None:
            # p on the ray but q below the root: only the near-equal fringe
            return q.carrier == self.root or self.leq(self.root, q.carrier)
        return q.carrier in self._anc_set[p.carrier]

    def points_equal(self, p: MetricPoint, q: MetricPoint) -> bool:
        return self.point_leq(p, q) and self.point_leq(q, p)

    def point_lt(self, p: MetricPoint, q: MetricPoint) -> bool:
        return self.point_leq(p, q) and not self.point_leq(q, p)

    def path_distance(self, p: MetricPoint, q: MetricPoint) -> float:
        """Shortest-path distance 2 f(join) - f(p) - f(q)."""
        if self.point_leq(p, q):
            return q.height - p.height
        if self.point_leq(q, p):
            return p.height - q.height
        j = self.lca([self.lowest_vertex(p), self.lowest_vertex(q)])
        return 2.0 * self.height[j] - p.height - q.height

    def shift_point(self, p: MetricPoint, k: float) -> MetricPoint:
        """Structural map s^k: the unique point above p at height f(p)+k."""
        if k < -self.tol:
            raise ValidationError("structural shift needs k >= 0, got %g" % k)
        return self.point(p.carrier, p.height + max(k, 0.0))

    def join_points(self, p: MetricPoint, q: MetricPoint) -> MetricPoint:
        """The lowest point above both p and q."""
        if self.point_leq(p, q):
            return q
        if self.point_leq(q, p):
            return p
        j = self.lca([self.lowest_vertex(p), self.lowest_vertex(q)])
        return self.vertex_point(j)

    # ----- serialization --------------------------------------------------

    def to_dict(self) -> dict:
        nodes = [
            {"id": v, "height": self.height[v], "parent": self.parent[v]}
            for v in self.ids
        ]
        return {"nodes": nodes, "generic": self.generic}

    def __repr__(self):
        return "MergeTree(%d vertices, %d leaves, root=%r)" % (
            len(self.ids), len(self.leaves), self.root,
        )


# ----- validation ---------------------------------------------------------

def validate_tree(raw, strict: bool = False) -> MergeTree:
    """Build a :class:`MergeTree` from raw records, checking all invariants.

    ``raw`` is either ``{"nodes": [...], "generic": bool}`` or the node list
    itself, each node a mapping with ``id``, ``height`` and ``parent``
    (``None`` for the root).  In strict mode the root must have >= 2
    children (unless the tree is a single vertex) and heights must be
    pairwise distinct; outside strict mode equal heights along an edge are
    tolerated so that degenerate linkage output stays representable.
    """
    if isinstance(raw, MergeTree):
        nodes = [
            {"id": v, "height": raw.height[v], "parent": raw.parent[v]}
            for v in raw.ids
        ]
    elif isinstance(raw, dict):
        nodes = raw.get("nodes")
    else:
        nodes = raw
    if not nodes:
        raise ValidationError("empty tree record set")

    errors: List[str] = []
    heights: Dict[str, float] = {}
    parent: Dict[str, Optional[str]] = {}
    for rec in nodes:
        vid = str(rec["id"])
        if vid in heights:
            errors.append("duplicate vertex id %r" % vid)
            continue
        h = float(rec["height"])
        if not math.isfinite(h):
            errors.append("non-finite height on vertex %r" % vid)
            continue
        heights[vid] = h
        p = rec.get("parent")
        parent[vid] = None if p is None else str(p)
    if errors:
        raise ValidationError("invalid tree", errors)

    roots = [v for v, p in parent.items() if p is None]
    if len(roots) == 0:
        raise ValidationError("no root: every vertex has a parent (cycle)")
    if len(roots) > 1:
        raise ValidationError(
            "multiple roots", ["multiple roots: %s" % ", ".join(sorted(roots))]
        )
    root = roots[0]

    for v, p in parent.items():
        if p is not None and p not in heights:
            errors.append("parent %r of vertex %r is not a vertex" % (p, v))
    if errors:
        raise ValidationError("invalid tree", errors)

    # connectivity / acyclicity: every vertex must reach the root
    for v in heights:
        seen = set()
        u = v
        while u is not None:
            if u in seen:
                errors.append("cycle detected through vertex %r" % v)
                break
            seen.add(u)
            u = parent[u]
        else:
            if root not in seen:
                errors.append("vertex %r is disconnected from the root" % v)
    if errors:
        raise ValidationError("invalid tree", errors)

    for v, p in parent.items():
        if p is None:
            continue
        if strict and heights[v] >= heights[p]:
            errors.append(
                "non-increasing height on edge (%s,%s)" % (v, p)
            )
        elif not strict and heights[v] > heights[p]:
            errors.append(
                "non-increasing height on edge (%s,%s)" % (v, p)
            )
    if errors:
        raise ValidationError("invalid tree", errors)

    n_children = {v: 0 for v in heights}
    for v, p in parent.items():
        if p is not None:
            n_children[p] += 1
    if strict and len(heights) > 1 and n_children[root] < 2:
        raise ValidationError(
            "root %r has order %d < 2" % (root, n_children[root])
        )

    by_height: Dict[float, List[str]] = {}
    for v, h in heights.items():
        by_height.setdefault(h, []).append(v)
    dups = [sorted(vs) for vs in by_height.values() if len(vs) > 1]
    if strict and dups:
        raise ValidationError(
            "invalid tree",
            ["duplicate heights {%s}" % ",".join(vs) for vs in dups],
        )
    generic = not dups
    return MergeTree(heights, parent, generic, strict)


def len_lvl(tree: MergeTree) -> Dict[str, Tuple[int, int]]:
    """Module-level alias for :meth:`MergeTree.len_lvl`."""
    return tree.len_lvl()


def lca(tree: MergeTree, vertices: Iterable[str]) -> str:
    return tree.lca(vertices)


def path_distance(tree: MergeTree, p: MetricPoint, q: MetricPoint) -> float:
    return tree.path_distance(p, q)


# ----- point clouds and single linkage ------------------------------------

@dataclass(frozen=True)
class PointCloud:
    """Either raw planar coordinates or a precomputed distance matrix."""

    points: Optional[np.ndarray] = None
    matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        if (self.points is None) == (self.matrix is None):
            raise ValidationError(
                "point cloud needs exactly one of points or matrix"
            )
        if self.points is not None:
            pts = np.asarray(self.points, dtype=float)
            if pts.ndim != 2 or pts.shape[1] != 2:
                raise ValidationError("points must be an (n, 2) array")
            if not np.all(np.isfinite(pts)):
                raise ValidationError("non-finite coordinates in point cloud")
            object.__setattr__(self, "points", pts)
        else:
            m = np.asarray(self.matrix, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValidationError("distance matrix must be square")
            if not np.all(np.isfinite(m)):
                raise ValidationError("non-finite entries in distance matrix")
            if np.any(m < 0):
                raise ValidationError("negative entries in distance matrix")
            if np.any(np.abs(np.diag(m)) > 0):
                raise ValidationError("distance matrix diagonal must be zero")
            if not np.allclose(m, m.T):
                raise ValidationError("distance matrix must be symmetric")
            object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return len(self.points) if self.points is not None else len(self.matrix)

    def condensed(self) -> np.ndarray:
        from scipy.spatial.distance import pdist, squareform

        if self.points is not None:
            return pdist(self.points)
        return squareform(self.matrix, checks=False)


def single_linkage_tree(cloud: PointCloud) -> MergeTree:
    """Single linkage dendrogram as a merge tree.

    Leaves ``p000, p001, ...`` sit at height 0, one per point; each merge
    creates an internal vertex ``m000, m001, ...`` at the merge distance.
    The output is never generic (all leaves tie at 0) and may contain flat
    edges when points coincide, so it is built in non-strict mode; run it
    through :func:`perturb_to_generic` before distance computations.
    """
    from scipy.cluster.hierarchy import linkage

    n = cloud.n
    if n < 2:
        raise ValidationError("single linkage needs at least 2 points")
    merges = linkage(cloud.condensed(), method="single")

    width = max(3, len(str(2 * n)))
    heights: Dict[str, float] = {}
    parent: Dict[str, Optional[str]] = {}
    label: Dict[int, str] = {}
    for i in range(n):
        v = "p%0*d" % (width, i)
        heights[v] = 0.0
        parent[v] = None
        label[i] = v
    for k, (i, j, dist, _size) in enumerate(merges):
        m = "m%0*d" % (width, k)
        heights[m] = float(dist)
        parent[m] = None
        parent[label[int(i)]] = m
        parent[label[int(j)]] = m
        label[n + k] = m
    return MergeTree(heights, parent, generic=False, strict=False)


def perturb_to_generic(tree: MergeTree, scale: float) -> MergeTree:
    """Deterministically separate tied heights.

    Vertices are ranked by ``(height, id)``; each member of a tied height
    group is shifted upward by ``rank * scale / (|V| + 1)``, which keeps
    every displacement strictly below ``scale``.  Untied vertices are left
    untouched, so the map is the identity on generic trees.  Raises when
    the jitter would break monotonicity on some edge.
    """
    if scale <= 0:
        raise ValidationError("perturbation scale must be > 0")
    order = sorted(tree.ids, key=lambda v: (tree.height[v], v))
    rank = {v: i for i, v in enumerate(order)}
    by_height: Dict[float, List[str]] = {}
    for v in tree.ids:
        by_height.setdefault(tree.height[v], []).append(v)
    step = scale / (len(tree.ids) + 1)
    heights = dict(tree.height)
    for h, group in by_height.items():
        if len(group) > 1:
            for v in group:
                heights[v] = h + rank[v] * step
    for v in tree.ids:
        p = tree.parent[v]
        if p is not None and heights[v] >= heights[p]:
            raise ValidationError(
                "scale %g too large: edge (%s,%s) would lose monotonicity"
                % (scale, v, p)
            )
    if len(set(heights.values())) != len(heights):
        raise ValidationError(
            "perturbation failed to separate all heights; decrease scale"
        )
    return MergeTree(heights, dict(tree.parent), generic=True, strict=tree.strict)


# ----- file formats -------------------------------------------------------

def load_point_cloud(text: str) -> PointCloud:
    """Parse the CSV point cloud format.

    Either one ``x,y`` row per point (an optional ``x,y`` header is
    skipped), or a square distance matrix introduced by a ``matrix``
    header line.
    """
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValidationError("empty point cloud file")
    if lines[0].lower().startswith("matrix"):
        rows = [[float(c) for c in ln.split(",")] for ln in lines[1:]]
        return PointCloud(matrix=np.array(rows, dtype=float))
    if lines[0].replace(" ", "").lower() in ("x,y", '"x","y"'):
        lines = lines[1:]
    rows = []
    for ln in lines:
        cells = [c for c in ln.split(",") if c.strip() != ""]
        if len(cells) != 2:
            raise ValidationError("expected two columns, got %r" % ln)
        rows.append([float(cells[0]), float(cells[1])])
    return PointCloud(points=np.array(rows, dtype=float))
