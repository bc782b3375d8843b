"""Maps between metric merge trees induced by couplings.

Couplings induce a continuous map alpha_C from the source metric tree to
the target one: coupled vertices go to their partners, deleted vertices to
rule-2/rule-3 images, everything else is interpolated along the unique
path between the surrounding anchors.  Composing with a structural shift
gives the candidate eps-good map alpha_C^eps whose height displacement is
exactly eps everywhere.

This module builds those maps, verifies the eps-good conditions (P1)-(P3)
and the two-sided composition law numerically, and runs the reverse
construction extracting a coupling of cost <= eps from the vertex images
of an eps-good map.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .coupling import (
    COUPLED,
    Coupling,
    CouplingContext,
    coupling_context,
    coupling_norm,
    validate_coupling,
)
from .errors import InternalCheckError, ValidationError
from .trees import MergeTree, MetricPoint


def structural_shift(tree: MergeTree, p: MetricPoint, k: float) -> MetricPoint:
    """s^k: the unique point above p at height f(p) + k (k >= 0)."""
    if k < 0:
        raise ValidationError("structural shift needs k >= 0, got %g" % k)
    return tree.shift_point(p, k)


@dataclass
class InducedMap:
    """alpha_C^eps as finite anchor data plus the interpolation rule.

    ``anchors`` maps every vertex of V_T minus the unused class to its raw
    (eps = 0) image; evaluation shifts so that g(image) = f(p) + eps holds
    exactly at every point.
    """

    source: MergeTree
    target: MergeTree
    coupling: Coupling
    ctx: CouplingContext
    eps: float
    anchors: Dict[str, MetricPoint] = field(default_factory=dict)
    norm: float = 0.0

    def eval(self, p: MetricPoint) -> MetricPoint:
        raw = self._raw(p)
        if self.eps == 0.0:
            return raw
        k = p.height + self.eps - raw.height
        return self.target.shift_point(raw, max(k, 0.0))

    def eval_vertex(self, v: str) -> MetricPoint:
        return self.eval(self.source.vertex_point(v))

    def _raw(self, p: MetricPoint) -> MetricPoint:
        """The continuous extension of the rule-1/2/3 vertex images."""
        T, G = self.source, self.target
        low = T.lowest_vertex(p)

        # l(p): highest anchored vertex below p, preferring coupled on ties
        cands = [
            v for v in T.descendants(low)
            if v in self.anchors and T.height[v] <= p.height + T.tol
        ]
        if not cands:
            raise InternalCheckError("no anchor below point %r" % (p,))
        l = max(
            cands,
            key=lambda v: (T.height[v], self.ctx.t.cls[v] == COUPLED, v),
        )
        img_l = self.anchors[l]
        if abs(p.height - T.height[l]) <= T.tol and p.carrier is not None:
            return img_l

        # u(p): lowest anchored vertex above p, if any
        ups = [
            v for v in T.ancestors(low)
            if v in self.anchors and T.height[v] >= p.height - T.tol
        ]
        if ups:
            u = min(ups, key=lambda v: (T.height[v], v))
            return self._interpolate(img_l, T.height[l], self.anchors[u],
                                     T.height[u], p.height)

        # no anchor above: extend isometrically through the region above
        # the maximal coupled vertex, which continues into the target ray
        top = self.ctx.t.max_coupled
        img_top = self.anchors[top]
        top_pt = T.vertex_point(top)
        if T.point_leq(top_pt, p):
            return G.shift_point(img_top, p.height - T.height[top])
        j = T.lca([low, top])
        img_j = G.shift_point(img_top, T.height[j] - T.height[top])
        return self._interpolate(img_l, T.height[l], img_j, T.height[j],
                                 p.height)

    def _interpolate(self, img_l, f_l, img_u, f_u, h) -> MetricPoint:
        G = self.target
        if f_u - f_l <= G.tol:
            return img_l
        lam = (f_u - h) / (f_u - f_l)
        lam = min(max(lam, 0.0), 1.0)
        hh = lam * img_l.height + (1.0 - lam) * img_u.height
        return G.shift_point(img_l, max(hh - img_l.height, 0.0))


def induced_map(
    tree_t: MergeTree,
    tree_g: MergeTree,
    coupling,
    eps: Optional[float] = None,
) -> InducedMap:
    """Build alpha_C^eps from T to G.

    ``coupling`` is a :class:`Coupling` or a raw pair list (validated here).
    ``eps`` defaults to the coupling's cost; it must not be below it.
    """
    if not isinstance(coupling, Coupling):
        coupling = validate_coupling(tree_t, tree_g, coupling)
    ctx = coupling_context(coupling)
    norm = coupling_norm(ctx).norm_inf
    if eps is None:
        eps = norm
    if eps < norm - tree_t.tol:
        raise ValidationError(
            "eps = %g is below the coupling cost %g" % (eps, norm)
        )

    side = ctx.t
    anchors: Dict[str, MetricPoint] = {}
    for v in tree_t.ids:
        cls = side.cls[v]
        if cls == COUPLED:
            anchors[v] = tree_g.vertex_point(side.partner[v])
        elif cls == "deleted":
            if side.lam[v]:
                anchors[v] = tree_g.vertex_point(side.chi[v])
            else:
                eta = side.eta[v]
                k = max(
                    0.0,
                    tree_t.height[v]
                    + (tree_t.height[side.phi[v]] - tree_t.height[v]) / 2.0
                    - tree_g.height[eta],
                )
                anchors[v] = tree_g.shift_point(tree_g.vertex_point(eta), k)

    # raw anchor images need not be ordered along ancestor chains: a rule-2
    # image can sit above, or on a different branch from, the partner of a
    # coupled ancestor.  The interpolation clamps to the lower anchor and
    # the eps shift restores order, which check_eps_good verifies.
    return InducedMap(
        source=tree_t,
        target=tree_g,
        coupling=coupling,
        ctx=ctx,
        eps=float(eps),
        anchors=anchors,
        norm=norm,
    )


def eval_alpha(imap: InducedMap, p: MetricPoint) -> MetricPoint:
    return imap.eval(p)


# ----- eps-good verification ----------------------------------------------


@dataclass(frozen=True)
class GoodMapReport:
    eps: float
    p1_max_residual: float
    p2_violations: Tuple[Tuple[str, str], ...]
    p3_max_gap: float
    p3_witnesses: Tuple[str, ...]
    samples: int

    @property
    def passed(self) -> bool:
        tol = 1e-9
        return (
            self.p1_max_residual <= tol
            and not self.p2_violations
            and self.p3_max_gap <= 2.0 * self.eps + tol
        )

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "p1_max_residual": self.p1_max_residual,
            "p2_violations": [list(v) for v in self.p2_violations],
            "p3_max_gap": self.p3_max_gap,
            "p3_witnesses": list(self.p3_witnesses),
            "samples": self.samples,
            "passed": self.passed,
        }


def _sample_points(tree: MergeTree, per_edge: int) -> List[Tuple[str, MetricPoint]]:
    """All vertex points, interior edge samples, and two ray points."""
    out: List[Tuple[str, MetricPoint]] = []
    for v in tree.ids:
        out.append((v, tree.vertex_point(v)))
        p = tree.parent[v]
        if p is None:
            continue
        lo, hi = tree.height[v], tree.height[p]
        for i in range(1, per_edge + 1):
            h = lo + (hi - lo) * i / (per_edge + 1.0)
            out.append(("%s+%d" % (v, i), MetricPoint(v, h)))
    step = max(tree.span, 1.0)
    root_h = tree.height[tree.root]
    out.append(("ray+1", MetricPoint(None, root_h + 0.5 * step)))
    out.append(("ray+2", MetricPoint(None, root_h + step)))
    return out


def check_eps_good(imap: InducedMap, samples_per_edge: int = 3) -> GoodMapReport:
    """Numerically verify (P1)-(P3) for alpha_C^eps.

    P1 is evaluated at all sample points, P2 over all ordered sample pairs
    with strictly ordered images, P3 at every target vertex outside the
    image (the image of the map is the upward closure of the leaf images).
    """
    T, G, eps = imap.source, imap.target, imap.eps
    if eps < imap.norm - T.tol:
        raise ValidationError(
            "eps = %g below the coupling cost %g" % (eps, imap.norm)
        )
    samples = _sample_points(T, samples_per_edge)
    images = [(name, p, imap.eval(p)) for name, p in samples]

    p1 = max(abs(q.height - p.height - eps) for _, p, q in images)

    p2_bad: List[Tuple[str, str]] = []
    two_eps = 2.0 * eps
    for name_a, pa, qa in images:
        for name_b, pb, qb in images:
            if name_a >= name_b:
                continue
            for (na, xa, ya), (nb, xb, yb) in (
                ((name_a, pa, qa), (name_b, pb, qb)),
                ((name_b, pb, qb), (name_a, pa, qa)),
            ):
                if G.point_lt(ya, yb):
                    sa = T.shift_point(xa, two_eps)
                    sb = T.shift_point(xb, two_eps)
                    # leq instead of lt: near-ties that look strict under
                    # one tree's tolerance may collapse under the other's
                    if not T.point_leq(sa, sb):
                        p2_bad.append((na, nb))

    leaf_imgs = [imap.eval(T.vertex_point(l)) for l in T.leaves]
    p3_gap = 0.0
    p3_wit: List[str] = []
    for w in G.ids:
        wp = G.vertex_point(w)
        if any(G.point_leq(li, wp) for li in leaf_imgs):
            continue  # w is in the image
        up = min(
            (G.join_points(wp, li) for li in leaf_imgs),
            key=lambda q: q.height,
        )
        gap = up.height - G.height[w]
        if gap > p3_gap:
            p3_gap, p3_wit = gap, [w]
        elif gap == p3_gap and p3_wit:
            p3_wit.append(w)
    return GoodMapReport(
        eps=eps,
        p1_max_residual=p1,
        p2_violations=tuple(p2_bad),
        p3_max_gap=p3_gap,
        p3_witnesses=tuple(p3_wit),
        samples=len(samples),
    )


@dataclass(frozen=True)
class CompositionReport:
    eps: float
    max_height_residual: float
    order_violations: Tuple[str, ...]
    samples: int

    @property
    def passed(self) -> bool:
        return self.max_height_residual <= 1e-9 and not self.order_violations


def check_composition(
    alpha: InducedMap, beta: InducedMap, samples_per_edge: int = 3
) -> CompositionReport:
    """Check beta(alpha(p)) = s^{2 eps}(p) on sampled points.

    Asserted as: the composite sits above p and its height is f(p) + 2 eps.
    """
    T, eps = alpha.source, alpha.eps
    resid = 0.0
    bad: List[str] = []
    samples = _sample_points(T, samples_per_edge)
    for name, p in samples:
        q = beta.eval(alpha.eval(p))
        resid = max(resid, abs(q.height - p.height - 2.0 * eps))
        if not T.point_leq(p, q):
            bad.append(name)
    return CompositionReport(
        eps=eps,
        max_height_residual=resid,
        order_violations=tuple(bad),
        samples=len(samples),
    )


# ----- coupling extraction ------------------------------------------------


def extract_coupling(
    tree_t: MergeTree,
    tree_g: MergeTree,
    alpha,
    eps: float,
) -> Coupling:
    """Recover a coupling of cost <= eps from an eps-good map.

    ``alpha`` is an :class:`InducedMap` or a mapping from every T vertex to
    its image :class:`MetricPoint`.  The construction couples the leaves
    with minimal images to the landing vertices of their images, prunes
    both trees of the untouched vertices, drops single-child vertices, and
    couples the surviving internal vertices top-down whenever the matched
    leaf sets agree through the LCA.
    """
    if isinstance(alpha, InducedMap):
        images = {v: alpha.eval_vertex(v) for v in tree_t.ids}
    else:
        images = dict(alpha)
    missing = [v for v in tree_t.ids if v not in images]
    if missing:
        raise ValidationError("missing images for vertices %s" % missing)

    tol = max(tree_t.tol, tree_g.tol)
    for v in tree_t.ids:
        if abs(images[v].height - tree_t.height[v] - eps) > tol:
            raise ValidationError(
                "P1 fails at vertex %r: image height %g vs f + eps = %g"
                % (v, images[v].height, tree_t.height[v] + eps)
            )
    for a in tree_t.ids:
        for b in tree_t.ids:
            if a != b and tree_t.lt(a, b):
                if not tree_g.point_leq(images[a], images[b]):
                    raise ValidationError(
                        "images not monotone on %r < %r" % (a, b)
                    )

    # leaves with minimal images, coupled to where their images land; on an
    # image tie only one representative per landing vertex survives, chosen
    # so the assembled coupling is cheapest (near-tied leaf heights make
    # the representative pick show up in the deleted siblings' costs)
    selected = [
        v for v in tree_t.leaves
        if not any(
            u != v and tree_g.point_lt(images[u], images[v])
            for u in tree_t.leaves
        )
    ]
    classes: Dict[str, List[str]] = {}
    for v in sorted(selected, key=lambda v: (tree_t.height[v], v)):
        classes.setdefault(tree_g.lowest_vertex(images[v]), []).append(v)
    class_list = sorted(classes.items())

    def assemble(landing: Dict[str, str]) -> Coupling:
        chosen = sorted(landing)
        pairs = [(v, landing[v]) for v in chosen]
        if len(chosen) > 1:
            t_hull = _hull(tree_t, chosen)
            g_leaves = sorted(set(landing.values()))
            internals = sorted(
                (x for x in t_hull if x not in chosen),
                key=lambda x: (-tree_t.height[x], x),
            )
            for i, x in enumerate(internals):
                under = [v for v in chosen if tree_t.leq(v, x)]
                w = tree_g.lca([landing[v] for v in under])
                if i == 0:
                    # hull roots are always coupled
                    pairs.append((x, w))
                    continue
                matched = sorted(u for u in g_leaves if tree_g.leq(u, w))
                if matched == sorted(landing[v] for v in under):
                    pairs.append((x, w))
        return validate_coupling(tree_t, tree_g, pairs)

    n_combos = 1
    for _, vs in class_list:
        n_combos *= len(vs)
    if 1 < n_combos <= 256:
        best: Optional[Tuple[float, Coupling]] = None
        for combo in itertools.product(*(vs for _, vs in class_list)):
            landing = {v: w for (w, _), v in zip(class_list, combo)}
            try:
                c = assemble(landing)
            except ValidationError:
                continue
            norm = coupling_norm(coupling_context(c)).norm_inf
            if best is None or norm < best[0] - 1e-15:
                best = (norm, c)
        if best is not None:
            return best[1]
    return assemble({vs[0]: w for w, vs in class_list})


def _hull(tree: MergeTree, leaves) -> List[str]:
    """Vertices of the leaf hull after dropping single-child chains."""
    kept = set()
    for l in leaves:
        kept.update(tree.ancestors(l))
    leafset = set(leaves)
    out = []
    for v in kept:
        if v in leafset:
            out.append(v)
            continue
        n_child = sum(1 for c in tree.children[v] if set(tree.descendants(c)) & leafset)
        if n_child >= 2:
            out.append(v)
    return sorted(out)
