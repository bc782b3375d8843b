"""Couplings between merge trees: validation, context maps, costs.

A coupling is a set of cross-tree vertex pairs subject to four conditions:

(C1) there is a unique maximal pair in the product order;
(C2) both projections are injective;
(C3) the matching preserves the tree order in both directions;
(C4) no vertex has exactly one maximal coupled strict descendant.

The context built here classifies every vertex of both trees as coupled,
unused (uncoupled with exactly one maximal coupled descendant, free) or
deleted (everything else, costed), and evaluates the auxiliary maps
Lambda, phi, delta, chi, gamma, eta that drive the per-vertex cost cases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .errors import CouplingViolationError, ValidationError
from .trees import EQ, INC, MergeTree

COUPLED, UNUSED, DELETED = "coupled", "unused", "deleted"

# cost case tags
CASE_COUPLE = "couple"
CASE_HALVING = "delete-Λ0-halving"
CASE_ETA = "delete-Λ0-eta"
CASE_MULTI = "delete-Λ>1"
CASE_UNUSED = "unused-zero"


@dataclass(frozen=True)
class Coupling:
    """A validated (or explicitly unchecked) pair set between two trees."""

    tree_t: MergeTree
    tree_g: MergeTree
    pairs: Tuple[Tuple[str, str], ...]

    @staticmethod
    def unchecked(tree_t, tree_g, pairs) -> "Coupling":
        return Coupling(tree_t, tree_g, tuple(sorted(set(map(tuple, pairs)))))

    def transpose(self) -> "Coupling":
        return Coupling.unchecked(
            self.tree_g, self.tree_t, [(b, a) for a, b in self.pairs]
        )

    def to_dict(self) -> dict:
        return {"pairs": [list(p) for p in self.pairs]}


def validate_coupling(tree_t: MergeTree, tree_g: MergeTree, pairs) -> Coupling:
    """Check (C1)-(C4) and return the coupling; raise with all violations."""
    pset = sorted(set((str(a), str(b)) for a, b in pairs))
    violations: List[Tuple[str, str]] = []

    for a, b in pset:
        if not tree_t.has(a):
            violations.append(("ids", "unknown T vertex %r" % a))
        if not tree_g.has(b):
            violations.append(("ids", "unknown G vertex %r" % b))
    if violations:
        raise CouplingViolationError(violations)

    # C2: injective projections
    seen_t: Dict[str, str] = {}
    seen_g: Dict[str, str] = {}
    for a, b in pset:
        if a in seen_t:
            violations.append(
                ("C2", "T vertex %r coupled with both %r and %r" % (a, seen_t[a], b))
            )
        else:
            seen_t[a] = b
        if b in seen_g:
            violations.append(
                ("C2", "G vertex %r coupled with both %r and %r" % (b, seen_g[b], a))
            )
        else:
            seen_g[b] = a

    # C3: order preserved both ways
    for i, (a, b) in enumerate(pset):
        for c, d in pset[i + 1:]:
            if a == c or b == d:
                continue  # already a C2 violation
            rt, rg = tree_t.relation(a, c), tree_g.relation(b, d)
            if rt != rg:
                violations.append(
                    (
                        "C3",
                        "order flip on pairs (%s,%s),(%s,%s): T says %s, G says %s"
                        % (a, b, c, d, _rel_name(rt), _rel_name(rg)),
                    )
                )

    # C1: a unique maximal pair in the product order
    maximal = []
    for a, b in pset:
        dominated = any(
            (c, d) != (a, b) and tree_t.leq(a, c) and tree_g.leq(b, d)
            for c, d in pset
        )
        if not dominated:
            maximal.append((a, b))
    if len(maximal) != 1:
        violations.append(
            (
                "C1",
                "expected one maximal pair, found %d: %s"
                % (len(maximal), maximal),
            )
        )

    # C4: no coupled vertex with exactly one maximal coupled strict descendant
    coupled_t = [a for a, _ in pset]
    coupled_g = [b for _, b in pset]
    for a, b in pset:
        if len(_maximal_below(tree_t, coupled_t, a)) == 1:
            violations.append(
                ("C4", "T vertex %r has exactly one coupled descendant cluster" % a)
            )
        if len(_maximal_below(tree_g, coupled_g, b)) == 1:
            violations.append(
                ("C4", "G vertex %r has exactly one coupled descendant cluster" % b)
            )

    if violations:
        raise CouplingViolationError(violations)
    return Coupling(tree_t, tree_g, tuple(pset))


def _rel_name(r: int) -> str:
    return {-1: "<", 1: ">", 0: "=", 2: "incomparable"}[r]


def _maximal_below(tree: MergeTree, coupled, v: str) -> Tuple[str, ...]:
    """Lambda(v): maximal coupled vertices strictly below v."""
    below = [c for c in coupled if c != v and tree.lt(c, v)]
    out = [
        c
        for c in below
        if not any(d != c and tree.lt(c, d) for d in below)
    ]
    return tuple(sorted(out))


@dataclass
class SideContext:
    """Per-vertex classification and auxiliary maps for one tree of a coupling.

    ``phi_fallback[v]`` is true when no strict ancestor of v has a coupled
    descendant and phi/eta fall back to the maximal coupled vertex and its
    partner.
    """

    tree: MergeTree
    other: MergeTree
    partner: Dict[str, str]
    cls: Dict[str, str] = field(default_factory=dict)
    lam: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    phi: Dict[str, Optional[str]] = field(default_factory=dict)
    delta: Dict[str, Optional[str]] = field(default_factory=dict)
    chi: Dict[str, Optional[str]] = field(default_factory=dict)
    gamma: Dict[str, Optional[str]] = field(default_factory=dict)
    eta: Dict[str, Optional[str]] = field(default_factory=dict)
    phi_fallback: Dict[str, bool] = field(default_factory=dict)
    max_coupled: Optional[str] = None


@dataclass(frozen=True)
class CouplingContext:
    coupling: Coupling
    t: SideContext
    g: SideContext

    def side(self, name: str) -> SideContext:
        return self.t if name == "t" else self.g


def coupling_context(coupling: Coupling) -> CouplingContext:
    """Evaluate classes and auxiliary maps on both sides."""
    t_side = _side_context(
        coupling.tree_t,
        coupling.tree_g,
        {a: b for a, b in coupling.pairs},
    )
    g_side = _side_context(
        coupling.tree_g,
        coupling.tree_t,
        {b: a for a, b in coupling.pairs},
    )
    return CouplingContext(coupling, t_side, g_side)


def _side_context(tree: MergeTree, other: MergeTree, partner) -> SideContext:
    ctx = SideContext(tree=tree, other=other, partner=dict(partner))
    coupled = sorted(partner)
    if coupled:
        tops = [
            c for c in coupled
            if not any(d != c and tree.lt(c, d) for d in coupled)
        ]
        # under (C1) there is exactly one; keep a deterministic pick otherwise
        ctx.max_coupled = sorted(tops)[0] if tops else None

    for v in tree.ids:
        lam = _maximal_below(tree, coupled, v)
        ctx.lam[v] = lam
        if v in partner:
            ctx.cls[v] = COUPLED
        elif len(lam) == 1:
            ctx.cls[v] = UNUSED
        else:
            ctx.cls[v] = DELETED

        # delta: lowest coupled ancestor-or-self
        ctx.delta[v] = next(
            (a for a in tree.ancestors(v) if a in partner), None
        )

        # gamma: partner with minimal height among vertices coupled strictly below
        below = [partner[c] for c in coupled if tree.lt(c, v)]
        ctx.gamma[v] = (
            min(below, key=lambda w: (other.height[w], w)) if below else None
        )

        # chi: opposite-tree LCA of the partners of Lambda(v)
        ctx.chi[v] = other.lca([partner[c] for c in lam]) if lam else None

    for v in tree.ids:
        # phi: lowest strict ancestor whose subtree holds a coupled vertex
        # (possibly the ancestor itself), with a fallback for vertices with
        # no such ancestor; eta is the lowest partner over that subtree
        phi = next(
            (
                a for a in tree.ancestors(v)[1:]
                if a in partner or _has_coupled_below(tree, coupled, a)
            ),
            None,
        )
        if phi is None:
            ctx.phi_fallback[v] = True
            ctx.phi[v] = ctx.max_coupled
            ctx.eta[v] = partner.get(ctx.max_coupled) if ctx.max_coupled else None
        else:
            ctx.phi_fallback[v] = False
            ctx.phi[v] = phi
            # partners of coupled vertices strictly below phi sit strictly
            # below phi's own partner, so the minimum over the closed
            # subtree is gamma when available
            ctx.eta[v] = (
                ctx.gamma[phi] if ctx.gamma[phi] is not None
                else partner.get(phi)
            )
    return ctx


def _has_coupled_below(tree: MergeTree, coupled, v: str) -> bool:
    return any(c != v and tree.lt(c, v) for c in coupled)


def vertex_cost(
    ctx: CouplingContext, v: str, side: Optional[str] = None
) -> Tuple[float, str]:
    """Per-vertex cost and the case that produced it.

    ``side`` ("t" or "g") disambiguates when the two trees share vertex ids;
    otherwise it is inferred.
    """
    if side is None:
        in_t = ctx.t.tree.has(v)
        in_g = ctx.g.tree.has(v)
        if in_t and in_g:
            raise ValidationError(
                "vertex %r exists in both trees; pass side='t' or side='g'" % v
            )
        if not in_t and not in_g:
            raise ValidationError("unknown vertex id %r" % v)
        side = "t" if in_t else "g"
    s = ctx.side(side)
    tree, other = s.tree, s.other
    cls = s.cls[v]
    if cls == COUPLED:
        return abs(tree.height[v] - other.height[s.partner[v]]), CASE_COUPLE
    if cls == UNUSED:
        return 0.0, CASE_UNUSED
    if s.lam[v]:
        return abs(tree.height[v] - other.height[s.chi[v]]), CASE_MULTI
    halving = (tree.height[s.phi[v]] - tree.height[v]) / 2.0
    via_eta = other.height[s.eta[v]] - tree.height[v]
    if via_eta > halving:
        return via_eta, CASE_ETA
    return halving, CASE_HALVING


@dataclass(frozen=True)
class CostReport:
    """Per-vertex costs on both trees plus the max."""

    costs: Dict[Tuple[str, str], Tuple[float, str]]
    norm_inf: float

    def cost(self, side: str, v: str) -> float:
        return self.costs[(side, v)][0]

    def case(self, side: str, v: str) -> str:
        return self.costs[(side, v)][1]


def coupling_norm(ctx: CouplingContext) -> CostReport:
    costs: Dict[Tuple[str, str], Tuple[float, str]] = {}
    for v in ctx.t.tree.ids:
        costs[("t", v)] = vertex_cost(ctx, v, "t")
    for w in ctx.g.tree.ids:
        costs[("g", w)] = vertex_cost(ctx, w, "g")
    norm = max(c for c, _ in costs.values())
    return CostReport(costs=costs, norm_inf=norm)


def is_special(ctx: CouplingContext) -> bool:
    """True iff on both sides the lowest vertex strictly below the maximal
    coupled vertex is itself coupled (vacuously true on empty domains)."""
    for s in (ctx.t, ctx.g):
        top = s.max_coupled
        if top is None:
            continue
        below = [v for v in s.tree.descendants(top) if v != top]
        if not below:
            continue
        lowest = min(below, key=lambda u: (s.tree.height[u], u))
        if s.cls[lowest] != COUPLED:
            return False
    return True


def norm_of_pairs(tree_t: MergeTree, tree_g: MergeTree, pairs) -> float:
    """Convenience: validate and price a pair set in one go."""
    c = validate_coupling(tree_t, tree_g, pairs)
    return coupling_norm(coupling_context(c)).norm_inf
