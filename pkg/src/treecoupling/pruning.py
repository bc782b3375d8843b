"""The pruning operator P_eps and its induced coupling.

Pruning repeatedly deletes the leaf with the smallest height gap to its
father, as long as that gap is below eps, splicing out the order-2
vertices this leaves behind (the root hands over to its single child
instead).  Surviving vertices keep their ids, so the pruned tree couples
with the original by the identity on survivors; that coupling costs at
most eps/2, which is what makes pruning a sound preprocessing step for
distance estimates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .coupling import (
    COUPLED,
    Coupling,
    coupling_context,
    coupling_norm,
    validate_coupling,
)
from .errors import InternalCheckError, ValidationError
from .trees import MergeTree


@dataclass(frozen=True)
class PruneResult:
    """Outcome of pruning at a fixed level.

    ``injection`` maps pruned-tree ids to original ids (the identity on
    survivors).  ``removal_log`` records removals in order as
    ``(kind, vertex, gap)`` with kind "leaf", "splice" or "root"; splices
    and root handovers carry gap 0.
    """

    original: MergeTree
    pruned: MergeTree
    epsilon: float
    injection: Dict[str, str]
    coupling: Coupling
    removal_log: Tuple[Tuple[str, str, float], ...]

    @property
    def degenerate(self) -> bool:
        return len(self.pruned.ids) == 1

    @property
    def unchanged(self) -> bool:
        return not self.removal_log


def prune(tree: MergeTree, epsilon: float) -> PruneResult:
    """Apply the pruning operator at level ``epsilon`` until fixed point."""
    if not epsilon > 0:
        raise ValidationError("epsilon must be positive, got %r" % (epsilon,))

    heights = dict(tree.height)
    parent: Dict[str, Optional[str]] = {
        v: tree.parent.get(v) for v in tree.ids
    }
    children: Dict[str, List[str]] = {
        v: sorted(tree.children[v]) for v in tree.ids
    }
    root = tree.root
    log: List[Tuple[str, str, float]] = []

    def gap(leaf: str) -> float:
        return heights[parent[leaf]] - heights[leaf]

    while len(children) > 1:
        leaves = [v for v in children if not children[v] and v != root]
        # smallest gap first, ties broken by id
        cand = min(leaves, key=lambda v: (gap(v), v))
        g = gap(cand)
        if g >= epsilon:
            break
        p = parent[cand]
        if len(children[p]) == 1:
            # order-1 chain above the last leaf (non-strict input); the
            # minimum must survive, so stop here
            break
        children[p].remove(cand)
        del children[cand], parent[cand], heights[cand]
        log.append(("leaf", cand, g))
        if len(children[p]) == 1:
            child = children[p][0]
            if p == root:
                # the root hands over to its single child
                root = child
                parent[child] = None
                log.append(("root", p, 0.0))
            else:
                gp = parent[p]
                gp_children = children[gp]
                gp_children[gp_children.index(p)] = child
                parent[child] = gp
                log.append(("splice", p, 0.0))
            del children[p], parent[p], heights[p]

    pruned = MergeTree(heights, parent, generic=tree.generic, strict=False)
    injection = {v: v for v in pruned.ids}
    pairs = tuple((v, v) for v in sorted(pruned.ids))
    coupling = validate_coupling(tree, pruned, pairs)
    return PruneResult(
        original=tree,
        pruned=pruned,
        epsilon=epsilon,
        injection=injection,
        coupling=coupling,
        removal_log=tuple(log),
    )


@dataclass(frozen=True)
class PruningLemmaReport:
    epsilon: float
    norm: float
    checks: Tuple[Tuple[str, bool, str], ...]

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "norm": self.norm,
            "checks": [
                {"name": n, "ok": ok, "detail": d} for n, ok, d in self.checks
            ],
            "passed": self.passed,
        }


def check_pruning_lemma(tree: MergeTree, epsilon: float) -> PruningLemmaReport:
    """Verify the five structural guarantees of a single prune."""
    result = prune(tree, epsilon)
    ctx = coupling_context(result.coupling)
    report = coupling_norm(ctx)
    tol = tree.tol
    checks: List[Tuple[str, bool, str]] = []

    checks.append(("coupling-valid", True, "C1-C4 hold"))

    surviving_leaves = set(result.pruned.leaves)
    ok2 = surviving_leaves <= (set(tree.leaves) | {result.pruned.root})
    argmin = tree.min_vertex[tree.root]
    ok2 = ok2 and argmin in result.pruned.ids
    checks.append(
        ("leaves-survive", ok2, "argmin %s in pruned tree" % argmin)
    )

    removed = {v for kind, v, _ in result.removal_log if kind != "root"}
    ok3, why3 = True, "all removed vertices unused or close to phi"
    for v in sorted(removed):
        lam = ctx.t.lam[v]
        if len(lam) > 1:
            ok3, why3 = False, "removed %s has %d coupled clusters" % (v, len(lam))
            break
        if not lam:
            phi = ctx.t.phi[v]
            if tree.height[phi] - tree.height[v] >= epsilon + tol:
                ok3 = False
                why3 = "removed %s: f(phi)-f(v) = %g >= eps" % (
                    v, tree.height[phi] - tree.height[v]
                )
                break
    checks.append(("removed-shallow", ok3, why3))

    ok4, why4 = True, "eta lands strictly below every deletion"
    for v in sorted(removed):
        if ctx.t.cls[v] != COUPLED and not ctx.t.lam[v]:
            eta = ctx.t.eta[v]
            # exact comparison: generic heights are pairwise distinct, and
            # a tol slack would flag near-tied leaves spuriously
            if eta is None or result.pruned.height[eta] >= tree.height[v]:
                ok4, why4 = False, "eta(%s) = %r not strictly lower" % (v, eta)
                break
    checks.append(("eta-below", ok4, why4))

    ok5 = report.norm_inf <= epsilon / 2.0 + tol
    checks.append(
        ("cost-bound", ok5, "norm %g vs eps/2 = %g" % (report.norm_inf, epsilon / 2))
    )

    return PruningLemmaReport(
        epsilon=epsilon, norm=report.norm_inf, checks=tuple(checks)
    )


def prune_to_leaf_budget(
    tree: MergeTree, max_leaves: int
) -> Tuple[float, PruneResult]:
    """Smallest pruning level bringing the leaf count within budget.

    P_eps is piecewise constant in eps and the minimal-gap-first order
    makes the removal gaps non-decreasing, so scanning the recorded gaps
    of an unbounded prune finds the breakpoint directly.
    """
    if max_leaves < 1:
        raise ValidationError("max_leaves must be >= 1, got %d" % max_leaves)
    if len(tree.leaves) <= max_leaves:
        return 0.0, _identity_prune(tree)

    full = prune(tree, float("inf"))
    gaps = sorted({g for kind, _, g in full.removal_log if kind == "leaf"})
    for g in gaps:
        eps = g * (1 + 1e-9) + 1e-12
        result = prune(tree, eps)
        if len(result.pruned.leaves) <= max_leaves:
            return eps, result
    raise InternalCheckError(
        "no pruning level reached budget %d" % max_leaves
    )


def _identity_prune(tree: MergeTree) -> PruneResult:
    if len(tree.ids) == 1:
        eps = 1.0
    else:
        eps = min(
            tree.height[tree.parent[v]] - tree.height[v] for v in tree.leaves
        ) / 2.0
        eps = max(eps, 1e-300)
    result = prune(tree, eps)
    if result.removal_log:
        raise InternalCheckError("identity prune removed vertices")
    return result
