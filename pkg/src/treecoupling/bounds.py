"""Two-sided interleaving estimates via bottom-up dynamic programming.

For every subtree pair the min-max program yields W values in both
directions; the deletion penalty H prices everything outside a candidate
root pair.  Minimizing max{H, W} over all vertex pairs sandwiches the
interleaving distance, and unwinding the optimal selections produces a
concrete coupling witnessing the upper bound.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from .coupling import (
    coupling_context,
    coupling_norm,
    is_special,
    norm_of_pairs,
    validate_coupling,
)
from .errors import InternalCheckError, ValidationError
from .program import DOWN, PENALTY_ROOT, UP, build_program, linearize, solve_exact
from .pruning import prune, prune_to_leaf_budget
from .trees import MergeTree

TAU = 1e-9


def deletion_penalty(
    tree_t: MergeTree, tree_g: MergeTree, r: str, r_prime: str
) -> float:
    """Cost floor for deleting everything outside the subtrees at (r, r')."""
    t, g = tree_t, tree_g
    f_r = t.min_height[r]
    g_rp = g.min_height[r_prime]
    h = 0.0
    for v in t.ids:
        if t.leq(v, r):
            continue
        v_r = t.lca([v, r])
        h = max(h, 0.5 * (t.height[v_r] - t.height[v]), g_rp - t.height[v])
    for w in g.ids:
        if g.leq(w, r_prime):
            continue
        w_rp = g.lca([w, r_prime])
        h = max(h, 0.5 * (g.height[w_rp] - g.height[w]), f_r - g.height[w])
    return h


@dataclass(frozen=True)
class BottomUpTables:
    direction: str
    w: Dict[Tuple[str, str], float]
    # None marks closed-form base cases; otherwise the optimal selection
    selections: Dict[Tuple[str, str], Optional[Tuple[Tuple[str, str], ...]]]
    node_count: int

    def witness_pairs(self, x: str, y: str) -> Tuple[Tuple[str, str], ...]:
        """Unwind stored selections into a coupling below (x, y)."""
        sel = self.selections[(x, y)]
        if sel is not None and len(sel) == 1:
            # a one-pair selection extends to the sub-coupling alone;
            # keeping (x, y) coupled on top would break condition (C4)
            return self.witness_pairs(*sel[0])
        pairs = [(x, y)]
        for v, w in sel or ():
            pairs.extend(self.witness_pairs(v, w))
        return tuple(sorted(set(pairs)))


def bottom_up(
    tree_t: MergeTree,
    tree_g: MergeTree,
    direction: str,
    penalty: str = PENALTY_ROOT,
    inject: Optional[Dict[Tuple[str, str], float]] = None,
) -> BottomUpTables:
    """Fill the W table for every vertex pair, lowest levels first.

    ``inject`` adds an offset to stored entries right after they are
    computed; downstream programs then consume the perturbed values
    (used to study error propagation).
    """
    t, g = tree_t, tree_g
    lvl_t = {v: lv for v, (_, lv) in t.len_lvl().items()}
    lvl_g = {w: lv for w, (_, lv) in g.len_lvl().items()}
    order = sorted(
        ((x, y) for x in t.ids for y in g.ids),
        key=lambda p: (lvl_t[p[0]] + lvl_g[p[1]], lvl_t[p[0]], p[0], p[1]),
    )
    w_table: Dict[Tuple[str, str], float] = {}
    selections: Dict[Tuple[str, str], Optional[Tuple[Tuple[str, str], ...]]] = {}
    nodes = 0
    for x, y in order:
        leaf_x = not t.children[x]
        leaf_y = not g.children[y]
        if leaf_x and leaf_y:
            value = abs(t.height[x] - g.height[y])
            selections[(x, y)] = None
        elif leaf_x or leaf_y:
            # singleton vs internal: the only rooted coupling is the root
            # pair, so both directions share this closed form
            value = norm_of_pairs(t.subtree(x), g.subtree(y), [(x, y)])
            selections[(x, y)] = None
        else:
            sub_t, sub_g = t.subtree(x), g.subtree(y)
            table = {
                (v, u): w_table[(v, u)]
                for v in sub_t.ids
                for u in sub_g.ids
                if v != x and u != y
            }
            program = linearize(
                build_program(sub_t, sub_g, table, direction, penalty)
            )
            result = solve_exact(program)
            nodes += result.node_count
            value = result.value
            selections[(x, y)] = result.pairs
        if inject and (x, y) in inject:
            value += inject[(x, y)]
        w_table[(x, y)] = value
    return BottomUpTables(
        direction=direction, w=w_table, selections=selections, node_count=nodes
    )


@dataclass(frozen=True)
class BoundsResult:
    lower: float
    upper: float
    root_pair: Tuple[str, str]
    witness: Tuple[Tuple[str, str], ...]
    witness_norm: float
    witness_special: bool
    escape: bool  # witness cost exceeded the program optimum
    table_sizes: Dict[str, int]
    ms: float

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "root_pair": list(self.root_pair),
            "witness": {"pairs": [list(p) for p in self.witness]},
            "table_sizes": dict(self.table_sizes),
            "ms": self.ms,
        }


def interleaving_bounds(
    tree_t: MergeTree,
    tree_g: MergeTree,
    penalty: str = PENALTY_ROOT,
    inject: Optional[Dict[Tuple[str, str], float]] = None,
) -> BoundsResult:
    """Lower and upper interleaving estimates with an explicit witness."""
    start = time.perf_counter()
    t, g = tree_t, tree_g
    up = bottom_up(t, g, UP, penalty, inject)
    down = bottom_up(t, g, DOWN, penalty)

    h_table = {
        (x, y): deletion_penalty(t, g, x, y) for x in t.ids for y in g.ids
    }

    lower = min(
        max(h_table[p], down.w[p]) for p in sorted(h_table)
    )

    upper_prog = float("inf")
    best_pair: Optional[Tuple[str, str]] = None
    for p in sorted(h_table):
        value = max(h_table[p], up.w[p])
        if value < upper_prog - 1e-15:
            upper_prog, best_pair = value, p

    witness_pairs = up.witness_pairs(*best_pair)
    witness = validate_coupling(t, g, witness_pairs)
    ctx = coupling_context(witness)
    witness_norm = coupling_norm(ctx).norm_inf
    # the witness is a genuine coupling, so its cost always bounds the
    # distance from above; report it whenever it exceeds the program value
    upper = max(upper_prog, witness_norm)
    escape = witness_norm > upper_prog + TAU

    if lower > upper + TAU:
        raise InternalCheckError(
            "lower bound %g exceeds upper bound %g" % (lower, upper)
        )

    return BoundsResult(
        lower=lower,
        upper=upper,
        root_pair=best_pair,
        witness=witness.pairs,
        witness_norm=witness_norm,
        witness_special=is_special(ctx),
        escape=escape,
        table_sizes={
            "w_up": len(up.w),
            "w_down": len(down.w),
            "h": len(h_table),
        },
        ms=(time.perf_counter() - start) * 1000.0,
    )


def d_opt(
    tree_t: MergeTree,
    tree_g: MergeTree,
    max_leaves: int,
    penalty: str = PENALTY_ROOT,
) -> float:
    """Upper estimate after pruning both trees into the leaf budget."""
    if max_leaves < 2:
        raise ValidationError("max_leaves must be >= 2, got %d" % max_leaves)
    eps_t, _ = prune_to_leaf_budget(tree_t, max_leaves)
    eps_g, _ = prune_to_leaf_budget(tree_g, max_leaves)
    eps = max(eps_t, eps_g)
    if eps > 0:
        pt = prune(tree_t, eps).pruned
        pg = prune(tree_g, eps).pruned
    else:
        pt, pg = tree_t, tree_g
    bounds = interleaving_bounds(pt, pg, penalty)
    return max(eps / 2.0, bounds.upper)
