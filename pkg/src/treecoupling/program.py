"""Binary min-max program over antichain selections between two trees.

The selection variables a_{x,y} pick subtree pairs to match, one entry of
a precomputed cost table each; path constraints keep the selected pairs
pairwise incomparable on both sides, and the auxiliary u variables flag
vertices sitting above two selected pairs.  The "up" direction prices the
uncovered vertices optimistically from above (yielding an upper bound
once extended to a full coupling), the "down" direction keeps only the
terms that are certified lower bounds.

The solver is complete: the optimum is one of finitely many term values,
so it binary-searches that value set, deciding each threshold with a
depth-first search that only branches on constraints forced at that
threshold (vertices too expensive to leave uncovered, anchor paths,
deletion terms activated by selected pairs).  u variables are forced by
the selection, never branched on.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import InternalCheckError, ValidationError
from .trees import MergeTree

UP, DOWN = "up", "down"
PENALTY_ROOT, PENALTY_FATHER = "root", "father"

_INF = float("inf")


@dataclass(frozen=True)
class MinMaxProgram:
    """A built (and optionally linearized) instance for one subtree pair."""

    tree_t: MergeTree
    tree_g: MergeTree
    direction: str
    penalty: str
    e_t: Tuple[str, ...]  # non-root T vertices, selection domain
    e_g: Tuple[str, ...]
    cost_table: Dict[Tuple[str, str], float]
    k_const: float
    mq_t: Tuple[float, float]
    mq_g: Tuple[float, float]
    linearized: bool = False

    def to_dict(self) -> dict:
        """Debug dump: variables, linear constraints, objective components."""
        t, g = self.tree_t, self.tree_g
        a_vars = ["a[%s,%s]" % (x, y) for x in self.e_t for y in self.e_g]
        u_vars = ["u_t[%s]" % x for x in self.e_t] + [
            "u_g[%s]" % y for y in self.e_g
        ]
        cons = []
        for l in t.leaves:
            path = [v for v in t.ancestors(l) if v != t.root]
            cons.append(
                {
                    "name": "path-T-%s" % l,
                    "terms": {"a[%s,%s]" % (x, y): 1 for x in path for y in self.e_g},
                    "op": "<=",
                    "rhs": 1,
                }
            )
        for l in g.leaves:
            path = [w for w in g.ancestors(l) if w != g.root]
            cons.append(
                {
                    "name": "path-G-%s" % l,
                    "terms": {"a[%s,%s]" % (x, y): 1 for y in path for x in self.e_t},
                    "op": "<=",
                    "rhs": 1,
                }
            )
        for side, ids, tree, (m, q) in (
            ("t", self.e_t, t, self.mq_t),
            ("g", self.e_g, g, self.mq_g),
        ):
            for v in ids:
                lam = {
                    "a[%s,%s]" % (x, y): 1
                    for x in self.e_t
                    for y in self.e_g
                    if (side == "t" and t.leq(x, v)) or (side == "g" and g.leq(y, v))
                }
                uname = "u_%s[%s]" % (side, v)
                cons.append(
                    {
                        "name": "u-upper-%s-%s" % (side, v),
                        "terms": {uname: 1, **{k: -0.5 for k in lam}},
                        "op": "<=",
                        "rhs": 0,
                    }
                )
                cons.append(
                    {
                        "name": "u-lower-%s-%s" % (side, v),
                        "terms": {uname: 1, **{k: -m for k in lam}},
                        "op": ">=",
                        "rhs": q,
                    }
                )
        if self.direction == UP:
            for side, tree, ids in (("t", t, self.e_t), ("g", g, self.e_g)):
                low = tree.min_vertex[tree.root]
                path = [v for v in tree.ancestors(low) if v != tree.root]
                terms = {
                    "a[%s,%s]" % (x, y): 1
                    for x in self.e_t
                    for y in self.e_g
                    if (side == "t" and x in path) or (side == "g" and y in path)
                }
                cons.append(
                    {"name": "anchor-%s" % side, "terms": terms, "op": ">=", "rhs": 1}
                )
        out = {
            "direction": self.direction,
            "penalty": self.penalty,
            "variables": {"a": a_vars, "u": u_vars, "z": self.linearized},
            "constants": {
                "K": self.k_const,
                "mq_t": list(self.mq_t),
                "mq_g": list(self.mq_g),
            },
            "cost_table": {
                "%s,%s" % k: v
                for k, v in sorted(self.cost_table.items())
                if v < _INF
            },
            "constraints": cons,
        }
        if self.linearized:
            out["objective"] = "min z"
            out["z_constraints"] = self._z_constraint_names()
        return out

    def _z_constraint_names(self) -> List[str]:
        names = ["z>=F1[root]"]
        for x in self.e_t:
            names += ["z>=F1[%s]" % x, "z>=A[%s]" % x]
            if self.direction == UP:
                names.append("z>=F2[%s]" % x)
                names += [
                    "z>=B[%s|%s]" % (x, v)
                    for v in self.tree_t.ids
                    if self.tree_t.lt(v, self.tree_t.parent[x] or x)
                ]
            else:
                names.append("z>=Chi[%s]" % x)
        for y in self.e_g:
            names.append("z>=A[%s]" % y)
            if self.direction == UP:
                names.append("z>=F2[%s]" % y)
                names += [
                    "z>=B[%s|%s]" % (y, w)
                    for w in self.tree_g.ids
                    if self.tree_g.lt(w, self.tree_g.parent[y] or y)
                ]
            else:
                names.append("z>=Chi[%s]" % y)
        return names


def build_program(
    tree_t: MergeTree,
    tree_g: MergeTree,
    cost_table: Dict[Tuple[str, str], float],
    direction: str,
    penalty: str = PENALTY_ROOT,
) -> MinMaxProgram:
    """Instantiate the program for a rooted pair with the given table."""
    if direction not in (UP, DOWN):
        raise ValidationError("direction must be 'up' or 'down'")
    if penalty not in (PENALTY_ROOT, PENALTY_FATHER):
        raise ValidationError("penalty must be 'root' or 'father'")
    e_t = tuple(v for v in tree_t.ids if v != tree_t.root)
    e_g = tuple(w for w in tree_g.ids if w != tree_g.root)
    missing = [
        (x, y) for x in e_t for y in e_g if (x, y) not in cost_table
    ]
    if missing:
        raise ValidationError(
            "cost_table missing %d entries, e.g. %s" % (len(missing), missing[0])
        )
    k_const = (
        max(
            (
                abs(tree_t.height[x] - tree_g.height[y])
                for x in tree_t.ids
                for y in tree_g.ids
            ),
            default=0.0,
        )
        + max(tree_t.span, tree_g.span, 1.0)
    )

    def mq(tree):
        m = 1.0 / (len(tree.leaves) + 1)
        return (m, -1.5 * m)

    return MinMaxProgram(
        tree_t=tree_t,
        tree_g=tree_g,
        direction=direction,
        penalty=penalty,
        e_t=e_t,
        e_g=e_g,
        cost_table={(x, y): cost_table[(x, y)] for x in e_t for y in e_g},
        k_const=k_const,
        mq_t=mq(tree_t),
        mq_g=mq(tree_g),
    )


def linearize(program: MinMaxProgram) -> MinMaxProgram:
    """Mark the scalar epigraph reformulation; the solver works on it."""
    return MinMaxProgram(
        tree_t=program.tree_t,
        tree_g=program.tree_g,
        direction=program.direction,
        penalty=program.penalty,
        e_t=program.e_t,
        e_g=program.e_g,
        cost_table=program.cost_table,
        k_const=program.k_const,
        mq_t=program.mq_t,
        mq_g=program.mq_g,
        linearized=True,
    )


@dataclass(frozen=True)
class SolveResult:
    value: float
    pairs: Tuple[Tuple[str, str], ...]
    assignment: Dict[str, int]
    node_count: int
    ms: float


_EPS = 1e-12


class _Solver:
    """Threshold binary search with a forced-constraint decision DFS.

    Every term the objective can take is precomputed (pair costs, base
    deletion terms, pairwise joint-selection terms, cross deletion terms);
    the optimum is the smallest value z such that some antichain selection
    keeps all terms at or below z.  Deciding one z only branches where the
    threshold forces a choice, which keeps the search shallow.
    """

    def __init__(self, program: MinMaxProgram):
        self.p = program
        t, g = program.tree_t, program.tree_g
        self.t, self.g = t, g
        self.up = program.direction == UP

        self.cand: List[Tuple[str, str, float]] = []
        lvl_t, lvl_g = t.len_lvl(), g.len_lvl()
        for x in program.e_t:
            for y in program.e_g:
                w = program.cost_table[(x, y)]
                if w < _INF:
                    self.cand.append((x, y, w))
        self.cand.sort(key=lambda c: (lvl_t[c[0]][1], lvl_g[c[1]][1], c[0], c[1]))
        n = len(self.cand)

        # conflicts: comparable (or equal) on either projection
        self.conflict = [0] * n
        for i in range(n):
            for j in range(n):
                if i == j or t.comparable(self.cand[i][0], self.cand[j][0]) \
                        or g.comparable(self.cand[i][1], self.cand[j][1]):
                    self.conflict[i] |= 1 << j

        # cover[v]: candidates whose selection makes d_v >= 1
        self.cover_t: Dict[str, int] = {}
        for v in program.e_t:
            mask = 0
            for i, (x, _, _) in enumerate(self.cand):
                if t.comparable(x, v):
                    mask |= 1 << i
            self.cover_t[v] = mask
        self.cover_g: Dict[str, int] = {}
        for v in program.e_g:
            mask = 0
            for i, (_, y, _) in enumerate(self.cand):
                if g.comparable(y, v):
                    mask |= 1 << i
            self.cover_g[v] = mask

        # base deletion terms A_v = 0.5 (f(father(v)) - min_{u<=v} f(u))
        self.a_t = {
            v: 0.5 * (t.height[t.parent[v]] - t.min_height[v])
            for v in program.e_t
        }
        self.a_g = {
            v: 0.5 * (g.height[g.parent[v]] - g.min_height[v])
            for v in program.e_g
        }

        self.root_term = abs(t.height[t.root] - g.height[g.root])

        if self.up:
            low_t = t.min_vertex[t.root]
            low_g = g.min_vertex[g.root]
            self.mask4t = 0
            self.mask4g = 0
            for i, (x, y, _) in enumerate(self.cand):
                if t.leq(low_t, x):
                    self.mask4t |= 1 << i
                if g.leq(low_g, y):
                    self.mask4g |= 1 << i

        self._lca_tables()
        self._joint_terms()
        self._cross_terms()
        self.order = sorted(range(n), key=lambda i: (self.cand[i][2], i))
        self.nodes = 0

    # ----- precomputed term tables ----------------------------------------

    def _lca_tables(self):
        """Pairwise vertex LCAs of both trees, by id."""
        self.tl: Dict[Tuple[str, str], str] = {}
        self.gl: Dict[Tuple[str, str], str] = {}
        for tree, table in ((self.t, self.tl), (self.g, self.gl)):
            for u in tree.ids:
                anc = tree._anc_set[u]
                for v in tree.ids:
                    a = min(
                        (w for w in tree.ancestors(v) if w in anc),
                        key=lambda w: tree.height[w],
                    )
                    table[(u, v)] = a

    def _chain_gap(self, tree, e_set, u) -> float:
        """max |f(father(v)) - f(v)| over non-root ancestors v >= u."""
        best = 0.0
        for v in tree.ancestors(u):
            if v in e_set:
                best = max(best, abs(tree.height[tree.parent[v]] - tree.height[v]))
        return best

    def _joint_terms(self):
        """J[i][j]: a certified objective floor when both pairs are selected.

        Selecting pairs i and j puts >= 2 coupled vertices below both LCAs,
        which activates the multi-deletion term there (and at every vertex
        above); the floor is exact for the per-vertex maxima, so pruning on
        it never cuts an optimal selection.
        """
        t, g, p = self.t, self.g, self.p
        n = len(self.cand)
        self.jmat = np.zeros((n, n))
        e_t, e_g = set(p.e_t), set(p.e_g)
        father = p.penalty == PENALTY_FATHER
        for i in range(n):
            xi, yi, _ = self.cand[i]
            for j in range(i + 1, n):
                if self.conflict[i] & (1 << j):
                    continue
                xj, yj, _ = self.cand[j]
                lx = self.tl[(xi, xj)]
                ly = self.gl[(yi, yj)]
                val = 0.0
                if self.up:
                    if father:
                        val = max(
                            self._chain_gap(t, e_t, lx),
                            self._chain_gap(g, e_g, ly),
                        )
                    else:
                        if lx in e_t:
                            val = max(val, g.height[g.root] - t.height[lx])
                        if ly in e_g:
                            val = max(val, t.height[t.root] - g.height[ly])
                else:
                    if lx in e_t:
                        val = max(val, g.height[ly] - t.height[lx])
                    if ly in e_g:
                        val = max(val, t.height[lx] - g.height[ly])
                val = max(val, 0.0)
                self.jmat[i, j] = val
                self.jmat[j, i] = val

    def _cross_terms(self):
        """bforce[i]: deletion floors activated by pair i on uncovered vertices.

        Each entry is (value, cover mask): while the vertex stays uncovered
        and pair i is selected, the objective is at least value.  Only the
        up direction has these terms.
        """
        self.bforce: Dict[int, List[Tuple[float, int]]] = {}
        if not self.up:
            return
        t, g, p = self.t, self.g, self.p
        for i, (x, y, _) in enumerate(self.cand):
            entries: List[Tuple[float, int]] = []
            for v in p.e_t:
                if t.lt(x, t.parent[v]):
                    val = g.min_height[y] - t.min_height[v]
                    if val > 0.0:
                        entries.append((val, self.cover_t[v]))
            for v in p.e_g:
                if g.lt(y, g.parent[v]):
                    val = t.min_height[x] - g.min_height[v]
                    if val > 0.0:
                        entries.append((val, self.cover_g[v]))
            if entries:
                self.bforce[i] = entries

    def _value_pool(self) -> List[float]:
        pool = {self.root_term}
        pool.update(c[2] for c in self.cand)
        pool.update(self.a_t.values())
        pool.update(self.a_g.values())
        pool.update(float(v) for v in np.unique(self.jmat))
        for entries in self.bforce.values() if self.up else ():
            pool.update(v for v, _ in entries)
        return sorted(v for v in pool if v >= self.root_term - _EPS)

    # ----- objective ------------------------------------------------------

    def evaluate(self, sel: Tuple[int, ...]) -> float:
        t, g, p = self.t, self.g, self.p
        chosen = [self.cand[i] for i in sel]
        value = self.root_term
        for _, _, w in chosen:
            value = max(value, w)

        mask = 0
        for i in sel:
            mask |= 1 << i

        for v in p.e_t:
            covered = self.cover_t[v] & mask
            if not covered:
                value = max(value, self.a_t[v])
                if self.up:
                    fv = t.min_height[v]
                    father = t.parent[v]
                    for x, y, _ in chosen:
                        if t.lt(x, father):
                            value = max(value, g.min_height[y] - fv)
            if self.up:
                lam_ys = [y for x, y, _ in chosen if t.leq(x, v)]
                if len(lam_ys) >= 2:
                    if p.penalty == PENALTY_ROOT:
                        value = max(value, g.height[g.root] - t.height[v])
                    else:
                        value = max(
                            value, abs(t.height[t.parent[v]] - t.height[v])
                        )
        for v in p.e_g:
            covered = self.cover_g[v] & mask
            if not covered:
                value = max(value, self.a_g[v])
                if self.up:
                    gv = g.min_height[v]
                    father = g.parent[v]
                    for x, y, _ in chosen:
                        if g.lt(y, father):
                            value = max(value, t.min_height[x] - gv)
            if self.up:
                lam_xs = [x for x, y, _ in chosen if g.leq(y, v)]
                if len(lam_xs) >= 2:
                    if p.penalty == PENALTY_ROOT:
                        value = max(value, t.height[t.root] - g.height[v])
                    else:
                        value = max(
                            value, abs(g.height[g.parent[v]] - g.height[v])
                        )

        if not self.up:
            # certified multi-deletion floors: for each selected pair of
            # pairs, the LCAs on both sides are deleted above >= 2 coupled
            # vertices in the minimal consistent coupling
            for a in range(len(chosen)):
                for b in range(a + 1, len(chosen)):
                    i, j = sel[a], sel[b]
                    value = max(value, float(self.jmat[i, j]))
        else:
            for a in range(len(chosen)):
                for b in range(a + 1, len(chosen)):
                    value = max(value, float(self.jmat[sel[a], sel[b]]))
        return max(0.0, value)

    # ----- threshold decision ---------------------------------------------

    def _jconf(self, z: float) -> List[int]:
        bad = self.jmat > z + _EPS
        packed = np.packbits(bad, axis=1, bitorder="little")
        return [
            self.conflict[i] | int.from_bytes(packed[i].tobytes(), "little")
            for i in range(len(self.cand))
        ]

    def feasible(self, z: float) -> Optional[Tuple[int, ...]]:
        """A selection with objective <= z, or None."""
        if self.root_term > z + _EPS:
            return None
        allowed = 0
        for i, (_, _, w) in enumerate(self.cand):
            if w <= z + _EPS:
                allowed |= 1 << i
        constraints: List[int] = []
        for v in self.p.e_t:
            if self.a_t[v] > z + _EPS:
                constraints.append(self.cover_t[v])
        for v in self.p.e_g:
            if self.a_g[v] > z + _EPS:
                constraints.append(self.cover_g[v])
        if self.up:
            constraints.append(self.mask4t)
            constraints.append(self.mask4g)
        bforce_z = {
            i: [m for val, m in entries if val > z + _EPS]
            for i, entries in self.bforce.items()
        } if self.up else {}
        bforce_z = {i: ms for i, ms in bforce_z.items() if ms}
        conflict2 = self._jconf(z)
        return self._search((), 0, allowed, constraints, bforce_z, conflict2)

    def _search(self, sel, sel_mask, allowed, constraints, bforce_z, conflict2):
        self.nodes += 1
        best_opts, best_c = None, 0
        for m in constraints:
            if m & sel_mask:
                continue
            opts = m & allowed
            c = opts.bit_count()
            if c == 0:
                return None
            if best_opts is None or c < best_c:
                best_opts, best_c = opts, c
                if c == 1:
                    break
        if best_opts is None:
            return sel
        avail = allowed
        for i in self.order:
            bit = 1 << i
            if not (best_opts & bit & avail):
                continue
            extra = bforce_z.get(i)
            new_cons = constraints + extra if extra else constraints
            r = self._search(
                sel + (i,),
                sel_mask | bit,
                avail & ~conflict2[i] & ~bit,
                new_cons,
                bforce_z,
                conflict2,
            )
            if r is not None:
                return r
            avail &= ~bit
        return None

    # ----- search ---------------------------------------------------------

    def solve(self) -> Tuple[float, Tuple[int, ...]]:
        zs = self._value_pool()
        if not zs:
            raise ValidationError(
                "infeasible program: no selection meets the anchor constraints"
            )
        top = self.feasible(zs[-1])
        if top is None:
            raise ValidationError(
                "infeasible program: no selection meets the anchor constraints"
            )
        lo, hi = 0, len(zs) - 1
        best_sel = top
        while lo < hi:
            mid = (lo + hi) // 2
            r = self.feasible(zs[mid])
            if r is not None:
                best_sel, hi = r, mid
            else:
                lo = mid + 1
        value = self.evaluate(best_sel)
        if value > zs[hi] + 1e-9:
            raise InternalCheckError(
                "decision search returned value %g above threshold %g"
                % (value, zs[hi])
            )
        return value, tuple(sorted(best_sel))


def solve_exact(program: MinMaxProgram) -> SolveResult:
    """Complete search for the program optimum with its selection."""
    if not program.linearized:
        raise ValidationError("solve_exact expects a linearized program")
    start = time.perf_counter()
    solver = _Solver(program)
    value, sel = solver.solve()
    pairs = tuple(sorted(solver.cand[i][:2] for i in sel))

    t, g = program.tree_t, program.tree_g
    for i, (a, b) in enumerate(pairs):
        for c, d in pairs[i + 1:]:
            if t.comparable(a, c) or g.comparable(b, d):
                raise InternalCheckError(
                    "selected pairs (%s,%s),(%s,%s) are not an antichain"
                    % (a, b, c, d)
                )
    assignment: Dict[str, int] = {}
    for x, y in pairs:
        assignment["a[%s,%s]" % (x, y)] = 1
    for v in program.e_t:
        lam = sum(1 for x, _ in pairs if t.leq(x, v))
        u = 1 if lam >= 2 else 0
        m, q = program.mq_t
        if not (u <= 0.5 * lam and u >= m * lam + q - 1e-12):
            raise InternalCheckError("u forcing violated at T vertex %s" % v)
        assignment["u_t[%s]" % v] = u
    for w in program.e_g:
        lam = sum(1 for _, y in pairs if g.leq(y, w))
        u = 1 if lam >= 2 else 0
        m, q = program.mq_g
        if not (u <= 0.5 * lam and u >= m * lam + q - 1e-12):
            raise InternalCheckError("u forcing violated at G vertex %s" % w)
        assignment["u_g[%s]" % w] = u

    return SolveResult(
        value=value,
        pairs=pairs,
        assignment=assignment,
        node_count=solver.nodes,
        ms=(time.perf_counter() - start) * 1000.0,
    )
