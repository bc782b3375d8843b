"""Benchmark harness: random cloud pairs, distance estimates, CSV rows.

Pairs of planar Gaussian clouds turn into single-linkage dendrograms,
which after a deterministic tie-breaking jitter feed the bounds pipeline.
Every replicate draws from its own rng substream keyed by (seed, n, rep),
so rows are reproducible independently of execution order.
"""

from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .bounds import TAU, interleaving_bounds
from .errors import InternalCheckError, ValidationError
from .oracle import exact_interleaving
from .pruning import prune, prune_to_leaf_budget
from .trees import MergeTree, PointCloud, perturb_to_generic, single_linkage_tree

log = logging.getLogger(__name__)

CSV_HEADER = "n,rep,d_l,d_u,gap,d_lab,rel_err,ms_lower,ms_upper"
PERTURB_SCALE = 1e-9


@dataclass(frozen=True)
class BenchConfig:
    n_min: int
    n_max: int
    reps: int
    seed: int
    budget: Optional[int] = None  # switch to the pruned estimate above this n
    d_lab_path: Optional[str] = None
    oracle_check: bool = False
    oracle_cap: int = 25
    measure_time: bool = True

    def __post_init__(self):
        if self.n_min < 2:
            raise ValidationError("n_min must be >= 2")
        if self.n_max < self.n_min:
            raise ValidationError("n_max must be >= n_min")
        if self.reps < 1:
            raise ValidationError("reps must be >= 1")


@dataclass(frozen=True)
class BenchRow:
    n: int
    rep: int
    d_l: float
    d_u: float
    d_lab: Optional[float] = None
    ms_lower: float = 0.0
    ms_upper: float = 0.0

    @property
    def gap(self) -> float:
        return self.d_u - self.d_l

    @property
    def rel_err(self) -> Optional[float]:
        if self.d_lab is None or self.d_u <= TAU:
            return None
        return (self.d_lab - self.d_u) / self.d_u


def _positive_sigma(rng: np.random.Generator) -> float:
    s = rng.normal(3.0, 1.0)
    while s <= 0.05:
        s = rng.normal(3.0, 1.0)
    return float(s)


def generate_point_cloud_pair(
    n: int, rng: np.random.Generator
) -> Tuple[PointCloud, PointCloud]:
    """Two clouds of n planar points with per-cloud Gaussian spreads."""
    if n < 2:
        raise ValidationError("need n >= 2 points per cloud")
    clouds = []
    for _ in range(2):
        sx = _positive_sigma(rng)
        sy = _positive_sigma(rng)
        xs = rng.normal(5.0, sx, size=n)
        ys = rng.normal(5.0, sy, size=n)
        clouds.append(PointCloud(points=np.column_stack([xs, ys])))
    return clouds[0], clouds[1]


def tree_from_cloud(cloud: PointCloud) -> MergeTree:
    """Single-linkage tree made generic with a span-relative jitter."""
    tree = single_linkage_tree(cloud)
    return perturb_to_generic(tree, PERTURB_SCALE * max(tree.span, 1e-12))


def _load_d_lab(path: str) -> Dict[Tuple[int, int], float]:
    out: Dict[Tuple[int, int], float] = {}
    with open(path, newline="") as fh:
        for record in csv.DictReader(fh):
            out[(int(record["n"]), int(record["rep"]))] = float(record["d_lab"])
    return out


def run_benchmark(cfg: BenchConfig) -> List[BenchRow]:
    d_lab = _load_d_lab(cfg.d_lab_path) if cfg.d_lab_path else {}
    rows: List[BenchRow] = []
    for n in range(cfg.n_min, cfg.n_max + 1):
        for rep in range(cfg.reps):
            try:
                rows.append(_run_one(cfg, n, rep, d_lab.get((n, rep))))
            except Exception:
                log.exception("bench row n=%d rep=%d failed; continuing", n, rep)
    return rows


def _run_one(
    cfg: BenchConfig, n: int, rep: int, lab: Optional[float]
) -> BenchRow:
    rng = np.random.default_rng([cfg.seed, n, rep])
    c1, c2 = generate_point_cloud_pair(n, rng)
    t1, t2 = tree_from_cloud(c1), tree_from_cloud(c2)

    start = time.perf_counter()
    if cfg.budget is not None and n > cfg.budget:
        eps = max(
            prune_to_leaf_budget(t1, cfg.budget)[0],
            prune_to_leaf_budget(t2, cfg.budget)[0],
        )
        p1 = prune(t1, eps).pruned if eps > 0 else t1
        p2 = prune(t2, eps).pruned if eps > 0 else t2
        bounds = interleaving_bounds(p1, p2)
        d_u = max(eps / 2.0, bounds.upper)
        # triangle inequality: each pruning moves a tree by at most eps/2
        d_l = max(0.0, bounds.lower - eps)
    else:
        bounds = interleaving_bounds(t1, t2)
        d_l, d_u = bounds.lower, bounds.upper
    elapsed_ms = (time.perf_counter() - start) * 1000.0

    if cfg.oracle_check and len(t1.leaves) * len(t2.leaves) <= cfg.oracle_cap:
        exact, _ = exact_interleaving(t1, t2, cap=cfg.oracle_cap)
        if not (d_l - TAU <= exact <= d_u + TAU):
            raise InternalCheckError(
                "bounds [%g, %g] miss the exact value %g at n=%d rep=%d"
                % (d_l, d_u, exact, n, rep)
            )

    half = elapsed_ms / 2.0 if cfg.measure_time else 0.0
    return BenchRow(
        n=n, rep=rep, d_l=d_l, d_u=d_u, d_lab=lab,
        ms_lower=half, ms_upper=half,
    )


def rows_to_csv(rows: List[BenchRow]) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in rows:
        lab = "%.12g" % r.d_lab if r.d_lab is not None else ""
        rel = "%.12g" % r.rel_err if r.rel_err is not None else ""
        buf.write(
            "%d,%d,%.12g,%.12g,%.12g,%s,%s,%.3f,%.3f\n"
            % (r.n, r.rep, r.d_l, r.d_u, r.gap, lab, rel, r.ms_lower, r.ms_upper)
        )
    return buf.getvalue()


def summarize(rows: List[BenchRow]) -> Dict[int, Dict[str, float]]:
    """Per-n quartiles of the bound gap and, when present, relative error."""
    out: Dict[int, Dict[str, float]] = {}
    by_n: Dict[int, List[BenchRow]] = {}
    for r in rows:
        by_n.setdefault(r.n, []).append(r)
    for n, group in sorted(by_n.items()):
        gaps = np.array([r.gap for r in group])
        stats = {
            "count": float(len(group)),
            "gap_q1": float(np.percentile(gaps, 25)),
            "gap_median": float(np.percentile(gaps, 50)),
            "gap_q3": float(np.percentile(gaps, 75)),
            "gap_zero_rate": float(np.mean(gaps <= TAU)),
        }
        rels = [r.rel_err for r in group if r.rel_err is not None]
        if rels:
            arr = np.array(rels)
            stats.update(
                rel_err_q1=float(np.percentile(arr, 25)),
                rel_err_median=float(np.percentile(arr, 50)),
                rel_err_q3=float(np.percentile(arr, 75)),
            )
        out[n] = stats
    return out
