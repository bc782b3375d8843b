"""End-to-end acceptance gate.

Ten independent checks over the full pipeline, each printing its own
pass/fail line. Tolerance is 1e-9 throughout; populations come from the
benchmark generator so every run sees the same trees.
"""

import time

import numpy as np
import pytest

from treecoupling.bench import BenchConfig, rows_to_csv, run_benchmark
from treecoupling.bounds import bottom_up, d_opt, interleaving_bounds
from treecoupling.coupling import coupling_context, coupling_norm
from treecoupling.maps import (
    check_composition,
    check_eps_good,
    extract_coupling,
    induced_map,
)
from treecoupling.oracle import (
    enumerate_couplings,
    exact_interleaving,
    verify_decomposition,
)
from treecoupling.pruning import check_pruning_lemma, prune
from treecoupling.trees import MergeTree

from .conftest import random_pair, random_tree

TOL = 1e-9

T_A = MergeTree(
    {"a": 0, "b": 1, "r": 2}, {"a": "r", "b": "r", "r": None},
    generic=True, strict=True,
)
G_A = MergeTree(
    {"a2": 0, "b2": 1, "r2": 3}, {"a2": "r2", "b2": "r2", "r2": None},
    generic=True, strict=True,
)


def report(capsys, num, name, ok, detail=""):
    line = "criterion %02d (%s): %s" % (num, name, "PASS" if ok else "FAIL")
    if detail:
        line += "  [%s]" % detail
    with capsys.disabled():
        print(line)
    assert ok, line


def small_pair(k, seed):
    """A (2..4)-leaf pair with independently sized sides."""
    n_t = 2 + k % 3
    n_g = 2 + (k // 3) % 3
    tt, _ = random_pair(n_t, k, seed=seed)
    gg, _ = random_pair(n_g, k + 100, seed=seed)
    return tt, gg


@pytest.fixture(scope="module")
def coupling_sweep():
    outcome = {
        "pairs": 0, "couplings": 0,
        "good_bad": 0, "comp_bad": 0, "extract_bad": 0,
    }
    for k in range(20):
        tt, gg = small_pair(k, seed=19)
        fam = enumerate_couplings(tt, gg, "all", cap=40)
        outcome["pairs"] += 1
        for c, rep in zip(fam.couplings, fam.reports):
            eps = rep.norm_inf
            outcome["couplings"] += 1
            alpha = induced_map(tt, gg, c, eps=eps)
            beta = induced_map(gg, tt, c.transpose(), eps=eps)
            if not (check_eps_good(alpha).passed
                    and check_eps_good(beta).passed):
                outcome["good_bad"] += 1
            if not check_composition(alpha, beta).passed:
                outcome["comp_bad"] += 1
            back = extract_coupling(tt, gg, alpha, eps)
            norm = coupling_norm(coupling_context(back)).norm_inf
            if norm > eps + TOL:
                outcome["extract_bad"] += 1
    return outcome


class TestAcceptance:
    def test_criterion_01_oracle_sandwich(self, capsys):
        total = bad = 0
        for n in (2, 3, 4, 5):
            for rep in range(50):
                tt, gg = random_pair(n, rep)
                d, _ = exact_interleaving(tt, gg)
                res = interleaving_bounds(tt, gg)
                total += 1
                if not (res.lower - TOL <= d <= res.upper + TOL):
                    bad += 1
        report(
            capsys, 1, "oracle sandwich", total >= 200 and bad == 0,
            "%d pairs, %d violations" % (total, bad),
        )

    def test_criterion_02_gap_rate(self, capsys):
        total = tight = 0
        for n in range(2, 9):
            for rep in range(15):
                tt, gg = random_pair(n, rep)
                res = interleaving_bounds(tt, gg)
                total += 1
                if res.upper - res.lower <= TOL:
                    tight += 1
        rate = tight / total
        report(
            capsys, 2, "gap rate", total >= 100 and rate >= 0.8,
            "%d/%d tight (%.1f%%)" % (tight, total, 100 * rate),
        )

    def test_criterion_03_exact_fixtures(self, capsys):
        d_self, _ = exact_interleaving(T_A, T_A)
        d_cross, _ = exact_interleaving(T_A, G_A)
        b_self = interleaving_bounds(T_A, T_A)
        b_cross = interleaving_bounds(T_A, G_A)
        ok = (
            abs(d_self) <= TOL
            and abs(d_cross - 1.0) <= TOL
            and abs(b_self.lower) <= TOL
            and abs(b_self.upper) <= TOL
            and abs(b_cross.lower - 1.0) <= TOL
            and abs(b_cross.upper - 1.0) <= TOL
        )
        report(
            capsys, 3, "exact fixtures", ok,
            "self %.3g, cross %.3g" % (d_self, d_cross),
        )

    def test_criterion_04_decomposition(self, capsys):
        total = bad = 0
        for k in range(50):
            tt, gg = small_pair(k, seed=19)
            rep = verify_decomposition(tt, gg)
            total += 1
            if not rep.passed:
                bad += 1
        report(
            capsys, 4, "decomposition", total >= 50 and bad == 0,
            "%d pairs, %d failures" % (total, bad),
        )

    def test_criterion_05_good_map_suite(self, capsys, coupling_sweep):
        s = coupling_sweep
        ok = (
            s["pairs"] >= 20
            and s["good_bad"] == 0
            and s["comp_bad"] == 0
        )
        report(
            capsys, 5, "good-map suite", ok,
            "%d couplings over %d pairs" % (s["couplings"], s["pairs"]),
        )

    def test_criterion_06_round_trip(self, capsys, coupling_sweep):
        s = coupling_sweep
        report(
            capsys, 6, "extraction round trip", s["extract_bad"] == 0,
            "%d couplings, %d over budget"
            % (s["couplings"], s["extract_bad"]),
        )

    def test_criterion_07_pruning(self, capsys):
        lemma_total = lemma_bad = 0
        for k in range(100):
            n = 2 + k % 9
            tree = random_tree(n, 300 + k, seed=23)
            for eps in (0.3, 1.0, 2.5):
                lemma_total += 1
                if not check_pruning_lemma(tree, eps).passed:
                    lemma_bad += 1
        ineq_total = ineq_bad = 0
        for k in range(30):
            tt, gg = small_pair(k, seed=31)
            for eps in (0.3, 0.8):
                d_full, _ = exact_interleaving(tt, gg)
                pt = prune(tt, eps).pruned
                pg = prune(gg, eps).pruned
                d_pruned, _ = exact_interleaving(pt, pg)
                ineq_total += 1
                if d_full > max(d_pruned, eps / 2) + TOL:
                    ineq_bad += 1
        ok = (
            lemma_total >= 300 and lemma_bad == 0
            and ineq_total >= 30 and ineq_bad == 0
        )
        report(
            capsys, 7, "pruning", ok,
            "lemma %d/%d, inequality %d/%d"
            % (lemma_total - lemma_bad, lemma_total,
               ineq_total - ineq_bad, ineq_total),
        )

    def test_criterion_08_error_injection(self, capsys):
        bad = 0
        for k in range(20):
            n = 3 + k % 4
            tt, gg = random_pair(n, 400 + k, seed=29)
            base = interleaving_bounds(tt, gg)
            rng = np.random.default_rng([29, k])
            cells = sorted((x, y) for x in tt.ids for y in gg.ids)
            cell = cells[int(rng.integers(len(cells)))]
            e = float(rng.uniform(0.01, 0.5))
            shifted = interleaving_bounds(tt, gg, inject={cell: e})
            if abs(shifted.upper - base.upper) > e + TOL:
                bad += 1
        report(
            capsys, 8, "error-injection independence", bad == 0,
            "20 injections, %d over budget" % bad,
        )

    def test_criterion_09_performance(self, capsys):
        t0 = time.perf_counter()
        tt, gg = random_pair(15, 0)
        res = interleaving_bounds(tt, gg)
        t_bounds = time.perf_counter() - t0
        t0 = time.perf_counter()
        big_t, big_g = random_pair(100, 0)
        val = d_opt(big_t, big_g, max_leaves=15)
        t_opt = time.perf_counter() - t0
        ok = (
            t_bounds < 600 and t_opt < 600
            and res.lower <= res.upper + TOL and val >= 0
        )
        report(
            capsys, 9, "performance smoke", ok,
            "15-leaf bounds %.1fs, 100-leaf d_opt %.1fs" % (t_bounds, t_opt),
        )

    def test_criterion_10_determinism(self, capsys):
        cfg = BenchConfig(
            n_min=2, n_max=4, reps=2, seed=13, measure_time=False
        )
        csv_one = rows_to_csv(run_benchmark(cfg))
        csv_two = rows_to_csv(run_benchmark(cfg))
        tt, gg = random_pair(5, 1)
        tables = [
            (bottom_up(tt, gg, d).w, bottom_up(tt, gg, d).w)
            for d in ("up", "down")
        ]
        same_tables = all(a == b for a, b in tables)
        ok = csv_one == csv_two and same_tables
        report(
            capsys, 10, "determinism", ok,
            "csv %s, tables %s"
            % ("identical" if csv_one == csv_two else "differ",
               "identical" if same_tables else "differ"),
        )
