import pytest
from hypothesis import given, settings, strategies as st

from treecoupling.coupling import (
    CASE_COUPLE,
    CASE_ETA,
    CASE_HALVING,
    CASE_MULTI,
    CASE_UNUSED,
    COUPLED,
    DELETED,
    UNUSED,
    Coupling,
    coupling_context,
    coupling_norm,
    is_special,
    norm_of_pairs,
    validate_coupling,
    vertex_cost,
)
from treecoupling.errors import CouplingViolationError
from treecoupling.oracle import enumerate_couplings
from treecoupling.trees import MergeTree

from .conftest import random_pair, tree

FULL_A = [("a", "a2"), ("b", "b2"), ("r", "r2")]


def _kinds(err: CouplingViolationError):
    return {k for k, _ in err.violations}


class TestValidate:
    def test_full_matching_valid(self, t_a, g_a):
        c = validate_coupling(t_a, g_a, FULL_A)
        assert c.pairs == tuple(sorted(FULL_A))

    def test_missing_top_is_c1(self, t_a, g_a):
        with pytest.raises(CouplingViolationError) as exc:
            validate_coupling(t_a, g_a, [("a", "a2"), ("b", "b2")])
        assert _kinds(exc.value) == {"C1"}

    def test_double_use_is_c2(self, t_a, g_a):
        with pytest.raises(CouplingViolationError) as exc:
            validate_coupling(t_a, g_a, [("a", "a2"), ("a", "b2"), ("r", "r2")])
        assert "C2" in _kinds(exc.value)

    def test_order_flip_is_c3(self, t_a, g_a):
        with pytest.raises(CouplingViolationError) as exc:
            validate_coupling(t_a, g_a, [("a", "r2"), ("r", "a2")])
        assert "C3" in _kinds(exc.value)

    def test_lone_descendant_is_c4_both_sides(self, t_a, g_a):
        with pytest.raises(CouplingViolationError) as exc:
            validate_coupling(t_a, g_a, [("a", "a2"), ("r", "r2")])
        c4 = [msg for k, msg in exc.value.violations if k == "C4"]
        assert len(c4) == 2
        assert any("'r'" in m for m in c4)
        assert any("'r2'" in m for m in c4)

    def test_unknown_ids_rejected_first(self, t_a, g_a):
        with pytest.raises(CouplingViolationError) as exc:
            validate_coupling(t_a, g_a, [("nope", "a2")])
        assert _kinds(exc.value) == {"ids"}


class TestContext:
    def test_single_pair_context(self, t_a, g_a):
        c = validate_coupling(t_a, g_a, [("a", "a2")])
        ctx = coupling_context(c)
        assert ctx.t.cls == {"a": COUPLED, "b": DELETED, "r": UNUSED}
        assert ctx.t.lam["b"] == ()
        assert ctx.t.phi["b"] == "r"
        assert ctx.t.eta["b"] == "a2"
        assert ctx.t.delta["b"] is None
        assert not ctx.t.phi_fallback["b"]

    def test_full_coupling_context(self, t_a, g_a):
        ctx = coupling_context(validate_coupling(t_a, g_a, FULL_A))
        assert ctx.t.lam["r"] == ("a", "b")
        assert set(ctx.t.cls.values()) == {COUPLED}
        assert set(ctx.g.cls.values()) == {COUPLED}
        assert ctx.g.chi["r2"] == "r"

    def test_worked_example_context(self, t_b, g_b):
        c = Coupling.unchecked(t_b, g_b, [("x", "x2"), ("m", "r2")])
        ctx = coupling_context(c)
        assert ctx.t.phi["v"] == "m"
        assert ctx.t.eta["v"] == "x2"
        assert ctx.g.phi["w2"] == "r2"
        assert ctx.g.eta["w2"] == "x"

    def test_phi_fallback_flagged(self, t_a, g_a):
        # the top pair itself has nothing above it with coupled content
        c = validate_coupling(t_a, g_a, [("b", "b2")])
        ctx = coupling_context(c)
        assert ctx.t.phi_fallback["r"]
        assert ctx.t.phi["r"] == "b"
        assert ctx.t.eta["r"] == "b2"


class TestCost:
    def test_full_coupling_costs(self, t_a, g_a):
        ctx = coupling_context(validate_coupling(t_a, g_a, FULL_A))
        report = coupling_norm(ctx)
        assert report.cost("t", "r") == pytest.approx(1.0)
        assert report.case("t", "r") == CASE_COUPLE
        assert report.cost("t", "a") == 0.0
        assert report.cost("t", "b") == 0.0
        assert report.norm_inf == pytest.approx(1.0)

    def test_worked_example_costs(self, t_b, g_b):
        c = Coupling.unchecked(t_b, g_b, [("x", "x2"), ("m", "r2")])
        report = coupling_norm(coupling_context(c))
        assert report.cost("t", "v") == pytest.approx(0.25)
        assert report.case("t", "v") == CASE_HALVING
        assert report.cost("g", "w2") == pytest.approx(0.1)
        assert report.norm_inf == pytest.approx(0.25)

    def test_unused_is_free(self, t_a, g_a):
        ctx = coupling_context(validate_coupling(t_a, g_a, [("a", "a2")]))
        assert vertex_cost(ctx, "r", "t") == (0.0, CASE_UNUSED)

    def test_eta_case(self, t_b):
        # partner of phi sits high enough that the eta branch wins
        g = tree({"x2": 0.9, "w2": 0.95, "r2": 1},
                 {"x2": "r2", "w2": "r2", "r2": None})
        c = Coupling.unchecked(t_b, g, [("x", "x2"), ("m", "r2")])
        cost, case = vertex_cost(coupling_context(c), "v", "t")
        assert case == CASE_ETA
        assert cost == pytest.approx(0.9 - 0.5)

    def test_multi_case(self, caterpillar, g_a):
        c = Coupling.unchecked(caterpillar, g_a, [("p", "a2"), ("u", "b2")])
        cost, case = vertex_cost(coupling_context(c), "r")
        assert case == CASE_MULTI
        assert cost == pytest.approx(abs(1.5 - 3.0))

    def test_identity_coupling_is_free(self, caterpillar):
        pairs = [(v, v) for v in caterpillar.ids]
        c = validate_coupling(caterpillar, caterpillar, pairs)
        assert coupling_norm(coupling_context(c)).norm_inf == 0.0

    def test_norm_of_pairs(self, t_a, g_a):
        assert norm_of_pairs(t_a, g_a, FULL_A) == pytest.approx(1.0)


class TestSpecial:
    def test_full_coupling_special(self, t_a, g_a):
        assert is_special(coupling_context(validate_coupling(t_a, g_a, FULL_A)))

    def test_singleton_vacuously_special(self, t_a, g_a):
        c = validate_coupling(t_a, g_a, [("b", "b2")])
        assert is_special(coupling_context(c))

    def test_uncoupled_argmin_not_special(self, t_b, g_b):
        c = Coupling.unchecked(t_b, g_b, [("v", "w2"), ("m", "r2")])
        assert not is_special(coupling_context(c))


def _shifted(t: MergeTree, h: float) -> MergeTree:
    return MergeTree(
        {v: t.height[v] + h for v in t.ids}, dict(t.parent), t.generic, t.strict
    )


class TestFamilyProperties:
    @settings(max_examples=12, deadline=None)
    @given(st.integers(min_value=0, max_value=5), st.integers(min_value=2, max_value=3))
    def test_enumerated_couplings_invariants(self, rep, n):
        tt, gg = random_pair(n, rep, seed=29)
        fam = enumerate_couplings(tt, gg, "all", cap=40)
        assert fam.size > 0
        for c, report in zip(fam.couplings, fam.reports):
            ctx = coupling_context(c)
            # classes partition both vertex sets
            for s, t in ((ctx.t, tt), (ctx.g, gg)):
                counts = {COUPLED: 0, UNUSED: 0, DELETED: 0}
                for v in t.ids:
                    counts[s.cls[v]] += 1
                assert counts[COUPLED] == len(c.pairs)
                assert sum(counts.values()) == len(t.ids)
            # chi of a multi-deletion stays below the partner of delta
            for v in tt.ids:
                if ctx.t.cls[v] == DELETED and len(ctx.t.lam[v]) > 1:
                    d = ctx.t.delta[v]
                    if d is not None:
                        assert gg.leq(ctx.t.chi[v], ctx.t.partner[d])
            # transpose symmetry of the norm
            tr = coupling_norm(coupling_context(c.transpose()))
            assert tr.norm_inf == pytest.approx(report.norm_inf, abs=1e-12)
            # global height shift leaves every cost unchanged
            sc = Coupling.unchecked(_shifted(tt, 7.5), _shifted(gg, 7.5), c.pairs)
            sh = coupling_norm(coupling_context(sc))
            for key, (cost, _) in report.costs.items():
                assert sh.costs[key][0] == pytest.approx(cost, abs=1e-9)
