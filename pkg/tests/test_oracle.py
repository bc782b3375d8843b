import pytest
from hypothesis import given, settings, strategies as st

from treecoupling.errors import CapExceededError
from treecoupling.oracle import (
    enumerate_antichains,
    enumerate_couplings,
    exact_interleaving,
    verify_decomposition,
)

from . import _brute
from .conftest import random_pair


class TestEnumeration:
    def test_star_family(self, t_a, g_a):
        fam = enumerate_couplings(t_a, g_a)
        assert fam.size == 11
        assert fam.min_cost == pytest.approx(1.0)
        assert fam.witness.pairs == (("a", "a2"),)

    def test_rooted_members_contain_root_pair(self, t_a, g_a):
        fam = enumerate_couplings(t_a, g_a, "rooted")
        assert fam.size == 3
        for c in fam.couplings:
            assert ("r", "r2") in c.pairs

    def test_special_family_is_subset(self, t_a, g_a):
        rooted = enumerate_couplings(t_a, g_a, "rooted")
        special = enumerate_couplings(t_a, g_a, "rooted-special")
        assert special.size == 2
        assert set(c.pairs for c in special.couplings) <= set(
            c.pairs for c in rooted.couplings
        )

    def test_cap_enforced(self, t_a, g_a):
        with pytest.raises(CapExceededError):
            enumerate_couplings(t_a, g_a, cap=3)

    def test_unknown_kind(self, t_a, g_a):
        with pytest.raises(ValueError):
            enumerate_couplings(t_a, g_a, "everything")


class TestExact:
    def test_star_distance(self, t_a, g_a):
        d, witness = exact_interleaving(t_a, g_a)
        assert d == pytest.approx(1.0)
        assert witness.pairs == (("a", "a2"),)

    def test_self_distance_zero(self, t_a):
        d, witness = exact_interleaving(t_a, t_a)
        assert d == 0
        assert witness.pairs == (("a", "a"), ("b", "b"), ("r", "r"))

    def test_symmetry(self, t_b, g_b):
        d1, _ = exact_interleaving(t_b, g_b)
        d2, _ = exact_interleaving(g_b, t_b)
        assert d1 == pytest.approx(d2)
        assert d1 == pytest.approx(0.25)


class TestAgainstBruteForce:
    """Cross-check against the independent reference in tests/_brute.py."""

    @settings(max_examples=10, deadline=None)
    @given(st.integers(min_value=0, max_value=6), st.integers(min_value=2, max_value=3))
    def test_same_coupling_sets(self, rep, n):
        tt, gg = random_pair(n, rep, seed=43)
        fam = enumerate_couplings(tt, gg, "all", cap=40)
        ours = set(c.pairs for c in fam.couplings)
        theirs = set(_brute.all_couplings(tt, gg))
        assert ours == theirs

    @settings(max_examples=10, deadline=None)
    @given(st.integers(min_value=0, max_value=6), st.integers(min_value=2, max_value=3))
    def test_same_costs_and_distance(self, rep, n):
        tt, gg = random_pair(n, rep, seed=43)
        fam = enumerate_couplings(tt, gg, "all", cap=40)
        for c, report in zip(fam.couplings, fam.reports):
            ref = _brute.coupling_cost(tt, gg, c.pairs)
            assert report.norm_inf == pytest.approx(ref, abs=1e-12)
        assert fam.min_cost == pytest.approx(
            _brute.brute_distance(tt, gg), abs=1e-12
        )


class TestDecomposition:
    def test_star_pair(self, t_a, g_a):
        report = verify_decomposition(t_a, g_a)
        assert report.passed
        assert report.exact == pytest.approx(1.0)
        assert report.min_special_extension == pytest.approx(1.0)
        assert report.n_antichains == 11
        assert report.witness_antichain == (("a", "a2"),)

    def test_caterpillar_pair(self, caterpillar, g_a):
        report = verify_decomposition(caterpillar, g_a)
        assert report.passed

    def test_antichain_members_are_incomparable(self, t_a, g_a):
        for cstar in enumerate_antichains(t_a, g_a):
            for i, (a, b) in enumerate(cstar):
                for c, d in cstar[i + 1:]:
                    assert not t_a.comparable(a, c)
                    assert not g_a.comparable(b, d)

    @settings(max_examples=6, deadline=None)
    @given(st.integers(min_value=0, max_value=4), st.integers(min_value=2, max_value=3))
    def test_random_pairs(self, rep, n):
        tt, gg = random_pair(n, rep, seed=47)
        assert verify_decomposition(tt, gg, cap=40).passed
