import numpy as np
import pytest

from treecoupling.bench import generate_point_cloud_pair, tree_from_cloud
from treecoupling.trees import MergeTree


def tree(heights, parent, generic=True, strict=True):
    return MergeTree(heights, parent, generic=generic, strict=strict)


@pytest.fixture
def t_a():
    return tree({"a": 0, "b": 1, "r": 2}, {"a": "r", "b": "r", "r": None})


@pytest.fixture
def g_a():
    return tree({"a2": 0, "b2": 1, "r2": 3}, {"a2": "r2", "b2": "r2", "r2": None})


@pytest.fixture
def t_b():
    return tree({"x": 0, "v": 0.5, "m": 1}, {"x": "m", "v": "m", "m": None})


@pytest.fixture
def g_b():
    return tree({"x2": 0, "w2": 0.8, "r2": 1}, {"x2": "r2", "w2": "r2", "r2": None})


@pytest.fixture
def caterpillar():
    return tree(
        {"p": 0, "q": 0.5, "s": 1, "u": 0.2, "r": 1.5},
        {"p": "s", "q": "s", "s": "r", "u": "r", "r": None},
    )


@pytest.fixture
def prune_cat():
    return tree(
        {"p": 0, "q": 0.9, "s": 1, "u": 0.2, "r": 1.5},
        {"p": "s", "q": "s", "s": "r", "u": "r", "r": None},
    )


def random_pair(n, rep, seed=11):
    """Single-linkage tree pair from the benchmark generator."""
    rng = np.random.default_rng([seed, n, rep])
    a, b = generate_point_cloud_pair(n, rng)
    return tree_from_cloud(a), tree_from_cloud(b)


def random_tree(n, rep, seed=17):
    return random_pair(n, rep, seed)[0]
