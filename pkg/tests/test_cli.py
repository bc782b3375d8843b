import json

import pytest
from click.testing import CliRunner

from treecoupling.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def write_tree(path, heights, parent):
    nodes = [
        {"id": v, "height": h, "parent": parent[v]} for v, h in heights.items()
    ]
    path.write_text(json.dumps({"nodes": nodes}))
    return str(path)


@pytest.fixture
def star_files(tmp_path):
    t = write_tree(tmp_path / "t.json", {"a": 0, "b": 1, "r": 2},
                   {"a": "r", "b": "r", "r": None})
    g = write_tree(tmp_path / "g.json", {"a2": 0, "b2": 1, "r2": 3},
                   {"a2": "r2", "b2": "r2", "r2": None})
    return t, g


class TestValidate:
    def test_ok(self, runner, star_files):
        result = runner.invoke(main, ["validate", "-t", star_files[0]])
        assert result.exit_code == 0
        assert json.loads(result.output)["root"] == "r"

    def test_invalid_tree_exits_2(self, runner, tmp_path):
        bad = write_tree(tmp_path / "bad.json", {"a": 0, "b": 1},
                         {"a": "b", "b": "a"})
        result = runner.invoke(main, ["validate", "-t", bad])
        assert result.exit_code == 2


class TestExact:
    def test_star_pair(self, runner, star_files):
        t, g = star_files
        result = runner.invoke(main, ["exact", "-t", t, "-t", g])
        assert result.exit_code == 0
        body = json.loads(result.output)
        assert body["distance"] == pytest.approx(1.0)
        assert body["family_size"] == 11

    def test_cap_exits_3(self, runner, star_files):
        t, g = star_files
        result = runner.invoke(main, ["exact", "-t", t, "-t", g, "--cap", "1"])
        assert result.exit_code == 3

    def test_needs_two_trees(self, runner, star_files):
        result = runner.invoke(main, ["exact", "-t", star_files[0]])
        assert result.exit_code != 0


class TestBounds:
    def test_star_pair(self, runner, star_files):
        t, g = star_files
        result = runner.invoke(main, ["bounds", "-t", t, "-t", g])
        assert result.exit_code == 0
        body = json.loads(result.output)
        assert body["lower"] == pytest.approx(1.0)
        assert body["upper"] == pytest.approx(1.0)


class TestCost:
    def test_full_coupling(self, runner, star_files, tmp_path):
        t, g = star_files
        cpath = tmp_path / "c.json"
        cpath.write_text(json.dumps(
            {"pairs": [["a", "a2"], ["b", "b2"], ["r", "r2"]]}
        ))
        result = runner.invoke(
            main, ["cost", "-t", t, "-t", g, "-c", str(cpath)]
        )
        assert result.exit_code == 0
        assert json.loads(result.output)["norm"] == pytest.approx(1.0)

    def test_invalid_coupling_exits_2(self, runner, star_files, tmp_path):
        t, g = star_files
        cpath = tmp_path / "c.json"
        cpath.write_text(json.dumps({"pairs": [["a", "a2"], ["r", "r2"]]}))
        result = runner.invoke(
            main, ["cost", "-t", t, "-t", g, "-c", str(cpath)]
        )
        assert result.exit_code == 2


class TestVerifyMap:
    def test_star(self, runner, star_files, tmp_path):
        t, g = star_files
        cpath = tmp_path / "c.json"
        cpath.write_text(json.dumps(
            {"pairs": [["a", "a2"], ["b", "b2"], ["r", "r2"]]}
        ))
        result = runner.invoke(
            main, ["verify-map", "-t", t, "-t", g, "-c", str(cpath)]
        )
        assert result.exit_code == 0
        body = json.loads(result.output)
        assert body["good_map"]["passed"] is True


class TestPrune:
    def test_max_leaves(self, runner, tmp_path):
        cat = write_tree(
            tmp_path / "cat.json",
            {"p": 0, "q": 0.9, "s": 1, "u": 0.2, "r": 1.5},
            {"p": "s", "q": "s", "s": "r", "u": "r", "r": None},
        )
        result = runner.invoke(main, ["prune", "-t", cat, "--max-leaves", "2"])
        assert result.exit_code == 0
        body = json.loads(result.output)
        assert body["epsilon"] == pytest.approx(0.1, rel=1e-6)


class TestSlink:
    def test_points_csv(self, runner, tmp_path):
        cloud = tmp_path / "cloud.csv"
        cloud.write_text("0,0\n0,1\n0,3\n")
        result = runner.invoke(
            main, ["slink", "--cloud", str(cloud), "--no-perturb"]
        )
        assert result.exit_code == 0
        nodes = json.loads(result.output)["tree"]["nodes"]
        assert len(nodes) == 5


class TestBench:
    def test_csv_output_reproducible(self, runner):
        args = [
            "bench", "--n-min", "2", "--n-max", "2", "--reps", "2",
            "--seed", "3", "--no-timing", "--out", "csv",
        ]
        one = runner.invoke(main, args)
        two = runner.invoke(main, args)
        assert one.exit_code == 0
        assert one.output == two.output
        assert one.output.splitlines()[0].startswith("n,rep,d_l,d_u,gap")
