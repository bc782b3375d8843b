"""Command line client for the treecoupling service.

By default every command spins up the FastAPI app in-process; pass
``--server`` to talk to a running instance instead.  Exit codes: 0 on
success, 2 for validation errors, 3 when an enumeration cap or timeout
was hit, 4 for internal check failures.
"""

from __future__ import annotations

import json
import sys
from typing import Optional

import click

from .trees import load_point_cloud


class Client:
    def __init__(self, server: Optional[str]):
        self.server = server
        self._test_client = None

    def post(self, path: str, payload: dict):
        if self.server:
            import httpx

            resp = httpx.post(self.server.rstrip("/") + path, json=payload,
                              timeout=600.0)
            return resp.status_code, resp.json()
        if self._test_client is None:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import create_app

            self._test_client = TestClient(
                create_app(), raise_server_exceptions=False
            )
        resp = self._test_client.post(path, json=payload)
        return resp.status_code, resp.json()


def _finish(status: int, body: dict, out: str = "json"):
    if status == 200:
        if out == "csv" and "csv" in body:
            click.echo(body["csv"], nl=False)
        else:
            click.echo(json.dumps(body, indent=2, sort_keys=True))
        return
    click.echo(json.dumps(body, indent=2, sort_keys=True), err=True)
    code = {422: 2, 409: 3}.get(status, 4)
    sys.exit(code)


def _load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


tree_opt = click.option(
    "--tree", "-t", "trees", multiple=True, required=True,
    type=click.Path(exists=True), help="tree JSON file (repeat for pairs)",
)
out_opt = click.option(
    "--out", type=click.Choice(["json", "csv"]), default="json"
)


@click.group()
@click.option("--server", default=None, envvar="TREECOUPLING_SERVER",
              help="base URL of a running service; default is in-process")
@click.pass_context
def main(ctx, server):
    ctx.obj = Client(server)


@main.command()
@tree_opt
@click.option("--strict", is_flag=True, default=False)
@click.pass_obj
def validate(client: Client, trees, strict):
    """Check tree invariants and report basic shape."""
    for path in trees:
        tree = _load_json(path)
        tree["strict"] = strict
        status, body = client.post("/validate", {"tree": tree})
        _finish(status, body)


@main.command()
@tree_opt
@click.option("--cap", default=25, show_default=True)
@click.option("--timeout-s", default=60.0, show_default=True)
@click.pass_obj
def exact(client: Client, trees, cap, timeout_s):
    """Exact interleaving distance via full coupling enumeration."""
    t, g = _pair(trees)
    status, body = client.post(
        "/exact", {"tree_t": t, "tree_g": g, "cap": cap, "timeout_s": timeout_s}
    )
    _finish(status, body)


@main.command()
@tree_opt
@click.option("--direction", type=click.Choice(["up", "down", "both"]),
              default="both", show_default=True)
@click.option("--penalty", type=click.Choice(["root", "father"]),
              default="root", show_default=True,
              help="father is experimental and unvalidated")
@click.pass_obj
def bounds(client: Client, trees, direction, penalty):
    """Two-sided distance estimates with a witness coupling."""
    t, g = _pair(trees)
    status, body = client.post(
        "/bounds",
        {"tree_t": t, "tree_g": g, "direction": direction, "penalty": penalty},
    )
    _finish(status, body)


@main.command()
@tree_opt
@click.option("--coupling", "-c", required=True, type=click.Path(exists=True))
@click.pass_obj
def cost(client: Client, trees, coupling):
    """Per-vertex costs and the norm of a given coupling."""
    t, g = _pair(trees)
    status, body = client.post(
        "/cost", {"tree_t": t, "tree_g": g, "coupling": _load_json(coupling)}
    )
    _finish(status, body)


@main.command("verify-map")
@tree_opt
@click.option("--coupling", "-c", required=True, type=click.Path(exists=True))
@click.option("--eps", type=float, default=None)
@click.pass_obj
def verify_map(client: Client, trees, coupling, eps):
    """Build the induced map and run the goodness checks."""
    t, g = _pair(trees)
    payload = {"tree_t": t, "tree_g": g, "coupling": _load_json(coupling)}
    if eps is not None:
        payload["eps"] = eps
    status, body = client.post("/verify-map", payload)
    _finish(status, body)


@main.command()
@tree_opt
@click.option("--epsilon", type=float, default=None)
@click.option("--max-leaves", type=int, default=None)
@click.pass_obj
def prune(client: Client, trees, epsilon, max_leaves):
    """Prune a tree at a level or down to a leaf budget."""
    (path,) = trees
    payload = {"tree": _load_json(path)}
    if epsilon is not None:
        payload["epsilon"] = epsilon
    if max_leaves is not None:
        payload["max_leaves"] = max_leaves
    status, body = client.post("/prune", payload)
    _finish(status, body)


@main.command()
@click.option("--cloud", required=True, type=click.Path(exists=True),
              help="point cloud CSV (x,y rows or a matrix block)")
@click.option("--no-perturb", is_flag=True, default=False)
@click.pass_obj
def slink(client: Client, cloud, no_perturb):
    """Single-linkage merge tree of a point cloud."""
    with open(cloud) as fh:
        pc = load_point_cloud(fh.read())
    payload = {"perturb": not no_perturb}
    if pc.points is not None:
        payload["points"] = pc.points.tolist()
    else:
        payload["matrix"] = pc.matrix.tolist()
    status, body = client.post("/slink", payload)
    _finish(status, body)


@main.command()
@click.option("--n-min", default=2, show_default=True)
@click.option("--n-max", default=4, show_default=True)
@click.option("--reps", default=3, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--max-leaves", "budget", type=int, default=None,
              help="switch to the pruned estimate above this leaf count")
@click.option("--oracle-check", is_flag=True, default=False)
@click.option("--no-timing", is_flag=True, default=False,
              help="zero the ms columns for reproducible output")
@out_opt
@click.pass_obj
def bench(client: Client, n_min, n_max, reps, seed, budget, oracle_check,
          no_timing, out):
    """Random cloud benchmark; emits rows and per-n summaries."""
    status, body = client.post(
        "/bench",
        {
            "n_min": n_min,
            "n_max": n_max,
            "reps": reps,
            "seed": seed,
            "budget": budget,
            "oracle_check": oracle_check,
            "measure_time": not no_timing,
        },
    )
    _finish(status, body, out)


def _pair(trees):
    if len(trees) != 2:
        raise click.UsageError("pass exactly two --tree files")
    return _load_json(trees[0]), _load_json(trees[1])


if __name__ == "__main__":
    main()
