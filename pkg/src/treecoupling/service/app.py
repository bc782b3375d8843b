"""FastAPI application exposing the library over HTTP.

The CLI talks to this app in-process; running it behind uvicorn gives the
same surface over the network.  All package errors map to a stable
``kind`` field: validation problems become 422, enumeration caps and
timeouts 409, failed internal checks 500.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import bench as bench_mod
from ..bounds import BoundsResult, d_opt, interleaving_bounds
from ..coupling import (
    coupling_context,
    coupling_norm,
    is_special,
    validate_coupling,
)
from ..errors import (
    CapExceededError,
    InternalCheckError,
    TreeCouplingError,
    ValidationError,
)
from ..maps import check_composition, check_eps_good, extract_coupling, induced_map
from ..oracle import enumerate_couplings, exact_interleaving
from ..pruning import prune, prune_to_leaf_budget
from ..trees import (
    PointCloud,
    perturb_to_generic,
    single_linkage_tree,
    validate_tree,
)
from . import schemas as S


def create_app() -> FastAPI:
    app = FastAPI(title="treecoupling", version="0.1.0")

    @app.exception_handler(TreeCouplingError)
    async def _tc_error(request: Request, exc: TreeCouplingError):
        status = {"validation": 422, "cap": 409, "internal": 500}[exc.kind]
        payload = {"kind": exc.kind, "detail": str(exc)}
        if isinstance(exc, ValidationError):
            payload["details"] = exc.details
        return JSONResponse(status_code=status, content=payload)

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/validate", response_model=S.ValidateResponse)
    def validate(req: S.ValidateRequest):
        tree = validate_tree(req.tree.raw(), strict=req.tree.strict)
        return S.ValidateResponse(
            valid=True,
            root=tree.root,
            leaves=list(tree.leaves),
            generic=tree.generic,
            n_vertices=len(tree.ids),
        )

    @app.post("/exact", response_model=S.ExactResponse)
    def exact(req: S.ExactRequest):
        t = validate_tree(req.tree_t.raw())
        g = validate_tree(req.tree_g.raw())
        distance, witness = exact_interleaving(
            t, g, cap=req.cap, timeout_s=req.timeout_s
        )
        family = enumerate_couplings(t, g, "all", req.cap, req.timeout_s)
        return S.ExactResponse(
            distance=distance,
            witness=S.CouplingModel(pairs=[list(p) for p in witness.pairs]),
            family_size=family.size,
        )

    @app.post("/bounds", response_model=S.BoundsResponse)
    def bounds(req: S.BoundsRequest):
        t = validate_tree(req.tree_t.raw())
        g = validate_tree(req.tree_g.raw())
        if req.direction not in ("up", "down", "both"):
            raise ValidationError("direction must be up, down or both")
        result: BoundsResult = interleaving_bounds(t, g, penalty=req.penalty)
        lower = result.lower if req.direction in ("down", "both") else None
        upper = result.upper if req.direction in ("up", "both") else None
        return S.BoundsResponse(
            lower=lower,
            upper=upper,
            root_pair=list(result.root_pair),
            witness=S.CouplingModel(pairs=[list(p) for p in result.witness]),
            table_sizes=result.table_sizes,
            ms=result.ms,
        )

    @app.post("/cost", response_model=S.CostResponse)
    def cost(req: S.CostRequest):
        t = validate_tree(req.tree_t.raw())
        g = validate_tree(req.tree_g.raw())
        coupling = validate_coupling(t, g, req.coupling.pairs)
        ctx = coupling_context(coupling)
        report = coupling_norm(ctx)
        costs = [
            S.VertexCostModel(side=s, vertex=v, cost=c, case=case)
            for (s, v), (c, case) in sorted(report.costs.items())
        ]
        return S.CostResponse(
            norm=report.norm_inf, special=is_special(ctx), costs=costs
        )

    @app.post("/verify-map", response_model=S.VerifyMapResponse)
    def verify_map(req: S.VerifyMapRequest):
        t = validate_tree(req.tree_t.raw())
        g = validate_tree(req.tree_g.raw())
        alpha = induced_map(t, g, req.coupling.pairs, eps=req.eps)
        beta = induced_map(
            g, t, [(b, a) for a, b in req.coupling.pairs], eps=alpha.eps
        )
        good = check_eps_good(alpha, req.samples_per_edge)
        comp = check_composition(alpha, beta, req.samples_per_edge)
        extracted = extract_coupling(t, g, alpha, alpha.eps)
        extracted_norm = coupling_norm(coupling_context(extracted)).norm_inf
        return S.VerifyMapResponse(
            eps=alpha.eps,
            good_map=good.to_dict(),
            composition_passed=comp.passed,
            composition_residual=comp.max_height_residual,
            extracted=S.CouplingModel(pairs=[list(p) for p in extracted.pairs]),
            extracted_norm=extracted_norm,
        )

    @app.post("/prune", response_model=S.PruneResponse)
    def prune_endpoint(req: S.PruneRequest):
        tree = validate_tree(req.tree.raw())
        if (req.epsilon is None) == (req.max_leaves is None):
            raise ValidationError("pass exactly one of epsilon or max_leaves")
        if req.epsilon is not None:
            eps, result = req.epsilon, prune(tree, req.epsilon)
        else:
            eps, result = prune_to_leaf_budget(tree, req.max_leaves)
        norm = coupling_norm(coupling_context(result.coupling)).norm_inf
        return S.PruneResponse(
            epsilon=eps,
            pruned=result.pruned.to_dict(),
            removal_log=[
                [kind, vertex, "%.12g" % gap]
                for kind, vertex, gap in result.removal_log
            ],
            degenerate=result.degenerate,
            coupling_norm=norm,
        )

    @app.post("/slink", response_model=S.SlinkResponse)
    def slink(req: S.SlinkRequest):
        cloud = PointCloud(
            points=req.points if req.points is not None else None,
            matrix=req.matrix if req.matrix is not None else None,
        )
        tree = single_linkage_tree(cloud)
        if req.perturb:
            tree = perturb_to_generic(
                tree, bench_mod.PERTURB_SCALE * max(tree.span, 1e-12)
            )
        return S.SlinkResponse(tree=tree.to_dict())

    @app.post("/bench", response_model=S.BenchResponse)
    def bench(req: S.BenchRequest):
        cfg = bench_mod.BenchConfig(
            n_min=req.n_min,
            n_max=req.n_max,
            reps=req.reps,
            seed=req.seed,
            budget=req.budget,
            oracle_check=req.oracle_check,
            measure_time=req.measure_time,
        )
        rows = bench_mod.run_benchmark(cfg)
        return S.BenchResponse(
            csv=bench_mod.rows_to_csv(rows),
            summary=bench_mod.summarize(rows),
        )

    return app
