"""Pydantic request/response models for the HTTP surface."""

from __future__ import annotations

from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class NodeModel(BaseModel):
    id: str
    height: float
    parent: Optional[str] = None


class TreeModel(BaseModel):
    nodes: List[NodeModel]
    generic: Optional[bool] = None
    strict: bool = False

    def raw(self) -> dict:
        out = {
            "nodes": [n.model_dump(exclude_none=True) for n in self.nodes]
        }
        if self.generic is not None:
            out["generic"] = self.generic
        return out


class CouplingModel(BaseModel):
    pairs: List[List[str]]


class ValidateRequest(BaseModel):
    tree: TreeModel


class ValidateResponse(BaseModel):
    valid: bool
    root: str
    leaves: List[str]
    generic: bool
    n_vertices: int


class PairRequest(BaseModel):
    tree_t: TreeModel
    tree_g: TreeModel


class ExactRequest(PairRequest):
    cap: int = 25
    timeout_s: float = 60.0


class ExactResponse(BaseModel):
    distance: float
    witness: CouplingModel
    family_size: int


class BoundsRequest(PairRequest):
    penalty: str = "root"
    direction: str = "both"


class BoundsResponse(BaseModel):
    lower: Optional[float] = None
    upper: Optional[float] = None
    root_pair: List[str]
    witness: CouplingModel
    table_sizes: Dict[str, int]
    ms: float


class CostRequest(PairRequest):
    coupling: CouplingModel


class VertexCostModel(BaseModel):
    side: str
    vertex: str
    cost: float
    case: str


class CostResponse(BaseModel):
    norm: float
    special: bool
    costs: List[VertexCostModel]


class VerifyMapRequest(PairRequest):
    coupling: CouplingModel
    eps: Optional[float] = None
    samples_per_edge: int = 3


class VerifyMapResponse(BaseModel):
    eps: float
    good_map: dict
    composition_passed: bool
    composition_residual: float
    extracted: CouplingModel
    extracted_norm: float


class PruneRequest(BaseModel):
    tree: TreeModel
    epsilon: Optional[float] = Field(default=None, gt=0)
    max_leaves: Optional[int] = Field(default=None, ge=1)


class PruneResponse(BaseModel):
    epsilon: float
    pruned: dict
    removal_log: List[List[str]]
    degenerate: bool
    coupling_norm: float


class SlinkRequest(BaseModel):
    points: Optional[List[List[float]]] = None
    matrix: Optional[List[List[float]]] = None
    perturb: bool = True


class SlinkResponse(BaseModel):
    tree: dict


class BenchRequest(BaseModel):
    n_min: int = 2
    n_max: int = 4
    reps: int = 3
    seed: int = 0
    budget: Optional[int] = None
    oracle_check: bool = False
    measure_time: bool = True


class BenchResponse(BaseModel):
    csv: str
    summary: Dict[int, Dict[str, float]]


class ErrorResponse(BaseModel):
    kind: str
    detail: str
    details: Optional[List[str]] = None
