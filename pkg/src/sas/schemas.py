"""Pydantic request/response models for the HTTP service."""

from pydantic import BaseModel, ConfigDict, Field


class HealthResponse(BaseModel):
    status: str
    pools: int


class ClassCount(BaseModel):
    name: str
    count: int


class PoolSummary(BaseModel):
    """Identity and shape of a loaded pool."""

    pool_id: str
    dim: int
    n_classes: int
    n_images: int
    classes: list[ClassCount]


class PoolListResponse(BaseModel):
    pools: list[PoolSummary]


class SynthRequest(BaseModel):
    """Parameters for generating a synthetic pool server-side."""

    dim: int
    classes: int
    per_class: int
    kappa: float = 0.0
    dup: float = 0.0
    seed: int = 0


class SampleRequest(BaseModel):
    """Selection config; field names match the CLI flags."""

    model_config = ConfigDict(populate_by_name=True)

    ipc: int
    ratio: float = 0.5
    selector: str = "sas"
    lambda_: float = Field(0.0, alias="lambda")
    seed: int = 0
    use_rel: bool = True
    use_sep: bool = True
    use_div: bool = True


class ConfigEcho(SampleRequest):
    warnings: list[str] = []


class SelectedImageModel(BaseModel):
    image_id: str
    margin: float
    dynamic_diversity: float | None = None


class RemovalModel(BaseModel):
    step: int
    image_id: str
    diversity: float


class ClassSelectionModel(BaseModel):
    class_name: str
    selected: list[SelectedImageModel]
    removals: list[RemovalModel]


class SelectionModel(BaseModel):
    """Mirror of the selection JSON document."""

    config: ConfigEcho
    classes: list[ClassSelectionModel]


class ScoreRow(BaseModel):
    image_id: str
    class_name: str
    relevance: float
    separation: float
    diversity_static: float | None
    margin: float
    mixed: float | None = None


class ScoreResponse(BaseModel):
    pool_id: str
    rows: list[ScoreRow]


class SweepRequest(BaseModel):
    grid: list[SampleRequest]


class SweepResponse(BaseModel):
    rows: list[dict]


class ErrorResponse(BaseModel):
    error: str
    detail: str
