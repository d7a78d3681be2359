"""Semantic-aware subset selection over unit-normalized embedding pools."""

from .errors import PoolFormatError, PoolValidationError
from .pool_io import (
    EmbeddingPool,
    load_pool,
    make_pool,
    pool_from_bytes,
    pool_subset,
    pool_to_bytes,
    read_pool,
    save_pool,
    write_pool,
)
from .sampler import (
    Selection,
    SelectionConfig,
    filter_candidates,
    run_selection,
    select_margin_only,
    select_mixed,
    select_sas,
    selection_to_doc,
    selection_to_json,
)
from .baselines import select_kcenter, select_random
from .scoring import (
    ScoreTable,
    angular_distance,
    diversity,
    mixed_score,
    non_target_separation,
    score_pool,
    target_relevance,
)
from .report import selection_report, sweep
from .synth import SyntheticSpec, generate_pool

__version__ = "0.1.0"

__all__ = [
    "EmbeddingPool",
    "PoolFormatError",
    "PoolValidationError",
    "ScoreTable",
    "Selection",
    "SelectionConfig",
    "SyntheticSpec",
    "angular_distance",
    "diversity",
    "filter_candidates",
    "generate_pool",
    "load_pool",
    "make_pool",
    "mixed_score",
    "non_target_separation",
    "pool_from_bytes",
    "pool_subset",
    "pool_to_bytes",
    "read_pool",
    "run_selection",
    "save_pool",
    "score_pool",
    "select_kcenter",
    "select_margin_only",
    "select_mixed",
    "select_random",
    "select_sas",
    "selection_report",
    "selection_to_doc",
    "selection_to_json",
    "sweep",
    "target_relevance",
    "write_pool",
    "__version__",
]
