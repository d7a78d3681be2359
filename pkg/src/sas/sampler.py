"""Two-stage subset selection plus the single-ranking selectors.

Stage 1 filters each class down to a candidate set of the images with the
highest margin (or relevance-only / separation-only under ablation flags).
Stage 2 walks the candidates in stage-1 order, growing a selected set; every
time the set reaches ipc + 1 members, the member with the lowest dynamic
diversity (mean angular distance to the current members) is dropped. Ties on
diversity are broken toward dropping the lower margin, then the higher pool
index. The surviving set is the class's selection.

select_margin_only and select_mixed rank the full class pool by a single
score and take the top ipc; they share the Selection output contract.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .floatfmt import round_float
from .pool_io import EmbeddingPool
from .scoring import ScoreTable, angular_distance, mixed_score

SELECTORS = ("sas", "margin_only", "random", "kcenter", "mixed")


@dataclass
class SelectionConfig:
    """Knobs for one selection run.

    candidate_ratio is the stage-1 retained fraction p; lambda_ only matters
    for the mixed selector and seed only for the random one. The use_* flags
    switch score components off for ablation runs.
    """

    ipc: int
    candidate_ratio: float = 0.5
    selector: str = "sas"
    lambda_: float = 0.0
    seed: int = 0
    use_rel: bool = True
    use_sep: bool = True
    use_div: bool = True

    def validate(self) -> None:
        if self.ipc < 1:
            raise ValueError(f"ipc must be >= 1, got {self.ipc}")
        if not 0.0 < self.candidate_ratio < 1.0:
            raise ValueError(
                f"candidate_ratio must lie in (0, 1), got {self.candidate_ratio}"
            )
        if self.selector not in SELECTORS:
            raise ValueError(
                f"unknown selector {self.selector!r}, expected one of {SELECTORS}"
            )
        if self.lambda_ < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lambda_}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


@dataclass
class SelectedImage:
    image_id: str
    pool_index: int
    margin: float
    dynamic_diversity: float | None


@dataclass
class Removal:
    step: int  # 0-based position in the stage-1 candidate order that triggered it
    image_id: str
    pool_index: int
    diversity: float


@dataclass
class ClassSelection:
    class_name: str
    class_index: int
    selected: list[SelectedImage]
    removals: list[Removal]


@dataclass
class Selection:
    """Final per-class subsets plus the audit trail of stage-2 removals."""

    config: SelectionConfig
    warnings: list[str] = field(default_factory=list)
    classes: list[ClassSelection] = field(default_factory=list)

    def selected_indices(self, class_index: int) -> list[int]:
        return [s.pool_index for s in self.classes[class_index].selected]


def stage1_scores(table: ScoreTable, config: SelectionConfig) -> np.ndarray | None:
    """Per-image stage-1 ranking score, or None when no component is enabled."""
    if config.use_rel and config.use_sep:
        return table.margin
    if config.use_rel:
        return table.relevance
    if config.use_sep:
        return table.separation
    return None


def candidate_count(ipc: int, ratio: float, class_size: int) -> int:
    """Stage-1 budget: round-half-up of ratio * class_size, floored at ipc, capped at the class."""
    rounded = int(math.floor(ratio * class_size + 0.5))
    return min(class_size, max(ipc, rounded))


def filter_candidates(
    pool: EmbeddingPool, table: ScoreTable, config: SelectionConfig
) -> list[list[int]]:
    """Per-class candidate index lists in descending stage-1-score order.

    Ties are broken by ascending pool index. With neither relevance nor
    separation enabled there is nothing to rank by, so every class keeps its
    full pool in index order (stage 2 then runs on the whole class).
    """
    config.validate()
    scores = stage1_scores(table, config)
    out: list[list[int]] = []
    for c in range(pool.n_classes):
        idx = [int(i) for i in pool.class_indices(c)]
        if scores is None:
            out.append(idx)
            continue
        k = candidate_count(config.ipc, config.candidate_ratio, len(idx))
        ranked = sorted(idx, key=lambda i: (-scores[i], i))
        out.append(ranked[:k])
    return out


class _DistanceCache:
    """Lazy pairwise angular distances over float64 unit feature rows."""

    def __init__(self, unit_features: np.ndarray):
        self.feats = unit_features
        self.cache: dict[tuple[int, int], float] = {}

    def __call__(self, a: int, b: int) -> float:
        key = (a, b) if a < b else (b, a)
        value = self.cache.get(key)
        if value is None:
            value = angular_distance(self.feats[key[0]], self.feats[key[1]])
            self.cache[key] = value
        return value


def _dynamic_diversity(member: int, members: list[int], dist: _DistanceCache) -> float:
    # members must be sorted ascending: summation order is part of the contract.
    others = [m for m in members if m != member]
    return sum(dist(member, m) for m in others) / len(others)


def final_dynamic_diversities(
    pool: EmbeddingPool, indices: list[int]
) -> dict[int, float | None]:
    """Dynamic diversity of each member with respect to the final set itself."""
    dist = _DistanceCache(pool.unit_features())
    members = sorted(indices)
    if len(members) < 2:
        return {i: None for i in indices}
    return {i: _dynamic_diversity(i, members, dist) for i in indices}


def _short_class_warnings(
    pool: EmbeddingPool, ipc: int, warnings: list[str]
) -> None:
    for c in range(pool.n_classes):
        size = int(pool.class_indices(c).size)
        if size < ipc:
            warnings.append(
                f"class {c} ({pool.class_names[c]!r}) has {size} images, "
                f"fewer than ipc={ipc}; selected in full"
            )


def select_sas(
    pool: EmbeddingPool, table: ScoreTable, config: SelectionConfig
) -> Selection:
    """Run the two-stage selection; deterministic for identical inputs."""
    config.validate()
    if config.selector != "sas":
        raise ValueError(f"select_sas called with selector {config.selector!r}")
    candidates = filter_candidates(pool, table, config)
    dist = _DistanceCache(pool.unit_features())
    selection = Selection(config=config)
    _short_class_warnings(pool, config.ipc, selection.warnings)

    for c in range(pool.n_classes):
        chosen, removals = _select_class_sas(
            candidates[c], config.ipc, config.use_div, table, dist
        )
        selected = _build_entries(pool, table, chosen, dist)
        selection.classes.append(
            ClassSelection(
                class_name=pool.class_names[c],
                class_index=c,
                selected=selected,
                removals=[
                    Removal(step, pool.image_ids[i], i, div)
                    for step, i, div in removals
                ],
            )
        )
    return selection


def _select_class_sas(
    candidates: list[int],
    ipc: int,
    use_div: bool,
    table: ScoreTable,
    dist: _DistanceCache,
) -> tuple[list[int], list[tuple[int, int, float]]]:
    if not use_div:
        # Ablation: without diversity-aware selection, stage 2 degenerates to
        # keeping the top-ipc candidates in stage-1 order.
        return candidates[:ipc], []
    selected: list[int] = []
    removals: list[tuple[int, int, float]] = []
    for step, cand in enumerate(candidates):
        selected.append(cand)
        if len(selected) == ipc + 1:
            members = sorted(selected)
            divs = {m: _dynamic_diversity(m, members, dist) for m in members}
            victim = min(selected, key=lambda m: (divs[m], table.margin[m], -m))
            selected.remove(victim)
            removals.append((step, victim, divs[victim]))
    return selected, removals


def _build_entries(
    pool: EmbeddingPool,
    table: ScoreTable,
    chosen: list[int],
    dist: _DistanceCache,
) -> list[SelectedImage]:
    members = sorted(chosen)
    entries = []
    for i in chosen:
        div = _dynamic_diversity(i, members, dist) if len(members) >= 2 else None
        entries.append(
            SelectedImage(
                image_id=pool.image_ids[i],
                pool_index=i,
                margin=float(table.margin[i]),
                dynamic_diversity=div,
            )
        )
    return entries


def _select_by_ranking(
    pool: EmbeddingPool,
    table: ScoreTable,
    config: SelectionConfig,
    scores: np.ndarray,
) -> Selection:
    dist = _DistanceCache(pool.unit_features())
    selection = Selection(config=config)
    _short_class_warnings(pool, config.ipc, selection.warnings)
    for c in range(pool.n_classes):
        idx = [int(i) for i in pool.class_indices(c)]
        ranked = sorted(idx, key=lambda i: (-scores[i], i))
        chosen = ranked[: config.ipc]
        selection.classes.append(
            ClassSelection(
                class_name=pool.class_names[c],
                class_index=c,
                selected=_build_entries(pool, table, chosen, dist),
                removals=[],
            )
        )
    return selection


def select_margin_only(
    pool: EmbeddingPool, table: ScoreTable, config: SelectionConfig
) -> Selection:
    """Top-ipc per class by margin over the full pool; no stage-1 filter."""
    config.validate()
    return _select_by_ranking(pool, table, config, table.margin)


def select_mixed(
    pool: EmbeddingPool, table: ScoreTable, config: SelectionConfig
) -> Selection:
    """Top-ipc per class by the mixed score over the full pool."""
    config.validate()
    mixed = mixed_score(table, pool, config.lambda_)
    return _select_by_ranking(pool, table, config, mixed)


def run_selection(
    pool: EmbeddingPool, table: ScoreTable, config: SelectionConfig
) -> Selection:
    """Dispatch to the selector named in the config."""
    config.validate()
    if config.selector == "sas":
        return select_sas(pool, table, config)
    if config.selector == "margin_only":
        return select_margin_only(pool, table, config)
    if config.selector == "mixed":
        return select_mixed(pool, table, config)
    from . import baselines  # deferred: baselines imports this module's types

    if config.selector == "random":
        return baselines.select_random(pool, table, config)
    return baselines.select_kcenter(pool, table, config)


# --- selection JSON ----------------------------------------------------------

def config_to_doc(config: SelectionConfig, warnings: list[str]) -> dict:
    return {
        "selector": config.selector,
        "ipc": config.ipc,
        "ratio": config.candidate_ratio,
        "lambda": config.lambda_,
        "seed": config.seed,
        "use_rel": config.use_rel,
        "use_sep": config.use_sep,
        "use_div": config.use_div,
        "warnings": list(warnings),
    }


def selection_to_doc(selection: Selection) -> dict:
    """JSON-ready dict with floats rounded to 9 significant digits."""
    return {
        "config": config_to_doc(selection.config, selection.warnings),
        "classes": [
            {
                "class_name": cls.class_name,
                "selected": [
                    {
                        "image_id": s.image_id,
                        "margin": round_float(s.margin),
                        "dynamic_diversity": round_float(s.dynamic_diversity),
                    }
                    for s in cls.selected
                ],
                "removals": [
                    {
                        "step": r.step,
                        "image_id": r.image_id,
                        "diversity": round_float(r.diversity),
                    }
                    for r in cls.removals
                ],
            }
            for cls in selection.classes
        ],
    }


def selection_to_json(selection: Selection) -> str:
    return json.dumps(selection_to_doc(selection), indent=2) + "\n"


def config_from_doc(doc: dict) -> SelectionConfig:
    """Parse a config object using the CLI flag names (grid entries, JSON echo)."""
    known = {
        "selector", "ipc", "ratio", "lambda", "seed",
        "no_rel", "no_sep", "no_div", "use_rel", "use_sep", "use_div",
        "warnings",
    }
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    selector = doc.get("selector", "sas")
    if selector == "margin":  # CLI spelling
        selector = "margin_only"
    config = SelectionConfig(
        ipc=int(doc["ipc"]),
        candidate_ratio=float(doc.get("ratio", 0.5)),
        selector=selector,
        lambda_=float(doc.get("lambda", 0.0)),
        seed=int(doc.get("seed", 0)),
        use_rel=bool(doc.get("use_rel", not doc.get("no_rel", False))),
        use_sep=bool(doc.get("use_sep", not doc.get("no_sep", False))),
        use_div=bool(doc.get("use_div", not doc.get("no_div", False))),
    )
    config.validate()
    return config


def selection_from_doc(doc: dict, pool: EmbeddingPool, table: ScoreTable) -> Selection:
    """Rehydrate a Selection from its JSON document against its pool."""
    config = config_from_doc({k: v for k, v in doc["config"].items() if k != "warnings"})
    index_of = {image_id: i for i, image_id in enumerate(pool.image_ids)}
    class_of = {name: c for c, name in enumerate(pool.class_names)}
    selection = Selection(config=config, warnings=list(doc["config"].get("warnings", [])))
    for cls_doc in doc["classes"]:
        name = cls_doc["class_name"]
        if name not in class_of:
            raise ValueError(f"unknown class {name!r} in selection")
        selected = []
        for entry in cls_doc["selected"]:
            image_id = entry["image_id"]
            if image_id not in index_of:
                raise ValueError(f"unknown image_id {image_id!r} in selection")
            selected.append(
                SelectedImage(
                    image_id=image_id,
                    pool_index=index_of[image_id],
                    margin=float(entry["margin"]),
                    dynamic_diversity=(
                        None
                        if entry.get("dynamic_diversity") is None
                        else float(entry["dynamic_diversity"])
                    ),
                )
            )
        removals = [
            Removal(
                step=int(r["step"]),
                image_id=r["image_id"],
                pool_index=index_of.get(r["image_id"], -1),
                diversity=float(r["diversity"]),
            )
            for r in cls_doc.get("removals", [])
        ]
        selection.classes.append(
            ClassSelection(
                class_name=name,
                class_index=class_of[name],
                selected=selected,
                removals=removals,
            )
        )
    return selection
