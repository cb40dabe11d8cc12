"""Judgments, judgment groups, datasets and their JSONL wire format."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

HUMAN = 0
LLM = 1
LABEL_NAMES = {HUMAN: "human", LLM: "llm"}
_LABEL_FROM_NAME = {"human": HUMAN, "llm": LLM}


class DatasetError(ValueError):
    """Raised for malformed or invalid dataset content."""


class JudgmentType(str, Enum):
    POINTWISE = "pointwise"
    PAIRWISE = "pairwise"
    LISTWISE = "listwise"


@dataclass(frozen=True)
class DimensionScale:
    name: str
    min: int
    max: int
    step: int = 1

    def __post_init__(self):
        if self.min >= self.max:
            raise DatasetError(f"dimension {self.name!r}: min must be < max")
        if self.step < 1 or (self.max - self.min) % self.step:
            raise DatasetError(f"dimension {self.name!r}: step must divide max - min")

    @property
    def levels(self) -> int:
        return (self.max - self.min) // self.step + 1

    def grid(self) -> list[int]:
        return list(range(self.min, self.max + 1, self.step))

    def contains(self, value: float) -> bool:
        if not (self.min <= value <= self.max):
            return False
        q = (value - self.min) / self.step
        return abs(q - round(q)) < 1e-9


@dataclass(frozen=True)
class ScaleSpec:
    """Rating scale of a dataset.

    Pointwise datasets use ``dimensions``; pairwise datasets use
    ``pair_levels_x`` (scores in ``[-x, x]``); listwise datasets use
    ``listwise_items`` and a single per-item score dimension.
    """

    dimensions: tuple[DimensionScale, ...] = ()
    pair_levels_x: int | None = None
    listwise_items: int | None = None

    def __post_init__(self):
        names = [d.name for d in self.dimensions]
        if len(set(names)) != len(names):
            raise DatasetError("duplicate dimension names in scale")
        if self.pair_levels_x is not None and self.pair_levels_x < 1:
            raise DatasetError("pair_levels_x must be >= 1")
        if self.listwise_items is not None and self.listwise_items < 2:
            raise DatasetError("listwise_items must be >= 2")

    def dimension(self, name: str) -> DimensionScale:
        for d in self.dimensions:
            if d.name == name:
                return d
        raise KeyError(name)

    @property
    def pair_scale(self) -> DimensionScale:
        if self.pair_levels_x is None:
            raise DatasetError("scale has no pairwise levels")
        x = self.pair_levels_x
        return DimensionScale("pair", -x, x, 1)

    @property
    def item_scale(self) -> DimensionScale:
        if not self.dimensions:
            raise DatasetError("listwise scale needs a per-item score dimension")
        return self.dimensions[0]

    def to_dict(self) -> dict:
        out: dict = {
            "dimensions": {d.name: {"min": d.min, "max": d.max, "step": d.step} for d in self.dimensions}
        }
        if self.pair_levels_x is not None:
            out["pair_levels_x"] = self.pair_levels_x
        if self.listwise_items is not None:
            out["listwise_items"] = self.listwise_items
        return out

    @classmethod
    def from_dict(cls, raw: Mapping) -> "ScaleSpec":
        try:
            dims = tuple(
                DimensionScale(name, int(v["min"]), int(v["max"]), int(v.get("step", 1)))
                for name, v in (raw.get("dimensions") or {}).items()
            )
        except (KeyError, TypeError) as exc:
            raise DatasetError(f"bad dimension entry in scale: {exc}") from exc
        x = raw.get("pair_levels_x")
        items = raw.get("listwise_items")
        return cls(dims, None if x is None else int(x), None if items is None else int(items))


def load_scale(path: str | Path) -> ScaleSpec:
    """Read a scale file (JSON, or YAML when the suffix is .yaml/.yml)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() in (".yaml", ".yml"):
        import yaml

        raw = yaml.safe_load(text)
    else:
        raw = json.loads(text)
    if not isinstance(raw, dict):
        raise DatasetError(f"{path}: scale file must hold a mapping")
    return ScaleSpec.from_dict(raw)


def write_scale(scale: ScaleSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scale.to_dict(), indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class Candidate:
    id: str
    responses: tuple[str, ...]
    prompt: str | None = None
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.responses:
            raise DatasetError(f"candidate {self.id!r} has no responses")


@dataclass(frozen=True)
class PointwiseScore:
    dims: Mapping[str, float]


@dataclass(frozen=True)
class PairwiseScore:
    pair: int


@dataclass(frozen=True)
class ListwiseScore:
    items: tuple[float, ...]
    ranking: tuple[int, ...]


JudgmentScore = Union[PointwiseScore, PairwiseScore, ListwiseScore]

_SCORE_CLASS = {
    JudgmentType.POINTWISE: PointwiseScore,
    JudgmentType.PAIRWISE: PairwiseScore,
    JudgmentType.LISTWISE: ListwiseScore,
}


def canonical_ranking(items: Sequence[float]) -> tuple[int, ...]:
    """Item indices ordered by non-increasing score, ties to the lower index."""
    return tuple(sorted(range(len(items)), key=lambda i: (-items[i], i)))


@dataclass(frozen=True)
class JudgmentInstance:
    candidate: Candidate
    score: JudgmentScore
    type: JudgmentType

    def __post_init__(self):
        if not isinstance(self.score, _SCORE_CLASS[self.type]):
            raise DatasetError(f"candidate {self.candidate.id!r}: score form does not match {self.type.value}")
        n = len(self.candidate.responses)
        if self.type is JudgmentType.POINTWISE and n != 1:
            raise DatasetError(f"candidate {self.candidate.id!r}: pointwise needs 1 response, got {n}")
        if self.type is JudgmentType.PAIRWISE and n != 2:
            raise DatasetError(f"candidate {self.candidate.id!r}: pairwise needs 2 responses, got {n}")
        if self.type is JudgmentType.LISTWISE:
            s = self.score
            if len(s.items) != n:
                raise DatasetError(f"candidate {self.candidate.id!r}: {len(s.items)} item scores for {n} responses")
            if sorted(s.ranking) != list(range(n)):
                raise DatasetError(f"candidate {self.candidate.id!r}: ranking is not a permutation")
            if tuple(s.ranking) != canonical_ranking(s.items):
                raise DatasetError(f"candidate {self.candidate.id!r}: ranking inconsistent with item scores")


@dataclass(frozen=True)
class JudgmentGroup:
    group_id: str
    instances: tuple[JudgmentInstance, ...]
    label: int | None = None
    judge_id: str | None = None

    def __post_init__(self):
        if not self.instances:
            raise DatasetError(f"group {self.group_id!r} is empty")
        if len({inst.type for inst in self.instances}) != 1:
            raise DatasetError(f"group {self.group_id!r} mixes judgment types")
        if self.label not in (None, HUMAN, LLM):
            raise DatasetError(f"group {self.group_id!r}: bad label {self.label!r}")

    @property
    def type(self) -> JudgmentType:
        return self.instances[0].type

    @property
    def k(self) -> int:
        return len(self.instances)


@dataclass(frozen=True)
class Dataset:
    groups: tuple[JudgmentGroup, ...]
    scale: ScaleSpec
    judgment_type: JudgmentType | None = None

    def __post_init__(self):
        types = {g.type for g in self.groups}
        if len(types) > 1:
            raise DatasetError("dataset mixes judgment types")
        if types and self.judgment_type is None:
            object.__setattr__(self, "judgment_type", types.pop())
        elif types and types.pop() is not self.judgment_type:
            raise DatasetError("groups do not match the dataset judgment type")
        for g in self.groups:
            for inst in g.instances:
                validate_instance(inst, self.scale, g.group_id)

    @property
    def dimension_names(self) -> tuple[str, ...]:
        return dimension_names(self.judgment_type, self.scale)

    def __len__(self) -> int:
        return len(self.groups)

    def labels(self) -> list[int | None]:
        return [g.label for g in self.groups]


def dimension_names(jtype: JudgmentType | None, scale: ScaleSpec) -> tuple[str, ...]:
    """Judgment dimensions as seen by features: score dims, ``pair``, or ``item{i}``."""
    if jtype is JudgmentType.PAIRWISE:
        return ("pair",)
    if jtype is JudgmentType.LISTWISE:
        return tuple(f"item{i}" for i in range(scale.listwise_items or 0))
    return tuple(d.name for d in scale.dimensions)


def validate_instance(inst: JudgmentInstance, scale: ScaleSpec, group_id: str = "?") -> None:
    s = inst.score
    if isinstance(s, PointwiseScore):
        expected = [d.name for d in scale.dimensions]
        if set(s.dims) != set(expected):
            raise DatasetError(
                f"group {group_id!r}: dimensions {sorted(s.dims)} do not match scale {expected}"
            )
        for dim in scale.dimensions:
            v = s.dims[dim.name]
            if not dim.contains(v):
                raise DatasetError(
                    f"group {group_id!r}: dimension {dim.name!r} value {v!r} off scale "
                    f"[{dim.min}, {dim.max}] step {dim.step}"
                )
    elif isinstance(s, PairwiseScore):
        if not scale.pair_scale.contains(s.pair):
            raise DatasetError(f"group {group_id!r}: dimension 'pair' value {s.pair!r} outside ±{scale.pair_levels_x}")
    else:
        if scale.listwise_items is None:
            raise DatasetError("listwise data requires listwise_items in the scale")
        n = len(s.items)
        if not 2 <= n <= scale.listwise_items:
            raise DatasetError(f"group {group_id!r}: {n} items, scale allows 2..{scale.listwise_items}")
        dim = scale.item_scale
        for v in s.items:
            if not dim.contains(v):
                raise DatasetError(f"group {group_id!r}: dimension {dim.name!r} value {v!r} off scale")


# --------------------------------------------------------------------------
# JSONL


def _score_from_json(raw: Mapping, jtype: JudgmentType) -> JudgmentScore:
    if jtype is JudgmentType.POINTWISE:
        dims = raw["dims"]
        if not isinstance(dims, dict):
            raise DatasetError("'dims' must be an object")
        return PointwiseScore(dict(dims))
    if jtype is JudgmentType.PAIRWISE:
        pair = raw["pair"]
        if isinstance(pair, bool) or not isinstance(pair, int):
            raise DatasetError("'pair' must be an integer")
        return PairwiseScore(pair)
    return ListwiseScore(tuple(raw["items"]), tuple(int(i) for i in raw["ranking"]))


def _score_to_json(score: JudgmentScore, dim_order: Sequence[str]) -> dict:
    if isinstance(score, PointwiseScore):
        return {"dims": {name: score.dims[name] for name in dim_order}}
    if isinstance(score, PairwiseScore):
        return {"pair": score.pair}
    return {"items": list(score.items), "ranking": list(score.ranking)}


def group_from_json(raw: Mapping) -> JudgmentGroup:
    jtype = JudgmentType(raw["type"])
    label_raw = raw.get("label")
    if label_raw is not None and label_raw not in _LABEL_FROM_NAME:
        raise DatasetError(f"unknown label {label_raw!r}")
    instances = []
    for item in raw["instances"]:
        c = item["candidate"]
        cand = Candidate(
            id=str(c["id"]),
            responses=tuple(c["responses"]),
            prompt=c.get("prompt"),
            metadata=dict(c.get("meta") or {}),
        )
        instances.append(JudgmentInstance(cand, _score_from_json(item["score"], jtype), jtype))
    return JudgmentGroup(
        group_id=str(raw["group_id"]),
        instances=tuple(instances),
        label=None if label_raw is None else _LABEL_FROM_NAME[label_raw],
        judge_id=raw.get("judge"),
    )


def group_to_json(group: JudgmentGroup, dim_order: Sequence[str] = ()) -> dict:
    return {
        "group_id": group.group_id,
        "label": None if group.label is None else LABEL_NAMES[group.label],
        "judge": group.judge_id,
        "type": group.type.value,
        "instances": [
            {
                "candidate": {
                    "id": inst.candidate.id,
                    "prompt": inst.candidate.prompt,
                    "responses": list(inst.candidate.responses),
                    "meta": dict(inst.candidate.metadata),
                },
                "score": _score_to_json(inst.score, dim_order),
            }
            for inst in group.instances
        ],
    }


def load_dataset(path: str | Path, scale: ScaleSpec) -> Dataset:
    """Read a JSONL file with one judgment group per line.

    Blank lines are skipped. Errors name the offending line number.
    """
    groups = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                group = group_from_json(json.loads(line))
                for inst in group.instances:
                    validate_instance(inst, scale, group.group_id)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from exc
            except (KeyError, TypeError, ValueError) as exc:
                detail = f"missing field {exc}" if isinstance(exc, KeyError) else str(exc)
                raise DatasetError(f"{path}:{lineno}: {detail}") from exc
            groups.append(group)
    return Dataset(tuple(groups), scale)


def dumps_group(group: JudgmentGroup, dim_order: Sequence[str] = ()) -> str:
    return json.dumps(group_to_json(group, dim_order), ensure_ascii=False, separators=(",", ":"))


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    dims = [d.name for d in dataset.scale.dimensions]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for g in dataset.groups:
            fh.write(dumps_group(g, dims) + "\n")


# --------------------------------------------------------------------------
# Group manipulation


@dataclass(frozen=True)
class LabeledInstance:
    instance: JudgmentInstance
    label: int
    judge_id: str | None = None


@dataclass(frozen=True)
class RegroupResult:
    groups: list[JudgmentGroup]
    dropped: dict[int, int]


def flatten(groups: Iterable[JudgmentGroup]) -> list[LabeledInstance]:
    out = []
    for g in groups:
        if g.label is None:
            raise DatasetError(f"group {g.group_id!r} is unlabeled")
        out.extend(LabeledInstance(inst, g.label, g.judge_id) for inst in g.instances)
    return out


def regroup(
    instances: Sequence[LabeledInstance], k: int, seed: int, by_judge: bool = False
) -> RegroupResult:
    """Shuffle instances within each label and cut them into groups of ``k``.

    Groups are label-pure. Leftover instances (count mod k) are dropped and
    reported. For a fixed seed the per-label shuffle does not depend on ``k``,
    so groups at ``2k`` are unions of consecutive groups at ``k``.
    """
    if k <= 0:
        raise DatasetError(f"group size must be positive, got {k}")
    buckets: dict[tuple, list[LabeledInstance]] = {}
    for li in instances:
        key = (li.label, li.judge_id if by_judge else None)
        buckets.setdefault(key, []).append(li)
    groups: list[JudgmentGroup] = []
    dropped: dict[int, int] = {}
    for (label, judge), items in sorted(buckets.items(), key=lambda kv: (kv[0][0], kv[0][1] or "")):
        if len(items) < k:
            raise DatasetError(f"label {LABEL_NAMES[label]}: {len(items)} instances, fewer than k={k}")
        rng = np.random.default_rng([seed, label])
        order = rng.permutation(len(items))
        n_full = len(items) // k
        dropped[label] = dropped.get(label, 0) + len(items) - n_full * k
        tag = LABEL_NAMES[label] + (f"-{judge}" if judge else "")
        for gi in range(n_full):
            chosen = [items[j] for j in order[gi * k:(gi + 1) * k]]
            judges = {c.judge_id for c in chosen}
            groups.append(
                JudgmentGroup(
                    group_id=f"{tag}-k{k}-{gi:05d}",
                    instances=tuple(c.instance for c in chosen),
                    label=label,
                    judge_id=judges.pop() if len(judges) == 1 else None,
                )
            )
    return RegroupResult(groups, dropped)


def regroup_dataset(dataset: Dataset, k: int, seed: int) -> Dataset:
    return Dataset(tuple(regroup(flatten(dataset.groups), k, seed).groups), dataset.scale, dataset.judgment_type)


def _grid_from_values(values: Sequence[float], name: str) -> DimensionScale:
    vals = sorted(set(values))
    if len(vals) < 2 or any(float(v) != int(v) for v in vals):
        raise DatasetError(f"mapping image {vals} is not a valid integer grid")
    vals = [int(v) for v in vals]
    step = vals[1] - vals[0]
    if any(b - a != step for a, b in zip(vals, vals[1:])):
        raise DatasetError(f"mapping image {vals} is not evenly spaced")
    return DimensionScale(name, vals[0], vals[-1], step)


def coarsen_scale(dataset: Dataset, mapping: Mapping[float, float]) -> Dataset:
    """Remap every score through ``mapping`` and shrink the scale accordingly.

    The mapping must cover every level of the source grid; its image must
    itself be an evenly spaced grid with at least two levels.
    """
    scale = dataset.scale
    jtype = dataset.judgment_type

    def image_of(dim: DimensionScale) -> DimensionScale:
        missing = [v for v in dim.grid() if v not in mapping]
        if missing:
            raise DatasetError(f"mapping does not cover level(s) {missing} of {dim.name!r}")
        return _grid_from_values([mapping[v] for v in dim.grid()], dim.name)

    if jtype is JudgmentType.PAIRWISE:
        new_pair = image_of(scale.pair_scale)
        if new_pair.min != -new_pair.max or new_pair.step != 1:
            raise DatasetError(f"pairwise image must be a symmetric unit grid, got [{new_pair.min}, {new_pair.max}]")
        new_scale = replace(scale, pair_levels_x=new_pair.max)
    else:
        new_scale = replace(scale, dimensions=tuple(image_of(d) for d in scale.dimensions))

    def remap(inst: JudgmentInstance) -> JudgmentInstance:
        s = inst.score
        if isinstance(s, PointwiseScore):
            ns: JudgmentScore = PointwiseScore({k: mapping[v] for k, v in s.dims.items()})
        elif isinstance(s, PairwiseScore):
            ns = PairwiseScore(int(mapping[s.pair]))
        else:
            items = tuple(mapping[v] for v in s.items)
            ns = ListwiseScore(items, canonical_ranking(items))
        return replace(inst, score=ns)

    groups = tuple(replace(g, instances=tuple(remap(i) for i in g.instances)) for g in dataset.groups)
    return Dataset(groups, new_scale, jtype)


def project_dimensions(dataset: Dataset, dims: Sequence[str]) -> Dataset:
    """Keep only the named dimensions (in scale order) of every pointwise score."""
    if not dims:
        raise DatasetError("dimension subset is empty")
    known = dataset.dimension_names
    unknown = [d for d in dims if d not in known]
    if unknown:
        raise DatasetError(f"unknown dimension(s) {unknown}; have {list(known)}")
    if dataset.judgment_type is not JudgmentType.POINTWISE:
        return dataset
    keep = [d for d in dataset.scale.dimensions if d.name in set(dims)]
    new_scale = replace(dataset.scale, dimensions=tuple(keep))
    names = [d.name for d in keep]

    def proj(inst: JudgmentInstance) -> JudgmentInstance:
        return replace(inst, score=PointwiseScore({n: inst.score.dims[n] for n in names}))

    groups = tuple(replace(g, instances=tuple(proj(i) for i in g.instances)) for g in dataset.groups)
    return Dataset(groups, new_scale, dataset.judgment_type)


def split_dataset(dataset: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified train/test split at group granularity."""
    if not 0.0 < test_fraction < 1.0:
        raise DatasetError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    by_label: dict[int, list[int]] = {HUMAN: [], LLM: []}
    for i, g in enumerate(dataset.groups):
        if g.label is None:
            raise DatasetError(f"group {g.group_id!r} is unlabeled; cannot stratify")
        by_label[g.label].append(i)
    test_idx: set[int] = set()
    for label, idx in by_label.items():
        if len(idx) < 2:
            raise DatasetError(f"need at least 2 {LABEL_NAMES[label]} groups to stratify, got {len(idx)}")
        n_test = min(max(int(math.floor(len(idx) * test_fraction + 0.5)), 1), len(idx) - 1)
        rng = np.random.default_rng([seed, label])
        test_idx.update(idx[j] for j in rng.permutation(len(idx))[:n_test])
    train = tuple(g for i, g in enumerate(dataset.groups) if i not in test_idx)
    test = tuple(g for i, g in enumerate(dataset.groups) if i in test_idx)
    return (
        Dataset(train, dataset.scale, dataset.judgment_type),
        Dataset(test, dataset.scale, dataset.judgment_type),
    )
