"""Instance feature vectors: base scores, judge-model features and linguistic features.

The three blocks are concatenated in that fixed order. Ablation layouts drop
the judge-model and/or linguistic block.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import (
    Dataset,
    JudgmentInstance,
    JudgmentType,
    ListwiseScore,
    PairwiseScore,
    PointwiseScore,
    ScaleSpec,
    dimension_names,
)
from .linguistic import LinguisticExtractor, lexicon_hashes, linguistic_names
from .llm import LlmFeatureClient, llm_block, llm_names
from .schema import Block, FeatureBlock, FeatureSchema, FeatureVector, SchemaError

ABLATIONS = {
    "full": (Block.BASE, Block.LLM, Block.LINGUISTIC),
    "base_only": (Block.BASE,),
    "base_llm": (Block.BASE, Block.LLM),
    "base_ling": (Block.BASE, Block.LINGUISTIC),
}


@dataclass(frozen=True)
class Layout:
    """What a schema depends on: judgment type, score dimensions and listwise arity."""

    type: JudgmentType
    dims: tuple[str, ...]
    k_items: int | None = None

    @classmethod
    def of(cls, dataset: Dataset) -> "Layout":
        return cls.from_scale(dataset.judgment_type, dataset.scale)

    @classmethod
    def from_scale(cls, jtype: JudgmentType, scale: ScaleSpec) -> "Layout":
        if jtype is None:
            raise SchemaError("cannot build a feature layout for an empty dataset")
        return cls(jtype, tuple(d.name for d in scale.dimensions), scale.listwise_items)

    @property
    def aligned_dims(self) -> tuple[str, ...]:
        if self.type is JudgmentType.POINTWISE:
            return self.dims
        return dimension_names(self.type, ScaleSpec(listwise_items=self.k_items))


def base_names(layout: Layout) -> tuple[str, ...]:
    if layout.type is JudgmentType.POINTWISE:
        return tuple(f"base.{d}" for d in layout.dims)
    if layout.type is JudgmentType.PAIRWISE:
        return ("base.pair",)
    k = layout.k_items
    return tuple(f"base.item{i}" for i in range(k)) + tuple(f"base.rank{i}" for i in range(k))


def build_schema(layout: Layout, ablation: str = "full") -> FeatureSchema:
    if ablation not in ABLATIONS:
        raise SchemaError(f"unknown ablation {ablation!r}; choose from {sorted(ABLATIONS)}")
    names: list[str] = []
    blocks: list[Block] = []
    for block in ABLATIONS[ablation]:
        if block is Block.BASE:
            part = base_names(layout)
        elif block is Block.LLM:
            part = llm_names(layout.aligned_dims)
        else:
            part = linguistic_names(layout.type, layout.k_items)
        names.extend(part)
        blocks.extend([block] * len(part))
    hashes = lexicon_hashes() if Block.LINGUISTIC in ABLATIONS[ablation] else ()
    return FeatureSchema(tuple(names), tuple(blocks), lexicon_hashes=hashes)


def base_features(instance: JudgmentInstance, layout: Layout) -> FeatureBlock:
    """The judgment's own scores; listwise adds each item's rank position."""
    names = base_names(layout)
    s = instance.score
    if isinstance(s, PointwiseScore):
        return FeatureBlock.from_pairs(Block.BASE, [(f"base.{d}", s.dims[d]) for d in layout.dims])
    if isinstance(s, PairwiseScore):
        return FeatureBlock.from_pairs(Block.BASE, [("base.pair", s.pair)])
    assert isinstance(s, ListwiseScore)
    k = layout.k_items
    values = np.zeros(2 * k, dtype=np.float64)
    present = np.zeros(2 * k, dtype=bool)
    n = len(s.items)
    values[:n] = s.items
    present[:n] = True
    for pos, item in enumerate(s.ranking):
        values[k + item] = pos
        present[k + item] = True
    return FeatureBlock(Block.BASE, names, values, present)


def assemble(
    schema: FeatureSchema,
    base: FeatureBlock,
    llm: FeatureBlock | None = None,
    ling: FeatureBlock | None = None,
) -> FeatureVector:
    """Concatenate blocks in base, llm, linguistic order, checking names against ``schema``."""
    parts = [b for b in (base, llm, ling) if b is not None and len(b)]
    for expected, part in zip((Block.BASE, Block.LLM, Block.LINGUISTIC), (base, llm, ling)):
        want = schema.block_names(expected)
        got = () if part is None else part.names
        if part is not None and part.block is not expected:
            raise SchemaError(f"got a {part.block.value} block where {expected.value} was expected")
        if tuple(got) != want:
            raise SchemaError(
                f"{expected.value} block does not match schema: expected {len(want)} features, got {len(got)}"
            )
    values = np.concatenate([p.values for p in parts]) if parts else np.zeros(0)
    present = np.concatenate([p.present for p in parts]) if parts else np.zeros(0, dtype=bool)
    return FeatureVector(schema, values, present)


# --------------------------------------------------------------------------
# Standardization


@dataclass(frozen=True)
class Standardizer:
    """Per-feature population mean and standard deviation over present values."""

    mean: np.ndarray
    std: np.ndarray

    @property
    def constant(self) -> np.ndarray:
        return self.std == 0.0

    def transform(self, values: np.ndarray, present: np.ndarray, scale: bool = True) -> np.ndarray:
        """Standardize (or only impute when ``scale`` is False).

        Constant features map to 0 and absent values to the training mean,
        which is 0 on the standardized scale.
        """
        values = np.asarray(values, dtype=np.float64)
        present = np.asarray(present, dtype=bool)
        if values.shape[-1] != len(self.mean):
            raise SchemaError(f"expected {len(self.mean)} features, got {values.shape[-1]}")
        if not scale:
            return np.where(present, values, self.mean)
        safe = np.where(self.constant, 1.0, self.std)
        z = (values - self.mean) / safe
        z = np.where(self.constant, 0.0, z)
        return np.where(present, z, 0.0)

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, raw: dict) -> "Standardizer":
        return cls(np.array(raw["mean"], dtype=np.float64), np.array(raw["std"], dtype=np.float64))


def fit_standardizer_arrays(values: np.ndarray, present: np.ndarray) -> Standardizer:
    values = np.asarray(values, dtype=np.float64)
    present = np.asarray(present, dtype=bool)
    if values.ndim != 2 or values.shape[0] < 2:
        raise ValueError("need at least 2 rows to fit a standardizer")
    counts = present.sum(axis=0)
    safe_counts = np.maximum(counts, 1)
    mean = np.where(present, values, 0.0).sum(axis=0) / safe_counts
    dev = np.where(present, values - mean, 0.0)
    std = np.sqrt((dev * dev).sum(axis=0) / safe_counts)
    mean = np.where(counts > 0, mean, 0.0)
    std = np.where(counts > 1, std, 0.0)
    return Standardizer(mean, std)


def fit_standardizer(vectors: Sequence[FeatureVector]) -> Standardizer:
    if len(vectors) < 2:
        raise ValueError("need at least 2 vectors to fit a standardizer")
    schema = vectors[0].schema
    if any(v.schema.names != schema.names for v in vectors):
        raise SchemaError("vectors do not share a schema")
    return fit_standardizer_arrays(
        np.stack([v.values for v in vectors]), np.stack([v.present for v in vectors])
    )


def apply_standardizer(s: Standardizer, v: FeatureVector) -> FeatureVector:
    return FeatureVector(v.schema, s.transform(v.values, v.present), np.ones(len(v.values), dtype=bool))


# --------------------------------------------------------------------------
# Feature matrices


def quantize(values: np.ndarray) -> np.ndarray:
    """Round to 9 significant digits, the precision kept by the CSV format."""
    flat = np.asarray(values, dtype=np.float64).ravel()
    out = np.fromiter((float(f"{v:.9g}") for v in flat), dtype=np.float64, count=flat.size)
    return out.reshape(np.shape(values))


@dataclass
class FeatureMatrix:
    schema: FeatureSchema
    values: np.ndarray
    present: np.ndarray
    group_ids: list[str]
    labels: list[int | None]

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def y(self) -> np.ndarray:
        if any(lab is None for lab in self.labels):
            raise ValueError("matrix contains unlabeled rows")
        return np.array(self.labels, dtype=np.int64)

    def vector(self, i: int) -> FeatureVector:
        return FeatureVector(self.schema, self.values[i], self.present[i])

    def take(self, rows: Sequence[int]) -> "FeatureMatrix":
        rows = list(rows)
        return FeatureMatrix(
            self.schema,
            self.values[rows],
            self.present[rows],
            [self.group_ids[i] for i in rows],
            [self.labels[i] for i in rows],
        )

    def with_groups(self, group_ids: Sequence[str], rows: Sequence[int]) -> "FeatureMatrix":
        sub = self.take(rows)
        sub.group_ids = list(group_ids)
        return sub

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(self.schema.names) + ["__group_id", "__label"])
        for i in range(len(self)):
            cells = [
                f"{v:.9g}" if p else "" for v, p in zip(self.values[i].tolist(), self.present[i].tolist())
            ]
            lab = self.labels[i]
            w.writerow(cells + [self.group_ids[i], "" if lab is None else str(lab)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8", newline="")
        return text

    @classmethod
    def from_csv(cls, path: str | Path, schema: FeatureSchema | None = None) -> "FeatureMatrix":
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][-2:] != ["__group_id", "__label"]:
            raise SchemaError(f"{path}: not a feature matrix (missing __group_id/__label columns)")
        names = tuple(rows[0][:-2])
        if schema is None:
            schema = schema_from_names(names)
        elif schema.names != names:
            raise SchemaError(f"{path}: columns do not match the expected schema")
        n, p = len(rows) - 1, len(names)
        values = np.zeros((n, p), dtype=np.float64)
        present = np.zeros((n, p), dtype=bool)
        groups, labels = [], []
        for i, row in enumerate(rows[1:]):
            if len(row) != p + 2:
                raise SchemaError(f"{path}:{i + 2}: expected {p + 2} cells, got {len(row)}")
            for j, cell in enumerate(row[:p]):
                if cell != "":
                    values[i, j] = float(cell)
                    present[i, j] = True
            groups.append(row[p])
            labels.append(int(row[p + 1]) if row[p + 1] != "" else None)
        return cls(schema, values, present, groups, labels)


def schema_from_names(names: Sequence[str]) -> FeatureSchema:
    prefix = {"base": Block.BASE, "llm": Block.LLM, "ling": Block.LINGUISTIC}
    try:
        blocks = tuple(prefix[n.split(".", 1)[0]] for n in names)
    except KeyError as exc:
        raise SchemaError(f"feature name {exc} has no block prefix") from None
    hashes = lexicon_hashes() if Block.LINGUISTIC in blocks else ()
    return FeatureSchema(tuple(names), blocks, lexicon_hashes=hashes)


class FeatureExtractor:
    """Builds instance vectors and matrices for one dataset layout and ablation."""

    def __init__(
        self,
        layout: Layout,
        ablation: str = "full",
        llm_client: LlmFeatureClient | None = None,
        linguistic: LinguisticExtractor | None = None,
    ):
        self.layout = layout
        self.ablation = ablation
        self.schema = build_schema(layout, ablation)
        self.blocks = ABLATIONS[ablation]
        if Block.LLM in self.blocks and llm_client is None:
            raise SchemaError(f"ablation {ablation!r} needs judge-model features but no client was given")
        self.llm_client = llm_client
        self.linguistic = linguistic or LinguisticExtractor()

    def vector(self, instance: JudgmentInstance) -> FeatureVector:
        base = base_features(instance, self.layout)
        llm = None
        ling = None
        if Block.LLM in self.blocks:
            llm = llm_block(self.llm_client.fetch(instance), self.layout.aligned_dims)
        if Block.LINGUISTIC in self.blocks:
            ling = self.linguistic.extract(instance, self.layout.k_items)
        return assemble(self.schema, base, llm, ling)

    def matrix(self, dataset: Dataset) -> FeatureMatrix:
        if Layout.of(dataset) != self.layout:
            raise SchemaError("dataset layout differs from the extractor's layout")
        rows, masks, groups, labels = [], [], [], []
        instances = [inst for g in dataset.groups for inst in g.instances]
        if Block.LLM in self.blocks:
            self.llm_client.fetch_many(instances)
        for g in dataset.groups:
            for inst in g.instances:
                v = self.vector(inst)
                rows.append(v.values)
                masks.append(v.present)
                groups.append(g.group_id)
                labels.append(g.label)
        p = len(self.schema)
        values = quantize(np.vstack(rows)) if rows else np.zeros((0, p))
        present = np.vstack(masks) if masks else np.zeros((0, p), dtype=bool)
        return FeatureMatrix(self.schema, values, present, groups, labels)
