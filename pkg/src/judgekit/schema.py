"""Named feature blocks, schemas and vectors."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """Raised when features do not line up with the expected schema."""


class Block(str, Enum):
    BASE = "base"
    LLM = "llm"
    LINGUISTIC = "linguistic"


_BLOCK_ORDER = {Block.BASE: 0, Block.LLM: 1, Block.LINGUISTIC: 2}


@dataclass(frozen=True)
class FeatureBlock:
    """One block of named values with a presence flag per value."""

    block: Block
    names: tuple[str, ...]
    values: np.ndarray
    present: np.ndarray

    def __post_init__(self):
        if not (len(self.names) == len(self.values) == len(self.present)):
            raise SchemaError(f"{self.block.value} block: names/values/present lengths differ")

    @classmethod
    def from_pairs(cls, block: Block, pairs, present=None) -> "FeatureBlock":
        names = tuple(n for n, _ in pairs)
        values = np.array([float(v) for _, v in pairs], dtype=np.float64)
        mask = np.ones(len(names), dtype=bool) if present is None else np.asarray(present, dtype=bool)
        return cls(block, names, values, mask)

    def __len__(self) -> int:
        return len(self.names)


@dataclass(frozen=True)
class FeatureSchema:
    names: tuple[str, ...]
    blocks: tuple[Block, ...]
    version: int = SCHEMA_VERSION
    lexicon_hashes: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.names) != len(self.blocks):
            raise SchemaError("schema names and blocks differ in length")
        if len(set(self.names)) != len(self.names):
            raise SchemaError("schema feature names are not unique")
        order = [_BLOCK_ORDER[b] for b in self.blocks]
        if order != sorted(order):
            raise SchemaError("schema blocks must appear in base, llm, linguistic order")

    def __len__(self) -> int:
        return len(self.names)

    def block_names(self, block: Block) -> tuple[str, ...]:
        return tuple(n for n, b in zip(self.names, self.blocks) if b is block)

    def index(self, name: str) -> int:
        return self.names.index(name)

    @property
    def hash(self) -> str:
        payload = json.dumps(
            {
                "names": list(self.names),
                "blocks": [b.value for b in self.blocks],
                "version": self.version,
                "lexicon_hashes": list(self.lexicon_hashes),
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "blocks": [b.value for b in self.blocks],
            "version": self.version,
            "lexicon_hashes": list(self.lexicon_hashes),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "FeatureSchema":
        return cls(
            tuple(raw["names"]),
            tuple(Block(b) for b in raw["blocks"]),
            int(raw.get("version", SCHEMA_VERSION)),
            tuple(raw.get("lexicon_hashes", ())),
        )


@dataclass(frozen=True)
class FeatureVector:
    schema: FeatureSchema
    values: np.ndarray
    present: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.present is None:
            object.__setattr__(self, "present", np.ones(len(self.values), dtype=bool))
        if not (len(self.values) == len(self.schema) == len(self.present)):
            raise SchemaError(
                f"vector of length {len(self.values)} does not match schema of length {len(self.schema)}"
            )

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.schema.names, self.values.tolist()))
