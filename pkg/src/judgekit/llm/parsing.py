"""Extraction of the judge model's JSON reply into a feature record."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .prompts import ResponseSchema


class JudgmentParseError(ValueError):
    """Reply could not be turned into a record.

    ``kind`` is one of ``"no_object"``, ``"missing_field"``, ``"bad_value"``
    or ``"out_of_range"``.
    """

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


@dataclass(frozen=True)
class LlmFeatureRecord:
    style: float = 0.0
    format: float = 0.0
    wording: float = 0.0
    aligned: dict[str, float] = field(default_factory=dict)
    overall: float | None = None
    rationale: str = ""
    valid: bool = True

    def to_dict(self) -> dict:
        return {
            "style": self.style,
            "format": self.format,
            "wording": self.wording,
            "aligned": dict(self.aligned),
            "overall": self.overall,
            "rationale": self.rationale,
            "valid": self.valid,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "LlmFeatureRecord":
        return cls(
            style=raw["style"],
            format=raw["format"],
            wording=raw["wording"],
            aligned=dict(raw.get("aligned") or {}),
            overall=raw.get("overall"),
            rationale=raw.get("rationale", ""),
            valid=bool(raw.get("valid", True)),
        )

    @classmethod
    def invalid(cls) -> "LlmFeatureRecord":
        return cls(valid=False)


def _first_object(raw: str) -> dict:
    """First balanced ``{...}`` in ``raw`` that decodes to a JSON object."""
    start = raw.find("{")
    while start != -1:
        depth = 0
        in_str = False
        escaped = False
        for i in range(start, len(raw)):
            ch = raw[i]
            if in_str:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_str = False
            elif ch == '"':
                in_str = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    try:
                        obj = json.loads(raw[start:i + 1])
                    except json.JSONDecodeError:
                        break
                    if isinstance(obj, dict):
                        return obj
                    break
        start = raw.find("{", start + 1)
    raise JudgmentParseError("no_object", "no parseable JSON object in reply")


def _number(value, key: str) -> float:
    if isinstance(value, bool):
        raise JudgmentParseError("bad_value", f"field {key!r} is boolean")
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        try:
            out = float(value.strip())
        except ValueError:
            raise JudgmentParseError("bad_value", f"field {key!r} is not numeric: {value!r}") from None
    else:
        raise JudgmentParseError("bad_value", f"field {key!r} is not numeric: {value!r}")
    if not math.isfinite(out):
        raise JudgmentParseError("bad_value", f"field {key!r} is not finite")
    return out


def parse_judgment_json(raw: str, expected: ResponseSchema) -> LlmFeatureRecord:
    obj = _first_object(raw)
    values: dict[str, float] = {}
    aligned: dict[str, float] = {}
    for spec in expected.fields:
        if spec.key not in obj or obj[spec.key] is None:
            if spec.required:
                raise JudgmentParseError("missing_field", f"required field {spec.key!r} missing")
            continue
        v = _number(obj[spec.key], spec.key)
        if not spec.lo <= v <= spec.hi:
            raise JudgmentParseError(
                "out_of_range", f"field {spec.key!r} = {v:g} outside [{spec.lo:g}, {spec.hi:g}]"
            )
        if spec.target.startswith("aligned:"):
            aligned[spec.target.split(":", 1)[1]] = v
        else:
            values[spec.target] = v
    rationale = obj.get("Rationale", "")
    return LlmFeatureRecord(
        style=values.get("style", 0.0),
        format=values.get("format", 0.0),
        wording=values.get("wording", 0.0),
        aligned=aligned,
        overall=values.get("overall"),
        rationale=rationale if isinstance(rationale, str) else json.dumps(rationale),
    )
