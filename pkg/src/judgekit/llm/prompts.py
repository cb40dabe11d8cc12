"""Prompt templates for the feature-extraction judge model."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..data import DimensionScale, JudgmentInstance, JudgmentType, ScaleSpec

STYLE_RANGE = (0, 4)
STYLE_FIELDS = ("Style", "Format", "Wording")


class PromptError(ValueError):
    pass


POINTWISE = """\
You will see a user prompt and one response. Rate the response with the rubric below.

## Rubric
Presentation: give Style, Format and Wording an integer score in [0, 4] each.
Content: score the response on [DIMENSIONS], using the range shown for each field.

## Prompt
[PROMPT]

## Response
[RESPONSE]

Reply with a single valid JSON object in this schema:
{
  "Rationale": <one short paragraph>,
  "Style": <0-4>,
  "Format": <0-4>,
  "Wording": <0-4>,
[SCORE_FIELDS]
  "Overall": <0-4>
}
Return the JSON object and nothing else.
"""

PAIRWISE = """\
You will see a user prompt and two responses. Compare them with the rubric below.

## Rubric
Presentation: give Style, Format and Wording an integer score in [0, 4] each, judging the two responses together.
Comparison: weigh helpfulness, correctness, coherence, complexity and verbosity, then give one comparative Score in [SCALE].
Negative values mean Response 1 is better, positive values mean Response 2 is better, 0 means they are about equal; a larger magnitude means a clearer preference.

## Prompt
[PROMPT]

## Response 1
[RESPONSE_1]

## Response 2
[RESPONSE_2]

Reply with a single valid JSON object in this schema:
{
  "Rationale": <one short paragraph>,
  "Style": <0-4>,
  "Format": <0-4>,
  "Wording": <0-4>,
  "Score": <one of [SCALE]>
}
Return the JSON object and nothing else.
"""

LISTWISE = """\
You will see a user prompt and [N_ITEMS] responses. Score each response for relevance and rank them.

## Rubric
Presentation: give Style, Format and Wording an integer score in [0, 4] each, judging the responses together.
Relevance: give every response a score in [[ITEM_MIN], [ITEM_MAX]]; higher means a more relevant, convincing answer.

## Prompt
[PROMPT]

[RESPONSES]

Reply with a single valid JSON object in this schema:
{
  "Rationale": <one short paragraph>,
  "Style": <0-4>,
  "Format": <0-4>,
  "Wording": <0-4>,
[SCORE_FIELDS]
  "Ranking": <list of response indices from best to worst, e.g. [0, 1, 2]>
}
Return the JSON object and nothing else.
"""

TEMPLATES = {"pointwise": POINTWISE, "pairwise": PAIRWISE, "listwise": LISTWISE}
TEMPLATE_TYPES = {
    "pointwise": JudgmentType.POINTWISE,
    "pairwise": JudgmentType.PAIRWISE,
    "listwise": JudgmentType.LISTWISE,
}


def template_for(jtype: JudgmentType) -> str:
    return jtype.value


@dataclass(frozen=True)
class FieldSpec:
    key: str  # JSON field name
    target: str  # "style", "format", "wording", "overall" or "aligned:<dim>"
    lo: float
    hi: float
    required: bool = True


@dataclass(frozen=True)
class ResponseSchema:
    fields: tuple[FieldSpec, ...]


def _range_text(dim: DimensionScale) -> str:
    return f"<{dim.min}-{dim.max}>"


def response_schema(jtype: JudgmentType, scale: ScaleSpec, n_items: int | None = None) -> ResponseSchema:
    """Fields expected back from the judge model for one instance of ``jtype``."""
    lo, hi = STYLE_RANGE
    fields = [FieldSpec(name, name.lower(), lo, hi) for name in STYLE_FIELDS]
    if jtype is JudgmentType.POINTWISE:
        for dim in scale.dimensions:
            fields.append(FieldSpec(dim.name, f"aligned:{dim.name}", dim.min, dim.max))
        fields.append(FieldSpec("Overall", "overall", lo, hi, required=False))
    elif jtype is JudgmentType.PAIRWISE:
        x = scale.pair_levels_x
        fields.append(FieldSpec("Score", "aligned:pair", -x, x))
    else:
        n = n_items if n_items is not None else scale.listwise_items
        dim = scale.item_scale
        for i in range(n):
            fields.append(FieldSpec(f"Response{i + 1} Score", f"aligned:item{i}", dim.min, dim.max))
    return ResponseSchema(tuple(fields))


_SLOT = re.compile(r"\[([A-Z_0-9]+)\]")


def _fill(template: str, slots: dict[str, str | None]) -> str:
    """Substitute every ``[SLOT]`` in one pass so slot content is never re-scanned."""

    def sub(m: re.Match) -> str:
        name = m.group(1)
        if name not in slots:
            return m.group(0)
        if slots[name] is None:
            raise PromptError(f"no content for placeholder [{name}]")
        return slots[name]

    return _SLOT.sub(sub, template)


def render_prompt(template_id: str, instance: JudgmentInstance, scale: ScaleSpec) -> str:
    if template_id not in TEMPLATES:
        raise PromptError(f"unknown template {template_id!r}")
    if TEMPLATE_TYPES[template_id] is not instance.type:
        raise PromptError(f"template {template_id!r} does not fit a {instance.type.value} instance")
    cand = instance.candidate
    slots: dict[str, str | None] = {"PROMPT": cand.prompt}
    if instance.type is JudgmentType.POINTWISE:
        slots["DIMENSIONS"] = ", ".join(d.name for d in scale.dimensions)
        slots["SCORE_FIELDS"] = "\n".join(f'  "{d.name}": {_range_text(d)},' for d in scale.dimensions)
        slots["RESPONSE"] = cand.responses[0]
    elif instance.type is JudgmentType.PAIRWISE:
        x = scale.pair_levels_x
        slots["SCALE"] = "{" + ",".join(str(v) for v in range(-x, x + 1)) + "}"
        slots["RESPONSE_1"], slots["RESPONSE_2"] = cand.responses
    else:
        dim = scale.item_scale
        n = len(cand.responses)
        slots["N_ITEMS"] = str(n)
        slots["ITEM_MIN"], slots["ITEM_MAX"] = str(dim.min), str(dim.max)
        slots["SCORE_FIELDS"] = "\n".join(f'  "Response{i + 1} Score": {_range_text(dim)},' for i in range(n))
        slots["RESPONSES"] = "\n\n".join(f"## Response {i + 1}\n{r}" for i, r in enumerate(cand.responses))
    return _fill(TEMPLATES[template_id], slots)
