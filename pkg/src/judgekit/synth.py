"""Synthetic labeled judgment corpora with a known human/LLM distribution gap.

Human scores are i.i.d. per dimension from a binomial pmf over the grid; LLM
scores come from the same pmf with ``target_delta`` mass moved to the top
level. Candidate texts are drawn from a seeded word pool. With
``length_bias > 0`` an LLM instance's response length follows its own
scores. A human response's length follows an independent score draw
(``human_length="redraw"``, so length carries evidence only jointly with
the scores) or ignores scores entirely (``"flat"``).

A simulated judge model rates every generated instance; its records are
keyed exactly like real provider replies so the regular offline cache path
serves them.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .data import (
    HUMAN,
    LLM,
    Candidate,
    Dataset,
    DimensionScale,
    JudgmentInstance,
    JudgmentType,
    LabeledInstance,
    ListwiseScore,
    PairwiseScore,
    PointwiseScore,
    ScaleSpec,
    canonical_ranking,
    regroup,
)
from .llm import FeatureCache, LlmFeatureRecord, cache_key, render_prompt, template_for
from .theory import JudgmentSpecTheory, TheoryError, binomial_pmf, max_transfer, shifted_pmf

SYNTH_JUDGE_ID = "synthetic-judge"

_NOUNS = (
    "answer method result approach system model report design process question example detail "
    "value step idea solution context argument source problem version output reason plan summary"
).split()
_VERBS = (
    "covers explains improves supports describes changes includes follows shows uses needs handles "
    "reflects extends reduces matches"
).split()
_ADJS = "clear simple useful careful general specific direct broad formal short accurate standard".split()
_ADVS = "quickly mostly often usually clearly largely partly".split()
_HEDGES = ("may", "might", "possibly", "perhaps", "likely")
_MARKERS = ("However,", "Moreover,", "Therefore,", "In addition,", "For example,", "As a result,")
_TOPICS = "cooking travel software history physics gardening finance music health writing".split()


@dataclass(frozen=True)
class SynthConfig:
    spec: JudgmentSpecTheory
    target_delta: float
    n_instances: int = 500
    k: int = 1
    d: int = 1
    seed: int = 0
    base_p: float = 0.5
    item_levels: int = 5
    length_bias: float = 0.0
    base_sentences: float = 5.0
    sentence_noise: float = 1.5
    decoy_noise: float = 0.3
    judge_noise: float = 1.0
    human_length: str = "redraw"

    def __post_init__(self):
        if self.human_length not in ("redraw", "flat"):
            raise TheoryError("human_length must be 'redraw' or 'flat'")
        if self.n_instances < 1 or self.k < 1 or self.d < 1:
            raise TheoryError("n_instances, k and d must be >= 1")
        if self.d > 1 and self.spec.type is not JudgmentType.POINTWISE:
            raise TheoryError("only pointwise corpora have more than one dimension")
        if not 0.0 < self.base_p < 1.0:
            raise TheoryError("base_p must lie in (0, 1)")
        cap = max_transfer(self.human_pmf())
        if not 0.0 <= self.target_delta <= cap + 1e-12:
            raise TheoryError(f"target_delta={self.target_delta} is not realizable (max {cap:.6g} on this grid)")

    @property
    def grid(self) -> list[int]:
        if self.spec.type is JudgmentType.LISTWISE:
            return list(range(self.item_levels))
        return self.spec.grid

    def human_pmf(self) -> np.ndarray:
        return binomial_pmf(len(self.grid), self.base_p)

    def llm_pmf(self) -> np.ndarray:
        return shifted_pmf(self.human_pmf(), self.target_delta)

    def scale(self) -> ScaleSpec:
        t = self.spec.type
        if t is JudgmentType.POINTWISE:
            dims = tuple(DimensionScale(f"dim{j + 1}", 0, self.spec.L - 1) for j in range(self.d))
            return ScaleSpec(dims)
        if t is JudgmentType.PAIRWISE:
            return ScaleSpec(pair_levels_x=self.spec.x)
        return ScaleSpec((DimensionScale("score", 0, self.item_levels - 1),), listwise_items=self.spec.k_items)

    def to_dict(self) -> dict:
        spec = {"type": self.spec.type.value, "L": self.spec.L, "x": self.spec.x, "k_items": self.spec.k_items}
        out = {k: v for k, v in vars(self).items() if k != "spec"}
        out["spec"] = {k: v for k, v in spec.items() if v is not None}
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "SynthConfig":
        raw = dict(raw)
        spec = JudgmentSpecTheory(**raw.pop("spec"))
        return cls(spec=spec, **raw)


@dataclass
class SynthResult:
    dataset: Dataset
    cache: FeatureCache
    human_pmf: np.ndarray
    llm_pmf: np.ndarray
    instances: list[LabeledInstance] = field(repr=False, default_factory=list)


def _instance_rng(seed: int, *parts: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *parts])))


def _sentence(rng: np.random.Generator, decoy_rate: float) -> str:
    n_words = int(rng.integers(6, 15))
    n_chunks = n_words // 6 + 1
    adj = rng.integers(0, len(_ADJS), n_chunks)
    noun = rng.integers(0, len(_NOUNS), (n_chunks, 2))
    verb = rng.integers(0, len(_VERBS), n_chunks)
    adv = rng.integers(0, len(_ADVS), n_chunks)
    use_adv = rng.random(n_chunks) < 0.3
    words: list[str] = []
    for c in range(n_chunks):
        words += ["the", _ADJS[adj[c]], _NOUNS[noun[c, 0]], _VERBS[verb[c]], "the", _NOUNS[noun[c, 1]]]
        if use_adv[c]:
            words.append(_ADVS[adv[c]])
    words = words[:n_words]
    hedge, marker = rng.random(2) < decoy_rate
    if hedge:
        words.insert(1, _HEDGES[int(rng.integers(0, len(_HEDGES)))])
    if marker:
        words.insert(0, _MARKERS[int(rng.integers(0, len(_MARKERS)))])
    text = " ".join(words)
    return text[0].upper() + text[1:] + "."


def response_text(rng: np.random.Generator, c: float, cfg: SynthConfig, decoy_rate: float) -> str:
    """A response whose sentence count grows with ``c`` in [-1, 1] when length_bias > 0."""
    mean = cfg.base_sentences + cfg.length_bias * c
    n_sent = max(1, int(round(mean + rng.normal(0.0, cfg.sentence_noise))))
    return " ".join(_sentence(rng, decoy_rate) for _ in range(n_sent))


def _normalized(levels: np.ndarray, n_levels: int) -> np.ndarray:
    """Map level indices 0..n-1 to [-1, 1]."""
    return 2.0 * levels / (n_levels - 1) - 1.0


def _make_instance(cfg: SynthConfig, label: int, idx: int, pmfs: dict[int, np.ndarray]) -> JudgmentInstance:
    rng = _instance_rng(cfg.seed, label, idx)
    grid = cfg.grid
    n_levels = len(grid)
    t = cfg.spec.type
    n_draw = cfg.d if t is JudgmentType.POINTWISE else (1 if t is JudgmentType.PAIRWISE else cfg.spec.k_items)
    levels = rng.choice(n_levels, size=n_draw, p=pmfs[label])
    # length driver: own scores for LLM; for humans an independent human-pmf
    # draw ("redraw") or nothing at all ("flat")
    length_levels = levels if label == LLM else rng.choice(n_levels, size=n_draw, p=pmfs[HUMAN])
    c = _normalized(length_levels.astype(np.float64), n_levels)
    if label == HUMAN and cfg.human_length == "flat":
        c = np.zeros_like(c)
    decoy_rate = float(rng.uniform(0.0, cfg.decoy_noise)) if cfg.decoy_noise > 0 else 0.0
    topic = str(rng.choice(_TOPICS))
    prompt = f"Request {idx}: give advice about {topic}."
    tag = "h" if label == HUMAN else "m"
    cid = f"{tag}{idx:06d}"
    if t is JudgmentType.POINTWISE:
        text = response_text(rng, float(c.mean()), cfg, decoy_rate)
        dims = {f"dim{j + 1}": int(grid[lv]) for j, lv in enumerate(levels)}
        return JudgmentInstance(Candidate(cid, (text,), prompt), PointwiseScore(dims), t)
    if t is JudgmentType.PAIRWISE:
        r1 = response_text(rng, float(c[0]), cfg, decoy_rate)
        r2 = response_text(rng, float(-c[0]), cfg, decoy_rate)
        return JudgmentInstance(Candidate(cid, (r1, r2), prompt), PairwiseScore(int(grid[levels[0]])), t)
    texts = tuple(response_text(rng, float(ci), cfg, decoy_rate) for ci in c)
    items = tuple(float(grid[lv]) for lv in levels)
    return JudgmentInstance(Candidate(cid, texts, prompt), ListwiseScore(items, canonical_ranking(items)), t)


def _length_signal(text: str) -> float:
    return float(np.clip((len(text.split()) - 50.0) / 40.0, -1.0, 1.0))


def simulate_judge(
    instances: Sequence[JudgmentInstance], scale: ScaleSpec, seed: int, noise: float = 1.0,
    cache: FeatureCache | None = None, model_id: str = SYNTH_JUDGE_ID,
) -> FeatureCache:
    """Stand-in judge model: aligned scores track response length plus noise.

    Style, format and wording ratings are uninformative random draws.
    Records depend only on the rendered prompt and ``seed``.
    """
    cache = cache if cache is not None else FeatureCache()
    for inst in instances:
        template_id = template_for(inst.type)
        prompt = render_prompt(template_id, inst, scale)
        rng = _instance_rng(seed, zlib.crc32(prompt.encode("utf-8")))
        style, fmt, wording = (float(v) for v in rng.integers(0, 5, size=3))
        sig = [_length_signal(r) for r in inst.candidate.responses]
        aligned: dict[str, float] = {}
        if inst.type is JudgmentType.POINTWISE:
            for dim in scale.dimensions:
                mid, half = (dim.min + dim.max) / 2.0, (dim.max - dim.min) / 2.0
                aligned[dim.name] = _snap(mid + half * sig[0] + rng.normal(0.0, noise), dim)
            overall = float(np.clip(round(2.0 + 2.0 * sig[0] + rng.normal(0.0, noise)), 0, 4))
        elif inst.type is JudgmentType.PAIRWISE:
            dim = scale.pair_scale
            aligned["pair"] = _snap(dim.max * (sig[0] - sig[1]) / 2.0 + rng.normal(0.0, noise), dim)
            overall = None
        else:
            dim = scale.item_scale
            mid, half = (dim.min + dim.max) / 2.0, (dim.max - dim.min) / 2.0
            for i, s in enumerate(sig):
                aligned[f"item{i}"] = _snap(mid + half * s + rng.normal(0.0, noise), dim)
            overall = None
        record = LlmFeatureRecord(style, fmt, wording, aligned, overall, rationale="simulated")
        cache.put(cache_key(template_id, prompt, model_id), record)
    return cache


def _snap(v: float, dim: DimensionScale) -> float:
    q = round((v - dim.min) / dim.step)
    return float(dim.min + dim.step * min(max(q, 0), dim.levels - 1))


def synth_instances(cfg: SynthConfig) -> list[LabeledInstance]:
    pmfs = {HUMAN: cfg.human_pmf(), LLM: cfg.llm_pmf()}
    return [
        LabeledInstance(_make_instance(cfg, label, i, pmfs), label)
        for label in (HUMAN, LLM)
        for i in range(cfg.n_instances)
    ]


def synth_generate(cfg: SynthConfig) -> SynthResult:
    """Labeled dataset grouped into groups of ``cfg.k``, plus simulated judge records."""
    instances = synth_instances(cfg)
    scale = cfg.scale()
    groups = regroup(instances, cfg.k, cfg.seed).groups
    dataset = Dataset(tuple(groups), scale, cfg.spec.type)
    cache = simulate_judge([li.instance for li in instances], scale, cfg.seed, cfg.judge_noise)
    return SynthResult(dataset, cache, cfg.human_pmf(), cfg.llm_pmf(), instances)


def with_overrides(cfg: SynthConfig, **changes) -> SynthConfig:
    return replace(cfg, **changes)
