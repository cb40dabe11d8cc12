"""Group aggregation, thresholding, metrics, repeated runs and the bias report."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .assembly import FeatureMatrix
from .models import TrainConfig, TrainedModel, fit_model
from .schema import Block

LOGGER = logging.getLogger(__name__)


def aggregate_group(logits: Sequence[float]) -> float:
    """Sum of instance logits, accumulated left to right."""
    if len(logits) == 0:
        raise ValueError("cannot aggregate an empty group")
    total = 0.0
    for z in logits:
        z = float(z)
        if not math.isfinite(z):
            raise ValueError(f"non-finite logit {z!r}")
        total += z
    return total


def classify_group(aggregate: float, tau: float = 0.0) -> int:
    return 1 if aggregate >= tau else 0


def _check_lengths(a, b) -> None:
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) == 0:
        raise ValueError("need at least one example")


def f1_score(preds: Sequence[int], labels: Sequence[int]) -> float:
    """F1 of the positive (LLM) class; 0 when precision + recall is 0."""
    _check_lengths(preds, labels)
    p = np.asarray(preds) == 1
    t = np.asarray(labels) == 1
    tp = int(np.sum(p & t))
    fp = int(np.sum(p & ~t))
    fn = int(np.sum(~p & t))
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def auroc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Mann-Whitney AUROC with ties counted as one half, via average ranks.

    Rank sums of half-integers are exact in float64 for any practical n, so
    the result equals the pairwise definition exactly.
    """
    _check_lengths(scores, labels)
    s = np.asarray(scores, dtype=np.float64)
    t = np.asarray(labels) == 1
    n_pos = int(t.sum())
    n_neg = len(t) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUROC needs at least one positive and one negative")
    order = np.argsort(s, kind="mergesort")
    sorted_s = s[order]
    # doubled average ranks stay integral: first + last (1-based) of each tie run
    starts = np.flatnonzero(np.r_[True, sorted_s[1:] != sorted_s[:-1]])
    ends = np.r_[starts[1:], len(s)]
    run_rank2 = starts + ends + 1
    rank2 = np.empty(len(s), dtype=np.int64)
    rank2[order] = np.repeat(run_rank2, ends - starts)
    u2 = int(rank2[t].sum()) - n_pos * (n_pos + 1)
    return u2 / (2 * n_pos * n_neg)


def auroc_bruteforce(scores: Sequence[float], labels: Sequence[int]) -> float:
    s = np.asarray(scores, dtype=np.float64)
    t = np.asarray(labels) == 1
    pos, neg = s[t], s[~t]
    wins = (pos[:, None] > neg[None, :]).sum() + 0.5 * (pos[:, None] == neg[None, :]).sum()
    return float(wins / (len(pos) * len(neg)))


@dataclass(frozen=True)
class GroupScore:
    group_id: str
    instance_logits: tuple[float, ...]
    aggregate: float
    prediction: int
    true_label: int | None

    def to_dict(self) -> dict:
        return {
            "group_id": self.group_id,
            "instance_logits": list(self.instance_logits),
            "aggregate": self.aggregate,
            "prediction": self.prediction,
            "true_label": self.true_label,
        }


def score_groups(
    logits: Sequence[float], group_ids: Sequence[str], labels: Sequence[int | None], tau: float = 0.0
) -> list[GroupScore]:
    """Aggregate instance logits by group id, in first-appearance order."""
    _check_lengths(logits, group_ids)
    members: dict[str, list[float]] = {}
    group_label: dict[str, int | None] = {}
    for z, g, lab in zip(logits, group_ids, labels):
        members.setdefault(g, []).append(float(z))
        if group_label.setdefault(g, lab) != lab:
            raise ValueError(f"group {g!r} mixes labels")
    out = []
    for g, zs in members.items():
        agg = aggregate_group(zs)
        out.append(GroupScore(g, tuple(zs), agg, classify_group(agg, tau), group_label[g]))
    return out


def group_metrics(scores: Sequence[GroupScore]) -> tuple[float, float]:
    labels = [s.true_label for s in scores]
    if any(lab is None for lab in labels):
        raise ValueError("metrics need labeled groups")
    f1 = f1_score([s.prediction for s in scores], labels)
    return f1, auroc([s.aggregate for s in scores], labels)


def calibrate_tau(scores: Sequence[GroupScore]) -> float:
    """Threshold maximizing F1 over candidate cuts at observed aggregates (smallest on ties)."""
    aggs = np.array([s.aggregate for s in scores])
    labels = [s.true_label for s in scores]
    best_tau, best_f1 = 0.0, -1.0
    for tau in np.unique(aggs):
        f1 = f1_score((aggs >= tau).astype(int), labels)
        if f1 > best_f1:
            best_tau, best_f1 = float(tau), f1
    return best_tau


@dataclass(frozen=True)
class RunResult:
    seed: int
    f1: float
    auroc: float
    n_groups: int


@dataclass(frozen=True)
class MetricsReport:
    runs: tuple[RunResult, ...]
    tau: float
    k: int | None = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def f1(self) -> float:
        return sum(r.f1 for r in self.runs) / len(self.runs)

    @property
    def auroc(self) -> float:
        return sum(r.auroc for r in self.runs) / len(self.runs)

    @property
    def n_groups(self) -> int:
        return self.runs[0].n_groups if self.runs else 0

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "k": self.k,
            "n_groups": self.n_groups,
            "runs": [vars(r) for r in self.runs],
            "mean": {"f1": self.f1, "auroc": self.auroc},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["run", "seed", "n_groups", "f1", "auroc"])
        for i, r in enumerate(self.runs):
            w.writerow([i, r.seed, r.n_groups, repr(r.f1), repr(r.auroc)])
        w.writerow(["mean", "", self.n_groups, repr(self.f1), repr(self.auroc)])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"tau={self.tau:g}" + (f"  k={self.k}" if self.k is not None else "")]
        lines.append(f"{'run':>5} {'seed':>8} {'groups':>7} {'F1':>8} {'AUROC':>8}")
        for i, r in enumerate(self.runs):
            lines.append(f"{i:>5} {r.seed:>8} {r.n_groups:>7} {r.f1:>8.4f} {r.auroc:>8.4f}")
        lines.append(f"{'mean':>5} {'':>8} {self.n_groups:>7} {self.f1:>8.4f} {self.auroc:>8.4f}")
        return "\n".join(lines) + "\n"


def regroup_matrix(matrix: FeatureMatrix, k: int, seed: int) -> FeatureMatrix:
    """Reassign rows to fresh groups of k same-label rows (the tail of each label is dropped)."""
    labels = matrix.y
    rows, groups = [], []
    for lab in (0, 1):
        idx = np.flatnonzero(labels == lab)
        perm = idx[np.random.default_rng([seed, lab]).permutation(len(idx))]
        tag = "human" if lab == 0 else "llm"
        for gi in range(len(perm) // k):
            for r in perm[gi * k:(gi + 1) * k]:
                rows.append(int(r))
                groups.append(f"{tag}-k{k}-{gi:05d}")
    return matrix.with_groups(groups, rows)


def evaluate_model(model: TrainedModel, test: FeatureMatrix, tau: float | None = None) -> tuple[float, float, int]:
    tau = model.tau if tau is None else tau
    scores = score_groups(model.logits_for(test), test.group_ids, test.labels, tau)
    f1, auc = group_metrics(scores)
    return f1, auc, len(scores)


def run_detection(
    train: FeatureMatrix,
    test: FeatureMatrix,
    cfg: TrainConfig,
    repeats: int,
    seeds: Sequence[int],
    tau: float = 0.0,
    k: int | None = None,
    n_jobs: int = 1,
) -> MetricsReport:
    """Train once per seed and score the test groups.

    When ``k`` is given, test rows are regrouped into groups of k with the
    run's seed; otherwise the matrix's own group ids are used.
    """
    if repeats != len(seeds):
        raise ValueError(f"repeats={repeats} but {len(seeds)} seeds given")
    if train.schema.hash != test.schema.hash:
        raise ValueError("train and test matrices have different schemas")
    runs = []
    for seed in seeds:
        model = fit_model(train, TrainConfig.from_dict({**cfg.to_dict(), "seed": int(seed)}), n_jobs=n_jobs)
        t = regroup_matrix(test, k, seed) if k is not None else test
        f1, auc, n = evaluate_model(model, t, tau)
        runs.append(RunResult(int(seed), f1, auc, n))
    return MetricsReport(tuple(runs), tau, k)


# --------------------------------------------------------------------------
# Bias report


@dataclass(frozen=True)
class BiasEntry:
    name: str
    value: float
    block: Block


@dataclass(frozen=True)
class BiasReport:
    entries: tuple[BiasEntry, ...]
    kind: str

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank", "feature", "block", "value"])
        for i, e in enumerate(self.entries, start=1):
            w.writerow([i, e.name, e.block.value, repr(e.value)])
        return buf.getvalue()

    def to_text(self) -> str:
        label = "coefficient" if self.kind == "logistic" else "importance"
        width = max([len("feature")] + [len(e.name) for e in self.entries])
        lines = [f"{'rank':>4}  {'feature':<{width}}  {'block':<10}  {label:>12}"]
        for i, e in enumerate(self.entries, start=1):
            lines.append(f"{i:>4}  {e.name:<{width}}  {e.block.value:<10}  {e.value:>12.6f}")
        return "\n".join(lines) + "\n"


def bias_report(model: TrainedModel, n: int = 20) -> BiasReport:
    """Top-n features by |coefficient| (logistic) or importance (forest)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if model is None:
        raise ValueError("bias report needs a trained model")
    p = len(model.schema)
    if n > p:
        LOGGER.warning("requested top %d features but the schema has only %d; clamping", n, p)
        n = p
    signed = model.estimator.signed()
    order = sorted(range(p), key=lambda i: (-abs(signed[i]), i))[:n]
    entries = tuple(BiasEntry(model.schema.names[i], float(signed[i]), model.schema.blocks[i]) for i in order)
    return BiasReport(entries, model.kind)


def write_text(path: str | Path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="")
