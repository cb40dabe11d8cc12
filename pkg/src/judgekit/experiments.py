"""End-to-end synthetic experiments and the detectability sweep."""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

from .assembly import FeatureExtractor, FeatureMatrix, Layout
from .data import Dataset, JudgmentType, regroup, split_dataset
from .detection import evaluate_model, regroup_matrix
from .linguistic import LinguisticExtractor
from .llm import FeatureCache, LlmFeatureClient
from .models import TrainConfig, fit_model
from .synth import SYNTH_JUDGE_ID, SynthConfig, synth_instances, simulate_judge
from .theory import (
    JudgmentSpecTheory,
    SweepPoint,
    detectability_index,
    effective_scale,
    fit_beta,
)

DEFAULT_EXPERIMENT_TRAIN = TrainConfig(kind="forest", n_trees=100, max_depth=8, min_leaf=25)


@dataclass(frozen=True)
class KResult:
    k: int
    f1: float
    auroc: float
    n_groups: int


def build_matrices(
    dataset: Dataset,
    cache: FeatureCache,
    ablation: str,
    test_fraction: float,
    seed: int,
    linguistic: LinguisticExtractor | None = None,
) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Split a k=1 dataset and extract both sides with the offline judge cache."""
    train, test = split_dataset(dataset, test_fraction, seed)
    client = LlmFeatureClient(cache, dataset.scale, model_id=SYNTH_JUDGE_ID, offline=True, strict=True)
    ext = FeatureExtractor(Layout.of(dataset), ablation, client, linguistic or LinguisticExtractor())
    return ext.matrix(train), ext.matrix(test)


def run_synth_experiment(
    cfg: SynthConfig,
    ks: Sequence[int] = (1,),
    ablation: str = "full",
    train_cfg: TrainConfig = DEFAULT_EXPERIMENT_TRAIN,
    test_fraction: float = 0.5,
    transform: Callable[[Dataset], Dataset] | None = None,
    linguistic: LinguisticExtractor | None = None,
) -> list[KResult]:
    """Generate, split at instance level, train once, then score test groups for each k.

    ``transform`` (e.g. a scale coarsening) is applied to the instance-level
    dataset before features are extracted; the simulated judge then rates
    the transformed instances.
    """
    instances = synth_instances(replace(cfg, k=1))
    dataset = Dataset(tuple(regroup(instances, 1, cfg.seed).groups), cfg.scale(), cfg.spec.type)
    if transform is not None:
        dataset = transform(dataset)
    cache = simulate_judge(
        [inst for g in dataset.groups for inst in g.instances], dataset.scale, cfg.seed, cfg.judge_noise
    )
    train_m, test_m = build_matrices(dataset, cache, ablation, test_fraction, cfg.seed, linguistic)
    model = fit_model(train_m, replace(train_cfg, seed=cfg.seed))
    out = []
    for k in ks:
        f1, auc, n = evaluate_model(model, regroup_matrix(test_m, k, cfg.seed))
        out.append(KResult(k, f1, auc, n))
    return out


SWEEP_COLUMNS = ("m", "d", "S", "delta", "beta_hat", "det_predicted", "auroc_observed", "f1_observed", "seed")


@dataclass(frozen=True)
class SweepRow:
    m: int
    d: int
    S: float
    delta: float
    beta_hat: float
    det_predicted: float
    auroc_observed: float
    f1_observed: float
    seed: int


@dataclass(frozen=True)
class SweepConfig:
    """Grid of corpora: every (spec, d, delta, seed), each evaluated at every k."""

    specs: tuple[JudgmentSpecTheory, ...]
    ds: tuple[int, ...] = (1,)
    deltas: tuple[float, ...] = (0.2,)
    ks: tuple[int, ...] = (1, 2, 4, 8, 16)
    seeds: tuple[int, ...] = (0,)
    n_instances: int = 600
    ablation: str = "full"
    train: TrainConfig = DEFAULT_EXPERIMENT_TRAIN

    @classmethod
    def from_dict(cls, raw: dict) -> "SweepConfig":
        specs = []
        for s in raw.get("specs", [{"type": "pointwise", "L": 5}]):
            specs.append(JudgmentSpecTheory(**{**s, "type": JudgmentType(s["type"])}))
        train = TrainConfig.from_dict(raw["train"]) if "train" in raw else DEFAULT_EXPERIMENT_TRAIN
        tup = lambda key, default: tuple(raw.get(key, default))  # noqa: E731
        return cls(
            specs=tuple(specs),
            ds=tup("ds", (1,)),
            deltas=tup("deltas", (0.2,)),
            ks=tup("ks", (1, 2, 4, 8, 16)),
            seeds=tup("seeds", (0,)),
            n_instances=int(raw.get("n_instances", 600)),
            ablation=raw.get("ablation", "full"),
            train=train,
        )


def observed_det(auroc: float) -> float:
    """Empirical detectability from AUROC: 2*AUROC - 1, floored at 0."""
    return max(0.0, 2.0 * auroc - 1.0)


def run_sweep(cfg: SweepConfig, progress: Callable[[str], None] | None = None) -> list[SweepRow]:
    raw: list[tuple[int, int, float, float, float, float, int]] = []
    for spec, d, delta, seed in itertools.product(cfg.specs, cfg.ds, cfg.deltas, cfg.seeds):
        sc = SynthConfig(spec=spec, target_delta=delta, n_instances=cfg.n_instances, d=d, seed=seed)
        results = run_synth_experiment(sc, cfg.ks, cfg.ablation, cfg.train)
        S = effective_scale(spec).S
        for r in results:
            raw.append((r.k, d, S, delta, r.auroc, r.f1, seed))
        if progress is not None:
            progress(f"{spec.type.value} S={S:g} d={d} delta={delta} seed={seed}: done")
    points = [SweepPoint(m, d, S, delta, observed_det(auc)) for m, d, S, delta, auc, _, _ in raw]
    try:
        beta = fit_beta(points)
    except ValueError:
        beta = float("nan")
    rows = []
    for m, d, S, delta, auc, f1, seed in raw:
        det = detectability_index(beta, m, d, S, delta) if beta == beta and beta > 0 else float("nan")
        rows.append(SweepRow(m, d, S, delta, beta, det, auc, f1, seed))
    return rows


def sweep_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([repr(getattr(r, c)) if isinstance(getattr(r, c), float) else getattr(r, c) for c in SWEEP_COLUMNS])
    return buf.getvalue()
