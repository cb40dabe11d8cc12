"""Instance classifiers: an L2-regularized logistic model and a bagged tree ensemble.

Both produce an unbounded logit per instance; positive means LLM-produced.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from . import kernels
from .assembly import FeatureMatrix, Standardizer, fit_standardizer_arrays
from .schema import FeatureSchema, FeatureVector, SchemaError

MODEL_FORMAT_VERSION = 1
LEAF_EPS = 1e-6


class TrainingError(ValueError):
    """Training data cannot produce a model (single class, non-finite values)."""


class ModelFormatError(ValueError):
    """A model file is unreadable, from an unknown version, or fails its integrity check."""


@dataclass(frozen=True)
class TrainConfig:
    kind: str = "forest"
    learning_rate: float = 0.1
    epochs: int = 500
    l2_lambda: float = 1e-3
    n_trees: int = 200
    max_depth: int = 8
    min_leaf: int = 2
    feature_subsample: float | None = None  # None: sqrt(p)/p
    row_subsample: float = 1.0
    standardize_trees: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("logistic", "forest"):
            raise ValueError(f"kind must be 'logistic' or 'forest', not {self.kind!r}")
        for name in ("learning_rate", "epochs", "n_trees", "max_depth", "min_leaf"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.l2_lambda < 0:
            raise ValueError("l2_lambda must be >= 0")
        for name in ("feature_subsample", "row_subsample"):
            v = getattr(self, name)
            if v is not None and not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        extra = set(raw) - known
        if extra:
            raise ValueError(f"unknown training option(s): {', '.join(sorted(extra))}")
        return cls(**raw)

    @classmethod
    def load(cls, path: str | Path) -> "TrainConfig":
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        if path.suffix in (".yaml", ".yml"):
            import yaml

            raw = yaml.safe_load(text) or {}
        else:
            raw = json.loads(text)
        return cls.from_dict(raw)


def _check_training_data(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise TrainingError("X must be 2-D with one row per label")
    if not np.isfinite(X).all():
        raise TrainingError("feature matrix contains non-finite values")
    if not np.isin(y, (0, 1)).all():
        raise TrainingError("labels must be 0 or 1")
    if y.min() == y.max():
        raise TrainingError("training data contains a single class")
    return X, y.astype(np.float64)


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=np.float64)))


# --------------------------------------------------------------------------
# Logistic regression


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float
    l2_lambda: float
    loss_history: tuple[float, ...] = field(default=(), compare=False, repr=False)

    @property
    def n_features(self) -> int:
        return len(self.weights)

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise SchemaError(f"expected {self.n_features} features, got {X.shape[1]}")
        return X @ self.weights + self.bias

    def importances(self) -> np.ndarray:
        return np.abs(self.weights)

    def signed(self) -> np.ndarray:
        return self.weights.copy()

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias, "l2_lambda": self.l2_lambda}

    @classmethod
    def from_dict(cls, raw: dict) -> "LogisticModel":
        return cls(np.array(raw["weights"], dtype=np.float64), float(raw["bias"]), float(raw["l2_lambda"]))


def logistic_loss(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, lam: float) -> float:
    z = X @ w + b
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * lam * (w @ w))


def logistic_gradient(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, lam: float):
    """Gradient of mean log-loss plus (lam/2)|w|^2; the bias is not penalized."""
    r = sigmoid(X @ w + b) - y
    n = X.shape[0]
    return X.T @ r / n + lam * w, float(r.sum() / n)


def train_logistic(X: np.ndarray, y: np.ndarray, cfg: TrainConfig = TrainConfig(kind="logistic")) -> LogisticModel:
    """Full-batch gradient descent from zero weights for ``cfg.epochs`` steps."""
    X, y = _check_training_data(X, y)
    w = np.zeros(X.shape[1])
    b = 0.0
    lam = cfg.l2_lambda
    lr = cfg.learning_rate
    history = [logistic_loss(w, b, X, y, lam)]
    for _ in range(cfg.epochs):
        gw, gb = logistic_gradient(w, b, X, y, lam)
        w = w - lr * gw
        b = b - lr * gb
        history.append(logistic_loss(w, b, X, y, lam))
    return LogisticModel(w, float(b), lam, tuple(history))


# --------------------------------------------------------------------------
# Bagged decision trees


@dataclass(frozen=True)
class TreeEnsemble:
    """Trees stored as flat node arrays; ``roots[t]`` indexes tree t's root.

    Internal nodes have ``left >= 0``; rows with ``x[feature] <= threshold``
    go left. Leaves carry a log-odds ``value``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray
    roots: np.ndarray
    n_features: int

    def __post_init__(self):
        internal = self.left >= 0
        if internal.any() and (self.feature[internal].max() >= self.n_features or self.feature[internal].min() < 0):
            raise ModelFormatError("tree split feature index out of range")
        if not np.isfinite(self.value).all():
            raise ModelFormatError("non-finite leaf value")

    @property
    def n_trees(self) -> int:
        return len(self.roots)

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
        if X.shape[1] != self.n_features:
            raise SchemaError(f"expected {self.n_features} features, got {X.shape[1]}")
        return kernels.predict_forest(
            X, self.feature, self.threshold, self.left, self.right, self.value, self.roots
        )

    def importances(self) -> np.ndarray:
        imp = np.zeros(self.n_features)
        internal = self.left >= 0
        np.add.at(imp, self.feature[internal], self.gain[internal])
        total = imp.sum()
        if total <= 0:
            return np.full(self.n_features, 1.0 / self.n_features)
        return imp / total

    def signed(self) -> np.ndarray:
        return self.importances()

    def tree_structure(self, t: int) -> list[tuple]:
        """Preorder (feature, threshold, value) tuples of tree ``t``; for comparisons."""
        out, stack = [], [int(self.roots[t])]
        while stack:
            node = stack.pop()
            if self.left[node] < 0:
                out.append((-1, 0.0, float(self.value[node])))
            else:
                out.append((int(self.feature[node]), float(self.threshold[node]), 0.0))
                stack.extend((int(self.right[node]), int(self.left[node])))
        return out

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "gain": self.gain.tolist(),
            "roots": self.roots.tolist(),
            "n_features": self.n_features,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "TreeEnsemble":
        ints = lambda k: np.array(raw[k], dtype=np.int64)  # noqa: E731
        flts = lambda k: np.array(raw[k], dtype=np.float64)  # noqa: E731
        return cls(
            ints("feature"), flts("threshold"), ints("left"), ints("right"),
            flts("value"), flts("gain"), ints("roots"), int(raw["n_features"]),
        )


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    """Independent counter-based stream for one tree."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, tree_index])))


def leaf_value(pos: float, n: int) -> float:
    p = pos / n
    return math.log((p + LEAF_EPS) / (1.0 - p + LEAF_EPS))


def _n_try(p: int, frac: float | None) -> int:
    if frac is None:
        return max(1, int(round(math.sqrt(p))))
    return max(1, min(p, int(math.ceil(frac * p))))


def _grow_tree(X: np.ndarray, y: np.ndarray, cfg: TrainConfig, tree_index: int):
    rng = tree_rng(cfg.seed, tree_index)
    n, p = X.shape
    n_boot = max(1, int(round(cfg.row_subsample * n)))
    rows = np.sort(rng.integers(0, n, size=n_boot)).astype(np.int64)
    m_try = _n_try(p, cfg.feature_subsample)
    all_features = np.arange(p, dtype=np.int64)

    feature, threshold, left, right, value, gain = [], [], [], [], [], []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        gain.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, rows, 0)]
    while stack:
        node, idx, depth = stack.pop()
        size = len(idx)
        pos = float(y[idx].sum())
        value[node] = leaf_value(pos, size)
        if depth >= cfg.max_depth or pos == 0.0 or pos == size or size < 2 * cfg.min_leaf:
            continue
        chosen = np.sort(rng.choice(p, size=m_try, replace=False)).astype(np.int64)
        f, thr, g = kernels.best_split(X, y, idx, chosen, cfg.min_leaf)
        if f < 0 and m_try < p:
            rest = np.setdiff1d(all_features, chosen)
            f, thr, g = kernels.best_split(X, y, idx, rest, cfg.min_leaf)
        if f < 0:
            continue
        go_left = X[idx, f] <= thr
        li, ri = new_node(), new_node()
        feature[node], threshold[node], gain[node] = int(f), float(thr), max(0.0, float(g))
        left[node], right[node] = li, ri
        value[node] = 0.0
        stack.append((ri, idx[~go_left], depth + 1))
        stack.append((li, idx[go_left], depth + 1))
    return feature, threshold, left, right, value, gain


def train_forest(
    X: np.ndarray, y: np.ndarray, cfg: TrainConfig = TrainConfig(), n_jobs: int = 1
) -> TreeEnsemble:
    """Bagged CART trees on Gini decrease with midpoint thresholds.

    Trees are independent given (seed, tree index), so ``n_jobs`` only
    changes wall time, never the result.
    """
    X, y = _check_training_data(X, y)
    X = np.ascontiguousarray(X)
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(lambda t: _grow_tree(X, y, cfg, t), range(cfg.n_trees)))
    else:
        trees = [_grow_tree(X, y, cfg, t) for t in range(cfg.n_trees)]
    roots, offset = [], 0
    cols: list[list] = [[] for _ in range(6)]
    for tree in trees:
        roots.append(offset)
        f, thr, lft, rgt, val, g = tree
        cols[0].extend(f)
        cols[1].extend(thr)
        cols[2].extend(c + offset if c >= 0 else -1 for c in lft)
        cols[3].extend(c + offset if c >= 0 else -1 for c in rgt)
        cols[4].extend(val)
        cols[5].extend(g)
        offset += len(f)
    return TreeEnsemble(
        np.array(cols[0], dtype=np.int64),
        np.array(cols[1], dtype=np.float64),
        np.array(cols[2], dtype=np.int64),
        np.array(cols[3], dtype=np.int64),
        np.array(cols[4], dtype=np.float64),
        np.array(cols[5], dtype=np.float64),
        np.array(roots, dtype=np.int64),
        X.shape[1],
    )


# --------------------------------------------------------------------------
# Trained models bound to a schema


Estimator = Union[LogisticModel, TreeEnsemble]


@dataclass(frozen=True)
class TrainedModel:
    """Estimator plus everything needed to map raw feature vectors to logits."""

    schema: FeatureSchema
    standardizer: Standardizer
    standardize: bool
    estimator: Estimator
    config: TrainConfig
    tau: float = 0.0

    @property
    def kind(self) -> str:
        return "logistic" if isinstance(self.estimator, LogisticModel) else "forest"

    def prepare(self, values: np.ndarray, present: np.ndarray) -> np.ndarray:
        return self.standardizer.transform(values, present, scale=self.standardize)

    def logits(self, values: np.ndarray, present: np.ndarray) -> np.ndarray:
        return self.estimator.decision(self.prepare(values, present))

    def logits_for(self, matrix: FeatureMatrix) -> np.ndarray:
        check_schema(self, matrix.schema)
        return self.logits(matrix.values, matrix.present)

    def with_tau(self, tau: float) -> "TrainedModel":
        return TrainedModel(self.schema, self.standardizer, self.standardize, self.estimator, self.config, tau)


def check_schema(model: TrainedModel, schema: FeatureSchema) -> None:
    if schema.hash != model.schema.hash:
        raise SchemaError("feature schema does not match the model's schema (hash mismatch)")


def fit_model(matrix: FeatureMatrix, cfg: TrainConfig, n_jobs: int = 1) -> TrainedModel:
    """Fit the standardizer on ``matrix`` and train the configured estimator."""
    std = fit_standardizer_arrays(matrix.values, matrix.present)
    y = matrix.y
    if cfg.kind == "logistic":
        est = train_logistic(std.transform(matrix.values, matrix.present), y, cfg)
        scaled = True
    else:
        scaled = cfg.standardize_trees
        est = train_forest(std.transform(matrix.values, matrix.present, scale=scaled), y, cfg, n_jobs=n_jobs)
    return TrainedModel(matrix.schema, std, scaled, est, cfg)


def predict_logit(model: Estimator | TrainedModel, v: FeatureVector | np.ndarray) -> float:
    """Logit for one vector; a bare estimator takes already prepared values."""
    if isinstance(model, TrainedModel):
        if not isinstance(v, FeatureVector):
            raise TypeError("a trained model needs a FeatureVector")
        check_schema(model, v.schema)
        return float(model.logits(v.values[None, :], v.present[None, :])[0])
    values = v.values if isinstance(v, FeatureVector) else np.asarray(v, dtype=np.float64)
    return float(model.decision(values[None, :])[0])


def feature_importance(
    model: Estimator | TrainedModel, names: Sequence[str] | None = None
) -> list[tuple[str, float]]:
    """(name, importance) pairs, descending; ties keep schema order."""
    est = model.estimator if isinstance(model, TrainedModel) else model
    if names is None:
        names = model.schema.names if isinstance(model, TrainedModel) else [f"f{i}" for i in range(est.n_features)]
    imp = est.importances()
    order = sorted(range(len(imp)), key=lambda i: (-imp[i], i))
    return [(names[i], float(imp[i])) for i in order]


# --------------------------------------------------------------------------
# Model files


def model_to_dict(model: TrainedModel) -> dict:
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "schema": model.schema.to_dict(),
        "schema_hash": model.schema.hash,
        "lexicon_hashes": list(model.schema.lexicon_hashes),
        "standardizer": model.standardizer.to_dict(),
        "standardize": model.standardize,
        "tau": model.tau,
        "config": model.config.to_dict(),
        "estimator": model.estimator.to_dict(),
    }


def dumps_model(model: TrainedModel) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def save_model(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def model_from_dict(raw: dict) -> TrainedModel:
    version = raw.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"model format version {version!r} is not supported (this build reads version {MODEL_FORMAT_VERSION})"
        )
    try:
        schema = FeatureSchema.from_dict(raw["schema"])
        if schema.hash != raw["schema_hash"]:
            raise ModelFormatError("schema hash in model file does not match its schema; refusing to load")
        std = Standardizer.from_dict(raw["standardizer"])
        cfg = TrainConfig.from_dict(raw["config"])
        kind = raw["kind"]
        if kind == "logistic":
            est: Estimator = LogisticModel.from_dict(raw["estimator"])
        elif kind == "forest":
            est = TreeEnsemble.from_dict(raw["estimator"])
        else:
            raise ModelFormatError(f"unknown model kind {kind!r}")
        return TrainedModel(schema, std, bool(raw["standardize"]), est, cfg, float(raw["tau"]))
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc


def load_model(path: str | Path) -> TrainedModel:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON") from exc
    return model_from_dict(raw)
