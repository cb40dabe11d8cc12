import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from judgekit.assembly import FeatureMatrix
from judgekit.models import (
    LEAF_EPS,
    LogisticModel,
    ModelFormatError,
    TrainConfig,
    TrainingError,
    TreeEnsemble,
    dumps_model,
    feature_importance,
    fit_model,
    leaf_value,
    load_model,
    logistic_gradient,
    logistic_loss,
    predict_logit,
    save_model,
    sigmoid,
    train_forest,
    train_logistic,
)
from judgekit.schema import Block, FeatureSchema, FeatureVector, SchemaError

LOGISTIC = TrainConfig(kind="logistic")


def stump_forest(*leaves):
    n = len(leaves)
    return TreeEnsemble(
        feature=np.full(n, -1), threshold=np.zeros(n), left=np.full(n, -1), right=np.full(n, -1),
        value=np.array(leaves, dtype=float), gain=np.zeros(n), roots=np.arange(n), n_features=1,
    )


def blobs(n=200, seed=0, sep=4.0):
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], n // 2)
    X = rng.normal(size=(n, 2)) + sep * y[:, None]
    return X, y


def matrix_of(X, y):
    p = X.shape[1]
    schema = FeatureSchema(tuple(f"base.f{i}" for i in range(p)), (Block.BASE,) * p)
    return FeatureMatrix(schema, X, np.ones_like(X, bool), [f"g{i}" for i in range(len(y))], list(map(int, y)))


def numeric_grad(w, b, X, y, lam, h=1e-5):
    gw = np.zeros_like(w)
    for i in range(len(w)):
        e = np.zeros_like(w)
        e[i] = h
        gw[i] = (logistic_loss(w + e, b, X, y, lam) - logistic_loss(w - e, b, X, y, lam)) / (2 * h)
    gb = (logistic_loss(w, b + h, X, y, lam) - logistic_loss(w, b - h, X, y, lam)) / (2 * h)
    return gw, gb


class TestConfig:
    @pytest.mark.parametrize("kw", [{"kind": "svm"}, {"learning_rate": 0}, {"n_trees": 0},
                                    {"feature_subsample": 1.5}, {"row_subsample": 0}, {"epochs": -1}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            TrainConfig(**kw)

    def test_dict_round_trip(self):
        cfg = TrainConfig(kind="forest", n_trees=7, feature_subsample=0.5, seed=3)
        assert TrainConfig.from_dict(cfg.to_dict()) == cfg

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            TrainConfig.from_dict({"kind": "forest", "bogus": 1})

    def test_yaml(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("kind: logistic\nepochs: 10\n")
        assert TrainConfig.load(p) == TrainConfig(kind="logistic", epochs=10)


class TestLogistic:
    def test_first_gradient(self):
        gw, gb = logistic_gradient(np.zeros(1), 0.0, np.array([[1.0]]), np.array([1.0]), 0.0)
        assert gw.tolist() == [-0.5] and gb == -0.5

    @pytest.mark.parametrize("seed", range(5))
    def test_gradient_vs_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(8, 3))
        y = rng.integers(0, 2, 8).astype(float)
        w, b = rng.normal(size=3), float(rng.normal())
        gw, gb = logistic_gradient(w, b, X, y, 0.1)
        nw, nb = numeric_grad(w, b, X, y, 0.1)
        assert np.max(np.abs(gw - nw) / np.maximum(np.abs(nw), 1e-8)) <= 1e-4
        assert abs(gb - nb) / max(abs(nb), 1e-8) <= 1e-4

    def test_strong_regularization(self):
        X, y = blobs()
        m = train_logistic(X, y, TrainConfig(kind="logistic", l2_lambda=1e6, learning_rate=1e-7, epochs=50))
        assert np.linalg.norm(m.weights) < 1e-3

    def test_separable_accuracy(self):
        X, y = blobs(200, sep=6.0)
        m = train_logistic(X, y, LOGISTIC)
        assert np.mean((m.decision(X) >= 0) == y) >= 0.99

    @pytest.mark.parametrize("seed", range(4))
    def test_loss_non_increasing(self, seed):
        X, y = blobs(60, seed=seed, sep=1.0)
        m = train_logistic(X, y, TrainConfig(kind="logistic", learning_rate=0.01, epochs=200))
        h = np.array(m.loss_history)
        assert np.all(np.diff(h) <= 1e-15)

    def test_single_class(self):
        with pytest.raises(TrainingError):
            train_logistic(np.ones((3, 1)), np.ones(3), LOGISTIC)

    def test_non_finite(self):
        with pytest.raises(TrainingError):
            train_logistic(np.array([[np.nan], [1.0]]), np.array([0, 1]), LOGISTIC)

    def test_predict_by_hand(self):
        m = LogisticModel(np.array([1.0, -1.0]), 0.5, 0.0)
        assert predict_logit(m, np.array([2.0, 1.0])) == 1.5
        zero = LogisticModel(np.zeros(2), 0.0, 0.0)
        assert predict_logit(zero, np.array([7.0, -3.0])) == 0.0

    def test_sigmoid_extremes(self):
        assert sigmoid(np.array([-1000.0, 0.0, 1000.0])).tolist() == [0.0, 0.5, 1.0]

    def test_decision_invariant_to_affine_inputs(self):
        X, y = blobs(100, sep=1.5, seed=3)
        a = fit_model(matrix_of(X, y), LOGISTIC)
        Xt = X * np.array([3.0, 0.25]) + np.array([10.0, -4.0])
        b = fit_model(matrix_of(Xt, y), LOGISTIC)
        mt = matrix_of(Xt, y)
        assert np.array_equal(a.logits(X, np.ones_like(X, bool)) >= 0, b.logits(mt.values, mt.present) >= 0)


class TestForest:
    def test_xor(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        y = np.array([0, 1, 1, 0])
        cfg = TrainConfig(n_trees=50, max_depth=2, min_leaf=1, feature_subsample=1.0, row_subsample=1.0)
        # bootstrap rows may miss a corner; replicate so every bag sees all four
        Xr, yr = np.repeat(X, 25, axis=0), np.repeat(y, 25)
        f = train_forest(Xr, yr, cfg)
        assert np.array_equal(f.decision(X) >= 0, y == 1)

    def test_pure_node_is_leaf(self):
        X = np.array([[0.0], [1.0], [2.0]])
        f = train_forest(np.vstack([X, X]), np.array([0, 0, 0, 1, 1, 1]), TrainConfig(n_trees=1))
        assert f.n_trees == 1
        g = train_forest(np.array([[0.0], [5.0]]), np.array([0, 1]), TrainConfig(n_trees=3, min_leaf=1))
        for t in range(3):
            s = g.tree_structure(t)
            assert len(s) in (1, 3)

    def test_deterministic(self):
        X, y = blobs(120, sep=1.0)
        a = train_forest(X, y, TrainConfig(n_trees=10, seed=4))
        b = train_forest(X, y, TrainConfig(n_trees=10, seed=4))
        assert all(a.tree_structure(t) == b.tree_structure(t) for t in range(10))

    def test_parallel_matches_serial(self):
        X, y = blobs(120, sep=1.0)
        a = train_forest(X, y, TrainConfig(n_trees=8, seed=2))
        b = train_forest(X, y, TrainConfig(n_trees=8, seed=2), n_jobs=3)
        assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())

    def test_mean_of_leaves(self):
        assert predict_logit(stump_forest(0.4, -0.2), np.array([0.0])) == pytest.approx(0.1, abs=1e-15)

    def test_leaf_value(self):
        assert leaf_value(3, 3) == pytest.approx(np.log((1 + LEAF_EPS) / LEAF_EPS))
        assert leaf_value(1, 2) == 0.0

    def test_importances_sum_to_one(self):
        X, y = blobs(150, sep=1.0)
        imp = train_forest(X, y, TrainConfig(n_trees=20)).importances()
        assert abs(imp.sum() - 1.0) <= 1e-9

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(150, 3))
        y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(int)
        cfg = TrainConfig(n_trees=15, seed=5)
        Xc = X.copy()
        Xc[:, 1] = Xc[:, 1] ** 3
        a = train_forest(X, y, cfg)
        b = train_forest(Xc, y, cfg)
        T = rng.normal(size=(100, 3))
        Tc = T.copy()
        Tc[:, 1] = Tc[:, 1] ** 3
        assert np.array_equal(a.decision(T) >= 0, b.decision(Tc) >= 0)

    def test_single_class(self):
        with pytest.raises(TrainingError):
            train_forest(np.ones((4, 1)), np.zeros(4), TrainConfig())

    def test_bad_split_index_rejected(self):
        with pytest.raises(ModelFormatError):
            TreeEnsemble(np.array([5, -1, -1]), np.zeros(3), np.array([1, -1, -1]), np.array([2, -1, -1]),
                         np.zeros(3), np.zeros(3), np.array([0]), 2)


class TestImportance:
    def test_logistic_order(self):
        m = LogisticModel(np.array([0.1, -2.0, 0.5]), 0.0, 0.0)
        assert [n for n, _ in feature_importance(m)] == ["f1", "f2", "f0"]

    def test_zero_model_ties(self):
        m = LogisticModel(np.zeros(4), 0.0, 0.0)
        ranked = feature_importance(m)
        assert [n for n, _ in ranked] == ["f0", "f1", "f2", "f3"]
        assert len({v for _, v in ranked}) == 1

    def test_forest_zero_gain_uniform(self):
        assert stump_forest(0.1).importances().tolist() == [1.0]


class TestPersistence:
    @pytest.mark.parametrize("kind", ["logistic", "forest"])
    def test_round_trip_bit_exact(self, tmp_path, kind):
        X, y = blobs(120, sep=1.0)
        model = fit_model(matrix_of(X, y), TrainConfig(kind=kind, n_trees=10, epochs=50))
        save_model(model, tmp_path / "m.json")
        back = load_model(tmp_path / "m.json")
        V = np.random.default_rng(0).normal(size=(100, 2)) * 3
        mask = np.ones_like(V, bool)
        assert np.array_equal(model.logits(V, mask), back.logits(V, mask))
        assert dumps_model(back) == dumps_model(model)

    def _saved(self, tmp_path):
        X, y = blobs(40, sep=1.0)
        model = fit_model(matrix_of(X, y), TrainConfig(kind="logistic", epochs=5))
        raw = json.loads(dumps_model(model))
        return model, raw

    def test_future_version(self, tmp_path):
        _, raw = self._saved(tmp_path)
        raw["format_version"] = 99
        (tmp_path / "m.json").write_text(json.dumps(raw))
        with pytest.raises(ModelFormatError, match="version"):
            load_model(tmp_path / "m.json")

    def test_tampered_hash(self, tmp_path):
        _, raw = self._saved(tmp_path)
        raw["schema_hash"] = "0" * 64
        (tmp_path / "m.json").write_text(json.dumps(raw))
        with pytest.raises(ModelFormatError, match="hash"):
            load_model(tmp_path / "m.json")

    def test_schema_mismatch_on_apply(self, tmp_path):
        model, _ = self._saved(tmp_path)
        other = FeatureSchema(("base.x", "base.y"), (Block.BASE, Block.BASE))
        with pytest.raises(SchemaError):
            predict_logit(model, FeatureVector(other, np.zeros(2)))

    def test_embedded_metadata(self, tmp_path):
        _, raw = self._saved(tmp_path)
        assert {"schema", "standardizer", "config", "lexicon_hashes", "format_version", "tau"} <= set(raw)
        assert raw["config"]["seed"] == 0


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_forest_predictions_finite(seed):
    X, y = blobs(40, seed=seed, sep=0.5)
    f = train_forest(X, y, TrainConfig(n_trees=3, seed=seed))
    assert np.isfinite(f.decision(X)).all()
