import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from judgekit.data import (
    HUMAN,
    LLM,
    Candidate,
    Dataset,
    DatasetError,
    DimensionScale,
    JudgmentGroup,
    JudgmentInstance,
    JudgmentType,
    LabeledInstance,
    ListwiseScore,
    PairwiseScore,
    PointwiseScore,
    ScaleSpec,
    canonical_ranking,
    coarsen_scale,
    flatten,
    load_dataset,
    load_scale,
    project_dimensions,
    regroup,
    split_dataset,
    write_dataset,
    write_scale,
)

from conftest import HS2_DIMS, pairwise, pointwise

COARSE = {-3: -1, -2: -1, -1: -1, 0: 0, 1: 1, 2: 1, 3: 1}


def labeled(n, label, prefix="x"):
    return [LabeledInstance(pointwise(f"{prefix}{i}"), label) for i in range(n)]


class TestScale:
    def test_levels_and_grid(self):
        d = DimensionScale("a", 0, 4)
        assert d.levels == 5
        assert d.grid() == [0, 1, 2, 3, 4]
        assert DimensionScale("b", 1, 9, 2).grid() == [1, 3, 5, 7, 9]

    @pytest.mark.parametrize("lo,hi,step", [(3, 3, 1), (4, 0, 1), (0, 4, 3), (0, 4, 0)])
    def test_invalid_dimensions(self, lo, hi, step):
        with pytest.raises(DatasetError):
            DimensionScale("a", lo, hi, step)

    def test_contains_respects_step(self):
        d = DimensionScale("a", 0, 4, 2)
        assert d.contains(2) and not d.contains(1) and not d.contains(6)

    def test_scale_file_round_trip(self, tmp_path, hs2_scale):
        p = tmp_path / "scale.json"
        write_scale(hs2_scale, p)
        assert load_scale(p) == hs2_scale

    def test_yaml_scale(self, tmp_path):
        p = tmp_path / "scale.yaml"
        p.write_text("dimensions:\n  quality: {min: 1, max: 5}\npair_levels_x: 2\n")
        s = load_scale(p)
        assert s.dimensions == (DimensionScale("quality", 1, 5),)
        assert s.pair_levels_x == 2


class TestInstances:
    def test_pointwise_arity(self):
        with pytest.raises(DatasetError):
            JudgmentInstance(Candidate("c", ("a", "b")), PointwiseScore({"x": 1}), JudgmentType.POINTWISE)

    def test_score_form_must_match_type(self):
        with pytest.raises(DatasetError):
            JudgmentInstance(Candidate("c", ("a", "b")), PointwiseScore({"x": 1}), JudgmentType.PAIRWISE)

    def test_listwise_ranking_consistency(self):
        with pytest.raises(DatasetError):
            JudgmentInstance(
                Candidate("c", ("a", "b", "c")), ListwiseScore((1.0, 3.0, 2.0), (0, 1, 2)), JudgmentType.LISTWISE
            )

    def test_canonical_ranking_ties_to_lower_index(self):
        assert canonical_ranking([2, 5, 5, 1]) == (1, 2, 0, 3)

    def test_group_rejects_mixed_types(self):
        with pytest.raises(DatasetError):
            JudgmentGroup("g", (pointwise(), pairwise()), HUMAN)

    def test_empty_group(self):
        with pytest.raises(DatasetError):
            JudgmentGroup("g", (), HUMAN)


class TestJsonl:
    def test_two_line_file(self, tmp_path, hs2_scale):
        ds = Dataset(
            (JudgmentGroup("g1", (pointwise("a"),), HUMAN), JudgmentGroup("g2", (pointwise("b"),), LLM, "judge-7")),
            hs2_scale,
        )
        p = tmp_path / "d.jsonl"
        write_dataset(ds, p)
        loaded = load_dataset(p, hs2_scale)
        assert len(loaded) == 2
        assert loaded == ds

    def test_scale_violation_names_dimension(self, tmp_path, hs2_scale):
        p = tmp_path / "d.jsonl"
        rec = {
            "group_id": "g9",
            "label": "human",
            "type": "pointwise",
            "instances": [
                {
                    "candidate": {"id": "c", "responses": ["x"]},
                    "score": {"dims": {**{d: 1 for d in HS2_DIMS}, "Helpfulness": 7}},
                }
            ],
        }
        p.write_text(json.dumps(rec) + "\n")
        with pytest.raises(DatasetError, match="Helpfulness") as err:
            load_dataset(p, hs2_scale)
        assert ":1:" in str(err.value) and "g9" in str(err.value)

    def test_empty_file(self, tmp_path, hs2_scale):
        p = tmp_path / "empty.jsonl"
        p.write_text("")
        assert len(load_dataset(p, hs2_scale)) == 0

    def test_malformed_line_reports_line_number(self, tmp_path, hs2_scale):
        ds = Dataset((JudgmentGroup("g1", (pointwise("a"),), HUMAN),), hs2_scale)
        p = tmp_path / "d.jsonl"
        write_dataset(ds, p)
        with open(p, "a") as fh:
            fh.write("{not json\n")
        with pytest.raises(DatasetError, match=":2:"):
            load_dataset(p, hs2_scale)

    def test_missing_field(self, tmp_path, hs2_scale):
        p = tmp_path / "d.jsonl"
        p.write_text(json.dumps({"group_id": "g", "type": "pointwise"}) + "\n")
        with pytest.raises(DatasetError, match="instances"):
            load_dataset(p, hs2_scale)

    def test_pairwise_and_listwise_round_trip(self, tmp_path, pair_scale, list_scale):
        from conftest import listwise

        for scale, inst in ((pair_scale, pairwise()), (list_scale, listwise())):
            ds = Dataset((JudgmentGroup("g", (inst,), None),), scale)
            p = tmp_path / f"{inst.type.value}.jsonl"
            write_dataset(ds, p)
            assert load_dataset(p, scale) == ds

    @given(
        scores=st.lists(st.tuples(*[st.integers(0, 4)] * 5), min_size=1, max_size=6),
        text=st.text(max_size=40),
        labels=st.lists(st.sampled_from([HUMAN, LLM, None]), min_size=1, max_size=6),
    )
    def test_round_trip_property(self, tmp_path_factory, scores, text, labels):
        scale = ScaleSpec(tuple(DimensionScale(d, 0, 4) for d in HS2_DIMS))
        groups = tuple(
            JudgmentGroup(f"g{i}", (pointwise(f"c{i}", s, text=text or " "),), labels[i % len(labels)])
            for i, s in enumerate(scores)
        )
        ds = Dataset(groups, scale)
        p = tmp_path_factory.mktemp("rt") / "d.jsonl"
        write_dataset(ds, p)
        assert load_dataset(p, scale) == ds


class TestRegroup:
    def test_eight_into_two(self):
        res = regroup(labeled(8, HUMAN), 4, seed=1)
        assert [g.k for g in res.groups] == [4, 4]
        assert res.dropped == {HUMAN: 0}

    def test_remainder_dropped(self):
        res = regroup(labeled(9, HUMAN), 4, seed=1)
        assert len(res.groups) == 2
        assert res.dropped == {HUMAN: 1}

    def test_deterministic(self):
        items = labeled(20, HUMAN) + labeled(20, LLM, "y")
        assert regroup(items, 4, seed=5) == regroup(items, 4, seed=5)

    @pytest.mark.parametrize("k", [0, -1])
    def test_bad_k(self, k):
        with pytest.raises(DatasetError):
            regroup(labeled(4, HUMAN), k, 0)

    def test_too_few(self):
        with pytest.raises(DatasetError):
            regroup(labeled(3, HUMAN), 4, 0)

    def test_label_pure(self):
        res = regroup(labeled(10, HUMAN) + labeled(10, LLM, "y"), 3, 0)
        for g in res.groups:
            prefix = {i.candidate.id[0] for i in g.instances}
            assert prefix == ({"x"} if g.label == HUMAN else {"y"})

    @given(n_h=st.integers(1, 40), n_l=st.integers(1, 40), k=st.integers(1, 8), seed=st.integers(0, 2**31))
    def test_flatten_recovers_kept_instances(self, n_h, n_l, k, seed):
        if min(n_h, n_l) < k:
            return
        items = labeled(n_h, HUMAN) + labeled(n_l, LLM, "y")
        res = regroup(items, k, seed)
        back = flatten(res.groups)
        ids = [li.instance.candidate.id for li in back]
        assert len(ids) == len(set(ids))
        assert len(ids) == n_h + n_l - sum(res.dropped.values())
        assert set(ids) <= {li.instance.candidate.id for li in items}

    def test_nested_across_k(self):
        items = labeled(32, HUMAN)
        g4 = regroup(items, 4, 3).groups
        g8 = regroup(items, 8, 3).groups
        for j, big in enumerate(g8):
            assert big.instances == g4[2 * j].instances + g4[2 * j + 1].instances


def _pair_dataset(scores):
    groups = tuple(JudgmentGroup(f"g{i}", (pairwise(f"p{i}", s),), HUMAN) for i, s in enumerate(scores))
    return Dataset(groups, ScaleSpec(pair_levels_x=3))


class TestCoarsen:
    def test_pairwise_merge(self):
        out = coarsen_scale(_pair_dataset([-2, 0, 3]), COARSE)
        assert [g.instances[0].score.pair for g in out.groups] == [-1, 0, 1]
        assert out.scale.pair_levels_x == 1

    def test_identity(self, hs2_scale):
        ds = Dataset((JudgmentGroup("g", (pointwise(),), HUMAN),), hs2_scale)
        assert coarsen_scale(ds, {v: v for v in range(5)}) == ds

    def test_missing_level(self, hs2_scale):
        ds = Dataset((JudgmentGroup("g", (pointwise(),), HUMAN),), hs2_scale)
        with pytest.raises(DatasetError, match="2"):
            coarsen_scale(ds, {0: 0, 1: 1, 3: 3, 4: 4})

    def test_image_not_grid(self):
        with pytest.raises(DatasetError):
            coarsen_scale(_pair_dataset([0]), {-3: -3, -2: -3, -1: 0, 0: 0, 1: 0, 2: 2, 3: 3})

    def test_listwise_ranking_recomputed(self, list_scale):
        from conftest import listwise

        ds = Dataset((JudgmentGroup("g", (listwise(items=(4.0, 3.0, 1.0)),), HUMAN),), list_scale)
        out = coarsen_scale(ds, {0: 0, 1: 0, 2: 1, 3: 1, 4: 1})
        s = out.groups[0].instances[0].score
        assert s.items == (1, 1, 0) and s.ranking == (0, 1, 2)

    @given(st.lists(st.integers(-3, 3), min_size=1, max_size=20))
    def test_idempotent(self, scores):
        once = coarsen_scale(_pair_dataset(scores), COARSE)
        twice = coarsen_scale(once, {-1: -1, 0: 0, 1: 1})
        assert twice == once


class TestProject:
    def _ds(self, hs2_scale):
        return Dataset((JudgmentGroup("g", (pointwise(),), HUMAN),), hs2_scale)

    def test_single_dimension(self, hs2_scale):
        out = project_dimensions(self._ds(hs2_scale), ["Coherence"])
        assert out.dimension_names == ("Coherence",)
        assert out.groups[0].instances[0].score.dims == {"Coherence": 4}

    def test_full_set_unchanged(self, hs2_scale):
        ds = self._ds(hs2_scale)
        assert project_dimensions(ds, list(HS2_DIMS)) == ds

    def test_unknown(self, hs2_scale):
        with pytest.raises(DatasetError):
            project_dimensions(self._ds(hs2_scale), ["Nonexistent"])

    def test_empty(self, hs2_scale):
        with pytest.raises(DatasetError):
            project_dimensions(self._ds(hs2_scale), [])

    @given(st.sets(st.sampled_from(HS2_DIMS), min_size=1), st.data())
    def test_composition(self, a, data):
        scale = ScaleSpec(tuple(DimensionScale(d, 0, 4) for d in HS2_DIMS))
        ds = Dataset((JudgmentGroup("g", (pointwise(),), HUMAN),), scale)
        b = data.draw(st.sets(st.sampled_from(sorted(a)), min_size=1))
        assert project_dimensions(project_dimensions(ds, sorted(a)), sorted(b)) == project_dimensions(ds, sorted(b))


class TestSplit:
    def _ds(self, n_h, n_l, scale):
        groups = [JudgmentGroup(f"h{i}", (pointwise(f"h{i}"),), HUMAN) for i in range(n_h)]
        groups += [JudgmentGroup(f"l{i}", (pointwise(f"l{i}"),), LLM) for i in range(n_l)]
        return Dataset(tuple(groups), scale)

    def test_stratified(self, hs2_scale):
        train, test = split_dataset(self._ds(5, 5, hs2_scale), 0.2, seed=0)
        assert sorted(g.label for g in test.groups) == [HUMAN, LLM]
        assert len(train) == 8

    def test_deterministic(self, hs2_scale):
        ds = self._ds(7, 9, hs2_scale)
        assert split_dataset(ds, 0.3, 4) == split_dataset(ds, 0.3, 4)

    def test_single_group(self, hs2_scale):
        with pytest.raises(DatasetError):
            split_dataset(self._ds(1, 0, hs2_scale), 0.5, 0)

    @pytest.mark.parametrize("frac", [0.0, 1.0, -0.1])
    def test_bad_fraction(self, hs2_scale, frac):
        with pytest.raises(DatasetError):
            split_dataset(self._ds(3, 3, hs2_scale), frac, 0)

    @given(n_h=st.integers(2, 30), n_l=st.integers(2, 30), frac=st.floats(0.05, 0.95), seed=st.integers(0, 100))
    def test_partition_and_proportions(self, n_h, n_l, frac, seed):
        scale = ScaleSpec(tuple(DimensionScale(d, 0, 4) for d in HS2_DIMS))
        ds = self._ds(n_h, n_l, scale)
        train, test = split_dataset(ds, frac, seed)
        ids_train = {g.group_id for g in train.groups}
        ids_test = {g.group_id for g in test.groups}
        assert not ids_train & ids_test
        assert len(ids_train) + len(ids_test) == n_h + n_l
        for lab, n in ((HUMAN, n_h), (LLM, n_l)):
            n_test = sum(g.label == lab for g in test.groups)
            assert 1 <= n_test <= n - 1
            assert abs(n_test - n * frac) <= 1
