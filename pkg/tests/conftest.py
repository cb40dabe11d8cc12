import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

from judgekit.data import (  # noqa: E402
    Candidate,
    DimensionScale,
    JudgmentInstance,
    JudgmentType,
    ListwiseScore,
    PairwiseScore,
    PointwiseScore,
    ScaleSpec,
    canonical_ranking,
)

HS2_DIMS = ("Helpfulness", "Correctness", "Coherence", "Complexity", "Verbosity")


@pytest.fixture
def hs2_scale():
    return ScaleSpec(tuple(DimensionScale(d, 0, 4) for d in HS2_DIMS))


@pytest.fixture
def pair_scale():
    return ScaleSpec(pair_levels_x=3)


@pytest.fixture
def list_scale():
    return ScaleSpec((DimensionScale("score", 0, 4),), listwise_items=3)


def pointwise(cid="c0", scores=(3, 4, 4, 2, 1), text="Hello world. How are you?", prompt="Say hi."):
    return JudgmentInstance(
        Candidate(cid, (text,), prompt), PointwiseScore(dict(zip(HS2_DIMS, scores))), JudgmentType.POINTWISE
    )


def pairwise(cid="p0", score=-2, r1="First answer here.", r2="Second, longer answer is here.", prompt="Compare."):
    return JudgmentInstance(Candidate(cid, (r1, r2), prompt), PairwiseScore(score), JudgmentType.PAIRWISE)


def listwise(cid="l0", items=(4.0, 2.0, 1.0), texts=("One.", "Two two.", "Three three three."), prompt="Rank."):
    return JudgmentInstance(
        Candidate(cid, tuple(texts), prompt),
        ListwiseScore(tuple(items), canonical_ranking(items)),
        JudgmentType.LISTWISE,
    )
