"""Detectability analysis: effective scale and budget, TV distance, Det index and beta fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .data import JudgmentType

STIRLING_THRESHOLD = 20


class TheoryError(ValueError):
    """Raised for arguments outside the domain of a closed-form quantity."""


@dataclass(frozen=True)
class JudgmentSpecTheory:
    type: JudgmentType
    L: int | None = None
    x: int | None = None
    k_items: int | None = None
    use_stirling: bool = True

    def __post_init__(self):
        t = JudgmentType(self.type)
        object.__setattr__(self, "type", t)
        populated = {"L": self.L is not None, "x": self.x is not None, "k_items": self.k_items is not None}
        wanted = {JudgmentType.POINTWISE: "L", JudgmentType.PAIRWISE: "x", JudgmentType.LISTWISE: "k_items"}[t]
        if [k for k, v in populated.items() if v] != [wanted]:
            raise TheoryError(f"{t.value} spec must set exactly {wanted}")
        if t is JudgmentType.POINTWISE and self.L < 2:
            raise TheoryError("L must be >= 2")
        if t is JudgmentType.PAIRWISE and self.x < 1:
            raise TheoryError("x must be >= 1")
        if t is JudgmentType.LISTWISE and self.k_items < 2:
            raise TheoryError("k_items must be >= 2")

    @classmethod
    def pointwise(cls, L: int) -> "JudgmentSpecTheory":
        return cls(JudgmentType.POINTWISE, L=L)

    @classmethod
    def pairwise(cls, x: int) -> "JudgmentSpecTheory":
        return cls(JudgmentType.PAIRWISE, x=x)

    @classmethod
    def listwise(cls, k_items: int, use_stirling: bool = True) -> "JudgmentSpecTheory":
        return cls(JudgmentType.LISTWISE, k_items=k_items, use_stirling=use_stirling)

    @property
    def grid(self) -> list[int]:
        """Outcome grid of one pointwise or pairwise score."""
        if self.type is JudgmentType.POINTWISE:
            return list(range(self.L))
        if self.type is JudgmentType.PAIRWISE:
            return list(range(-self.x, self.x + 1))
        raise TheoryError("listwise specs have no scalar score grid")


@dataclass(frozen=True)
class EffectiveScale:
    S: float
    log_S: float


def effective_scale(spec: JudgmentSpecTheory) -> EffectiveScale:
    """Outcome count of one judgment and its natural log.

    For listwise specs above 20 items with ``use_stirling``, ``S`` is
    ``exp(k ln k - k)`` (``inf`` if it overflows) and ``log_S`` is the
    Stirling value itself.
    """
    if spec.type is JudgmentType.POINTWISE:
        return EffectiveScale(float(spec.L), math.log(spec.L))
    if spec.type is JudgmentType.PAIRWISE:
        s = 2 * spec.x + 1
        return EffectiveScale(float(s), math.log(s))
    k = spec.k_items
    if k <= STIRLING_THRESHOLD or not spec.use_stirling:
        fact = math.factorial(k)
        return EffectiveScale(float(fact), math.log(fact))
    log_s = k * math.log(k) - k
    return EffectiveScale(math.exp(log_s) if log_s < 709 else math.inf, log_s)


def effective_budget(m: int, d: int, S: float | None = None, *, log_S: float | None = None) -> float:
    """n_eff = m * d * ln S (pass ``log_S`` directly for Stirling-mode scales)."""
    if m < 1 or d < 1:
        raise TheoryError("m and d must be >= 1")
    if (S is None) == (log_S is None):
        raise TheoryError("give exactly one of S or log_S")
    if log_S is None:
        if S < 2:
            raise TheoryError("S must be >= 2")
        log_S = math.log(S)
    elif log_S < math.log(2):
        raise TheoryError("log_S must be >= ln 2")
    return m * d * log_S


def effective_budget_mixed(parts: Iterable[tuple[int, int, float]]) -> float:
    """Budget of a mixed-type group: the sum of m*d*ln S over (m, d, S) parts."""
    parts = list(parts)
    if not parts:
        raise TheoryError("need at least one part")
    return sum(effective_budget(m, d, S) for m, d, S in parts)


def _as_pmf(p: Sequence[float] | Mapping, name: str) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise TheoryError(f"{name} must be a non-empty 1-D distribution")
    if (arr < 0).any() or abs(arr.sum() - 1.0) > 1e-9:
        raise TheoryError(f"{name} is not a probability distribution (sum {arr.sum():.12g})")
    return arr


def tv_distance(P, Q) -> float:
    """Total variation distance between two pmfs on the same support.

    Sequences are compared index by index; mappings by key.
    """
    if isinstance(P, Mapping) or isinstance(Q, Mapping):
        if not (isinstance(P, Mapping) and isinstance(Q, Mapping)) or set(P) != set(Q):
            raise TheoryError("distributions have different supports")
        keys = sorted(P)
        P, Q = [P[k] for k in keys], [Q[k] for k in keys]
    p, q = _as_pmf(P, "P"), _as_pmf(Q, "Q")
    if p.shape != q.shape:
        raise TheoryError("distributions have different supports")
    return float(min(1.0, 0.5 * np.abs(p - q).sum()))


@dataclass(frozen=True)
class TvEstimate:
    per_dimension: tuple[float, ...]

    @property
    def delta(self) -> float:
        return float(np.mean(self.per_dimension))


def _histogram(samples: np.ndarray, grid: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(grid, samples)
    idx_clipped = np.minimum(idx, len(grid) - 1)
    if (grid[idx_clipped] != samples).any():
        bad = samples[grid[idx_clipped] != samples][0]
        raise TheoryError(f"score {bad!r} is not on the grid")
    return np.bincount(idx_clipped, minlength=len(grid)) / len(samples)


def estimate_tv(
    human_samples,
    llm_samples,
    spec: JudgmentSpecTheory | None = None,
    bins: int | None = None,
    value_range: tuple[float, float] | None = None,
) -> TvEstimate:
    """Empirical TV between the two sides' score histograms, per dimension.

    Samples are arrays of shape (n,) or (n, d). On-grid scores are counted
    per grid level of ``spec``; continuous scores are discretized into
    ``bins`` equal-width bins over ``value_range`` (default: pooled min/max).
    """
    h = np.asarray(human_samples, dtype=np.float64)
    m = np.asarray(llm_samples, dtype=np.float64)
    if h.size == 0 or m.size == 0:
        raise TheoryError("each side needs at least one sample")
    if h.ndim == 1:
        h = h[:, None]
    if m.ndim == 1:
        m = m[:, None]
    if h.shape[1] != m.shape[1]:
        raise TheoryError("human and LLM samples have different dimension counts")
    per_dim = []
    for j in range(h.shape[1]):
        a, b = h[:, j], m[:, j]
        if bins is not None:
            lo, hi = value_range if value_range is not None else (min(a.min(), b.min()), max(a.max(), b.max()))
            edges = np.linspace(lo, hi, bins + 1)
            pa = np.histogram(a, edges)[0] / len(a)
            pb = np.histogram(b, edges)[0] / len(b)
        else:
            if spec is None:
                raise TheoryError("need a spec (grid) or a bin count")
            grid = np.asarray(spec.grid, dtype=np.float64)
            pa, pb = _histogram(a, grid), _histogram(b, grid)
        per_dim.append(float(0.5 * np.abs(pa - pb).sum()))
    return TvEstimate(tuple(per_dim))


def detectability_index(beta: float, m: int, d: int, S: float | None = None, delta: float = 0.0, *, log_S: float | None = None) -> float:
    """Det = 1 - exp(-beta * m * d * ln S * delta^2)."""
    if not beta > 0:
        raise TheoryError("beta must be > 0")
    if not 0.0 <= delta <= 1.0:
        raise TheoryError("delta must lie in [0, 1]")
    n_eff = effective_budget(m, d, S, log_S=log_S)
    return -math.expm1(-beta * n_eff * delta * delta)


@dataclass(frozen=True)
class DetectabilityEstimate:
    m: int
    d: int
    S: float
    delta: float
    beta: float

    @property
    def det(self) -> float:
        return detectability_index(self.beta, self.m, self.d, self.S, self.delta)


@dataclass(frozen=True)
class SweepPoint:
    m: int
    d: int
    S: float
    delta: float
    observed_det: float


def fit_beta(points: Sequence[SweepPoint | tuple]) -> float:
    """Least squares through the origin of -ln(1 - det) on m*d*ln(S)*delta^2.

    Points with det outside (0, 1) or delta = 0 carry no information and are skipped.
    """
    xs, ys = [], []
    for pt in points:
        m, d, S, delta, det = pt if isinstance(pt, tuple) else (pt.m, pt.d, pt.S, pt.delta, pt.observed_det)
        if delta <= 0 or not 0.0 < det < 1.0:
            continue
        xs.append(effective_budget(m, d, S) * delta * delta)
        ys.append(-math.log1p(-det))
    if not xs:
        raise TheoryError("no usable points: need det in (0, 1) and delta > 0")
    x = np.array(xs)
    y = np.array(ys)
    return float((x @ y) / (x @ x))


# --------------------------------------------------------------------------
# Closed-form pmfs used by the synthetic generator


def binomial_pmf(levels: int, p: float = 0.5) -> np.ndarray:
    n = levels - 1
    return np.array([math.comb(n, i) * p**i * (1 - p) ** (n - i) for i in range(levels)])


def max_transfer(base: np.ndarray) -> float:
    """Mass available below the midpoint of the grid."""
    return float(base[: len(base) // 2].sum())


def shifted_pmf(base: Sequence[float], delta: float) -> np.ndarray:
    """Move ``delta`` mass from the lowest levels to the top level.

    Mass is taken greedily from level 0 upward, within the lower half of the
    grid, and all of it lands on the highest level, so the TV distance to
    ``base`` is exactly ``delta``.
    """
    base = np.asarray(base, dtype=np.float64)
    cap = max_transfer(base)
    if not 0.0 <= delta <= cap + 1e-12:
        raise TheoryError(f"delta={delta} is not realizable on this grid (max {cap:.6g})")
    out = base.copy()
    remaining = delta
    for i in range(len(base) // 2):
        take = min(out[i], remaining)
        out[i] -= take
        remaining -= take
        if remaining <= 0:
            break
    out[-1] += delta
    return out
