"""Context-set generators.

Every varying feature draws from its own random stream seeded by
``(seed, feature_index)``. Two samplers that share a seed therefore agree on
the values of every feature they both vary, which is what makes the
compounding-variation sets nest.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .context import ContextSet, ContextSpace, validate_context
from .errors import ZeroDefault


def _feature_stream(seed: int, feature: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(feature)])


@dataclass(frozen=True)
class GaussianContextSampler:
    """Varying features ~ N(default, sigma_rel * |default|), clipped to bounds."""

    space: ContextSpace
    varying: tuple[int, ...]
    sigma_rel: float
    n: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sigma_rel <= 0:
            raise ValueError("sigma_rel must be positive")
        if self.n < 1:
            raise ValueError("need at least one context")
        object.__setattr__(self, "varying", tuple(sorted(set(self.varying))))
        for i in self.varying:
            if not 0 <= i < len(self.space):
                raise IndexError(f"feature index {i} out of range")

    @classmethod
    def by_name(cls, space, names: Sequence[str], sigma_rel, n=100, seed=0):
        return cls(space, space.indices(names), sigma_rel, n, seed)

    def sample(self) -> ContextSet:
        return sample_gaussian(self)


def sample_gaussian(sampler: GaussianContextSampler) -> ContextSet:
    space = sampler.space
    values = np.tile(space.defaults, (sampler.n, 1))
    for i in sampler.varying:
        feature = space.features[i]
        if feature.default == 0:
            raise ZeroDefault(feature.name)
        sigma = sampler.sigma_rel * abs(feature.default)
        draws = _feature_stream(sampler.seed, i).normal(feature.default, sigma, size=sampler.n)
        values[:, i] = [feature.clip(v) for v in draws]
    return ContextSet.from_rows(space, values)


def compounding_sets(
    space: ContextSpace,
    order: Sequence[str],
    sigma_rel: float,
    n: int = 100,
    seed: int = 0,
) -> list[ContextSet]:
    """Set ``k`` varies the first ``k`` features of ``order`` jointly (k = 0..len(order))."""
    sets = [ContextSet.from_rows(space, [space.defaults] * n)]
    for k in range(1, len(order) + 1):
        sampler = GaussianContextSampler(space, space.indices(order[:k]), sigma_rel, n, seed)
        sets.append(sample_gaussian(sampler))
    return sets


@dataclass(frozen=True)
class IntervalContextSampler:
    """One feature drawn uniformly from a weighted mixture of intervals."""

    space: ContextSpace
    feature: int
    intervals: tuple[tuple[float, float], ...]
    weights: tuple[float, ...] | None = None
    n: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        f = self.space.features[self.feature]
        if not self.intervals:
            raise ValueError("need at least one interval")
        for lo, hi in self.intervals:
            if not lo <= hi:
                raise ValueError(f"interval ({lo}, {hi}) is reversed")
            if lo < f.lower_bound or hi > f.upper_bound:
                raise ValueError(f"interval ({lo}, {hi}) leaves the bounds of {f.name!r}")
        if self.weights is None:
            # proportional to length, i.e. uniform over the union
            lengths = np.array([hi - lo for lo, hi in self.intervals], dtype=float)
            w = lengths / lengths.sum() if lengths.sum() > 0 else np.full(len(lengths), 1 / len(lengths))
            object.__setattr__(self, "weights", tuple(float(x) for x in w))
        if len(self.weights) != len(self.intervals):
            raise ValueError("one weight per interval")
        if abs(sum(self.weights) - 1.0) > 1e-9 or min(self.weights) < 0:
            raise ValueError("interval weights must be a probability vector")

    def draw(self) -> tuple[np.ndarray, np.ndarray]:
        """Sampled values and the interval index each came from."""
        rng = _feature_stream(self.seed, self.feature)
        which = rng.choice(len(self.intervals), size=self.n, p=np.asarray(self.weights))
        lo = np.array([self.intervals[k][0] for k in which])
        hi = np.array([self.intervals[k][1] for k in which])
        return lo + (hi - lo) * rng.random(self.n), which

    def sample(self) -> ContextSet:
        return sample_intervals(self)


def sample_intervals(sampler: IntervalContextSampler) -> ContextSet:
    space = sampler.space
    draws, _ = sampler.draw()
    values = np.tile(space.defaults, (sampler.n, 1))
    values[:, sampler.feature] = [space.features[sampler.feature].clip(v) for v in draws]
    return ContextSet.from_rows(space, values)


def fixed_set(space: ContextSpace, rows: Sequence[Sequence[float]]) -> ContextSet:
    return ContextSet(space, tuple(validate_context(space, r, id=i) for i, r in enumerate(rows)))
