"""Contexts, context spaces and the observation emission used by every environment.

A context is one assignment of physical parameters (gravity, pole length, ...)
that selects a single MDP out of a contextual MDP. Feature order inside a
:class:`ContextSpace` is fixed and defines the layout of context vectors.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import IndexOutOfRange, LengthMismatch, OutOfBounds, ParseError


class FeatureKind(str, enum.Enum):
    CONTINUOUS = "continuous"
    INTEGER = "integer"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class ContextFeatureDef:
    name: str
    default: float
    lower_bound: float = -math.inf
    upper_bound: float = math.inf
    kind: FeatureKind = FeatureKind.CONTINUOUS
    choices: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not (self.lower_bound <= self.default <= self.upper_bound):
            raise ValueError(
                f"default {self.default} of {self.name!r} outside "
                f"[{self.lower_bound}, {self.upper_bound}]"
            )
        if self.kind is FeatureKind.CATEGORICAL:
            if not self.choices:
                raise ValueError(f"categorical feature {self.name!r} needs choices")
            if self.default not in self.choices:
                raise ValueError(f"default of {self.name!r} not among its choices")

    def contains(self, value: float) -> bool:
        if not math.isfinite(value):
            return False
        if self.kind is FeatureKind.CATEGORICAL:
            return value in self.choices
        return self.lower_bound <= value <= self.upper_bound

    def clip(self, value: float) -> float:
        value = min(max(value, self.lower_bound), self.upper_bound)
        if self.kind is FeatureKind.INTEGER:
            value = float(round(value))
            value = min(max(value, math.ceil(self.lower_bound)), math.floor(self.upper_bound))
        return float(value)


@dataclass(frozen=True)
class ContextSpace:
    name: str
    features: tuple[ContextFeatureDef, ...]

    def __post_init__(self) -> None:
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate feature names in space {self.name!r}")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    @property
    def defaults(self) -> np.ndarray:
        return np.array([f.default for f in self.features], dtype=np.float64)

    def index(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise KeyError(f"space {self.name!r} has no feature {name!r}")

    def indices(self, names: Iterable[str]) -> tuple[int, ...]:
        return tuple(sorted(self.index(n) for n in names))

    def default_context(self, id: int = 0) -> "Context":
        return Context(self, tuple(float(v) for v in self.defaults), id)

    def describe(self) -> str:
        rows = [f"{'feature':<20}{'default':>12}  {'bounds':<24}kind"]
        for f in self.features:
            bounds = f"({f.lower_bound:g}, {f.upper_bound:g})"
            rows.append(f"{f.name:<20}{f.default:>12g}  {bounds:<24}{f.kind.value}")
        return "\n".join(rows)


@dataclass(frozen=True)
class Context:
    space: ContextSpace = field(repr=False)
    values: tuple[float, ...]
    id: int = 0

    def __getitem__(self, name: str) -> float:
        return self.values[self.space.index(name)]

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.values, dtype=np.float64)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.space.names, self.values))

    def replace(self, **changes: float) -> "Context":
        values = list(self.values)
        for name, value in changes.items():
            values[self.space.index(name)] = float(value)
        return validate_context(self.space, values, id=self.id)


def validate_context(space: ContextSpace, values: Sequence[float], id: int = 0) -> Context:
    """Check ``values`` against ``space`` and wrap them into a :class:`Context`.

    Nothing is clamped here: a value outside its bounds raises
    :class:`OutOfBounds`. Samplers clip before calling this.
    """
    if len(values) != len(space):
        raise LengthMismatch(
            f"space {space.name!r} has {len(space)} features, got {len(values)} values"
        )
    out = []
    for feature, value in zip(space.features, values):
        value = float(value)
        if not feature.contains(value):
            raise OutOfBounds(feature.name, value, feature.lower_bound, feature.upper_bound)
        out.append(value)
    return Context(space, tuple(out), int(id))


class Schedule(str, enum.Enum):
    ROUND_ROBIN = "round_robin"


@dataclass(frozen=True)
class ContextSet:
    space: ContextSpace
    contexts: tuple[Context, ...]
    schedule: Schedule = Schedule.ROUND_ROBIN

    def __post_init__(self) -> None:
        if not self.contexts:
            raise ValueError("a context set needs at least one context")
        for i, c in enumerate(self.contexts):
            if c.space is not self.space and c.space != self.space:
                raise ValueError("all contexts must share the set's space")
            if c.id != i:
                raise ValueError(f"context ids must be 0..N-1 in order, got {c.id} at {i}")

    @classmethod
    def from_rows(cls, space: ContextSpace, rows: Iterable[Sequence[float]]) -> "ContextSet":
        return cls(space, tuple(validate_context(space, r, id=i) for i, r in enumerate(rows)))

    def __len__(self) -> int:
        return len(self.contexts)

    def __iter__(self):
        return iter(self.contexts)

    def __getitem__(self, i: int) -> Context:
        return self.contexts[i]

    def matrix(self) -> np.ndarray:
        return np.array([c.values for c in self.contexts], dtype=np.float64)

    def next_context(self, episode_index: int) -> Context:
        return next_context(self, episode_index)


def next_context(context_set: ContextSet, episode_index: int) -> Context:
    """Round-robin: episode ``k`` is played in context ``k mod N``."""
    if episode_index < 0:
        raise ValueError("episode index must be non-negative")
    return context_set.contexts[episode_index % len(context_set.contexts)]


class VisibilityMode(str, enum.Enum):
    HIDDEN = "hidden"
    CONCAT_ALL = "concat_all"
    CONCAT_CHANGING = "concat_changing"
    CGATE = "cgate"


@dataclass(frozen=True)
class Observation:
    state_part: np.ndarray
    context_part: np.ndarray

    def concatenated(self) -> np.ndarray:
        # context goes after the state
        return np.concatenate([self.state_part, self.context_part])


def context_part(
    context: Context, mode: VisibilityMode | str, varying: Sequence[int] = ()
) -> np.ndarray:
    mode = VisibilityMode(mode)
    n = len(context.values)
    for i in varying:
        if not 0 <= i < n:
            raise IndexOutOfRange(f"varying index {i} outside 0..{n - 1}")
    if mode is VisibilityMode.HIDDEN:
        return np.empty(0, dtype=np.float64)
    vec = context.vector
    if mode is VisibilityMode.CONCAT_ALL:
        return vec
    return vec[sorted(set(varying))]


def emit_observation(
    state: Sequence[float],
    context: Context,
    mode: VisibilityMode | str,
    varying: Sequence[int] = (),
) -> Observation:
    """Split what the agent sees into a state part and a context part.

    ``hidden`` exposes no context, ``concat_all`` the full context vector and
    ``concat_changing``/``cgate`` only the features listed in ``varying``
    (in feature order). An empty ``varying`` set gives an empty context part.
    """
    ctx = context_part(context, mode, varying)
    return Observation(np.asarray(state, dtype=np.float64).copy(), ctx)


def write_context_csv(
    target: str | Path | io.TextIOBase,
    contexts: Iterable[Context],
    space: ContextSpace,
    extra: Mapping[str, Sequence[object]] | None = None,
) -> None:
    """Serialize contexts as ``id,<feature...>[,extra...]`` rows.

    Floats are written with ``repr`` so a read-back is bit-exact.
    """
    contexts = list(contexts)
    extra = dict(extra or {})
    for key, column in extra.items():
        if len(column) != len(contexts):
            raise LengthMismatch(f"extra column {key!r} has wrong length")
    own = isinstance(target, (str, Path))
    fh = open(target, "w", newline="", encoding="utf-8") if own else target
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", *space.names, *extra])
        for i, c in enumerate(contexts):
            writer.writerow(
                [c.id, *(repr(float(v)) for v in c.values), *(extra[k][i] for k in extra)]
            )
    finally:
        if own:
            fh.close()


def read_context_csv(
    source: str | Path | io.TextIOBase, space: ContextSpace
) -> tuple[list[Context], dict[str, list[str]]]:
    """Inverse of :func:`write_context_csv`; returns contexts plus any extra columns."""
    own = isinstance(source, (str, Path))
    fh = open(source, newline="", encoding="utf-8") if own else source
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0] != "id":
            raise ParseError("context file must start with an 'id' header", 1)
        names = header[1 : 1 + len(space)]
        if names != space.names:
            raise ParseError(f"expected features {space.names}, got {names}", 1)
        extra_names = header[1 + len(space) :]
        contexts: list[Context] = []
        extra: dict[str, list[str]] = {k: [] for k in extra_names}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
            try:
                values = [float(v) for v in row[1 : 1 + len(space)]]
                cid = int(row[0])
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            contexts.append(validate_context(space, values, id=cid))
            for k, v in zip(extra_names, row[1 + len(space) :]):
                extra[k].append(v)
        return contexts, extra
    finally:
        if own:
            fh.close()
