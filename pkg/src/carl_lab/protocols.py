"""Train/test evaluation protocols over two context features.

The train hull is the rectangle ``train_range_x x train_range_y``. Inside it
the train region is

* mode ``A``: the whole rectangle,
* mode ``B``: an L-shape, i.e. the full x-range over a narrow y-band plus a
  narrow x-band over the full y-range (bands start at the pivots),
* mode ``C``: two segments, x varying with y fixed at its pivot and vice versa.

Test points are labelled ``interpolation`` (in the train region),
``combinatorial_interpolation`` (in the hull but outside the train region) or
``extrapolation_x/_y/_both`` (outside the hull along one or both factors).
All intervals are closed, so boundary points fall to the inner region.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .context import ContextSet, ContextSpace, validate_context
from .errors import RegionEmpty

Z_95 = 1.959964


class Mode(str, enum.Enum):
    A = "A"
    B = "B"
    C = "C"


class RegionLabel(str, enum.Enum):
    TRAIN = "train"
    INTERPOLATION = "interpolation"
    COMBINATORIAL_INTERPOLATION = "combinatorial_interpolation"
    EXTRAPOLATION_X = "extrapolation_x"
    EXTRAPOLATION_Y = "extrapolation_y"
    EXTRAPOLATION_BOTH = "extrapolation_both"


Range = tuple[float, float]


@dataclass(frozen=True)
class ProtocolSpec:
    space: ContextSpace
    feature_x: int
    feature_y: int
    mode: Mode
    train_range_x: Range
    train_range_y: Range
    pivot_x: float | None = None
    pivot_y: float | None = None
    band_fraction: float = 0.1
    test_range_x: Range | None = None
    test_range_y: Range | None = None
    n_train: int = 100
    n_test_per_region: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.feature_x == self.feature_y:
            raise ValueError("protocol needs two distinct features")
        fx = self.space.features[self.feature_x]
        fy = self.space.features[self.feature_y]
        for f, (lo, hi) in ((fx, self.train_range_x), (fy, self.train_range_y)):
            if not lo <= hi:
                raise ValueError(f"reversed train range for {f.name!r}")
            if lo < f.lower_bound or hi > f.upper_bound:
                raise ValueError(f"train range ({lo}, {hi}) leaves the bounds of {f.name!r}")
        if self.mode is Mode.B:
            px, py = self.pivots
            (xlo, xhi), (ylo, yhi) = self.train_range_x, self.train_range_y
            wx, wy = self.band_widths
            if not (xlo <= px and px + wx <= xhi and ylo <= py and py + wy <= yhi):
                raise ValueError("mode B bands must lie inside the train ranges")
        if self.mode is Mode.C:
            px, py = self.pivots
            (xlo, xhi), (ylo, yhi) = self.train_range_x, self.train_range_y
            if not (xlo <= px <= xhi and ylo <= py <= yhi):
                raise ValueError("mode C pivots must lie inside the train ranges")
        if self.test_range_x is None:
            object.__setattr__(self, "test_range_x", _widen(self.train_range_x, fx))
        if self.test_range_y is None:
            object.__setattr__(self, "test_range_y", _widen(self.train_range_y, fy))
        for rng_, train in ((self.test_range_x, self.train_range_x), (self.test_range_y, self.train_range_y)):
            if rng_[0] > train[0] or rng_[1] < train[1]:
                raise ValueError("test ranges must contain the train ranges")

    @classmethod
    def around_defaults(
        cls,
        space: ContextSpace,
        x: str,
        y: str,
        mode: Mode | str,
        rel_width: float = 0.5,
        **kwargs,
    ) -> "ProtocolSpec":
        """Train ranges of +-``rel_width`` x default around each default."""
        ix, iy = space.index(x), space.index(y)
        ranges = []
        for i in (ix, iy):
            f = space.features[i]
            half = rel_width * abs(f.default)
            ranges.append((max(f.default - half, f.lower_bound), min(f.default + half, f.upper_bound)))
        return cls(space, ix, iy, Mode(mode), ranges[0], ranges[1], **kwargs)

    @property
    def pivots(self) -> tuple[float, float]:
        if self.mode is Mode.B:
            px = self.train_range_x[0] if self.pivot_x is None else self.pivot_x
            py = self.train_range_y[0] if self.pivot_y is None else self.pivot_y
        else:
            px = self.space.features[self.feature_x].default if self.pivot_x is None else self.pivot_x
            py = self.space.features[self.feature_y].default if self.pivot_y is None else self.pivot_y
        return float(px), float(py)

    @property
    def band_widths(self) -> tuple[float, float]:
        (xlo, xhi), (ylo, yhi) = self.train_range_x, self.train_range_y
        return self.band_fraction * (xhi - xlo), self.band_fraction * (yhi - ylo)

    def regions(self) -> list[RegionLabel]:
        labels = [RegionLabel.INTERPOLATION]
        if self.mode is not Mode.A:
            labels.append(RegionLabel.COMBINATORIAL_INTERPOLATION)
        labels += [
            RegionLabel.EXTRAPOLATION_X,
            RegionLabel.EXTRAPOLATION_Y,
            RegionLabel.EXTRAPOLATION_BOTH,
        ]
        return labels


def _widen(train: Range, feature) -> Range:
    lo, hi = train
    pad = 0.5 * (hi - lo)
    return (max(lo - pad, feature.lower_bound), min(hi + pad, feature.upper_bound))


def _in(v: float, r: Range) -> bool:
    return r[0] <= v <= r[1]


def in_train_region(spec: ProtocolSpec, x: float, y: float) -> bool:
    rx, ry = spec.train_range_x, spec.train_range_y
    if not (_in(x, rx) and _in(y, ry)):
        return False
    if spec.mode is Mode.A:
        return True
    px, py = spec.pivots
    if spec.mode is Mode.B:
        wx, wy = spec.band_widths
        return _in(x, (px, px + wx)) or _in(y, (py, py + wy))
    return x == px or y == py


def classify_region(
    spec: ProtocolSpec, point: tuple[float, float], train_points=None
) -> RegionLabel:
    """Label a (x, y) point; exact members of ``train_points`` are ``train``."""
    x, y = float(point[0]), float(point[1])
    if train_points is not None and (x, y) in _point_set(train_points):
        return RegionLabel.TRAIN
    inside_x = _in(x, spec.train_range_x)
    inside_y = _in(y, spec.train_range_y)
    if inside_x and inside_y:
        if in_train_region(spec, x, y):
            return RegionLabel.INTERPOLATION
        return RegionLabel.COMBINATORIAL_INTERPOLATION
    if inside_y:
        return RegionLabel.EXTRAPOLATION_X
    if inside_x:
        return RegionLabel.EXTRAPOLATION_Y
    return RegionLabel.EXTRAPOLATION_BOTH


def _point_set(points) -> set:
    if isinstance(points, set):
        return points
    return {(float(p[0]), float(p[1])) for p in points}


def _uniform_box(rng, rx: Range, ry: Range) -> tuple[float, float]:
    return float(rng.uniform(rx[0], rx[1])), float(rng.uniform(ry[0], ry[1]))


def _segments(spec: ProtocolSpec) -> list[tuple[Range, Range]]:
    px, py = spec.pivots
    return [(spec.train_range_x, (py, py)), ((px, px), spec.train_range_y)]


def _sample_segments(rng, spec: ProtocolSpec) -> tuple[float, float]:
    segs = _segments(spec)
    lengths = np.array([(rx[1] - rx[0]) + (ry[1] - ry[0]) for rx, ry in segs])
    if lengths.sum() <= 0:
        raise RegionEmpty("mode C train segments have zero length")
    k = rng.choice(2, p=lengths / lengths.sum())
    return _uniform_box(rng, *segs[k])


def _region_measure(spec: ProtocolSpec, label: RegionLabel) -> float:
    (xlo, xhi), (ylo, yhi) = spec.train_range_x, spec.train_range_y
    (Xlo, Xhi), (Ylo, Yhi) = spec.test_range_x, spec.test_range_y
    w, h = xhi - xlo, yhi - ylo
    ex, ey = (Xhi - Xlo) - w, (Yhi - Ylo) - h
    if label is RegionLabel.INTERPOLATION:
        return w + h if spec.mode is Mode.C else w * h
    if label is RegionLabel.COMBINATORIAL_INTERPOLATION:
        if spec.mode is Mode.A:
            return 0.0
        if spec.mode is Mode.B:
            wx, wy = spec.band_widths
            return (w - wx) * (h - wy)
        return w * h
    if label is RegionLabel.EXTRAPOLATION_X:
        return ex * h
    if label is RegionLabel.EXTRAPOLATION_Y:
        return ey * w
    return ex * ey


def _sample_region(rng, spec: ProtocolSpec, label: RegionLabel, max_tries: int = 100_000):
    if _region_measure(spec, label) <= 0:
        raise RegionEmpty(f"region {label.value} is empty for mode {spec.mode.value}")
    if label is RegionLabel.INTERPOLATION and spec.mode is Mode.C:
        return _sample_segments(rng, spec)
    if label in (RegionLabel.INTERPOLATION, RegionLabel.COMBINATORIAL_INTERPOLATION):
        box = (spec.train_range_x, spec.train_range_y)
    else:
        box = (spec.test_range_x, spec.test_range_y)
    for _ in range(max_tries):
        p = _uniform_box(rng, *box)
        if classify_region(spec, p) is label:
            return p
    raise RegionEmpty(f"could not hit region {label.value} by rejection")


def _contexts(spec: ProtocolSpec, points) -> ContextSet:
    base = spec.space.defaults
    rows = []
    for i, (x, y) in enumerate(points):
        row = base.copy()
        row[spec.feature_x] = x
        row[spec.feature_y] = y
        rows.append(validate_context(spec.space, row, id=i))
    return ContextSet(spec.space, tuple(rows))


def sample_train_points(spec: ProtocolSpec, rng: np.random.Generator) -> list[tuple[float, float]]:
    points = []
    for _ in range(spec.n_train):
        if spec.mode is Mode.C:
            points.append(_sample_segments(rng, spec))
        else:
            points.append(_sample_region(rng, spec, RegionLabel.INTERPOLATION))
    return points


def generate_protocol(
    spec: ProtocolSpec,
) -> tuple[ContextSet, dict[RegionLabel, ContextSet]]:
    """Train set plus one test set per region, none sharing a point with train."""
    rng = np.random.default_rng(spec.seed)
    train_points = sample_train_points(spec, rng)
    taken = _point_set(train_points)
    tests: dict[RegionLabel, ContextSet] = {}
    for label in spec.regions():
        points = []
        while len(points) < spec.n_test_per_region:
            p = _sample_region(rng, spec, label)
            if p in taken:
                continue
            points.append(p)
        tests[label] = _contexts(spec, points)
    return _contexts(spec, train_points), tests


def in_distribution_95(g: float, mu: float, sigma: float) -> bool:
    """True iff ``g`` lies in the central 95% interval of N(mu, sigma)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return abs(g - mu) <= Z_95 * sigma


# surface gravities in m/s^2
PLANET_GRAVITY = {
    "Pluto": 0.62,
    "Moon": 1.62,
    "Mars": 3.7,
    "Earth": 9.81,
    "Neptune": 11.15,
    "Jupiter": 24.79,
}

LANDING_MU = 3.7
LANDING_SIGMA = 1.45
# two-interval training distribution for the lander gravity (negative y-axis)
LANDING_INTERVALS = ((-20.0, -15.0), (-5.0, -0.001))


def landing_in_space_table(mu: float = LANDING_MU, sigma: float = LANDING_SIGMA) -> dict[str, bool]:
    return {name: in_distribution_95(g, mu, sigma) for name, g in PLANET_GRAVITY.items()}

