"""Sensor-run ingestion and featurization.

A run is a time-ordered multi-channel recording from one cut: triaxial
acceleration, two microphones, temperature, plus the operator-set spindle
speed. Runs are cut into 7 equal windows, transition windows around the first
worn observation are dropped, and each window is reduced to a 7-value feature
row: channel variances, the temperature time-integral, and the spindle speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import Rng, substream

#: Column order of a feature row; also the featurized-CSV header (plus label).
FEATURE_NAMES = ("ax_var", "ay_var", "az_var", "s1_var", "s2_var",
                 "theta_auc", "rpm")

#: Windows kept from a run flagged as the first worn incident at its speed.
KEPT_TRANSITION_WINDOWS = 2

#: Windows per run.
WINDOW_COUNT = 7


@dataclass
class SensorRun:
    """One recorded cut with per-sample channels and a binary wear label."""

    run_id: str
    spindle_speed: float
    t: np.ndarray
    ax: np.ndarray
    ay: np.ndarray
    az: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    theta: np.ndarray
    label: int
    first_worn_incident: bool = False

    def __post_init__(self):
        for name in ("t", "ax", "ay", "az", "s1", "s2", "theta"):
            setattr(self, name,
                    np.asarray(getattr(self, name), dtype=np.float64))
        n = self.t.shape[0]
        if n == 0:
            raise ValueError(f"run {self.run_id}: no samples")
        for name in ("ax", "ay", "az", "s1", "s2", "theta"):
            if getattr(self, name).shape[0] != n:
                raise ValueError(
                    f"run {self.run_id}: channel {name} length mismatch")
        if n > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError(
                f"run {self.run_id}: timestamps must be strictly increasing")
        if not self.spindle_speed > 0:
            raise ValueError(f"run {self.run_id}: spindle_speed must be > 0")
        if self.label not in (0, 1):
            raise ValueError(f"run {self.run_id}: label must be 0 or 1")

    @property
    def n_samples(self) -> int:
        return int(self.t.shape[0])

    def slice(self, start: int, stop: int) -> "SensorRun":
        """Contiguous sample range as a new run with the same metadata."""
        return SensorRun(
            run_id=self.run_id, spindle_speed=self.spindle_speed,
            t=self.t[start:stop], ax=self.ax[start:stop],
            ay=self.ay[start:stop], az=self.az[start:stop],
            s1=self.s1[start:stop], s2=self.s2[start:stop],
            theta=self.theta[start:stop], label=self.label,
            first_worn_incident=self.first_worn_incident)


@dataclass(frozen=True)
class FeatureVector:
    """Feature row for one window: five channel variances, the temperature
    area under the curve (degC*s), and the spindle speed (rpm)."""

    ax_var: float
    ay_var: float
    az_var: float
    s1_var: float
    s2_var: float
    theta_auc: float
    rpm: float

    def __post_init__(self):
        for name in ("ax_var", "ay_var", "az_var", "s1_var", "s2_var"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not math.isfinite(self.theta_auc):
            raise ValueError("theta_auc must be finite")
        if not self.rpm > 0:
            raise ValueError("rpm must be > 0")

    def as_array(self) -> np.ndarray:
        return np.array([self.ax_var, self.ay_var, self.az_var, self.s1_var,
                         self.s2_var, self.theta_auc, self.rpm],
                        dtype=np.float64)


class LabeledDataset:
    """Feature matrix plus binary labels and ordered feature names."""

    def __init__(self, feature_names, X, y):
        self.feature_names = list(feature_names)
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        self.y = np.ascontiguousarray(y, dtype=np.int64)
        if self.X.ndim != 2:
            raise ValueError("X must be 2-D")
        if len(self.feature_names) != self.X.shape[1]:
            raise ValueError("feature_names length must equal column count")
        if self.X.shape[1] < 1:
            raise ValueError("need at least one feature")
        if self.y.shape[0] != self.X.shape[0]:
            raise ValueError("label count must equal row count")
        bad = set(np.unique(self.y)) - {0, 1}
        if bad:
            raise ValueError(f"labels must be 0 or 1, got {sorted(bad)}")

    @property
    def M(self) -> int:
        return self.X.shape[1]

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def __len__(self) -> int:
        return self.n

    def subset(self, indices) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.feature_names, self.X[idx], self.y[idx])

    def class_counts(self) -> tuple[int, int]:
        c = np.bincount(self.y, minlength=2)
        return int(c[0]), int(c[1])

    @classmethod
    def from_rows(cls, rows, feature_names=FEATURE_NAMES) -> "LabeledDataset":
        """Build from (FeatureVector, label) pairs."""
        if rows:
            X = np.stack([fv.as_array() for fv, _ in rows])
            y = np.array([lab for _, lab in rows], dtype=np.int64)
        else:
            X = np.empty((0, len(feature_names)))
            y = np.empty(0, dtype=np.int64)
        return cls(feature_names, X, y)

    def rows(self):
        for i in range(self.n):
            yield self.X[i], int(self.y[i])


@dataclass
class SplitDataset:
    """Disjoint train/test partition of a dataset, with the row indices that
    produced it so the exact split can be persisted and replayed."""

    train: LabeledDataset
    test: LabeledDataset
    seed: int
    train_indices: list[int]
    test_indices: list[int]


def window(run: SensorRun, k: int) -> list[SensorRun]:
    """Cut a run into k contiguous equal-length segments.

    Segment length is floor(n/k); the trailing n mod k samples are dropped so
    every window holds the same number of points.
    """
    if k < 1:
        raise ValueError("window count must be >= 1")
    n = run.n_samples
    if n < k:
        raise ValueError(
            f"run {run.run_id}: {n} samples cannot fill {k} windows "
            f"(short by {k - n})")
    length = n // k
    return [run.slice(i * length, (i + 1) * length) for i in range(k)]


def drop_transition_windows(segments, run: SensorRun) -> list[SensorRun]:
    """Keep only the last two windows of a first-worn-incident run.

    Early windows of the cut where wear was first observed may still reflect
    the unworn-to-worn transition; all other runs pass through unchanged.
    """
    if run.first_worn_incident:
        return list(segments[-KEPT_TRANSITION_WINDOWS:])
    return list(segments)


def population_variance(values) -> float:
    """Mean squared deviation (divide by N, not N-1)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("variance of an empty sequence")
    mean = arr.mean()
    return float(np.mean((arr - mean) ** 2))


def area_under_curve(timestamps, values) -> float:
    """Trapezoidal integral of values over timestamps."""
    t = np.asarray(timestamps, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if t.shape != v.shape:
        raise ValueError("timestamps and values must have equal length")
    if t.size < 2:
        raise ValueError("need at least 2 samples to integrate")
    dt = np.diff(t)
    if not np.all(dt > 0):
        raise ValueError("timestamps must be strictly increasing")
    return float(np.sum(0.5 * (v[1:] + v[:-1]) * dt))


def featurize(segment: SensorRun) -> FeatureVector:
    """Reduce one window to its feature row."""
    return FeatureVector(
        ax_var=population_variance(segment.ax),
        ay_var=population_variance(segment.ay),
        az_var=population_variance(segment.az),
        s1_var=population_variance(segment.s1),
        s2_var=population_variance(segment.s2),
        theta_auc=area_under_curve(segment.t, segment.theta),
        rpm=segment.spindle_speed)


def assemble_dataset(runs, k: int = WINDOW_COUNT) -> LabeledDataset:
    """Window, transition-drop, and featurize a corpus of runs."""
    rows = []
    for run in runs:
        for segment in drop_transition_windows(window(run, k), run):
            rows.append((featurize(segment), run.label))
    return LabeledDataset.from_rows(rows)


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def split(dataset: LabeledDataset, train_fraction: float,
          seed: int) -> SplitDataset:
    """Deterministic stratified train/test split.

    The train side gets round(train_fraction * N) rows; per-class counts are
    allocated by largest remainder so each lands within one row of its
    stratified target. The same (dataset, fraction, seed) always yields the
    same membership.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    n = dataset.n
    if n < 2:
        raise ValueError("need at least 2 rows to split")
    c0, c1 = dataset.class_counts()
    if c0 == 0 or c1 == 0:
        raise ValueError("cannot stratify a single-class dataset")

    n_train = min(max(_round_half_up(train_fraction * n), 1), n - 1)
    per_class_idx = [np.nonzero(dataset.y == c)[0].tolist() for c in (0, 1)]
    targets = [train_fraction * len(idx) for idx in per_class_idx]
    take = [math.floor(t) for t in targets]
    leftover = n_train - sum(take)
    # distribute the remainder by descending fractional part, class 0 first;
    # spill to whichever class still has capacity
    order = sorted((0, 1), key=lambda c: (-(targets[c] - take[c]), c))
    for c in order:
        if leftover > 0 and take[c] < len(per_class_idx[c]):
            take[c] += 1
            leftover -= 1
    for c in order:
        while leftover > 0 and take[c] < len(per_class_idx[c]):
            take[c] += 1
            leftover -= 1

    train_idx: list[int] = []
    for c in (0, 1):
        pool = per_class_idx[c]
        Rng(substream(seed, c)).shuffle(pool)
        train_idx.extend(pool[:take[c]])
    train_set = set(train_idx)
    train_idx = sorted(train_idx)
    test_idx = [i for i in range(n) if i not in train_set]
    return SplitDataset(train=dataset.subset(train_idx),
                        test=dataset.subset(test_idx),
                        seed=seed,
                        train_indices=train_idx,
                        test_indices=test_idx)
