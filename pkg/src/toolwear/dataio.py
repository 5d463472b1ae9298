"""CSV file formats: raw runs, run manifests, featurized datasets, splits.

Floats are serialized with repr(), which round-trips float64 exactly, so a
write/read cycle reproduces values bit for bit and repeated runs with the
same seeds produce byte-identical files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .signalprep import FEATURE_NAMES, LabeledDataset, SensorRun

RUN_HEADER = ["t", "ax", "ay", "az", "s1", "s2", "theta"]
MANIFEST_HEADER = ["run_id", "file", "rpm", "label", "first_worn_incident"]
DATASET_HEADER = list(FEATURE_NAMES) + ["label"]
SPLIT_HEADER = ["index", "set"]


@dataclass(frozen=True)
class ManifestEntry:
    run_id: str
    file: str
    rpm: float
    label: int
    first_worn_incident: bool


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_run_csv(run: SensorRun, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(RUN_HEADER)
        for i in range(run.n_samples):
            w.writerow([repr(float(run.t[i])), repr(float(run.ax[i])),
                        repr(float(run.ay[i])), repr(float(run.az[i])),
                        repr(float(run.s1[i])), repr(float(run.s2[i])),
                        repr(float(run.theta[i]))])


def read_run_csv(path, *, run_id: str, spindle_speed: float, label: int,
                 first_worn_incident: bool) -> SensorRun:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RUN_HEADER:
            raise ValueError(f"{path}: expected header {','.join(RUN_HEADER)}")
        cols = [[] for _ in RUN_HEADER]
        for row in reader:
            if not row:
                continue
            if len(row) != len(RUN_HEADER):
                raise ValueError(f"{path}: malformed row {row!r}")
            for c, cell in enumerate(row):
                cols[c].append(float(cell))
    return SensorRun(run_id=run_id, spindle_speed=spindle_speed,
                     t=np.array(cols[0]), ax=np.array(cols[1]),
                     ay=np.array(cols[2]), az=np.array(cols[3]),
                     s1=np.array(cols[4]), s2=np.array(cols[5]),
                     theta=np.array(cols[6]), label=label,
                     first_worn_incident=first_worn_incident)


def write_manifest(entries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(MANIFEST_HEADER)
        for e in entries:
            w.writerow([e.run_id, e.file, repr(float(e.rpm)), e.label,
                        "true" if e.first_worn_incident else "false"])


def read_manifest(path) -> list[ManifestEntry]:
    entries = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != MANIFEST_HEADER:
            raise ValueError(
                f"{path}: expected header {','.join(MANIFEST_HEADER)}")
        for row in reader:
            if not row:
                continue
            if len(row) != len(MANIFEST_HEADER):
                raise ValueError(f"{path}: malformed row {row!r}")
            run_id, file, rpm, label, flag = row
            if label not in ("0", "1"):
                raise ValueError(f"{path}: label must be 0 or 1, got {label!r}")
            if flag not in ("true", "false"):
                raise ValueError(
                    f"{path}: first_worn_incident must be true/false, "
                    f"got {flag!r}")
            entries.append(ManifestEntry(run_id=run_id, file=file,
                                         rpm=float(rpm), label=int(label),
                                         first_worn_incident=flag == "true"))
    return entries


def load_runs(manifest_path) -> list[SensorRun]:
    """Read a manifest and every run file it references (paths are relative
    to the manifest's directory)."""
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    runs = []
    for e in read_manifest(manifest_path):
        runs.append(read_run_csv(base / e.file, run_id=e.run_id,
                                 spindle_speed=e.rpm, label=e.label,
                                 first_worn_incident=e.first_worn_incident))
    return runs


def write_dataset_csv(dataset: LabeledDataset, path) -> None:
    if list(dataset.feature_names) != list(FEATURE_NAMES):
        raise ValueError("dataset CSV format is fixed to the standard "
                         f"feature columns {','.join(FEATURE_NAMES)}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(DATASET_HEADER)
        for x, label in dataset.rows():
            w.writerow([repr(float(v)) for v in x] + [label])


def read_dataset_csv(path) -> LabeledDataset:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != DATASET_HEADER:
            raise ValueError(
                f"{path}: expected header {','.join(DATASET_HEADER)}")
        X, y = [], []
        for row in reader:
            if not row:
                continue
            if len(row) != len(DATASET_HEADER):
                raise ValueError(f"{path}: malformed row {row!r}")
            X.append([float(v) for v in row[:-1]])
            y.append(int(row[-1]))
    if not X:
        raise ValueError(f"{path}: dataset has no rows")
    return LabeledDataset(FEATURE_NAMES, np.array(X), np.array(y))


def write_split_csv(train_indices, test_indices, path) -> None:
    labels = {}
    for i in train_indices:
        labels[int(i)] = "train"
    for i in test_indices:
        labels[int(i)] = "test"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(SPLIT_HEADER)
        for i in sorted(labels):
            w.writerow([i, labels[i]])


def read_split_csv(path) -> tuple[list[int], list[int]]:
    train, test = [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SPLIT_HEADER:
            raise ValueError(f"{path}: expected header {','.join(SPLIT_HEADER)}")
        for row in reader:
            if not row:
                continue
            idx, which = row
            if which == "train":
                train.append(int(idx))
            elif which == "test":
                test.append(int(idx))
            else:
                raise ValueError(f"{path}: set must be train/test, got {which!r}")
    return train, test
