"""Random-forest binary classifier: bagged CART trees with majority vote.

Training is a pure function of (data, hyperparameters, seed): each tree uses
the RNG substream (seed, tree_index), so the result is independent of
scheduling and identical across kernel backends. The continuous output is the
class-1 vote fraction, which downstream code uses both as the ROC score and
as the quantity that gets attributed to features.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .signalprep import LabeledDataset

FORMAT_HEADER = "toolwear-forest 1"


@dataclass(frozen=True)
class Hyperparams:
    """Forest knobs. features_per_split=None means floor(sqrt(M)), min 1.

    bootstrap=False trains every tree on the full sample (useful for
    deterministic single-tree checks); the default resamples N rows with
    replacement per tree.
    """

    tree_count: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 1
    features_per_split: int | None = None
    bootstrap: bool = True

    def validate(self) -> None:
        if self.tree_count < 1:
            raise ValueError("tree_count must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1 or None")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValueError("features_per_split must be >= 1 or None")

    def resolve_features_per_split(self, m: int) -> int:
        if self.features_per_split is None:
            return max(1, math.isqrt(m))
        return min(self.features_per_split, m)


@dataclass(frozen=True)
class Prediction:
    label: int
    vote_fraction_class1: float


@dataclass
class Forest:
    """Trained ensemble stored as flat preorder node arrays.

    feature[i] == -1 marks a leaf; child indices point into the same arrays.
    count0/count1 are the training-sample label counts that reached the node;
    a leaf votes its majority class (tie -> class 0).
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    count0: np.ndarray
    count1: np.ndarray
    roots: np.ndarray
    m: int
    feature_names: list[str]
    hyperparams: Hyperparams
    seed: int
    _vote: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._vote = (self.count1 > self.count0).astype(np.int8)

    @property
    def tree_count(self) -> int:
        return int(self.roots.shape[0])

    def kernel_arrays(self):
        """Argument tuple for the kernel traversal functions."""
        return (self.feature, self.threshold, self.left, self.right,
                self._vote, self.roots)

    # --- prediction -------------------------------------------------------

    def _check_width(self, m: int) -> None:
        if m != self.m:
            raise ValueError(
                f"feature count mismatch: model expects {self.m}, got {m}")

    def vote_counts(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("expected a 2-D feature matrix")
        self._check_width(X.shape[1])
        return kernels.predict_votes(*self.kernel_arrays(), X)

    def vote_fractions(self, X: np.ndarray) -> np.ndarray:
        """Class-1 vote fraction per row; the model's continuous score."""
        return self.vote_counts(X) / float(self.tree_count)

    def vote_fraction(self, x: np.ndarray) -> float:
        return float(self.vote_fractions(np.atleast_2d(x))[0])

    # --- persistence ------------------------------------------------------

    def dumps(self) -> str:
        lines = [FORMAT_HEADER,
                 f"m {self.m}",
                 "feature_names " + " ".join(self.feature_names),
                 f"tree_count {self.tree_count}",
                 "max_depth " + _fmt_opt(self.hyperparams.max_depth),
                 f"min_samples_leaf {self.hyperparams.min_samples_leaf}",
                 "features_per_split "
                 + _fmt_opt(self.hyperparams.features_per_split, none="auto"),
                 f"bootstrap {'true' if self.hyperparams.bootstrap else 'false'}",
                 f"seed {self.seed}"]
        for t, root in enumerate(self.roots):
            lines.append(f"tree {t}")
            self._write_node(lines, int(root), 1)
        lines.append("end")
        return "\n".join(lines) + "\n"

    def _write_node(self, lines: list[str], node: int, depth: int) -> None:
        pad = " " * depth
        c0, c1 = int(self.count0[node]), int(self.count1[node])
        if self.feature[node] < 0:
            lines.append(f"{pad}leaf {c0} {c1}")
            return
        lines.append(f"{pad}split {int(self.feature[node])} "
                     f"{float(self.threshold[node])!r} {c0} {c1}")
        self._write_node(lines, int(self.left[node]), depth + 1)
        self._write_node(lines, int(self.right[node]), depth + 1)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "Forest":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != FORMAT_HEADER:
            raise ValueError(f"not a model file (expected '{FORMAT_HEADER}')")
        header: dict[str, str] = {}
        pos = 1
        while pos < len(lines) and not lines[pos].lstrip().startswith("tree "):
            key, _, value = lines[pos].strip().partition(" ")
            header[key] = value
            pos += 1
        m = int(header["m"])
        names = header["feature_names"].split()
        hp = Hyperparams(
            tree_count=int(header["tree_count"]),
            max_depth=_parse_opt(header["max_depth"]),
            min_samples_leaf=int(header["min_samples_leaf"]),
            features_per_split=_parse_opt(header["features_per_split"],
                                          none="auto"),
            bootstrap=header["bootstrap"] == "true",
        )
        nodes: list[tuple] = []
        roots = []

        def parse_subtree() -> int:
            nonlocal pos
            nid = len(nodes)
            parts = lines[pos].split()
            pos += 1
            if parts[0] == "leaf":
                nodes.append((-1, 0.0, -1, -1, int(parts[1]), int(parts[2])))
                return nid
            if parts[0] != "split":
                raise ValueError(f"bad node record: {lines[pos - 1]!r}")
            nodes.append(None)  # placeholder, patched below
            f, thr = int(parts[1]), float(parts[2])
            c0, c1 = int(parts[3]), int(parts[4])
            left_id = parse_subtree()
            right_id = parse_subtree()
            nodes[nid] = (f, thr, left_id, right_id, c0, c1)
            return nid

        for _ in range(hp.tree_count):
            if not lines[pos].lstrip().startswith("tree "):
                raise ValueError(f"expected a tree record, got {lines[pos]!r}")
            pos += 1
            roots.append(parse_subtree())
        if lines[pos].strip() != "end":
            raise ValueError("missing end marker")
        return cls.from_node_records(nodes, roots, m, names, hp,
                                     int(header["seed"]))

    @classmethod
    def load(cls, path) -> "Forest":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.loads(fh.read())

    @classmethod
    def from_node_records(cls, nodes, roots, m, feature_names, hyperparams,
                          seed) -> "Forest":
        return cls(
            feature=np.array([n[0] for n in nodes], dtype=np.int32),
            threshold=np.array([n[1] for n in nodes], dtype=np.float64),
            left=np.array([n[2] for n in nodes], dtype=np.int32),
            right=np.array([n[3] for n in nodes], dtype=np.int32),
            count0=np.array([n[4] for n in nodes], dtype=np.int64),
            count1=np.array([n[5] for n in nodes], dtype=np.int64),
            roots=np.array(roots, dtype=np.int32),
            m=m, feature_names=list(feature_names),
            hyperparams=hyperparams, seed=seed)

    @classmethod
    def from_trees(cls, trees, m, feature_names=None,
                   hyperparams: Hyperparams | None = None,
                   seed: int = 0) -> "Forest":
        """Build a forest from nested tuples, mainly for tests and tooling.

        A tree is ("leaf", count0, count1) or
        ("split", feature, threshold, left_tree, right_tree).
        """
        nodes: list[tuple] = []

        def emit(t) -> int:
            nid = len(nodes)
            if t[0] == "leaf":
                c0, c1 = int(t[1]), int(t[2])
                if c0 == 0 and c1 == 0:
                    raise ValueError("leaf with both counts zero")
                nodes.append((-1, 0.0, -1, -1, c0, c1))
                return nid
            if t[0] != "split":
                raise ValueError(f"unknown node kind {t[0]!r}")
            f = int(t[1])
            if not 0 <= f < m:
                raise ValueError(f"feature index {f} out of range for m={m}")
            nodes.append(None)
            left_id = emit(t[3])
            right_id = emit(t[4])
            c0 = nodes[left_id][4] + nodes[right_id][4]
            c1 = nodes[left_id][5] + nodes[right_id][5]
            nodes[nid] = (f, float(t[2]), left_id, right_id, c0, c1)
            return nid

        roots = [emit(t) for t in trees]
        names = list(feature_names) if feature_names else [
            f"f{i}" for i in range(m)]
        hp = hyperparams or Hyperparams(tree_count=len(roots))
        hp = replace(hp, tree_count=len(roots))
        return cls.from_node_records(nodes, roots, m, names, hp, seed)

    def structurally_equal(self, other: "Forest") -> bool:
        return (np.array_equal(self.feature, other.feature)
                and np.array_equal(self.threshold.view(np.int64),
                                   other.threshold.view(np.int64))
                and np.array_equal(self.left, other.left)
                and np.array_equal(self.right, other.right)
                and np.array_equal(self.count0, other.count0)
                and np.array_equal(self.count1, other.count1)
                and np.array_equal(self.roots, other.roots))


def _fmt_opt(value, none: str = "none") -> str:
    return none if value is None else str(value)


def _parse_opt(text: str, none: str = "none"):
    return None if text == none else int(text)


def train(train_set: LabeledDataset, hyperparams: Hyperparams | None = None,
          seed: int = 0) -> Forest:
    """Train a forest on a labeled dataset.

    Every tree sees a bootstrap resample (unless disabled) and greedy
    Gini-impurity splits over a random feature subset per node. Raises if the
    training set does not contain both classes.
    """
    hp = hyperparams or Hyperparams()
    hp.validate()
    X, y = train_set.X, train_set.y
    if X.shape[0] == 0:
        raise ValueError("training set is empty")
    counts = np.bincount(y, minlength=2)
    if counts[0] == 0 or counts[1] == 0:
        raise ValueError(
            f"training set must contain both classes (got {counts[0]} unworn,"
            f" {counts[1]} worn)")
    k = hp.resolve_features_per_split(train_set.M)
    max_depth = -1 if hp.max_depth is None else hp.max_depth
    arrays = kernels.build_forest(
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.int64),
        hp.tree_count, max_depth, hp.min_samples_leaf, k, hp.bootstrap,
        seed & ((1 << 64) - 1))
    feature, threshold, left, right, count0, count1, roots = arrays
    return Forest(feature=feature, threshold=threshold, left=left,
                  right=right, count0=count0, count1=count1, roots=roots,
                  m=train_set.M, feature_names=list(train_set.feature_names),
                  hyperparams=hp, seed=seed)


def predict(model: Forest, x: np.ndarray) -> Prediction:
    """Route one instance through every tree and aggregate the votes.

    label is 1 only when the class-1 vote fraction strictly exceeds 1/2;
    a tied vote goes to class 0 (unworn).
    """
    x = np.ascontiguousarray(x, dtype=np.float64).reshape(-1)
    model._check_width(x.shape[0])
    votes1 = int(model.vote_counts(x[None, :])[0])
    t = model.tree_count
    return Prediction(label=int(2 * votes1 > t),
                      vote_fraction_class1=votes1 / t)


def predict_batch(model: Forest, rows: np.ndarray) -> list[Prediction]:
    """Elementwise predict, order preserved."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.size == 0:
        return []
    rows = np.atleast_2d(rows)
    votes = model.vote_counts(rows)
    t = model.tree_count
    return [Prediction(label=int(2 * int(v) > t),
                       vote_fraction_class1=int(v) / t) for v in votes]
