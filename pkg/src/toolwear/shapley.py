"""Exact Shapley attributions for forest predictions via full coalition
enumeration.

A coalition is a bitmask over the M features; the attributed quantity is the
model's class-1 vote fraction. Two value-function backends realize "the model
without a feature":

* interventional — one trained model; features outside the coalition are
  filled from every background row in turn and the predictions averaged
  (full enumeration, no sampling);
* retraining — one model per feature subset, trained on the column-restricted
  data; the empty subset is the training-set class-1 prevalence.

With M features the enumeration needs exactly 2**M value evaluations per
instance; coalition weights come from exact integer factorials, so the
additivity identity (base value plus attributions equals the explained
output) holds to float round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from . import kernels
from .forest import Forest, Hyperparams, train
from .rng import substream
from .signalprep import LabeledDataset

#: 2**M value-function evaluations per explanation; 16 features is already
#: 65536 coalitions (and 65536 trained forests on the retraining backend).
MAX_FEATURES = 16


def shapley_weight_exact(m: int, s: int) -> Fraction:
    """Coalition weight s!(m-1-s)!/m! as an exact rational."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0 <= s <= m - 1:
        raise ValueError(f"coalition size {s} out of range for m={m}")
    return Fraction(math.factorial(s) * math.factorial(m - 1 - s),
                    math.factorial(m))


def shapley_weight(m: int, s: int) -> float:
    return float(shapley_weight_exact(m, s))


@dataclass
class ShapleyExplanation:
    """Additive attribution of one prediction.

    base_value + sum(phi) equals explained_output (the class-1 vote fraction
    for target_class=1, its complement for target_class=0) to within 1e-9;
    the constructor enforces it.
    """

    base_value: float
    phi: np.ndarray
    explained_output: float
    target_class: int = 1
    backend: str = "custom"

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=np.float64)
        residual = self.base_value + float(self.phi.sum()) \
            - self.explained_output
        if abs(residual) > 1e-9:
            raise ValueError(
                f"additivity violated: base + sum(phi) differs from the "
                f"explained output by {residual:.3e}")

    @property
    def M(self) -> int:
        return int(self.phi.shape[0])


@dataclass(frozen=True)
class GlobalImportance:
    """Mean |phi| per feature over a set of explanations. The magnitude is
    identical for both class views (the class-0 attribution is the negation),
    so one array serves both."""

    feature_names: list[str]
    mean_abs_phi: np.ndarray
    ranking: list[int]  # feature indices, most important first


class InterventionalValue:
    """Background-marginalized value function over a single trained model."""

    backend = "interventional"

    def __init__(self, model: Forest, background):
        bg = background.X if isinstance(background, LabeledDataset) \
            else np.asarray(background, dtype=np.float64)
        bg = np.ascontiguousarray(np.atleast_2d(bg), dtype=np.float64)
        if bg.shape[0] == 0:
            raise ValueError("background set is empty")
        if bg.shape[1] != model.m:
            raise ValueError(
                f"background width {bg.shape[1]} != model features {model.m}")
        self.model = model
        self.background = bg
        self.M = model.m

    def _values(self, x: np.ndarray, masks: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.M:
            raise ValueError(
                f"instance width {x.shape[0]} != model features {self.M}")
        return kernels.coalition_values(
            *self.model.kernel_arrays(), x, self.background,
            np.ascontiguousarray(masks, dtype=np.int64))

    def value(self, mask: int, x) -> float:
        return float(self._values(x, np.array([mask]))[0])

    def values_all(self, x) -> np.ndarray:
        return self._values(x, np.arange(1 << self.M, dtype=np.int64))


@dataclass
class SubsetModels:
    """One forest per non-empty feature mask plus the empty-coalition
    constant (training-set class-1 prevalence)."""

    models: dict[int, Forest]
    empty_value: float
    M: int
    feature_names: list[str]
    seed: int

    def model_for(self, mask: int) -> Forest:
        try:
            return self.models[mask]
        except KeyError:
            raise KeyError(f"no model trained for coalition mask {mask:#x}") \
                from None


class RetrainingValue:
    """Value function backed by a table of per-subset retrained models."""

    backend = "retraining"

    def __init__(self, table: SubsetModels):
        self.table = table
        self.M = table.M

    def value(self, mask: int, x) -> float:
        if mask == 0:
            return self.table.empty_value
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        cols = [i for i in range(self.M) if mask >> i & 1]
        return self.table.model_for(mask).vote_fraction(x[cols])

    def values_all(self, x) -> np.ndarray:
        return np.array([self.value(mask, x)
                         for mask in range(1 << self.M)])


class CallableValue:
    """Adapter turning any f(mask, x) -> float into a value function; handy
    for explaining arbitrary set functions and for oracle tests."""

    backend = "custom"

    def __init__(self, fn, m: int):
        self.fn = fn
        self.M = m

    def value(self, mask: int, x) -> float:
        return float(self.fn(mask, x))


def value_interventional(model: Forest, x, mask: int, background) -> float:
    """Expected class-1 vote fraction with coalition features pinned to x and
    the rest marginalized over the background rows."""
    return InterventionalValue(model, background).value(mask, x)


def value_retraining(table: SubsetModels, x, mask: int) -> float:
    """Class-1 vote fraction of the subset model on x's coalition columns."""
    return RetrainingValue(table).value(mask, x)


def train_subset_models(train_set: LabeledDataset,
                        hyperparams: Hyperparams | None = None,
                        seed: int = 0) -> SubsetModels:
    """Train one forest per non-empty feature subset.

    Model training cost is 2**M forests, so M is capped at MAX_FEATURES.
    Each subset model gets the substream seed (seed, mask), making the whole
    table reproducible and order-independent. features_per_split (or its
    auto sqrt rule) is resolved against each subset's own width.
    """
    m = train_set.M
    if m > MAX_FEATURES:
        raise ValueError(
            f"{m} features would need {1 << m} trained models; "
            f"the retraining backend is capped at {MAX_FEATURES}")
    hp = hyperparams or Hyperparams()
    c0, c1 = train_set.class_counts()
    if c0 == 0 or c1 == 0:
        raise ValueError("training set must contain both classes")
    models: dict[int, Forest] = {}
    for mask in range(1, 1 << m):
        cols = [i for i in range(m) if mask >> i & 1]
        sub = LabeledDataset([train_set.feature_names[i] for i in cols],
                             train_set.X[:, cols], train_set.y)
        models[mask] = train(sub, hp, seed=substream(seed, mask))
    return SubsetModels(models=models, empty_value=c1 / train_set.n,
                        M=m, feature_names=list(train_set.feature_names),
                        seed=seed)


def explain(value_fn, x, m: int | None = None) -> ShapleyExplanation:
    """Exact Shapley attribution of value_fn at x over all 2**M coalitions.

    Every coalition value is computed exactly once (values_all when the
    backend offers a batch path, otherwise one value() call per mask) and
    combined with exact factorial weights:

        phi_i = sum over S not containing i of
                weight(M, |S|) * (v(S + {i}, x) - v(S, x))
    """
    m = int(value_fn.M if m is None else m)
    if m < 1:
        raise ValueError("need at least one feature")
    if m > MAX_FEATURES:
        raise ValueError(f"explanation capped at {MAX_FEATURES} features")
    if hasattr(value_fn, "values_all"):
        values = np.asarray(value_fn.values_all(x), dtype=np.float64)
        if values.shape[0] != 1 << m:
            raise ValueError("values_all must return one value per mask")
    else:
        values = np.array([value_fn.value(mask, x)
                           for mask in range(1 << m)], dtype=np.float64)
    weights = [shapley_weight(m, s) for s in range(m)]
    phi = np.zeros(m)
    for i in range(m):
        bit = 1 << i
        acc = 0.0
        for mask in range(1 << m):
            if mask & bit:
                continue
            acc += weights[mask.bit_count()] * (values[mask | bit]
                                                - values[mask])
        phi[i] = acc
    full = (1 << m) - 1
    return ShapleyExplanation(base_value=float(values[0]), phi=phi,
                              explained_output=float(values[full]),
                              target_class=1,
                              backend=getattr(value_fn, "backend", "custom"))


def explain_class(expl: ShapleyExplanation, target_class: int
                  ) -> ShapleyExplanation:
    """Re-express an explanation for the requested class.

    The class-0 vote fraction is one minus the class-1 fraction, so the
    class-0 view negates every attribution and complements the base value;
    applying the mapping twice returns the original.
    """
    if target_class not in (0, 1):
        raise ValueError("target_class must be 0 or 1")
    if target_class == expl.target_class:
        return expl
    return replace(expl,
                   base_value=1.0 - expl.base_value,
                   phi=-expl.phi,
                   explained_output=1.0 - expl.explained_output,
                   target_class=target_class)


def global_importance(explanations, feature_names) -> GlobalImportance:
    """Mean |phi| per feature, ranked descending (ties by feature index)."""
    explanations = list(explanations)
    if not explanations:
        raise ValueError("no explanations to aggregate")
    m = explanations[0].M
    if any(e.M != m for e in explanations):
        raise ValueError("explanations have mixed feature counts")
    names = list(feature_names)
    if len(names) != m:
        raise ValueError("feature_names length must equal feature count")
    mean_abs = np.mean([np.abs(e.phi) for e in explanations], axis=0)
    ranking = sorted(range(m), key=lambda i: (-mean_abs[i], i))
    return GlobalImportance(feature_names=names, mean_abs_phi=mean_abs,
                            ranking=ranking)
