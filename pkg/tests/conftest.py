import numpy as np
import pytest

from toolwear.forest import Hyperparams, train
from toolwear.signalprep import LabeledDataset, split
from toolwear.synth import default_paper_profile, generate
from toolwear.signalprep import assemble_dataset

#: seeds frozen for the reproduction suite
SPLIT_SEED = 7
TRAIN_SEED = 7
RETRAIN_SEED = 11


def random_dataset(rng, n=30, m=5, constant_col=None):
    """Random two-class dataset; optionally force one column constant."""
    X = rng.normal(size=(n, m))
    if constant_col is not None:
        X[:, constant_col] = 3.25
    y = (rng.random(n) < 0.5).astype(np.int64)
    if y.min() == y.max():  # force both classes
        y[0] = 1 - y[0]
    names = [f"f{i}" for i in range(m)]
    return LabeledDataset(names, X, y)


@pytest.fixture(scope="session")
def profile_runs():
    return generate(default_paper_profile())


@pytest.fixture(scope="session")
def profile_dataset(profile_runs):
    return assemble_dataset(profile_runs)


@pytest.fixture(scope="session")
def profile_split(profile_dataset):
    return split(profile_dataset, 0.6, seed=SPLIT_SEED)


@pytest.fixture(scope="session")
def profile_model(profile_split):
    return train(profile_split.train, Hyperparams(), seed=TRAIN_SEED)
