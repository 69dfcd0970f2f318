import numpy as np
import pytest

from infaudit.datasets import synth_dataset
from infaudit.models import MlpConfig, train_mlp


@pytest.fixture(scope="session")
def small_binary():
    """Small clustered binary dataset split into train / test / pool."""
    data = synth_dataset("binary", m=24, n=900, k=3, cluster_spread=0.3, seed=1)
    return data.take([300, 300, 300], np.random.default_rng(0))


@pytest.fixture(scope="session")
def small_continuous():
    data = synth_dataset("continuous", m=6, n=600, k=3, cluster_spread=0.4, seed=2)
    return data.take([200, 200, 200], np.random.default_rng(0))


@pytest.fixture(scope="session")
def binary_model(small_binary):
    train, test, _ = small_binary
    return train_mlp(train, 3, MlpConfig(hidden_layers=(32,), epochs=40, seed=3), test=test)


@pytest.fixture(scope="session")
def continuous_model(small_continuous):
    train, test, _ = small_continuous
    return train_mlp(train, 3, MlpConfig(hidden_layers=(16,), epochs=40, seed=4), test=test)
