import numpy as np
import pytest

from pathcap.network import Dataset, Network


@pytest.fixture
def net_a() -> Network:
    """Two-layer reference net: W1 = [[1,-2],[-3,4]], W2 = [[1,1]], relu."""
    return Network((np.array([[1.0, -2.0], [-3.0, 4.0]]), np.array([[1.0, 1.0]])))


@pytest.fixture
def s_a() -> Dataset:
    return Dataset(np.array([[1.0, 0.0], [0.0, -1.0], [-1.0, 1.0]]))


@pytest.fixture
def chain_net() -> Network:
    """1-1-1 chain with weights (2), (-3): a single path of weight 6."""
    return Network((np.array([[2.0]]), np.array([[-3.0]])))
