import math

import numpy as np
import pytest

from tsou import NtsParams, OuNtsParams
from tsou.models import ForwardCurve, OneFactorModel, TwoFactorModel


@pytest.fixture(scope="session")
def ou_std() -> OuNtsParams:
    """Short-factor parameter set used throughout the numerical experiments."""
    return OuNtsParams(nts=NtsParams(0.5, 0.3, 0.0, 2.5), b=5.0)


@pytest.fixture(scope="session")
def one_factor_model() -> OneFactorModel:
    """Flat-curve one-factor model with realistic gas-market parameters."""
    return OneFactorModel(
        curve=ForwardCurve.flat(20.0),
        ou=OuNtsParams(nts=NtsParams(0.5, 0.2, 0.0, 0.7), b=10.0))


@pytest.fixture(scope="session")
def two_factor_model() -> TwoFactorModel:
    return TwoFactorModel(
        curve=ForwardCurve.flat(12.0),
        ou=OuNtsParams(nts=NtsParams(0.5, 0.3, 0.0, 2.5), b=5.0),
        levy=NtsParams(0.5, 0.25, -0.03, 0.4))


def batch_se(values: np.ndarray, stat, n_batches: int = 50):
    """Statistic and its standard error by batch means."""
    values = np.asarray(values)
    n = len(values) - len(values) % n_batches
    batches = values[:n].reshape(n_batches, -1)
    stats = np.array([stat(b) for b in batches])
    return stat(values), stats.std(ddof=1) / math.sqrt(n_batches)


def c2_stat(z):
    zc = z - z.mean()
    return float((zc ** 2).mean())


def c4_stat(z):
    zc = z - z.mean()
    m2 = float((zc ** 2).mean())
    return float((zc ** 4).mean()) - 3.0 * m2 * m2
