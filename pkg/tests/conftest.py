import math
from pathlib import Path

import numpy as np
import pytest

from smithwilson import CurveConfig, Instrument
from smithwilson.marketio import load_instruments

DATA = Path(__file__).resolve().parent.parent / "data"

ALPHA = 0.1
F_INF = math.log(1.039)
EIOPA_TENORS = (1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 15, 20)


def par_swap(m, s, weight=None):
    return Instrument(f"s{m}", tuple(range(1, m + 1)), tuple([s] * (m - 1) + [1 + s]), 1.0, weight)


def synthetic_zcb_prices(tenors=EIOPA_TENORS):
    """Smooth, upward-sloping zero curve in continuous compounding."""
    t = np.asarray(tenors, dtype=float)
    z = 0.004 + 0.012 * (1 - np.exp(-t / 8.0))
    return list(zip(t, np.exp(-z * t)))


@pytest.fixture
def config():
    return CurveConfig(ALPHA, F_INF)


@pytest.fixture
def swaps_all():
    return load_instruments(DATA / "eur_swaps.csv")


@pytest.fixture
def swaps_liquid():
    return load_instruments(DATA / "eur_swaps_liquid.csv")


@pytest.fixture
def data_dir():
    return DATA
