import os
import tempfile

# Keep the suite away from the user's real config before utils.config is imported.
os.environ["TLPA_CONFIG_DIR"] = tempfile.mkdtemp(prefix="tlpa-test-config-")

import numpy as np
import pytest

from distributions import Frechet, StrictPareto
from services.models import ExceedanceSample


@pytest.fixture
def three_point_sample():
    """Excesses e, e^2, e^3: S = 6, n = 3."""
    return ExceedanceSample.from_excesses(np.exp([1.0, 2.0, 3.0]))


@pytest.fixture
def frechet_data():
    return Frechet(gamma=2.0).sample(300, seed=20240601).values


@pytest.fixture
def sp_excesses():
    """2000 excesses from a Strict Pareto with gamma 4, i.e. a TLPa with alpha 1 and gamma 2."""
    return ExceedanceSample.from_excesses(StrictPareto(gamma=4.0).sample(2000, seed=11).values)


@pytest.fixture
def write_csv(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return _write
