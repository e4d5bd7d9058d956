import hypothesis
import numpy as np
import pytest
import scipy.sparse as sp

from polyfactor.data import make_dataset
from polyfactor.gradients import GradientOperator

hypothesis.settings.register_profile("ci", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=15, deadline=None)
hypothesis.settings.load_profile("ci")


def random_operator(rng, n, d, m, kind="pn", density=1.0):
    """Gradient operator over random data with directly injected gradients."""
    X = rng.standard_normal((n, d))
    if density < 1.0:
        X *= rng.random((n, d)) < density
    ds = make_dataset(sp.csr_matrix(X), np.ones(n, dtype=np.int64), m)
    op = GradientOperator(ds, kind, n_outputs=m)
    op.set_gradients(rng.standard_normal((n, m)))
    return op, ds


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
