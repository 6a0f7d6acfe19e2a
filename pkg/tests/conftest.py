import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_hermitian(dim, rng, real=False):
    a = rng.standard_normal((dim, dim))
    if not real:
        a = a + 1j * rng.standard_normal((dim, dim))
    return (a + a.conj().T) / 2


def random_two_state(rng, scale=1.0):
    from floqsens import TwoStateModel
    x_u, z_u, x_d, z_d = rng.uniform(-2 * scale, 2 * scale, size=4)
    return TwoStateModel.from_components(x_u, z_u, x_d, z_d)
