import numpy as np
import pytest
import scipy.sparse as sp

from lrmor import LtiSystem, gen_fd_laplacian


def random_stable_system(rng, n, m=1, p=1, with_e=False, symmetric=False):
    """Well-conditioned stable test system; A = -(MM^T + I) when symmetric,
    otherwise a shifted random matrix."""
    if symmetric:
        m_ = rng.standard_normal((n, n))
        a = -(m_ @ m_.T) / n - np.eye(n)
    else:
        a = rng.standard_normal((n, n)) / np.sqrt(n)
        a = a - (np.abs(np.linalg.eigvals(a).real).max() + 0.5) * np.eye(n)
    e = None
    if with_e:
        f = rng.standard_normal((n, n)) / np.sqrt(n)
        e = f @ f.T + np.eye(n)
    return LtiSystem(a=a, b=rng.standard_normal((n, m)),
                     c=rng.standard_normal((p, n)), e=e)


def scalar_system(a=-1.0, e=1.0, b=1.0, c=1.0, d=0.0):
    return LtiSystem(a=[[a]], b=[[b]], c=[[c]], d=[[d]],
                     e=None if e == 1.0 else [[e]])


@pytest.fixture(scope="session")
def fd10():
    return gen_fd_laplacian(10)


@pytest.fixture(scope="session")
def fd7():
    return gen_fd_laplacian(7)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def sparse_random(rng, n, density=0.2):
    m = sp.random(n, n, density=density, random_state=np.random.RandomState(
        rng.integers(2 ** 31)), format="csr")
    row_sums = np.asarray(np.abs(m).sum(axis=1)).ravel()
    return m + sp.diags(1.0 + row_sums)
