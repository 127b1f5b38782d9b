import numpy as np
import pytest

from eigenfpca import gen_sim1
from eigenfpca.eigenbasis import eigendecompose
from eigenfpca.kernels import Bandwidths, KernelSpec
from eigenfpca.smoothing import estimate_mean, estimate_pooled_cov

DENSE_BW = Bandwidths(1.0, (0.2,), 1.0, (0.2,))
SPARSE_BW = Bandwidths(1.5, (0.25,), 1.5, (0.2,))


@pytest.fixture(scope="session")
def spec():
    return KernelSpec()


@pytest.fixture(scope="session")
def sim1_dense_fit(spec):
    """One fitted Sim-1 complete-design pipeline, shared across tests."""
    d, truth = gen_sim1(200, "dense", 0)
    t_grid = np.linspace(0, 10, 51)
    z_axes = [np.linspace(0, 1, 26)]
    mean = estimate_mean(d, DENSE_BW, spec, t_grid, z_axes)
    cov = estimate_pooled_cov(d, mean, DENSE_BW.h_gamma, spec, t_grid)
    basis = eigendecompose(cov)
    return d, truth, mean, cov, basis


@pytest.fixture(scope="session")
def sim1_sparse_fit(spec):
    d, truth = gen_sim1(200, "sparse", 0)
    t_grid = np.linspace(0, 10, 51)
    z_axes = [np.linspace(0, 1, 26)]
    mean = estimate_mean(d, SPARSE_BW, spec, t_grid, z_axes)
    cov = estimate_pooled_cov(d, mean, SPARSE_BW.h_gamma, spec, t_grid)
    basis = eigendecompose(cov)
    return d, truth, mean, cov, basis
