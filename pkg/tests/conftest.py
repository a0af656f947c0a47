import numpy as np
import pytest

from condflow.covariance import KernelParams, assemble_covariance
from condflow.grid import make_grid
from condflow.kle import solve_kle
from condflow.kriging import read_measurements_csv
from condflow.study import default_measurements_path, default_reference_field_path


@pytest.fixture(scope="session")
def fine_grid():
    return make_grid(16, 16)


@pytest.fixture(scope="session")
def coarse_grid():
    return make_grid(8, 8)


@pytest.fixture(scope="session")
def kernel_params():
    return KernelParams(sigma2=1.0, lx=0.4, ly=0.8)


@pytest.fixture(scope="session")
def fine_cov(fine_grid, kernel_params):
    return assemble_covariance(fine_grid, kernel_params)


@pytest.fixture(scope="session")
def basis20(fine_cov, fine_grid):
    return solve_kle(fine_cov, fine_grid, 20)


@pytest.fixture(scope="session")
def measurements():
    return read_measurements_csv(default_measurements_path())


@pytest.fixture(scope="session")
def reference_field(fine_grid):
    from condflow.grid import read_field_csv

    return read_field_csv(default_reference_field_path(), fine_grid)
