import os
import sys

import numpy as np
import pytest

# Add the project root to the path so we can import the package
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from signorinilab.grid import build_grid
from signorinilab.profiles import sample_profile
from signorinilab.solve import SolveSpec, signorini_solve


@pytest.fixture
def tiny_grid():
    return build_grid(2, 9, 8)


@pytest.fixture
def small_grid():
    return build_grid(2, 17, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def signorini_solution():
    """Discrete Signorini solution with data Re((x_1 + i|x_2|)^{3/2}) on a 33 x 33 x 65 grid."""
    grid = build_grid(2, 33, 64)
    data = sample_profile(grid, "signorini_three_halves")
    return signorini_solve(SolveSpec(boundary_data=data, constrained=True, tol=1e-10))


@pytest.fixture
def evaluate_config_text():
    return """[grid]
n = 2
N = 33
K = 64

[problem]
kind = evaluate
profile = linear_x1

[analysis]
functionals = phi, mean_osc
centers = 0, 0, 0; 0.1, 0.1, -0.1
r_min = 0.25
r_max = 0.5
phi_min = 9.0
phi_max = 11.0

[run]
seed = 3
"""


@pytest.fixture
def write_config(tmp_path):
    def write(text, name="experiment.cfg"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write
