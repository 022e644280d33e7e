"""
Shared pytest fixtures for the chemotaxis simulator tests.
"""
import pytest
import tempfile
import math
import sys
import os
from pathlib import Path

import numpy as np

# Add src directory to Python path for imports
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root / "src"))

from fields_grid import Grid, ScalarField


@pytest.fixture
def temp_workspace():
    """Provide a temporary directory for file operations."""
    with tempfile.TemporaryDirectory() as tmp_dir:
        yield Path(tmp_dir)


@pytest.fixture
def temp_workspace_as_cwd():
    """
    Provide a temporary directory and set it as the current working directory.
    This prevents integration tests from creating stray files in the project root.
    """
    original_cwd = os.getcwd()
    with tempfile.TemporaryDirectory() as tmp_dir:
        os.chdir(tmp_dir)
        try:
            yield Path(tmp_dir)
        finally:
            os.chdir(original_cwd)


@pytest.fixture
def unit_grid():
    """32x32 grid on the unit square."""
    return Grid(1.0, 1.0, 32, 32)


@pytest.fixture
def make_grid():
    """Factory for square grids."""
    def _make(n=32, size=1.0):
        return Grid(size, size, n, n)
    return _make


@pytest.fixture
def cosine_field():
    """u = 1 + cos(pi x / lx) on a given grid."""
    def _make(grid):
        return ScalarField.from_function(grid, lambda X, Y: 1.0 + np.cos(math.pi * X / grid.lx))
    return _make


@pytest.fixture
def gaussian_field():
    """Gaussian bump of a given mass (discretely normalized) at a point."""
    def _make(grid, center, width=0.1, mass=1.0):
        X, Y = grid.cell_centers()
        profile = np.exp(-((X - center[0]) ** 2 + (Y - center[1]) ** 2) / (2 * width ** 2))
        return ScalarField(grid, profile * mass / (profile.sum() * grid.cell_area))
    return _make


@pytest.fixture
def minimal_config_text():
    """Smallest valid configuration: constants everywhere."""
    return """
grid:
  lx: 1.0
  ly: 1.0
  nx: 16
  ny: 16
initial:
  type: constant
  value: 2.0
coefficients:
  kappa:
    type: constant
    value: 0.0
  mu:
    type: constant
    value: 1.0
stepper:
  t_end: 0.1
"""


@pytest.fixture
def write_config(temp_workspace):
    """Factory that writes a YAML config text and returns its path."""
    def _write(text, filename="scenario.yaml"):
        path = temp_workspace / filename
        path.write_text(text, encoding='utf-8')
        return path
    return _write
