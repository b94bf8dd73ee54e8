"""Shared fixtures for CLI tests."""

import json

import pytest
from click.testing import CliRunner


@pytest.fixture
def runner():
    """Create a Click test runner."""
    return CliRunner()


@pytest.fixture
def write_config(tmp_path):
    """Fixture to write a run configuration and return its path."""

    def _write(document, name="run.json"):
        path = tmp_path / name
        path.write_text(json.dumps(document) if not isinstance(document, str) else document)
        return str(path)

    return _write


@pytest.fixture
def out_dir(tmp_path):
    """Fixture to provide an output directory."""
    return str(tmp_path / "out")


@pytest.fixture
def newton_config():
    """Run configuration for N=3, alpha=2, p=q=2 on a coarse grid."""
    return {
        "params": {"N": 3, "alpha": 2, "p": 2, "q": 2},
        "grid": {"n": 12, "L": 10},
        "solver": {"tol": 1e-4, "max_iters": 2000},
    }
