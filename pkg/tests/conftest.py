"""Shared fixtures."""

import numpy as np
import pytest
from click.testing import CliRunner
from helpers import block_kernel


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def blocks():
    return block_kernel(np.random.default_rng(7))
