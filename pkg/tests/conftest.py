"""Pytest configuration and fixtures."""

import tempfile
from pathlib import Path
from typing import Callable, Generator

import numpy as np
import pytest

from cdd.models import PointCloud
from cdd.pointcloud import make_rng


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory for testing."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


class ConstantWeighting:
    """Test-only weighting f = 1, with which weighted CD reduces to L1 CD."""

    def pdf(self, x):
        return np.ones_like(np.asarray(x, dtype=np.float64))[()]

    def pdf_prime(self, x):
        return np.zeros_like(np.asarray(x, dtype=np.float64))[()]

    def mode(self) -> float:
        return 0.0

    def label(self) -> str:
        return "constant"


@pytest.fixture
def constant_weighting() -> ConstantWeighting:
    """The constant weighting function."""
    return ConstantWeighting()


@pytest.fixture
def random_cloud() -> Callable[..., PointCloud]:
    """Factory for seeded random clouds in [-1, 1]^3."""

    def make(n: int, seed: int) -> PointCloud:
        return PointCloud(make_rng(seed).uniform(-1.0, 1.0, size=(n, 3)))

    return make


@pytest.fixture
def cloud_pairs(random_cloud) -> Callable[..., list[tuple[PointCloud, PointCloud]]]:
    """Factory for ``count`` seeded (pred, gt) pairs of random clouds."""

    def make(count: int, n: int, m: int = None) -> list[tuple[PointCloud, PointCloud]]:
        m = n if m is None else m
        return [(random_cloud(n, 2 * i), random_cloud(m, 2 * i + 1)) for i in range(count)]

    return make
