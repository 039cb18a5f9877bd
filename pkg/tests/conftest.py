"""
测试公共 fixture
"""
import os

os.environ.setdefault("EA_BOUNDS_ENV", "testing")

import pytest  # noqa: E402

from app.services.bounds_service import BoundsService  # noqa: E402
from app.services.lattice_service import LatticeService  # noqa: E402


@pytest.fixture(scope="session")
def square():
    return LatticeService.make_cell(2)


@pytest.fixture(scope="session")
def cube():
    return LatticeService.make_cell(3)


@pytest.fixture(scope="session")
def dimer():
    return LatticeService.make_dimer()


@pytest.fixture(scope="session")
def bernoulli():
    return BoundsService.bernoulli(1)


@pytest.fixture
def point_table(tmp_path):
    """点质量 +1 的分布文件"""
    path = tmp_path / "pointmass.txt"
    path.write_text("# value probability\n1 1\n", encoding="utf-8")
    return path
