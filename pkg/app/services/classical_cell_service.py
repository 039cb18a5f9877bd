"""
经典 Ising 单元相关服务：能量、精确基态、阻挫签名、规范变换
"""
import logging
from collections import Counter
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Tuple, Union

import numpy as np

from app.models.couplings import CouplingAssignment, FrustrationSignature, SpinConfiguration
from app.models.lattice import CellGeometry, FiniteLattice
from app.services.lattice_service import LatticeService
from app.utils.response import ConfigException

logger = logging.getLogger(__name__)

# int64 整数快速通道允许的最大 |能量|
INT64_SAFE = 2**62

Geometry = Union[CellGeometry, FiniteLattice]


@lru_cache(maxsize=32)
def spin_signs(n_sites: int, fix_top: bool = True) -> np.ndarray:
    """
    自旋构型表：shape (构型数, n_sites)，元素为 ±1

    fix_top=True 时固定最高位格点 σ=+1（全局翻转对称），只扫描掩码 0 .. 2^(n-1)-1，
    每对互为翻转的构型中恰好保留掩码较小者。
    """
    count = 2 ** (n_sites - 1) if fix_top else 2 ** n_sites
    masks = np.arange(count, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(n_sites, dtype=np.int64)[None, :]) & 1
    signs = 1 - 2 * bits
    signs.setflags(write=False)
    return signs


@lru_cache(maxsize=32)
def bond_products(geometry: CellGeometry, fix_top: bool = True) -> np.ndarray:
    """每个自旋构型下各键的 σ_iσ_j：shape (构型数, n_bonds)"""
    signs = spin_signs(geometry.n_sites, fix_top)
    left = np.array([i for i, _ in geometry.bonds], dtype=np.int64)
    right = np.array([j for _, j in geometry.bonds], dtype=np.int64)
    products = signs[:, left] * signs[:, right]
    products.setflags(write=False)
    return products


@lru_cache(maxsize=32)
def sign_patterns(n_bonds: int) -> np.ndarray:
    """全部 2^n_bonds 个 ±1 耦合模式，第 m 行对应比特掩码 m"""
    masks = np.arange(2 ** n_bonds, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(n_bonds, dtype=np.int64)[None, :]) & 1
    patterns = 1 - 2 * bits
    patterns.setflags(write=False)
    return patterns


class ClassicalCellService:
    """经典单元服务类"""

    @staticmethod
    def _check_couplings(geometry: Geometry, J: CouplingAssignment) -> None:
        if J.n_bonds != len(geometry.bonds):
            raise ConfigException(f"耦合个数 {J.n_bonds} 与键数 {len(geometry.bonds)} 不一致")

    @staticmethod
    def cell_energy(geometry: CellGeometry, J: CouplingAssignment, sigma: SpinConfiguration) -> Fraction:
        """
        计算 Σ_bonds J_ij σ_i σ_j（不含 c_d 因子）

        Args:
            geometry: 单元几何
            J: 耦合
            sigma: 自旋构型

        Returns:
            Fraction: 精确能量

        Raises:
            ConfigException: 长度不一致
        """
        ClassicalCellService._check_couplings(geometry, J)
        if sigma.n_sites != geometry.n_sites:
            raise ConfigException(f"自旋个数 {sigma.n_sites} 与格点数 {geometry.n_sites} 不一致")
        spins = sigma.spins
        return sum(
            (value * spins[i] * spins[j] for value, (i, j) in zip(J.values, geometry.bonds)),
            Fraction(0),
        )

    @staticmethod
    def cell_ground_state(geometry: CellGeometry, J: CouplingAssignment) -> Tuple[Fraction, SpinConfiguration]:
        """
        穷举求单元精确基态

        耦合整数化后走 int64 矩阵乘快速通道；固定最高位自旋，扫描 2^(n-1) 个构型。
        argmin 为最小自旋掩码的基态。

        Args:
            geometry: 单元几何
            J: 耦合

        Returns:
            Tuple[Fraction, SpinConfiguration]: (基态能量, 基态构型)
        """
        ClassicalCellService._check_couplings(geometry, J)
        integers, den = J.scaled_integers()
        if sum(abs(v) for v in integers) < INT64_SAFE:
            energies = bond_products(geometry) @ np.array(integers, dtype=np.int64)
            best = int(np.argmin(energies))
            return Fraction(int(energies[best]), den), SpinConfiguration(mask=best, n_sites=geometry.n_sites)
        return ClassicalCellService.cell_ground_state_exhaustive(geometry, J, fix_top=True)

    @staticmethod
    def cell_ground_state_exhaustive(
        geometry: CellGeometry, J: CouplingAssignment, fix_top: bool = False
    ) -> Tuple[Fraction, SpinConfiguration]:
        """纯分数逐一枚举（参照实现，fix_top=False 时扫描全部 2^n 个构型）"""
        ClassicalCellService._check_couplings(geometry, J)
        count = 2 ** (geometry.n_sites - 1) if fix_top else 2 ** geometry.n_sites
        best_energy = None
        best_mask = 0
        for mask in range(count):
            sigma = SpinConfiguration(mask=mask, n_sites=geometry.n_sites)
            energy = ClassicalCellService.cell_energy(geometry, J, sigma)
            if best_energy is None or energy < best_energy:
                best_energy, best_mask = energy, mask
        return best_energy, SpinConfiguration(mask=best_mask, n_sites=geometry.n_sites)

    @staticmethod
    def batch_ground_energies(geometry: CellGeometry, couplings: np.ndarray) -> np.ndarray:
        """
        批量计算整数耦合下的单元基态能量

        Args:
            geometry: 单元几何
            couplings: shape (批大小, n_bonds) 的 int64 整数耦合

        Returns:
            np.ndarray: shape (批大小,) 的 int64 基态能量
        """
        couplings = np.asarray(couplings, dtype=np.int64)
        if couplings.ndim != 2 or couplings.shape[1] != geometry.n_bonds:
            raise ConfigException(f"耦合矩阵形状 {couplings.shape} 与键数 {geometry.n_bonds} 不一致")
        return (couplings @ bond_products(geometry).T).min(axis=1)

    @staticmethod
    def frustration_signature(geometry: CellGeometry, J: CouplingAssignment) -> FrustrationSignature:
        """
        计算每个面的 G_P = sign(∏ J)

        Raises:
            ConfigException: 存在零耦合（符号无定义）
        """
        ClassicalCellService._check_couplings(geometry, J)
        if any(v == 0 for v in J.values):
            raise ConfigException("存在零耦合，阻挫签名无定义")
        products = []
        for face in geometry.faces:
            negatives = sum(1 for k in face if J.values[k] < 0)
            products.append(-1 if negatives % 2 else 1)
        return FrustrationSignature(face_products=tuple(products))

    @staticmethod
    def gauge_transform(geometry: Geometry, J: CouplingAssignment, site: int) -> CouplingAssignment:
        """
        局域规范变换：与 site 相连的所有键 J_ij → −J_ij（配对的自旋翻转隐含其中）

        Args:
            geometry: 单元几何或有限格点
            J: 耦合
            site: 格点下标

        Raises:
            ConfigException: 格点下标无效
        """
        ClassicalCellService._check_couplings(geometry, J)
        if not 0 <= site < geometry.n_sites:
            raise ConfigException(f"格点下标 {site} 超出范围 [0, {geometry.n_sites})")
        values = list(J.values)
        for k, (i, j) in enumerate(geometry.bonds):
            if site in (i, j):
                values[k] = -values[k]
        return J.with_values(values)

    @staticmethod
    def frustration_census(geometry: CellGeometry) -> Dict[int, Dict[int, int]]:
        """
        遍历单元全部 ±1 耦合模式，按阻挫面数统计基态能量分布

        Returns:
            Dict[int, Dict[int, int]]: {阻挫面数: {基态能量: 模式数}}
        """
        patterns = sign_patterns(geometry.n_bonds)
        energies = ClassicalCellService.batch_ground_energies(geometry, patterns)
        negative = patterns < 0
        frustrated = np.zeros(len(patterns), dtype=np.int64)
        for face in geometry.faces:
            frustrated += negative[:, list(face)].sum(axis=1) % 2

        census: Dict[int, Counter] = {}
        for count, energy in zip(frustrated.tolist(), energies.tolist()):
            census.setdefault(count, Counter())[energy] += 1
        return {count: dict(sorted(histogram.items())) for count, histogram in sorted(census.items())}

    @staticmethod
    def plaquette_energies(scale: Fraction = Fraction(1)) -> Dict[str, Fraction]:
        """单个元格的最小能量：阻挫 −2J，非阻挫 −4J（由枚举得出）"""
        square = LatticeService.make_cell(2)
        census = ClassicalCellService.frustration_census(square)
        frustrated = set(census.get(1, {}))
        unfrustrated = set(census.get(0, {}))
        if len(frustrated) != 1 or len(unfrustrated) != 1:
            raise ConfigException("元格能量分类不唯一")
        return {
            "frustrated": scale * frustrated.pop(),
            "unfrustrated": scale * unfrustrated.pop(),
        }
