"""
量子单元模型：各向异性参数、单元哈密顿量、谱
"""
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from app.models.couplings import CouplingAssignment
from app.models.lattice import CellGeometry, FiniteLattice
from app.utils.response import ConfigException

Geometry = Union[CellGeometry, FiniteLattice]


@dataclass(frozen=True)
class Anisotropy:
    """Φ_ij = α_x σˣσˣ + α_y σʸσʸ + α_z σᶻσᶻ 的三个系数"""

    alpha_x: float = 0.0
    alpha_y: float = 0.0
    alpha_z: float = 1.0

    def __post_init__(self):
        for name in ("alpha_x", "alpha_y", "alpha_z"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigException(f"各向异性参数 {name} 必须为有限实数")

    @classmethod
    def classical(cls) -> "Anisotropy":
        return cls(0.0, 0.0, 1.0)

    @classmethod
    def heisenberg(cls) -> "Anisotropy":
        return cls(1.0, 1.0, 1.0)

    @classmethod
    def xz(cls, alpha_x: float = 1.0) -> "Anisotropy":
        return cls(float(alpha_x), 0.0, 1.0)

    @property
    def is_classical(self) -> bool:
        """只含 σᶻσᶻ 项，哈密顿量对角"""
        return self.alpha_x == 0 and self.alpha_y == 0

    @property
    def has_y(self) -> bool:
        return self.alpha_y != 0

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.alpha_x, self.alpha_y, self.alpha_z)

    def to_dict(self) -> dict:
        return {"alpha_x": self.alpha_x, "alpha_y": self.alpha_y, "alpha_z": self.alpha_z}


@dataclass(frozen=True)
class CellHamiltonian:
    """
    稠密厄米矩阵 H = Σ_bonds J_b Φ_b

    基矢按自旋掩码编号：第 i 位为 1 ⇔ 格点 i 的 σᶻ = −1，与经典自旋构型的编码一致。
    """

    geometry: Geometry
    couplings: CouplingAssignment
    anisotropy: Anisotropy
    matrix: np.ndarray = field(compare=False, repr=False)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.matrix)

    @property
    def is_diagonal(self) -> bool:
        return self.anisotropy.is_classical

    def norm_inf(self) -> float:
        """‖H‖∞：最大行绝对值和"""
        return float(np.abs(self.matrix).sum(axis=1).max())


@dataclass(frozen=True)
class CellSpectrum:
    """基态能量，可选附带升序全谱"""

    ground_energy: float
    eigenvalues: Optional[Tuple[float, ...]] = None
    residual: float = 0.0

    def to_dict(self) -> dict:
        data = {"ground_energy": self.ground_energy, "residual": self.residual}
        if self.eigenvalues is not None:
            data["eigenvalues"] = list(self.eigenvalues)
        return data
