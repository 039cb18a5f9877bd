"""
有限格点的耦合实例
"""
from dataclasses import dataclass
from typing import Optional

from app.models.couplings import CouplingAssignment
from app.models.lattice import FiniteLattice
from app.utils.response import ConfigException


@dataclass(frozen=True)
class LatticeInstance:
    """格点 + 每条键的耦合，以及抽样来源（种子、样本序号）"""

    lattice: FiniteLattice
    couplings: CouplingAssignment
    seed: Optional[int] = None
    sample: Optional[int] = None

    def __post_init__(self):
        if self.couplings.n_bonds != self.lattice.n_bonds:
            raise ConfigException(
                f"耦合个数 {self.couplings.n_bonds} 与格点键数 {self.lattice.n_bonds} 不一致"
            )

    def with_couplings(self, couplings: CouplingAssignment) -> "LatticeInstance":
        return LatticeInstance(lattice=self.lattice, couplings=couplings, seed=self.seed, sample=self.sample)

    def to_dict(self) -> dict:
        return {
            "lattice": self.lattice.to_dict(),
            "seed": self.seed,
            "sample": self.sample,
        }
