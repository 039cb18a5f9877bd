"""
耦合分布模型
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Tuple

import numpy as np

DISCRETE = "discrete"
SAMPLED = "sampled"


@dataclass(frozen=True)
class Atom:
    """离散分布的一个原子：取值与精确概率"""

    value: Fraction
    probability: Fraction


@dataclass(frozen=True)
class SamplerSpec:
    """连续（或当作采样器使用的）分布：名称 + 参数 + 种子"""

    name: str
    params: Tuple[Tuple[str, float], ...] = ()
    seed: int = 0

    def param(self, key: str, default: float = None) -> float:
        return dict(self.params).get(key, default)


@dataclass(frozen=True)
class CouplingDistribution:
    """单键耦合的公共分布 P_0"""

    kind: str
    label: str
    atoms: Tuple[Atom, ...] = ()
    sampler: Optional[SamplerSpec] = None
    centered: bool = True

    @property
    def is_discrete(self) -> bool:
        return self.kind == DISCRETE

    def mean(self) -> Fraction:
        """Σ value·probability"""
        return sum((a.value * a.probability for a in self.atoms), Fraction(0))

    def mean_abs(self) -> Fraction:
        """Σ |value|·probability"""
        return sum((abs(a.value) * a.probability for a in self.atoms), Fraction(0))

    def value_denominator(self) -> int:
        """所有原子取值的最小公分母"""
        den = 1
        for a in self.atoms:
            den = den * a.value.denominator // math.gcd(den, a.value.denominator)
        return den

    def probability_denominator(self) -> int:
        """所有原子概率的最小公分母 Q"""
        den = 1
        for a in self.atoms:
            den = den * a.probability.denominator // math.gcd(den, a.probability.denominator)
        return den

    def integer_weights(self) -> Tuple[int, ...]:
        """整数权重 w_a = p_a · Q"""
        q = self.probability_denominator()
        return tuple(int(a.probability * q) for a in self.atoms)

    def is_bernoulli(self, scale: Fraction = Fraction(1)) -> bool:
        """是否为 ½(δ_J + δ_{−J})"""
        values = sorted(a.value for a in self.atoms)
        return (
            self.is_discrete
            and values == [-scale, scale]
            and all(a.probability == Fraction(1, 2) for a in self.atoms)
        )

    def sample_indices(self, rng: np.random.Generator, size) -> np.ndarray:
        """按精确整数权重抽取原子下标"""
        weights = np.array(self.integer_weights(), dtype=np.int64)
        cumulative = np.cumsum(weights)
        draws = rng.integers(0, int(cumulative[-1]), size=size)
        return np.searchsorted(cumulative, draws, side="right")

    def sample_values(self, rng: np.random.Generator, size) -> np.ndarray:
        """抽取浮点耦合值（蒙特卡罗用）"""
        if self.kind == DISCRETE or (self.sampler and self.sampler.name == DISCRETE):
            values = np.array([float(a.value) for a in self.atoms])
            return values[self.sample_indices(rng, size)]
        name = self.sampler.name
        if name == "normal":
            return rng.normal(0.0, self.sampler.param("sigma", 1.0), size=size)
        if name == "uniform":
            half_width = self.sampler.param("half_width", 1.0)
            return rng.uniform(-half_width, half_width, size=size)
        raise ValueError(f"未知采样器: {name}")

    def to_dict(self) -> Dict:
        """转换为字典"""
        data = {"kind": self.kind, "label": self.label, "centered": self.centered}
        if self.atoms:
            data["atoms"] = [
                {"value": str(a.value), "probability": str(a.probability)} for a in self.atoms
            ]
        if self.sampler is not None:
            data["sampler"] = {
                "name": self.sampler.name,
                "params": dict(self.sampler.params),
                "seed": self.sampler.seed,
            }
        return data
