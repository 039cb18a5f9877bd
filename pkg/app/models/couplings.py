"""
耦合、自旋构型与阻挫签名模型
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Tuple

from app.utils.rational import as_fraction
from app.utils.response import ConfigException


@dataclass(frozen=True)
class CouplingAssignment:
    """
    每条键一个精确有理耦合值

    ±J 耦合可用比特掩码编码：第 k 位为 1 ⇔ 第 k 条键取 −J。
    """

    values: Tuple[Fraction, ...]
    scale: Fraction = Fraction(1)

    @classmethod
    def from_values(cls, values: Iterable, scale=1) -> "CouplingAssignment":
        """由数值序列构造（接受整数、Fraction 或分数字符串）"""
        scale = as_fraction(scale)
        if scale <= 0:
            raise ConfigException(f"耦合尺度 J 必须为正，收到 {scale}")
        return cls(values=tuple(as_fraction(v) for v in values), scale=scale)

    @classmethod
    def from_mask(cls, mask: int, n_bonds: int, scale=1) -> "CouplingAssignment":
        """由 ±J 比特掩码构造"""
        scale = as_fraction(scale)
        if scale <= 0:
            raise ConfigException(f"耦合尺度 J 必须为正，收到 {scale}")
        if mask < 0 or mask >> n_bonds:
            raise ConfigException(f"掩码 {mask} 超出 {n_bonds} 条键的范围")
        return cls(
            values=tuple(-scale if (mask >> k) & 1 else scale for k in range(n_bonds)),
            scale=scale,
        )

    @property
    def n_bonds(self) -> int:
        return len(self.values)

    def is_pm_j(self) -> bool:
        """是否全部为 ±J"""
        return all(abs(v) == self.scale for v in self.values)

    def to_mask(self) -> int:
        """
        转换为 ±J 比特掩码

        Raises:
            ConfigException: 存在非 ±J 的耦合
        """
        if not self.is_pm_j():
            raise ConfigException("只有 ±J 耦合才能编码为比特掩码")
        mask = 0
        for k, v in enumerate(self.values):
            if v < 0:
                mask |= 1 << k
        return mask

    def common_denominator(self) -> int:
        """所有耦合值的最小公分母"""
        den = 1
        for v in self.values:
            den = den * v.denominator // math.gcd(den, v.denominator)
        return den

    def scaled_integers(self) -> Tuple[Tuple[int, ...], int]:
        """整数化：返回 (整数耦合, 公分母)，使 values = integers / den"""
        den = self.common_denominator()
        return tuple(int(v * den) for v in self.values), den

    def with_values(self, values: Iterable[Fraction]) -> "CouplingAssignment":
        return CouplingAssignment(values=tuple(values), scale=self.scale)

    def to_dict(self) -> dict:
        """转换为字典"""
        return {
            "values": [str(v) for v in self.values],
            "scale": str(self.scale),
        }


@dataclass(frozen=True)
class SpinConfiguration:
    """Ising 自旋构型：第 i 位为 1 ⇔ σ_i = −1"""

    mask: int
    n_sites: int

    @classmethod
    def from_spins(cls, spins: Iterable[int]) -> "SpinConfiguration":
        spins = tuple(spins)
        mask = 0
        for i, s in enumerate(spins):
            if s not in (1, -1):
                raise ConfigException(f"自旋取值只能为 ±1，收到 {s}")
            if s == -1:
                mask |= 1 << i
        return cls(mask=mask, n_sites=len(spins))

    @property
    def spins(self) -> Tuple[int, ...]:
        return tuple(-1 if (self.mask >> i) & 1 else 1 for i in range(self.n_sites))

    def flipped(self) -> "SpinConfiguration":
        """全局自旋翻转"""
        return SpinConfiguration(mask=self.mask ^ ((1 << self.n_sites) - 1), n_sites=self.n_sites)


@dataclass(frozen=True)
class FrustrationSignature:
    """每个面的耦合乘积符号 G_P，以及阻挫面数"""

    face_products: Tuple[int, ...]

    @property
    def frustrated_count(self) -> int:
        return sum(1 for g in self.face_products if g < 0)

    def parity(self) -> int:
        """所有面乘积之积"""
        product = 1
        for g in self.face_products:
            product *= g
        return product

    def to_dict(self) -> dict:
        return {"face_products": list(self.face_products), "frustrated_count": self.frustrated_count}

