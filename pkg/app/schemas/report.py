"""
下界报告相关数据验证和序列化模型
"""
from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from app.utils.rational import to_decimal_string

EXACT = "exact-enumeration"
MONTE_CARLO = "monte-carlo"

MC_BANNER = "估计值，不是严格下界（蒙特卡罗统计估计）"


class FractionField(BaseModel):
    """精确分数：{num, den} 整数对 + 十进制字符串"""
    num: int = Field(..., description="分子", examples=[-3, -141])
    den: int = Field(..., gt=0, description="分母（约分后为正）", examples=[2, 64])
    decimal: str = Field(..., description="十进制表示（四舍六入五成双）", examples=["-1.5", "-2.203125"])

    @classmethod
    def from_fraction(cls, value: Fraction, precision: int = 6) -> "FractionField":
        return cls(num=value.numerator, den=value.denominator, decimal=to_decimal_string(value, precision))

    def to_fraction(self) -> Fraction:
        return Fraction(self.num, self.den)


class ComparisonConstant(BaseModel):
    """文献比较常数（只用于报告，不参与计算）"""
    label: str = Field(..., description="名称", examples=["exact finite-lattice upper bound"])
    value: str = Field(..., description="十进制数值", examples=["-1.39"])
    role: Literal["upper", "lower", "heuristic-lower", "estimate"] = Field(..., description="角色")
    source: str = Field(..., description="来源说明")

    model_config = {"frozen": True}


class DistributionInfo(BaseModel):
    """耦合分布描述"""
    kind: Literal["discrete", "sampled"]
    label: str = Field(..., examples=["bernoulli(1)", "normal(sigma=1)"])
    centered: bool = Field(True, description="Av(J) = 0 是否成立")
    atoms: Optional[List[Dict[str, str]]] = Field(None, description="离散原子 [{value, probability}]")
    sampler: Optional[Dict[str, Any]] = Field(None, description="采样器 {name, params, seed}")


class BoundReport(BaseModel):
    """单元分解下界报告"""
    dimension: int = Field(..., ge=2, le=3, examples=[2, 3])
    cell: str = Field(..., examples=["square", "cube"])
    multiplicity_factor: FractionField
    distribution: DistributionInfo
    method: Literal["exact-enumeration", "monte-carlo"]
    e0_cell_avg: Optional[FractionField] = Field(None, description="单元基态能量的无序平均（乘 c_d 之前）")
    lower_bound: Optional[FractionField] = Field(None, description="c_d × 单元平均（精确模式）")
    enumeration_form: Optional[str] = Field(None, description="c_d × 整数和 / 构型数，如 -9024/4096")
    estimate: Optional[float] = Field(None, description="蒙特卡罗模式下 c_d × 样本均值")
    decimal: str = Field(..., description="下界（或估计）的十进制表示", examples=["-1.5"])
    mc_samples: Optional[int] = None
    mc_stderr: Optional[float] = None
    misfit_bound: Optional[FractionField] = Field(None, description="错配参数 m 的下界")
    comparison_constants: List[ComparisonConstant] = []
    below_upper_bounds: Optional[bool] = Field(None, description="下界是否低于所有文献上界")
    notes: List[str] = []
    banner: Optional[str] = None

    @model_validator(mode="after")
    def _check_method_fields(self) -> "BoundReport":
        if self.method == EXACT:
            if self.lower_bound is None or self.e0_cell_avg is None:
                raise ValueError("精确模式必须给出精确下界")
            if self.mc_stderr is not None or self.mc_samples is not None:
                raise ValueError("精确模式不携带统计误差字段")
        else:
            if self.estimate is None or self.banner is None:
                raise ValueError("蒙特卡罗模式必须给出估计值与声明")
        return self

    def exact_lower_bound(self) -> Fraction:
        return self.lower_bound.to_fraction()


class SweepRow(BaseModel):
    """各向异性扫描表的一行"""
    alpha_x: float
    lower_bound: float
    method: Literal["exact-enumeration", "monte-carlo"] = EXACT
    stderr: Optional[float] = None

    def csv_cells(self) -> List[str]:
        return [
            repr(self.alpha_x),
            repr(self.lower_bound),
            self.method,
            "" if self.stderr is None else repr(self.stderr),
        ]
