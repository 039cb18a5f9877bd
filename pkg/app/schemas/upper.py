"""
有限格点上界采样、逐样本不等式校验的输出模型
"""
from typing import List, Literal, Optional

from pydantic import BaseModel, Field

from app.schemas.report import FractionField

UPPER_NOTE = (
    "有限格点基态能量每格点的总体均值是热力学极限能量的上界；"
    "样本均值带有统计误差，不是严格上界"
)


class SampleRecord(BaseModel):
    """JSON-lines 中的单样本记录"""
    record: Literal["sample"] = "sample"
    sample: int = Field(..., ge=0, description="样本序号（随机流由 (seed, sample) 派生）")
    seed: int
    energy: FractionField = Field(..., description="格点精确基态能量")
    per_site: str = Field(..., description="每格点能量十进制表示")


class UpperBoundEstimate(BaseModel):
    """有限格点基态能量每格点的样本估计（JSON-lines 末尾的汇总记录）"""
    record: Literal["summary"] = "summary"
    dimension: int = Field(..., ge=2, le=3)
    side: int = Field(..., description="边长 L")
    boundary: Literal["periodic", "free"]
    distribution: str
    samples: int = Field(..., ge=1)
    seed: int
    mean_per_site: FractionField
    stderr: str = Field(..., description="样本标准差 / sqrt(samples)，十进制")
    energies: Optional[List[str]] = Field(None, description="各样本每格点能量（可选保留）")
    literature_estimate: Optional[str] = Field(None, description="文献蒙特卡罗估计（仅供参考，不作断言）")
    note: str = UPPER_NOTE


class TheoremCheckReport(BaseModel):
    """逐样本校验 E_0(格点) ≥ Σ_n c_d·E_0(单元 n) 的汇总"""
    dimension: int
    side: int
    distribution: str
    samples: int
    seed: int
    holds: int = Field(..., description="不等式成立的样本数")
    min_gap: FractionField = Field(..., description="最小差值 E_0(格点) − Σ 单元能量")
    mean_gap_per_site: FractionField
    gaps: List[str] = Field(default_factory=list, description="各样本差值（分数文本）")

    @property
    def passed(self) -> bool:
        return self.holds == self.samples
