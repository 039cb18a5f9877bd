"""
运行配置数据验证模型（回显到每个输出中）
"""
import math
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator

OutputFormat = Literal["json", "csv", "human"]


class RunConfig(BaseModel):
    """一次命令行调用的完整配置"""
    subcommand: str = Field(..., description="子命令", examples=["bound classical", "upper"])
    dimension: Optional[int] = Field(None, ge=2, le=3, description="维数")
    distribution: Optional[str] = Field(None, description="分布描述（行内或 file:路径）", examples=["bernoulli"])
    method: Optional[Literal["auto", "exact-enumeration", "monte-carlo"]] = None
    alpha_x: Optional[List[float]] = Field(None, description="α_x 扫描网格")
    side: Optional[int] = Field(None, ge=2, description="格点边长 L")
    boundary: Optional[Literal["periodic", "free"]] = None
    samples: Optional[int] = Field(None, ge=1, description="样本数")
    seed: Optional[int] = Field(None, ge=0, description="随机种子")
    precision: int = Field(6, ge=0, le=60, description="十进制位数")
    threads: Optional[int] = Field(None, ge=1, description="最大工作线程数（不影响结果）")
    allow_noncentered: bool = False
    output_format: OutputFormat = "human"
    output: Optional[str] = Field(None, description="输出文件路径，缺省为标准输出")

    model_config = {"extra": "forbid"}

    @field_validator("alpha_x")
    @classmethod
    def _finite_grid(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is not None and not all(math.isfinite(a) for a in value):
            raise ValueError("α_x 网格必须全部为有限值")
        return value

    def echo(self) -> dict:
        """可复现回显：去掉线程数与输出路径（二者不影响结果）"""
        return self.model_dump(mode="json", exclude={"threads", "output"}, exclude_none=True)
