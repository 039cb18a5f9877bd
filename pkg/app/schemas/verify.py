"""
校验套件输出模型
"""
from typing import Any, Dict, List

from pydantic import BaseModel, Field


class CheckResult(BaseModel):
    """单项校验结果"""
    name: str = Field(..., examples=["cube-parity-census"])
    passed: bool
    summary: str = Field(..., description="一行说明")
    detail: Dict[str, Any] = Field(default_factory=dict)


class VerifyReport(BaseModel):
    """校验套件汇总"""
    seed: int
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]
