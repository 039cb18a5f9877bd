"""
统一输出封装与异常层级
"""
import json
from typing import Any, Dict, Optional

from config import config


class ExitCode:
    """命令行退出码常量"""
    SUCCESS = 0              # 成功
    VERIFY_FAILED = 1        # 校验套件存在失败项
    INTERNAL_ERROR = 1       # 未处理的内部错误
    CONFIG_ERROR = 2         # 配置/参数错误
    GUARD_VIOLATION = 3      # 规模上限被触发
    THEOREM_VIOLATION = 4    # 逐样本不等式被违反
    SOLVER_ERROR = 5         # 本征求解失败


class ResultEnvelope:
    """输出结果封装（JSON 输出的统一外壳）"""

    def __init__(self, data: Any, run_config: Optional[Dict[str, Any]] = None):
        """
        初始化结果封装

        Args:
            data: 结果数据（已可 JSON 序列化）
            run_config: 运行配置回显
        """
        self.schema = config.SCHEMA_VERSION
        self.tool = config.APP_NAME
        self.version = config.APP_VERSION
        self.config = run_config or {}
        self.data = data

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典格式"""
        return {
            "schema": self.schema,
            "tool": self.tool,
            "version": self.version,
            "config": self.config,
            "data": self.data,
        }

    def to_json(self) -> str:
        """转换为JSON字符串（键排序，保证逐字节可复现）"""
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True, indent=2, default=str)


class EABoundsException(Exception):
    """自定义异常基类"""

    def __init__(self, code: int, message: str, data: Any = None):
        self.code = code
        self.message = message
        self.data = data
        super().__init__(message)

    def to_response(self) -> Dict[str, Any]:
        """转换为错误输出"""
        return {"code": self.code, "message": self.message, "data": self.data}


class ConfigException(EABoundsException):
    """配置或参数错误"""

    def __init__(self, message: str, data: Any = None):
        super().__init__(ExitCode.CONFIG_ERROR, message, data)


class AssumptionException(EABoundsException):
    """耦合分布不满足中心化假设"""

    def __init__(self, message: str = "耦合分布非中心化：Av(J) != 0", data: Any = None):
        super().__init__(ExitCode.CONFIG_ERROR, message, data)


class GuardException(EABoundsException):
    """计算规模超出上限"""

    def __init__(self, message: str, data: Any = None):
        super().__init__(ExitCode.GUARD_VIOLATION, message, data)


class SolverException(EABoundsException):
    """本征求解器未收敛或残差检查失败"""

    def __init__(self, message: str, data: Any = None):
        super().__init__(ExitCode.SOLVER_ERROR, message, data)


class TheoremViolationException(EABoundsException):
    """逐样本下界不等式被违反"""

    def __init__(self, message: str, data: Any = None):
        super().__init__(ExitCode.THEOREM_VIOLATION, message, data)


class VerificationFailed(EABoundsException):
    """校验套件存在失败项"""

    def __init__(self, message: str = "校验未全部通过", data: Any = None):
        super().__init__(ExitCode.VERIFY_FAILED, message, data)
