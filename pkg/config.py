"""
项目配置文件
"""
import os
from dotenv import load_dotenv

# 加载环境变量
load_dotenv()


class Config:
    """基础配置类"""

    # 应用基础配置
    APP_NAME = "ea-bounds"
    APP_VERSION = "1.0.0"
    SCHEMA_VERSION = "ea-bounds/1"
    DEBUG = os.getenv("DEBUG", "False").lower() == "true"
    LOG_LEVEL = os.getenv("LOG_LEVEL", "WARNING").upper()

    # 输出配置
    DEFAULT_PRECISION = int(os.getenv("DEFAULT_PRECISION", 6))

    # 枚举规模上限（耦合配置数）
    ENUMERATION_GUARD = int(os.getenv("ENUMERATION_GUARD", 10**8))

    # 有限格点精确基态的规模上限
    DP_MAX_FREE = int(os.getenv("DP_MAX_FREE", 12))
    DP_MAX_PERIODIC = int(os.getenv("DP_MAX_PERIODIC", 8))
    EXHAUSTIVE_MAX_SITES = int(os.getenv("EXHAUSTIVE_MAX_SITES", 27))

    # 随机数与并行
    DEFAULT_SEED = int(os.getenv("DEFAULT_SEED", 42))
    DEFAULT_THREADS = int(os.getenv("DEFAULT_THREADS", os.cpu_count() or 1))
    MC_BLOCK_SIZE = int(os.getenv("MC_BLOCK_SIZE", 4096))

    # 本征求解容差
    EIGEN_RESIDUAL_TOL = float(os.getenv("EIGEN_RESIDUAL_TOL", 1e-10))
    AVERAGE_TOL = float(os.getenv("AVERAGE_TOL", 1e-9))


class DevelopmentConfig(Config):
    """开发环境配置"""
    DEBUG = True


class ProductionConfig(Config):
    """生产环境配置"""
    DEBUG = False


class TestingConfig(Config):
    """测试环境配置"""
    DEBUG = True
    DEFAULT_THREADS = 1


# 根据环境变量选择配置
config_map = {
    "development": DevelopmentConfig,
    "production": ProductionConfig,
    "testing": TestingConfig,
}

# 获取当前环境配置
env = os.getenv("EA_BOUNDS_ENV", "development")
config = config_map.get(env, DevelopmentConfig)
