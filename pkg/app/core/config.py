from pydantic import BaseSettings


class Settings(BaseSettings):
    """系统配置"""

    # 项目信息
    PROJECT_NAME: str = "iHall Verify"
    VERSION: str = "1.0.0"

    # 路径配置
    LOG_DIR: str = "logs"
    LOG_FILE: str = "ihall.log"
    LOG_LEVEL: str = "INFO"
    LOG_MAX_BYTES: int = 10 * 1024 * 1024
    REPORT_DIR: str = "reports"

    # 默认运行参数
    DEFAULT_Q: int = 2
    DEFAULT_WEIGHTS: str = "1,1"
    DEFAULT_SUITE: str = "relations"
    DEFAULT_SEED: int = 20

    # 计算上限
    MAX_TORSION_LENGTH: int = 12
    MAX_LINE_COUNT: int = 3
    MAX_INDEX: int = 2
    HOM_ENUM_BUDGET: int = 3 ** 9
    HOM_MODEL_CAP: int = 100
    FIELD_ORDER_CAP: int = 9
    IRREDUCIBLE_DEGREE_CAP: int = 8
    COPRIME_DEGREE_CAP: int = 6

    class Config:
        case_sensitive = True
        env_file = ".env"


# 创建设置实例
settings = Settings()
