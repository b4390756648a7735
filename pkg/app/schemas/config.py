from pydantic import BaseModel, Field, validator, root_validator
from typing import Dict, List, Optional

from dotenv import dotenv_values

from app.algebra.qfield import check_ground_q
from app.core.config import settings
from app.core.exceptions import ConfigError, ScalarError

SUITES = (
    "relations",
    "relations:star",
    "relations:tube",
    "lemmas",
    "theorem-b",
    "oracles",
    "associativity",
    "negative",
    "all",
)


def parse_int_list(value) -> List[int]:
    if value is None or value == "":
        return []
    if isinstance(value, str):
        return [int(x) for x in value.replace(" ", "").split(",") if x]
    return [int(x) for x in value]


class CapsConfig(BaseModel):
    """计算上限"""
    torsion_length: int = Field(default=settings.MAX_TORSION_LENGTH, description="挠层总长度上限")
    line_count: int = Field(default=settings.MAX_LINE_COUNT, description="线丛直和项个数上限")
    max_index: int = Field(default=settings.MAX_INDEX, description="关系实例的下标范围")
    hom_budget: int = Field(default=settings.HOM_ENUM_BUDGET, description="Hom 枚举上限")
    samples: int = Field(default=200, description="结合律随机三元组个数")

    @validator("torsion_length", "line_count", "max_index", "hom_budget", "samples")
    def check_positive(cls, v):
        if v < 1:
            raise ValueError("上限必须为正整数")
        return v


class RunConfig(BaseModel):
    """一次验证运行的配置"""
    weights: List[int] = Field(default_factory=lambda: parse_int_list(settings.DEFAULT_WEIGHTS), description="权重类型 p")
    lambdas: List[int] = Field(default_factory=list, alias="lambda", description="例外点参数 λ_3..λ_t")
    q: int = Field(default=settings.DEFAULT_Q, description="基域阶数")
    caps: CapsConfig = Field(default_factory=CapsConfig)
    suite: str = Field(default=settings.DEFAULT_SUITE, description="验证套件")
    out: Optional[str] = Field(default=None, description="报告输出路径")
    oracle: bool = Field(default=False, description="强制开启暴力交叉校验")
    seed: int = Field(default=settings.DEFAULT_SEED, description="随机三元组种子")

    class Config:
        allow_population_by_field_name = True

    @validator("weights", "lambdas", pre=True)
    def split_list(cls, v):
        return parse_int_list(v)

    @validator("weights")
    def check_weights(cls, v):
        if len(v) < 2:
            raise ValueError(f"至少需要两个例外点, 实际为 {len(v)}")
        if any(p < 1 for p in v):
            raise ValueError(f"权重必须为正整数: {v}")
        return v

    @validator("q")
    def check_q(cls, v):
        try:
            return check_ground_q(v)
        except ScalarError as e:
            raise ValueError(e.message)

    @validator("suite")
    def check_suite(cls, v):
        if v not in SUITES:
            raise ValueError(f"未知的套件: {v}, 可选 {', '.join(SUITES)}")
        return v

    @root_validator(skip_on_failure=True)
    def check_lambdas(cls, values):
        weights, lambdas, q = values.get("weights"), values.get("lambdas"), values.get("q")
        t = len(weights)
        if not lambdas and t > 2:
            lambdas = list(range(1, t - 1))
            values["lambdas"] = lambdas
        if len(lambdas) != t - 2:
            raise ValueError(f"λ 的个数应为 {t - 2}")
        if len(set(lambdas)) != len(lambdas) or any(x <= 0 or x >= q for x in lambdas):
            raise ValueError(f"λ 必须为 F_{q} 中互异的非零元 (t <= q 才可能): {lambdas}")
        return values

    def echo(self) -> Dict:
        """写入报告的配置回显"""
        return self.dict(by_alias=True)


def load_config_file(path: str) -> Dict:
    """读取 KEY=VALUE 形式的配置文件"""
    raw = dotenv_values(path)
    if not raw:
        raise ConfigError(f"配置文件为空或不存在: {path}")
    data: Dict = {}
    caps: Dict = {}
    for key, value in raw.items():
        if key.startswith("caps."):
            caps[key[len("caps."):]] = value
        elif key == "oracle":
            data["oracle"] = str(value).lower() in ("1", "true", "yes", "on")
        elif key in ("weights", "lambda", "q", "suite", "out", "seed"):
            data[key] = value
        else:
            raise ConfigError(f"未知的配置项: {key}")
    if caps:
        data["caps"] = caps
    return data
