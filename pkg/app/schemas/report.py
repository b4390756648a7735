from pydantic import BaseModel, Field
from typing import Dict, List, Optional

HOLDS = "holds"
FAILS = "fails"
SKIPPED = "skipped"
CONSUMED = "consumed-by-bootstrap"

# 失败实例的附注: 涉及的 Ĥ 只由递推定义
BOOTSTRAP_ONLY = "bootstrap-only"

NATIVE = "native"
P1_IMAGE = "P1-image"
PERPENDICULAR = "perpendicular(2,1)"


class RelationInstance(BaseModel):
    """一个待检验的关系实例"""
    relation: str
    mu: Optional[str] = None
    nu: Optional[str] = None
    params: Dict[str, int] = Field(default_factory=dict)
    transport: str = Field(default=NATIVE, description="native / P1-image / perpendicular(2,1)")

    def label(self) -> str:
        verts = ",".join(x for x in (self.mu, self.nu) if x)
        args = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.relation}({verts};{args})"


class RelationRecord(BaseModel):
    """单个实例的检验结果"""
    instance: RelationInstance
    status: str
    residual: Optional[str] = Field(default=None, description="失败时的残差, 逐项输出")
    reason: Optional[str] = None
    elapsed: float = 0.0


class VerifyReport(BaseModel):
    """验证报告"""
    project: str
    version: str
    config: Dict
    records: List[RelationRecord] = Field(default_factory=list)
    elapsed: float = 0.0

    def summary(self) -> Dict[str, int]:
        counts = {HOLDS: 0, FAILS: 0, SKIPPED: 0, CONSUMED: 0}
        for record in self.records:
            counts[record.status] = counts.get(record.status, 0) + 1
        return counts

    @property
    def failed(self) -> bool:
        return any(r.status == FAILS for r in self.records)

    def body(self) -> Dict:
        """去掉计时字段后的内容, 用于比较"""
        data = self.dict(exclude={"elapsed"})
        for record in data["records"]:
            record.pop("elapsed", None)
        return data
