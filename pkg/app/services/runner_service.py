import os
import time
from contextlib import contextmanager
from typing import Callable, Dict, List, Optional

from app.algebra.generators import GeneratorSet, Vertex
from app.algebra.ihallcore import HallAlgebra
from app.core.config import settings
from app.core.exceptions import ConfigError
from app.core.logger import setup_logger
from app.schemas.config import CapsConfig, RunConfig
from app.schemas.report import RelationRecord, VerifyReport
from app.services.lemma_service import LemmaService
from app.services.verifier_service import VerifierService

logger = setup_logger(__name__)


CAP_SETTINGS = {
    "MAX_TORSION_LENGTH": "torsion_length",
    "MAX_LINE_COUNT": "line_count",
    "MAX_INDEX": "max_index",
    "HOM_ENUM_BUDGET": "hom_budget",
}


@contextmanager
def applied_caps(caps: CapsConfig):
    """运行期间把上限写入全局设置 (引擎各层从 settings 读取), 退出时恢复"""
    saved = {name: getattr(settings, name) for name in CAP_SETTINGS}
    for name, field in CAP_SETTINGS.items():
        setattr(settings, name, getattr(caps, field))
    try:
        yield
    finally:
        for name, value in saved.items():
            setattr(settings, name, value)


class RunnerService:
    """按套件组织一次验证运行"""

    def __init__(self, config: RunConfig):
        self.config = config
        self.logger = logger
        self.algebra = HallAlgebra(config.q, config.weights, config.lambdas)
        self.generators = GeneratorSet(self.algebra, config.caps.max_index)
        self._bootstrapped = False
        self.verifier = VerifierService(self.generators)
        self.lemmas = LemmaService(self.generators, config.caps, config.seed)

    def prepare(self):
        if not self._bootstrapped:
            start = time.perf_counter()
            self.generators.bootstrap()
            self._bootstrapped = True
            self.logger.info(f"生成元构造完成, 耗时 {time.perf_counter() - start:.2f}s")

    # ---- 套件 ----

    def suite_relations(self, scope: str = "all") -> List[RelationRecord]:
        grid = self.verifier.relation_grid(scope)
        self.logger.info(f"关系实例 {len(grid)} 个 (范围 {scope})")
        return self.verifier.check_all(grid)

    def suite_lemmas(self) -> List[RelationRecord]:
        records = self.lemmas.identity_suite()
        if self.config.oracle:
            records.extend(self.lemmas.product_oracle(tube) for tube in self.lemmas.oracle_tubes())
        return records

    def suite_theorem_b(self) -> List[RelationRecord]:
        return self.lemmas.closed_form_suite()

    def suite_oracles(self) -> List[RelationRecord]:
        return self.lemmas.oracle_suite()

    def suite_associativity(self) -> List[RelationRecord]:
        return [self.lemmas.associativity()]

    def suite_negative(self) -> List[RelationRecord]:
        return self.verifier.check_negative()

    def suites(self) -> Dict[str, List[Callable[[], List[RelationRecord]]]]:
        relations = lambda scope: (lambda: self.suite_relations(scope))
        table = {
            "relations": [relations("all")],
            "relations:star": [relations("star")],
            "relations:tube": [relations("tube")],
            "lemmas": [self.suite_lemmas],
            "theorem-b": [self.suite_theorem_b],
            "oracles": [self.suite_oracles],
            "associativity": [self.suite_associativity],
            "negative": [self.suite_negative],
        }
        table["all"] = [
            relations("all"),
            self.suite_lemmas,
            self.suite_theorem_b,
            self.suite_oracles,
            self.suite_associativity,
            self.suite_negative,
        ]
        return table

    # ---- 运行 ----

    def execute(self) -> VerifyReport:
        start = time.perf_counter()
        records: List[RelationRecord] = []
        with applied_caps(self.config.caps):
            self.prepare()
            for step in self.suites()[self.config.suite]:
                records.extend(step())
        report = VerifyReport(
            project=settings.PROJECT_NAME,
            version=settings.VERSION,
            config=self.config.echo(),
            records=records,
            elapsed=time.perf_counter() - start,
        )
        counts = report.summary()
        self.logger.info("验证完成: " + ", ".join(f"{k}={v}" for k, v in counts.items()))
        return report

    def write_report(self, report: VerifyReport, path: Optional[str] = None) -> str:
        path = path or self.config.out or os.path.join(settings.REPORT_DIR, f"{self.config.suite.replace(':', '_')}.json")
        try:
            directory = os.path.dirname(path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(path, "w", encoding="utf-8") as f:
                f.write(report.json(indent=2, ensure_ascii=False))
        except OSError as e:
            self.logger.error(f"写入报告失败: {str(e)}")
            raise
        self.logger.info(f"报告已写入 {path}")
        return path

    def run(self) -> int:
        """执行所选套件并写出报告, 返回退出码"""
        report = self.execute()
        self.write_report(report)
        return 1 if report.failed else 0

    def dump_generator(self, target: str) -> str:
        """target 形如 VERTEX:KIND:INDEX, 例如 [1,1]:B:-1 或 star:Theta:0"""
        try:
            vertex, kind, index = target.rsplit(":", 2)
            index = int(index)
        except ValueError:
            raise ConfigError(f"无法解析生成元: {target}, 格式为 VERTEX:KIND:INDEX")
        mu = self.generators.check_vertex(Vertex.parse(vertex))
        with applied_caps(self.config.caps):
            if not mu.is_star:
                self.prepare()
            return self.generators.dump(kind, mu, index)
