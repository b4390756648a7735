import argparse
import sys
from typing import Dict, List, Optional

from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import CapExceededError, ConfigError
from app.core.logger import setup_logger
from app.schemas.config import SUITES, RunConfig, load_config_file
from app.services.runner_service import RunnerService

logger = setup_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ihall-verify",
        description=f"{settings.PROJECT_NAME} {settings.VERSION}: 加权射影直线 ıHall 代数的关系验证",
    )
    parser.add_argument("--config", help="KEY=VALUE 形式的配置文件")
    parser.add_argument("--suite", choices=SUITES, help="验证套件")
    parser.add_argument("--q", type=int, help="基域阶数")
    parser.add_argument("--weights", help="权重, 例如 2,2")
    parser.add_argument("--lambda", dest="lambdas", help="例外点参数 λ_3..λ_t")
    parser.add_argument("--max-index", type=int, help="关系实例的下标范围")
    parser.add_argument("--out", help="报告输出路径")
    parser.add_argument("--oracle", action="store_true", default=None, help="强制开启暴力交叉校验")
    parser.add_argument("--seed", type=int, help="结合律随机三元组种子")
    parser.add_argument("--dump", metavar="VERTEX:KIND:INDEX", help="输出一个生成元后退出")
    return parser


def merge_args(args: argparse.Namespace) -> Dict:
    """配置文件在前, 命令行参数覆盖"""
    data: Dict = load_config_file(args.config) if args.config else {}
    for key in ("suite", "q", "weights", "out", "oracle", "seed"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if args.lambdas is not None:
        data["lambda"] = args.lambdas
    if args.max_index is not None:
        data.setdefault("caps", {})["max_index"] = args.max_index
    return data


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig(**merge_args(args))
    except ConfigError as e:
        logger.error(f"配置错误: {e.message}")
        return 2
    except ValidationError as e:
        logger.error(f"配置校验失败: {str(e)}")
        return 2

    try:
        runner = RunnerService(config)
        if args.dump:
            print(runner.dump_generator(args.dump))
            return 0
        return runner.run()
    except ConfigError as e:
        logger.error(f"配置错误: {e.message}")
        return 2
    except CapExceededError as e:
        logger.error(f"超出计算上限: {e.message}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
