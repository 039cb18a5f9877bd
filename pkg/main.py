"""
ea-bounds 命令行主入口

子命令：bound classical、bound quantum、upper、verify、analyze frustration
"""
import argparse
import logging
import sys
import traceback
from typing import List, Optional

from pydantic import ValidationError

from app.commands.bound_commands import cmd_bound_classical, cmd_bound_quantum
from app.commands.upper_commands import cmd_upper
from app.commands.verify_commands import cmd_analyze_frustration, cmd_verify
from app.schemas.run_config import RunConfig
from app.utils.response import ExitCode
from config import config

logger = logging.getLogger(__name__)

COMMANDS = {
    "bound classical": cmd_bound_classical,
    "bound quantum": cmd_bound_quantum,
    "upper": cmd_upper,
    "verify": cmd_verify,
    "analyze frustration": cmd_analyze_frustration,
}

DEFAULT_FORMATS = {
    "bound classical": "human",
    "bound quantum": "csv",
    "upper": "json",
    "verify": "human",
    "analyze frustration": "human",
}


def configure_logging(level: str) -> None:
    """日志只写标准错误，标准输出保持逐字节可复现"""
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.WARNING),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )


def parse_grid(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"无法解析 α_x 网格: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", dest="output_format", choices=("json", "csv", "human"), help="输出格式")
    common.add_argument("--output", "-o", help="输出文件路径（缺省为标准输出）")
    common.add_argument("--precision", type=int, default=config.DEFAULT_PRECISION, help="十进制位数")
    common.add_argument("--threads", type=int, help="最大工作线程数（缺省为 CPU 核数；不影响结果）")
    common.add_argument("--seed", type=int, help="随机种子")
    common.add_argument("--log-level", default=config.LOG_LEVEL, help="日志级别")

    parser = argparse.ArgumentParser(
        prog=config.APP_NAME,
        description="Edwards–Anderson 自旋玻璃基态能量的严格下界（精确有理数运算）",
    )
    parser.add_argument("--version", action="version", version=f"{config.APP_NAME} {config.APP_VERSION}")
    groups = parser.add_subparsers(dest="group", required=True)

    bound = groups.add_parser("bound", help="单元分解下界")
    kinds = bound.add_subparsers(dest="kind", required=True)

    classical = kinds.add_parser("classical", parents=[common], help="经典 Ising 单元下界")
    classical.add_argument("--dim", dest="dimension", type=int, required=True, choices=(2, 3))
    classical.add_argument("--dist", dest="distribution", default="bernoulli",
                           help="bernoulli[:J] | point:v | normal[:sigma] | uniform[:a] | file:PATH")
    classical.add_argument("--method", choices=("auto", "exact-enumeration", "monte-carlo"), default="auto")
    classical.add_argument("--samples", type=int, help="蒙特卡罗样本数")
    classical.add_argument("--allow-noncentered", action="store_true", help="允许 Av(J) != 0 的分布（结果不受下界定理保证）")

    quantum = kinds.add_parser("quantum", parents=[common], help="量子单元下界的 α_x 扫描（α_y = 0, α_z = 1）")
    quantum.add_argument("--dim", dest="dimension", type=int, required=True, choices=(2, 3))
    quantum.add_argument("--dist", dest="distribution", default="bernoulli")
    quantum.add_argument("--alpha-x", dest="alpha_x", type=parse_grid, default=[0.0], help="逗号分隔，如 0,0.5,1")
    quantum.add_argument("--samples", type=int, help="连续分布的蒙特卡罗样本数")
    quantum.add_argument("--allow-noncentered", action="store_true")

    upper = groups.add_parser("upper", parents=[common], help="有限格点精确基态采样（上界侧）")
    upper.add_argument("--dim", dest="dimension", type=int, required=True, choices=(2, 3))
    upper.add_argument("--L", dest="side", type=int, required=True, help="格点边长")
    upper.add_argument("--boundary", choices=("periodic", "free"), help="缺省：规模允许时用周期边界")
    upper.add_argument("--dist", dest="distribution", default="bernoulli")
    upper.add_argument("--samples", type=int, default=200)

    verify = groups.add_parser("verify", parents=[common], help="运行性质校验套件")
    verify.add_argument("--samples", type=int, default=100, help="逐样本不等式校验的样本数")

    analyze = groups.add_parser("analyze", help="分析")
    analyses = analyze.add_subparsers(dest="kind", required=True)
    frustration = analyses.add_parser("frustration", parents=[common], help="阻挫计数与元格能量")
    frustration.add_argument("--dim", dest="dimension", type=int, choices=(2, 3))
    frustration.add_argument("--L", dest="side", type=int, help="同时分析一个抽样格点")
    frustration.add_argument("--boundary", choices=("periodic", "free"))
    frustration.add_argument("--dist", dest="distribution", default="bernoulli")
    return parser


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """把命令行参数整理为可回显的 RunConfig"""
    subcommand = args.group if getattr(args, "kind", None) is None else f"{args.group} {args.kind}"
    fields = {
        name: getattr(args, name)
        for name in ("dimension", "distribution", "method", "alpha_x", "side", "boundary", "samples",
                     "seed", "precision", "threads", "output")
        if getattr(args, name, None) is not None
    }
    return RunConfig(
        subcommand=subcommand,
        allow_noncentered=getattr(args, "allow_noncentered", False),
        output_format=args.output_format or DEFAULT_FORMATS[subcommand],
        **fields,
    )


def main(argv: Optional[List[str]] = None) -> int:
    """
    命令行入口

    Returns:
        int: 退出码
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    try:
        run_config = build_run_config(args)
    except ValidationError as e:
        sys.stderr.write(f"error: 参数不合法: {e}\n")
        return ExitCode.CONFIG_ERROR

    logger.info(f"{config.APP_NAME} {config.APP_VERSION}: {run_config.subcommand}")
    try:
        return COMMANDS[run_config.subcommand](run_config)
    except Exception as e:
        logger.error(f"未处理的异常: {e}")
        logger.error(f"异常堆栈: {traceback.format_exc()}")
        sys.stderr.write(f"error: 内部错误: {e}\n")
        return ExitCode.INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
