"""
regretlab 批处理命令行

    regretlab run <config.yaml> [--outdir DIR] [--workers N]
    regretlab verify <static|dynamics|all> [--quick] [--json]
    regretlab game info <name>
    regretlab analyze <trajectory.csv> <limit_set|perturbation|hannan|interpolate> --game <name>

退出码：0 通过，1 检查失败或模块失败，2 用法错误。错误记录以 JSON 写到 stdout。
环境变量 REGRETLAB_SEED 覆盖实验配置中的主种子。
"""

import argparse
import sys
from typing import List, Optional

from modules.YA_Common.utils.errors import UsageException
from modules.YA_Common.utils.helpers import format_table, print_server_banner
from modules.YA_Common.utils.logger import get_logger, set_console_level
from modules.YA_Common.utils.middleware import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, exception_handler

logger = get_logger("cli")


class _Parser(argparse.ArgumentParser):
    """参数错误转为 UsageException，由中间件统一输出错误记录"""

    def error(self, message):
        raise UsageException(message, {"usage": self.format_usage().strip()})


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="regretlab", description="无悔学习动力学实验室")
    parser.add_argument("-v", "--verbose", action="store_true", help="输出 DEBUG 日志")
    parser.add_argument("--banner", action="store_true", help="在 stderr 打印 banner")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p_run = sub.add_parser("run", help="运行一个实验配置")
    p_run.add_argument("config")
    p_run.add_argument("--outdir", default=None)
    p_run.add_argument("--workers", type=int, default=None, help="进程数，缺省为全部可用 CPU")

    p_verify = sub.add_parser("verify", help="执行验收检查套件")
    p_verify.add_argument("suite", choices=["static", "dynamics", "all"])
    p_verify.add_argument("--quick", action="store_true", help="缩小蒙特卡洛规模")
    p_verify.add_argument("--json", action="store_true", help="以 JSON 输出结果")

    p_game = sub.add_parser("game", help="博弈目录")
    game_sub = p_game.add_subparsers(dest="game_command", parser_class=_Parser)
    p_info = game_sub.add_parser("info", help="显示博弈信息")
    p_info.add_argument("name")
    game_sub.add_parser("list", help="列出目录中的博弈")

    p_analyze = sub.add_parser("analyze", help="分析导出的轨迹")
    p_analyze.add_argument("csv")
    p_analyze.add_argument("analysis", choices=["limit_set", "perturbation", "hannan", "interpolate"])
    p_analyze.add_argument("--game", required=True, help="目录名、生成器引用或博弈文件")
    return parser


def _print_json(obj) -> None:
    from core.trajectory_io import dumps

    sys.stdout.write(dumps(obj) + "\n")


def _cmd_run(args) -> int:
    from core.experiments import run_experiment

    result = run_experiment(args.config, output_dir=args.outdir, workers=args.workers)
    _print_json(result)
    return EXIT_OK


def _cmd_verify(args) -> int:
    from core.verification import verify_suite

    results = verify_suite(args.suite, quick=args.quick)
    if args.json:
        _print_json([r.to_dict() for r in results])
    else:
        rows = [
            (r.claim_id, r.claim, r.measured, r.threshold, "PASS" if r.passed else "FAIL", f"{r.seconds:.1f}s")
            for r in results
        ]
        print(format_table(rows, ["#", "claim", "measured", "threshold", "pass", "time"]))
    failed = [r.claim_id for r in results if not r.passed]
    if failed:
        logger.warning(f"未通过的检查: {failed}")
        return EXIT_FAILURE
    return EXIT_OK


def _cmd_game(args) -> int:
    if args.game_command == "info":
        from core.experiments import game_info

        _print_json(game_info(args.name))
        return EXIT_OK
    if args.game_command == "list":
        from core.catalog import list_entries

        _print_json(list_entries())
        return EXIT_OK
    raise UsageException("game 需要子命令: info <name> 或 list")


def _cmd_analyze(args) -> int:
    from core.experiments import analyze_trajectory

    _print_json(analyze_trajectory(args.game, args.csv, args.analysis))
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "verify": _cmd_verify,
    "game": _cmd_game,
    "analyze": _cmd_analyze,
}


@exception_handler
def dispatch(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        set_console_level("DEBUG")
    if args.banner:
        print_server_banner()
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    return COMMANDS[args.command](args)


def main(argv: Optional[List[str]] = None) -> int:
    return dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
