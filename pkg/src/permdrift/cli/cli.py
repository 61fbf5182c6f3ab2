#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
permdrift CLI 命令行工具

子命令由 StageLoader 动态发现，每个阶段一个子命令；另有 list 与 run。
退出码: 0 成功，1 内部错误，2 输入为空或非法，130 用户中断。
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

# Windows GBK 兼容：强制 stdout 使用 UTF-8
if sys.platform == "win32":
    sys.stdout.reconfigure(encoding="utf-8", errors="replace")

from .. import __logo__, __version__
from ..conf import DEFAULT_SWEEP, DEFAULT_THRESHOLD, DEFAULT_WORKERS, OUTPUT_DIR
from ..core.base_stage import BaseStage
from ..errors import InvalidConfig, MissingInput, PermdriftError
from ..stage_loader import get_stage_loader
from ..utils import enable_file_logging, get_logger, set_console_level
from ..workspace import RunConfig, RunLayout

LOGO = r"""
{}
      Android 权限组静默扩张与自定义权限关联分析 v{}
""".format(__logo__, __version__)

# 公共参数在 RunConfig 上有同名字段，其余参数放进 options
_COMMON_DESTS = (
    "out", "input", "metadata", "catalog", "sdk_prefixes", "keywords",
    "aosp_list", "labels", "threshold", "sweep", "workers", "debug",
)


def _parse_sweep(text: str) -> Tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"阈值列表应为逗号分隔的整数: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("阈值列表不能为空")
    return values


def _common_parser() -> argparse.ArgumentParser:
    """所有阶段共享的参数"""
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("公共参数")
    group.add_argument("--out", "-o", type=str, default=str(OUTPUT_DIR), help="输出目录")
    group.add_argument("--input", "-i", type=str, help="APK 目录")
    group.add_argument("--metadata", "-m", type=str, help="语料元数据 CSV")
    group.add_argument("--catalog", type=str, help="权限组目录 TSV (默认使用内置数据)")
    group.add_argument("--sdk-prefixes", type=str, help="第三方 SDK 包名前缀列表")
    group.add_argument("--keywords", type=str, help="列名关键词 -> 类别 TSV")
    group.add_argument("--aosp-list", type=str, help="AOSP 权限清单 TSV")
    group.add_argument("--labels", type=str, help="权限显示标签 TSV")
    group.add_argument(
        "--threshold", "-t", type=int, default=DEFAULT_THRESHOLD, help="VirusTotal 检出阈值"
    )
    group.add_argument(
        "--sweep",
        type=_parse_sweep,
        default=DEFAULT_SWEEP,
        help="敏感性扫描阈值，逗号分隔 (默认 2,5,10,20,39)",
    )
    group.add_argument(
        "--workers", "-w", type=int, default=DEFAULT_WORKERS, help="并发进程数"
    )
    group.add_argument("--debug", action="store_true", help="调试模式")
    return common


def build_config(args: argparse.Namespace) -> RunConfig:
    """命令行参数 -> 已校验的 RunConfig"""
    defaults = RunConfig()

    def path_or(value: Optional[str], default: Optional[Path]) -> Optional[Path]:
        return Path(value) if value else default

    options = {k: v for k, v in vars(args).items() if k not in _COMMON_DESTS and k not in ("command", "func")}
    config = RunConfig(
        out=Path(args.out),
        input_dir=path_or(args.input, None),
        metadata=path_or(args.metadata, None),
        catalog=path_or(args.catalog, defaults.catalog),
        sdk_prefixes=path_or(args.sdk_prefixes, defaults.sdk_prefixes),
        keywords=path_or(args.keywords, defaults.keywords),
        aosp_list=path_or(args.aosp_list, defaults.aosp_list),
        labels=path_or(args.labels, defaults.labels),
        threshold=args.threshold,
        sweep=tuple(args.sweep),
        workers=args.workers,
        debug=args.debug,
        options=options,
    )
    return config.validate()


def run_stage(stage: BaseStage, config: RunConfig, layout: RunLayout) -> int:
    """执行单个阶段，外层记录开始/结束"""
    with stage.logger.step(stage.name, out=layout.base_dir) as s:
        code = stage.run(config, layout)
        s.add_field(exit=code)
    return code


def cmd_stage(args) -> int:
    """执行某一个阶段"""
    stage = get_stage_loader().get_stage(args.command)
    config = build_config(args)
    layout = RunLayout(config.out)
    return run_stage(stage, config, layout)


def cmd_run(args) -> int:
    """按顺序执行整条语料流水线，任一阶段非 0 即停止"""
    logger = get_logger("run")
    config = build_config(args)
    layout = RunLayout(config.out)
    stages = get_stage_loader().pipeline()
    logger.info("流水线", stages=",".join(s.name for s in stages))
    for stage in stages:
        code = run_stage(stage, config, layout)
        if code != 0:
            logger.error("流水线中止", stage=stage.name, exit=code)
            return code
    return 0


def cmd_list(args) -> int:
    """列出所有已注册阶段"""
    stages = get_stage_loader().list_stages()

    print(f"\n{'=' * 50}")
    print("已注册的流水线阶段")
    print(f"{'=' * 50}")

    if not stages:
        print("  (无)")
    else:
        for stage in stages:
            mark = "*" if stage.in_pipeline else " "
            print(f"  {mark} {stage.name:10s} -- {stage.description}")

    print(f"\n  共 {len(stages)} 个阶段 (* 表示包含在 run 中)")
    print(f"{'=' * 50}\n")
    return 0


def create_parser() -> argparse.ArgumentParser:
    """创建命令行解析器"""
    parser = argparse.ArgumentParser(
        prog="permdrift",
        description="permdrift - Android 权限组静默扩张与自定义权限关联分析",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例:
  # 列出可用阶段
  permdrift list

  # 整条语料流水线
  permdrift run --input apks/ --metadata latest.csv --out out/

  # 单独执行某个阶段
  permdrift scan --input apks/ --metadata latest.csv --out out/
  permdrift stats --out out/ --threshold 20 --sweep 2,5,10,20,39
  permdrift simulate --nine-groups --out out/
""",
    )
    parser.add_argument(
        "-v", "--version", action="version", version=f"permdrift {__version__}"
    )

    subparsers = parser.add_subparsers(
        dest="command",
        title="命令",
        description="可用命令",
        help="使用 permdrift <命令> --help 查看详细帮助",
    )
    common = _common_parser()

    # ==================== list 命令 ====================
    list_parser = subparsers.add_parser(
        "list", help="列出所有已注册阶段", description="列出所有已注册的流水线阶段"
    )
    list_parser.set_defaults(func=cmd_list)

    # ==================== run 命令 ====================
    loader = get_stage_loader()
    run_parser = subparsers.add_parser(
        "run",
        parents=[common],
        help="依次执行 " + " -> ".join(s.name for s in loader.pipeline()),
        description="依次执行整条语料流水线",
    )
    for stage in loader.pipeline():
        stage.add_arguments(run_parser)
    run_parser.set_defaults(func=cmd_run)

    # ==================== 各阶段命令 ====================
    for stage in loader.list_stages():
        epilog = ""
        if stage.examples:
            epilog = "示例:\n" + "\n".join(f"  {e}" for e in stage.examples)
        stage_parser = subparsers.add_parser(
            stage.name,
            parents=[common],
            help=stage.description,
            description=stage.description,
            epilog=epilog or None,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        stage.add_arguments(stage_parser)
        stage_parser.set_defaults(func=cmd_stage)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """主函数入口"""
    parser = create_parser()
    args = parser.parse_args(argv)

    if not args.command:
        print(LOGO)
        parser.print_help()
        return 0

    logger = get_logger("cli")
    debug = getattr(args, "debug", False)
    if debug:
        set_console_level(logging.DEBUG)
    if hasattr(args, "out"):
        enable_file_logging(Path(args.out) / "logs")

    try:
        return args.func(args)
    except KeyboardInterrupt:
        print("\n\n用户中断操作\n")
        return 130
    except (MissingInput, InvalidConfig) as e:
        logger.error("输入缺失或非法", error=type(e).__name__, reason=str(e))
        return 2
    except PermdriftError as e:
        logger.error("执行失败", error=type(e).__name__, reason=str(e))
        if debug:
            import traceback

            traceback.print_exc()
        return 1
    except Exception as e:
        logger.error("内部错误", error=type(e).__name__, reason=str(e))
        if debug:
            import traceback

            traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
