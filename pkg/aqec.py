"""
aqec 命令行入口
近似量子纠错数值工作台

命令：
- analyze  区域可纠错性、清理与等价性检验
- bounds   权衡界扫描、profile 与距离界
- cache    缓存统计与清理

退出码：0 全部通过，1 存在失败的检验，2 配置错误
"""
import argparse
import asyncio
import json
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from logging_config import setup_logging
from models.config import UVLOOP_AVAILABLE, config
from models.errors import ConfigError
from models.reports import ExperimentConfig
from routes.analyze import EXIT_CONFIG, cmd_analyze
from routes.bounds import cmd_bounds
from routes.cache import cmd_cache
from services.cache_service import CacheService

logger = logging.getLogger("aqec")


def load_experiment(path: str) -> ExperimentConfig:
    """读取并校验 JSON 实验配置"""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except OSError as e:
        raise ConfigError(f"无法读取配置 {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"配置不是合法 JSON: {e}") from e
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"配置校验失败:\n{e}") from e


def _global_options(default) -> argparse.ArgumentParser:
    """全局参数；子命令上以 SUPPRESS 为默认值，避免覆盖写在子命令之前的取值"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=default, help="覆盖配置中的随机种子")
    common.add_argument("--jobs", type=int, default=default, help=f"并发任务数（默认 {config.DEFAULT_JOBS}）")
    common.add_argument("--out", default=default, help="覆盖配置中的输出目录")
    common.add_argument("--cache-dir", default=default, help=f"缓存目录（默认 {config.CACHE_DIR}，或 AQEC_CACHE_DIR）")
    common.add_argument("--log-level", default=default, help="日志级别，如 DEBUG / INFO")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _global_options(argparse.SUPPRESS)
    parser = argparse.ArgumentParser(prog="aqec", description="近似量子纠错数值工作台",
                                     parents=[_global_options(None)])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("analyze", "区域可纠错性检验"), ("bounds", "权衡界与距离界")):
        cmd = sub.add_parser(name, help=text, parents=[common])
        cmd.add_argument("--config", required=True, help="JSON 实验配置路径")
    cache = sub.add_parser("cache", help="缓存统计与清理", parents=[common])
    cache.add_argument("action", choices=["stats", "gc"])
    cache.add_argument("--max-age", type=float, default=None, help="gc 只删除早于该秒数的条目；0 或省略为全部")
    return parser


def _run(coro):
    if UVLOOP_AVAILABLE:
        import uvloop
        return uvloop.run(coro)
    return asyncio.run(coro)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else 0
    level = getattr(logging, args.log_level.upper(), None) if args.log_level else None
    setup_logging(level)
    cache = CacheService(args.cache_dir) if args.cache_dir else CacheService()

    if args.command == "cache":
        return cmd_cache(args.action, args.max_age, cache)

    try:
        cfg = load_experiment(args.config)
    except ConfigError as e:
        logger.error(f"❌ {str(e)}")
        return EXIT_CONFIG
    overrides = {k: v for k, v in (("seed", args.seed), ("out", args.out)) if v is not None}
    if overrides:
        cfg = cfg.model_copy(update=overrides)

    if args.command == "analyze":
        return _run(cmd_analyze(cfg, jobs=args.jobs, cache=cache))
    return _run(cmd_bounds(cfg))


if __name__ == "__main__":
    sys.exit(main())
