"""阶段化日志工具

所有 logger 都挂在 "permdrift" 命名空间下，根 logger 不动。

    log = get_logger("scan")
    with log.step("扫描 APK", workers=4) as s:
        ...
        s.tally(MalformedContainer=1)
        s.add_field(parsed=1200)

结束行形如 ``✓ 扫描 APK elapsed=3.20s parsed=1200 MalformedContainer=1``，
字段统一是 key=value，方便在 permdrift.log 里 grep。
"""

from __future__ import annotations

import logging
import sys
import time
from collections import Counter
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, Mapping, Optional

from ..conf import CONSOLE_LOG_LEVEL, LOG_LEVEL, LOGS_DIR

NAMESPACE = "permdrift"
LOG_FILE_NAME = "permdrift.log"

_MARK = {"start": "▶", "ok": "✓", "fail": "✗"}

_RESET = "\033[0m"
_DIM = "\033[2m"
_LEVEL_COLORS = {
    "DEBUG": _DIM,
    "INFO": "\033[36m",
    "WARNING": "\033[33m",
    "ERROR": "\033[31m",
    "CRITICAL": "\033[31m",
}


def _render_value(value: Any) -> str:
    if isinstance(value, float):
        text = f"{value:.4g}"
    elif isinstance(value, Path):
        text = value.as_posix()
    elif isinstance(value, (list, tuple, set, frozenset)):
        text = ",".join(str(v) for v in value)
    else:
        text = str(value)
    if not text or " " in text or "=" in text:
        return f'"{text}"'
    return text


def render_fields(fields: Mapping[str, Any]) -> str:
    """把结构化字段拼成 " k=v k=v"，None 值省略"""
    parts = [f"{k}={_render_value(v)}" for k, v in fields.items() if v is not None]
    return " " + " ".join(parts) if parts else ""


def _level_from(name: str) -> int:
    return getattr(logging, name.upper(), logging.INFO)


class _ConsoleFormatter(logging.Formatter):
    """终端：时分秒 + 彩色级别 + 组件"""

    def __init__(self, color: bool):
        super().__init__()
        self.color = color

    def format(self, record: logging.LogRecord) -> str:
        ts = self.formatTime(record, "%H:%M:%S")
        component = getattr(record, "component", record.name)
        line = f"{ts} {record.levelname:<5} [{component}] {record.getMessage()}"
        if self.color:
            tint = _LEVEL_COLORS.get(record.levelname, "")
            line = (
                f"{_DIM}{ts}{_RESET} {tint}{record.levelname:<5}{_RESET} "
                f"{_DIM}[{component}]{_RESET} {record.getMessage()}"
            )
        if record.exc_info:
            line += "\n" + self.formatException(record.exc_info)
        return line


class _FileFormatter(logging.Formatter):
    """日志文件：完整日期，带进程号（scan/expand 会用进程池）"""

    def format(self, record: logging.LogRecord) -> str:
        ts = self.formatTime(record, "%Y-%m-%d %H:%M:%S")
        component = getattr(record, "component", record.name)
        line = f"{ts} | {record.levelname:<5} | {record.process} | [{component}] {record.getMessage()}"
        if record.exc_info:
            line += "\n" + self.formatException(record.exc_info)
        return line


def _namespace_logger() -> logging.Logger:
    return logging.getLogger(NAMESPACE)


def setup_logging() -> None:
    """初始化 permdrift logger（幂等），只装终端 handler。

    外部 handler（如 pytest 的 caplog）挂在根 logger 上，靠 propagate 照常收到记录。
    """
    base = _namespace_logger()
    if getattr(base, "_permdrift_console", None) is not None:
        return
    base.setLevel(_level_from(LOG_LEVEL))
    console = logging.StreamHandler()
    console.setLevel(_level_from(CONSOLE_LOG_LEVEL))
    console.setFormatter(_ConsoleFormatter(color=sys.stderr.isatty()))
    for h in list(base.handlers):
        base.removeHandler(h)
    base.addHandler(console)
    base._permdrift_console = console  # type: ignore[attr-defined]


def enable_file_logging(logs_dir: Path = LOGS_DIR) -> Path:
    """追加 <logs_dir>/permdrift.log 文件 handler，返回日志文件路径

    库函数本身不落盘，只有 CLI 启动时调用。同一进程里换了输出目录
    （测试里很常见）时，旧的文件 handler 会被关闭替换。
    """
    setup_logging()
    base = _namespace_logger()
    target = (Path(logs_dir) / LOG_FILE_NAME).resolve()
    current: Optional[logging.FileHandler] = getattr(base, "_permdrift_file", None)
    if current is not None:
        if Path(current.baseFilename) == target:
            return target
        base.removeHandler(current)
        current.close()
    target.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(target, mode="a", encoding="utf-8")
    handler.setFormatter(_FileFormatter())
    base.addHandler(handler)
    base._permdrift_file = handler  # type: ignore[attr-defined]
    return target


def set_console_level(level: int) -> None:
    """--debug：logger 与终端 handler 一起调级，文件 handler 跟随 logger"""
    setup_logging()
    base = _namespace_logger()
    base.setLevel(level)
    base._permdrift_console.setLevel(level)  # type: ignore[attr-defined]


class StepLogger(logging.LoggerAdapter):
    """带组件标签的日志适配器

    info/warning/error/debug 都接受 key=value 关键字参数作为结构化字段。
    """

    def __init__(self, logger: logging.Logger, component: str):
        super().__init__(logger, {"component": component})
        self.component = component

    def process(self, msg, kwargs):
        kwargs.setdefault("extra", {}).setdefault("component", self.component)
        return msg, kwargs

    def log(self, level: int, msg: Any, *args: Any, exc_info: Any = None, **fields: Any) -> None:  # type: ignore[override]
        if not self.isEnabledFor(level):
            return
        text, kwargs = self.process(f"{msg}{render_fields(fields)}", {"exc_info": exc_info})
        self.logger.log(level, text, *args, **kwargs)

    @contextmanager
    def step(self, name: str, **fields: Any) -> Iterator["StepHandle"]:
        """记录一个步骤：开始一行，结束一行（耗时 + 附加字段 + 计数）

        块内抛出的异常记 ERROR 后原样 raise。
        """
        self.info(f"{_MARK['start']} {name}", **fields)
        handle = StepHandle(self)
        started = time.monotonic()
        try:
            yield handle
        except Exception as exc:
            self.error(
                f"{_MARK['fail']} {name}",
                elapsed=f"{time.monotonic() - started:.2f}s",
                error=type(exc).__name__,
                reason=str(exc)[:200],
            )
            raise
        self.info(
            f"{_MARK['ok']} {name}",
            elapsed=f"{time.monotonic() - started:.2f}s",
            **handle.fields,
        )


class StepHandle:
    """step() 块内可用：附加结束行字段、按类别计数、输出中间进度"""

    def __init__(self, log: StepLogger):
        self._log = log
        self._fields: dict[str, Any] = {}
        self._counts: Counter = Counter()

    @property
    def fields(self) -> dict[str, Any]:
        merged = dict(self._fields)
        merged.update(sorted(self._counts.items()))
        return merged

    def add_field(self, **fields: Any) -> None:
        self._fields.update(fields)

    def tally(self, **counts: int) -> None:
        self._counts.update(counts)

    def detail(self, msg: str, **fields: Any) -> None:
        self._log.debug(f"  · {msg}", **fields)


def get_logger(name: str) -> StepLogger:
    """permdrift.<name> 的 StepLogger；name 同时作为输出里的组件标签"""
    setup_logging()
    return StepLogger(logging.getLogger(f"{NAMESPACE}.{name}"), name)
