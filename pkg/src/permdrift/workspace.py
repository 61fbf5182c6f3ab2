#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
运行配置与输出目录布局

一次运行的全部中间产物都放在同一个输出目录下，各阶段只通过这些文件交换数据。
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from .conf import (
    AOSP_LIST_FILE,
    CATEGORY_KEYWORD_FILE,
    DEFAULT_SWEEP,
    DEFAULT_THRESHOLD,
    DEFAULT_WORKERS,
    GROUP_CATALOG_FILE,
    OUTPUT_DIR,
    PERMISSION_LABEL_FILE,
    SDK_PREFIX_FILE,
)
from .errors import InvalidConfig, MissingInput
from .models import VtLabelConfig

logger = logging.getLogger("permdrift.workspace")


class RunLayout:
    """
    输出目录布局

    目录结构:
        <out>/
            facts.jsonl           -- 每个成功解析的 APK 一行 ApkFacts
            scan_errors.jsonl     -- 解析失败的 APK 与原因
            apk_index.json        -- sha256 -> APK 路径，供 pairs 阶段回读 DEX
            events.jsonl          -- 扩张事件
            chains_summary.json   -- 每个多版本应用的标签输入
            summary.json          -- 扩张汇总
            stats.json / sweep.csv
            custom.jsonl / custom_summary.json
            pairs.jsonl
            simulation.json
            notifications.jsonl / monitor_summary.json
            report/               -- 渲染后的报告
    """

    def __init__(self, base_dir: Path = None):
        self.base_dir = Path(base_dir or OUTPUT_DIR)

    def ensure(self) -> None:
        self.base_dir.mkdir(parents=True, exist_ok=True)

    @property
    def facts(self) -> Path:
        return self.base_dir / "facts.jsonl"

    @property
    def scan_errors(self) -> Path:
        return self.base_dir / "scan_errors.jsonl"

    @property
    def apk_index(self) -> Path:
        return self.base_dir / "apk_index.json"

    @property
    def events(self) -> Path:
        return self.base_dir / "events.jsonl"

    @property
    def chains_summary(self) -> Path:
        return self.base_dir / "chains_summary.json"

    @property
    def summary(self) -> Path:
        return self.base_dir / "summary.json"

    @property
    def stats(self) -> Path:
        return self.base_dir / "stats.json"

    @property
    def sweep(self) -> Path:
        return self.base_dir / "sweep.csv"

    @property
    def custom(self) -> Path:
        return self.base_dir / "custom.jsonl"

    @property
    def custom_summary(self) -> Path:
        return self.base_dir / "custom_summary.json"

    @property
    def pairs(self) -> Path:
        return self.base_dir / "pairs.jsonl"

    @property
    def simulation(self) -> Path:
        return self.base_dir / "simulation.json"

    @property
    def notifications(self) -> Path:
        return self.base_dir / "notifications.jsonl"

    @property
    def monitor_summary(self) -> Path:
        return self.base_dir / "monitor_summary.json"

    @property
    def report_dir(self) -> Path:
        return self.base_dir / "report"

    def report_file(self, name: str) -> Path:
        return self.report_dir / name

    def require(self, *paths: Path) -> None:
        """
        检查上游产物是否存在

        Raises:
            MissingInput: 第一个缺失的文件
        """
        for path in paths:
            if not path.exists():
                raise MissingInput(path)


@dataclass
class RunConfig:
    """
    一次 CLI 调用的配置

    数据文件默认取包内 data/ 下的版本；options 保存各阶段自己的参数。
    """

    out: Path = OUTPUT_DIR
    input_dir: Optional[Path] = None
    metadata: Optional[Path] = None
    catalog: Path = GROUP_CATALOG_FILE
    sdk_prefixes: Path = SDK_PREFIX_FILE
    keywords: Path = CATEGORY_KEYWORD_FILE
    aosp_list: Path = AOSP_LIST_FILE
    labels: Path = PERMISSION_LABEL_FILE
    threshold: int = DEFAULT_THRESHOLD
    sweep: Tuple[int, ...] = DEFAULT_SWEEP
    workers: int = DEFAULT_WORKERS
    debug: bool = False
    options: Dict[str, Any] = field(default_factory=dict)

    @property
    def vt(self) -> VtLabelConfig:
        return VtLabelConfig(threshold=self.threshold, sweep=self.sweep)

    def option(self, name: str, default: Any = None) -> Any:
        value = self.options.get(name)
        return default if value is None else value

    def validate(self) -> "RunConfig":
        """
        校验配置

        Raises:
            InvalidConfig: 引用的文件不存在、worker 数 < 1 或阈值非法
        """
        problems = []
        if self.workers < 1:
            problems.append(f"--workers 必须 >= 1: {self.workers}")
        for flag, path in (
            ("--input", self.input_dir),
            ("--metadata", self.metadata),
            ("--catalog", self.catalog),
            ("--sdk-prefixes", self.sdk_prefixes),
            ("--keywords", self.keywords),
            ("--aosp-list", self.aosp_list),
            ("--labels", self.labels),
        ):
            if path is not None and not Path(path).exists():
                problems.append(f"{flag} 不存在: {path}")
        try:
            self.vt
        except ValueError as e:
            problems.append(str(e))
        if problems:
            raise InvalidConfig("; ".join(problems))
        return self
