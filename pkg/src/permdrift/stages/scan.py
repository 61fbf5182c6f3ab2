#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
scan 阶段：解析 APK 目录，写出 ApkFacts JSONL 与错误日志
"""

import argparse
import sys
from pathlib import Path
from typing import List

from ..core.base_stage import BaseStage
from ..errors import InvalidConfig, MissingInput
from ..manifest import load_metadata, scan_directory
from ..utils.jsonl import write_json, write_jsonl
from ..workspace import RunConfig, RunLayout


class ScanStage(BaseStage):
    name = "scan"
    description = "解析 APK 目录，写出 facts.jsonl 与 scan_errors.jsonl"
    order = 10
    in_pipeline = True

    @property
    def examples(self) -> List[str]:
        return ["permdrift scan --input apks/ --metadata latest.csv --out out/"]

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument(
            "--no-progress", action="store_true", help="不显示进度条"
        )

    def run(self, config: RunConfig, layout: RunLayout) -> int:
        if config.input_dir is None:
            raise InvalidConfig("scan 需要 --input 指定 APK 目录")
        input_dir = Path(config.input_dir)
        if not input_dir.is_dir():
            raise MissingInput(input_dir)
        layout.ensure()

        index = {}
        if config.metadata is not None:
            with self.logger.step("加载元数据", path=config.metadata) as s:
                index = load_metadata(Path(config.metadata))
                s.add_field(rows=len(index))

        progress = not config.option("no_progress", False) and sys.stderr.isatty()
        with self.logger.step("扫描 APK", input=input_dir, workers=config.workers) as s:
            outcomes = scan_directory(input_dir, index, workers=config.workers, progress=progress)
            parsed = [o for o in outcomes if o.facts is not None]
            failed = [o for o in outcomes if o.facts is None]
            for o in failed:
                self.logger.warning("APK 解析失败", sha256=o.sha256, error=o.error, reason=o.reason)
                s.tally(**{o.error or "Unknown": 1})
            write_jsonl(layout.facts, (o.facts.to_dict() for o in parsed))
            write_jsonl(layout.scan_errors, (o.error_dict() for o in failed))
            write_json(layout.apk_index, {o.sha256: o.path for o in parsed})
            s.add_field(parsed=len(parsed), failed=len(failed))

        if not parsed:
            self.logger.error("没有成功解析的 APK", input=input_dir, files=len(outcomes))
            return 2
        if index:
            unmatched = sum(1 for o in parsed if not o.facts.has_metadata)
            if unmatched:
                self.logger.warning("部分 APK 在元数据中没有对应行", count=unmatched)
        return 0
