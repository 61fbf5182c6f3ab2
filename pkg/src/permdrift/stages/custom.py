#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
custom 阶段：找出自定义权限，统计保护级别与 normal 权限保护的组件类型
"""

import argparse

from ..analysis import classify_custom
from ..catalog import load_aosp_list
from ..core.base_stage import BaseStage
from ..models import ApkFacts
from ..utils.jsonl import read_records, write_json, write_jsonl
from ..workspace import RunConfig, RunLayout


class CustomStage(BaseStage):
    name = "custom"
    description = "分类自定义权限，写出 custom.jsonl 与 custom_summary.json"
    order = 40
    in_pipeline = True

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument(
            "--year",
            type=int,
            help="只把截至该年发布的 AOSP 权限视为平台权限 (默认全部年份)",
        )

    def run(self, config: RunConfig, layout: RunLayout) -> int:
        layout.require(layout.facts)
        aosp = load_aosp_list(config.aosp_list)
        year = config.option("year")

        with self.logger.step("分类自定义权限", aosp=len(aosp), year=year) as s:
            result = classify_custom(read_records(layout.facts, ApkFacts.from_dict), aosp, year)
            write_jsonl(layout.custom, (r.to_dict() for r in result.records))
            write_json(layout.custom_summary, result.to_dict())
            s.add_field(total=result.total, normal=result.histogram.get("normal", 0))
        return 0
