#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
simulate 阶段：在模拟设备上回放安装 / 授权 / 更新场景
"""

import argparse
from pathlib import Path
from typing import List

from ..catalog import load_aosp_list, load_catalog
from ..conf import DEFAULT_SIMULATOR_YEAR
from ..core.base_stage import BaseStage
from ..errors import InvalidConfig
from ..simulator import nine_group_scenario, run_scenario, verify_prompt_log
from ..utils.jsonl import iter_jsonl, write_json
from ..workspace import RunConfig, RunLayout


class SimulateStage(BaseStage):
    name = "simulate"
    description = "回放授权场景，记录每次更新是弹窗还是静默授予，写出 simulation.json"
    order = 60

    @property
    def examples(self) -> List[str]:
        return [
            "permdrift simulate --nine-groups --out out/",
            "permdrift simulate --scenario scenario.jsonl --year 2019",
        ]

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        source = parser.add_mutually_exclusive_group()
        source.add_argument("--scenario", type=str, help="场景 JSONL 文件")
        source.add_argument(
            "--nine-groups", action="store_true", help="为九个权限组各生成一对基线/更新版本"
        )
        parser.add_argument(
            "--year", type=int, default=DEFAULT_SIMULATOR_YEAR, help="平台年份，决定权限组成员"
        )

    def run(self, config: RunConfig, layout: RunLayout) -> int:
        catalog = load_catalog(config.catalog)
        aosp = load_aosp_list(config.aosp_list)
        year = config.option("year", DEFAULT_SIMULATOR_YEAR)

        if config.option("nine_groups", False):
            events = nine_group_scenario(catalog, year)
            source = "nine-groups"
        elif config.option("scenario"):
            events = list(iter_jsonl(Path(config.option("scenario"))))
            source = config.option("scenario")
        else:
            raise InvalidConfig("simulate 需要 --scenario 或 --nine-groups")

        layout.ensure()
        with self.logger.step("回放场景", source=source, events=len(events), year=year) as s:
            result = run_scenario(events, catalog, year, aosp)
            counts = result.outcome_counts("update")
            s.add_field(**counts)

        problems = verify_prompt_log(result.state, catalog)
        for problem in problems:
            self.logger.error("授权日志不一致", detail=problem)
        write_json(layout.simulation, {**result.to_dict(), "source": source, "problems": problems})
        if counts["auto_granted"]:
            self.logger.warning(
                "更新时静默授予",
                count=counts["auto_granted"],
                groups=",".join(sorted({e.group for e in result.prompts_for("update")})),
            )
        return 1 if problems else 0
