#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
monitor 阶段：回放包事件日志，生成更新时通知并估计通知负担
"""

import argparse
from pathlib import Path
from typing import List

from ..catalog import load_catalog, load_labels
from ..core.base_stage import BaseStage
from ..errors import InvalidConfig
from ..simulator import estimate_burden, replay_log
from ..utils.jsonl import iter_jsonl, write_json, write_jsonl
from ..workspace import RunConfig, RunLayout

DEFAULT_BURDEN_APPS = (80.0,)
DEFAULT_BURDEN_RATE = 1.0


class MonitorStage(BaseStage):
    name = "monitor"
    description = "回放包安装/替换事件，写出 notifications.jsonl 与 monitor_summary.json"
    order = 70

    @property
    def examples(self) -> List[str]:
        return ["permdrift monitor --events device_log.jsonl --apps 80 365 --rate 1.0"]

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--events", type=str, help="包事件日志 JSONL")
        parser.add_argument(
            "--apps",
            type=float,
            nargs="+",
            help=f"负担估计的已安装应用数，可给多个 (默认 {DEFAULT_BURDEN_APPS[0]:g})",
        )
        parser.add_argument(
            "--rate",
            type=float,
            help=f"每个应用每年的组内新增数 (默认 {DEFAULT_BURDEN_RATE:g})",
        )
        parser.add_argument(
            "--strict", action="store_true", help="replaced 事件找不到先前快照时报错，而不是按 added 处理"
        )

    def run(self, config: RunConfig, layout: RunLayout) -> int:
        layout.ensure()
        summary = None
        events_path = config.option("events")
        if events_path:
            catalog = load_catalog(config.catalog)
            labels = load_labels(config.labels)
            with self.logger.step("回放事件日志", path=events_path) as s:
                state, replay = replay_log(
                    iter_jsonl(Path(events_path)), catalog, labels, strict=config.option("strict", False)
                )
                write_jsonl(layout.notifications, (n.to_dict() for n in state.notifications))
                summary = replay.to_dict()
                s.add_field(
                    entries=replay.entries,
                    notifications=replay.notifications,
                    packages=replay.packages,
                    mean_gap_days=summary["mean_gap_days"],
                )
        else:
            self.logger.info("未提供 --events，只做负担估计")

        rate = config.option("rate", DEFAULT_BURDEN_RATE)
        apps_list = config.option("apps", DEFAULT_BURDEN_APPS)
        if rate < 0 or any(a < 0 for a in apps_list):
            raise InvalidConfig("--apps 与 --rate 不能为负")
        burden = [
            {"apps": apps, "rate": rate, "weekly": round(estimate_burden(apps, rate), 4)}
            for apps in apps_list
        ]
        for row in burden:
            self.logger.info("通知负担", **row)
        write_json(layout.monitor_summary, {"replay": summary, "burden": burden})
        return 0
