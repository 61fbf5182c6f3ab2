#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
report 阶段：把各阶段产物渲染成报告

summary.json 与 events.jsonl 必须存在；其余产物缺失时跳过对应报告并记录。
报告里的每个数字都能从它引用的 JSONL/JSON 重新算出。
"""

import argparse
from pathlib import Path
from typing import Any, Dict, List

from ..analysis import flow_table
from ..analysis.custom_perms import (
    CustomClassification,
    attribution_summary,
    category_table,
    load_display_csv,
    role_split,
)
from ..analysis.expansion import ExpansionSummary
from ..catalog import load_labels
from ..conf import DEFAULT_TOP_FLOWS
from ..core.base_stage import BaseStage
from ..errors import InvalidConfig
from ..models import ContingencyTable, CrossDevPair, ExpansionEvent, StatsResult
from ..report.tables import (
    categories_report,
    custom_levels_report,
    flows_report,
    groups_report,
    monitor_report,
    pairs_csv,
    stratified_report,
    sweep_csv,
    write_text,
    yearly_csv,
)
from ..utils.jsonl import read_json, read_records
from ..workspace import RunConfig, RunLayout


def _sweep_results(stats: Dict[str, Any]) -> List[StatsResult]:
    """stats.json 中的 sweep 条目还原为 StatsResult"""
    out = []
    for row in stats.get("sweep") or []:
        ci = row.get("mh_ci") or (None, None)
        out.append(
            StatsResult(
                threshold=row["threshold"],
                table=ContingencyTable.from_dict(row),
                odds_ratio=row.get("or"),
                chi_squared=row.get("chi2"),
                p_value=row.get("p"),
                mh_odds_ratio=row.get("mh_or"),
                mh_ci_low=ci[0],
                mh_ci_high=ci[1],
                mh_p_value=row.get("mh_p"),
                degenerate=row.get("degenerate"),
            )
        )
    return out


class ReportStage(BaseStage):
    name = "report"
    description = "渲染流向表、按组汇总、年度趋势、阈值扫描、分层优势比、自定义权限与监控报告"
    order = 90
    in_pipeline = True

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument(
            "--top", type=int, default=DEFAULT_TOP_FLOWS, help="流向表每组保留的条数"
        )
        parser.add_argument(
            "--display", type=str, help="按包名的附加展示列 CSV (需含 package 列)"
        )

    def run(self, config: RunConfig, layout: RunLayout) -> int:
        layout.require(layout.summary, layout.events)
        top = config.option("top", DEFAULT_TOP_FLOWS)
        if top < 1:
            raise InvalidConfig(f"--top 必须 >= 1: {top}")
        out = layout.report_dir
        written = []

        def emit(name: str, text: str) -> None:
            write_text(out / name, text)
            written.append(name)

        with self.logger.step("扩张报告") as s:
            events = list(read_records(layout.events, ExpansionEvent.from_dict))
            labels = load_labels(config.labels)
            text, csv_text = flows_report(flow_table(events), labels, top)
            emit("flows.txt", text)
            emit("flows.csv", csv_text)
            summary = ExpansionSummary.from_dict(read_json(layout.summary))
            text, csv_text = groups_report(summary)
            emit("groups.txt", text)
            emit("groups.csv", csv_text)
            emit("yearly_trend.csv", yearly_csv(summary))
            s.add_field(events=len(events))

        if layout.stats.exists():
            stats = read_json(layout.stats)
            emit("sweep.csv", sweep_csv(_sweep_results(stats)))
            text, csv_text = stratified_report(stats)
            emit("stratified.txt", text)
            emit("stratified.csv", csv_text)
        else:
            self.logger.warning("跳过统计报告", missing=layout.stats)

        if layout.custom_summary.exists():
            text, csv_text = custom_levels_report(CustomClassification.from_dict(read_json(layout.custom_summary)))
            emit("custom_levels.txt", text)
            emit("custom_levels.csv", csv_text)
        else:
            self.logger.warning("跳过自定义权限报告", missing=layout.custom_summary)

        if layout.pairs.exists():
            pairs = list(read_records(layout.pairs, CrossDevPair.from_dict))
            text, csv_text = categories_report(category_table(pairs), role_split(pairs), attribution_summary(pairs))
            emit("categories.txt", text)
            emit("categories.csv", csv_text)
            display = load_display_csv(Path(config.option("display"))) if config.option("display") else None
            emit("pairs.csv", pairs_csv(pairs, display))
        else:
            self.logger.warning("跳过利用对报告", missing=layout.pairs)

        monitor = read_json(layout.monitor_summary) if layout.monitor_summary.exists() else {}
        burden = [(b["apps"], b["rate"], b["weekly"]) for b in monitor.get("burden") or []]
        emit("monitor.txt", monitor_report(monitor.get("replay"), burden))

        self.logger.info("报告已写出", dir=out, files=len(written))
        return 0
