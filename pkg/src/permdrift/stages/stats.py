#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
stats 阶段：VT 阈值标签下的优势比、χ²、分层 MH 与阈值扫描
"""

from typing import Any, Dict, List

from ..analysis import compute_stats, odds_ratio, stratify, threshold_sweep
from ..analysis.stats import AppLabel
from ..core.base_stage import BaseStage
from ..errors import DegenerateTable
from ..models import ContingencyTable, ExpansionEvent, StratificationConfig
from ..report.tables import sweep_csv, write_text
from ..utils.jsonl import read_json, read_records, write_json
from ..workspace import RunConfig, RunLayout


def load_labels_from(layout: RunLayout) -> List[AppLabel]:
    """由 chains_summary.json 与 events.jsonl 重建每个应用的标签输入"""
    layout.require(layout.events, layout.chains_summary)
    expanding = {e.package_name for e in read_records(layout.events, ExpansionEvent.from_dict)}
    apps = read_json(layout.chains_summary).get("apps") or []
    return [
        AppLabel(
            package=a["package"],
            max_detections=int(a["max_detections"]),
            max_permissions=int(a["max_permissions"]),
            expanding=a["package"] in expanding,
        )
        for a in apps
    ]


def _stratum_row(label: str, table: ContingencyTable) -> Dict[str, Any]:
    try:
        value = odds_ratio(table)
    except DegenerateTable:
        value = None
    return {"label": label, "n": table.n, "or": value, **table.to_dict()}


class StatsStage(BaseStage):
    name = "stats"
    description = "按 VT 阈值计算扩张与恶意标记的关联，写出 stats.json 与 sweep.csv"
    order = 30
    in_pipeline = True

    def run(self, config: RunConfig, layout: RunLayout) -> int:
        labels = load_labels_from(layout)
        stratification = StratificationConfig()
        vt = config.vt

        with self.logger.step("主阈值统计", threshold=vt.threshold, apps=len(labels)) as s:
            primary = compute_stats(labels, vt.threshold, stratification)
            strata = stratify(labels, vt.threshold, stratification)
            s.add_field(
                a=primary.table.a,
                b=primary.table.b,
                c=primary.table.c,
                d=primary.table.d,
                degenerate=primary.degenerate,
            )

        with self.logger.step("阈值扫描", sweep=",".join(map(str, vt.sweep))):
            sweep = threshold_sweep(labels, vt, stratification)

        write_json(
            layout.stats,
            {
                "primary": primary.to_dict(),
                "strata": [_stratum_row(lbl, t) for lbl, t in zip(stratification.labels(), strata)],
                "sweep": [r.to_dict() for r in sweep],
            },
        )
        write_text(layout.sweep, sweep_csv(sweep))
        if primary.odds_ratio is not None:
            self.logger.info(
                "主阈值结果",
                odds_ratio=f"{primary.odds_ratio:.3f}",
                chi2=f"{primary.chi_squared:.1f}",
                mh=f"{primary.mh_odds_ratio:.3f}" if primary.mh_odds_ratio is not None else None,
            )
        return 0
