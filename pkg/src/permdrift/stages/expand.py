#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
expand 阶段：构建版本链，检测组内静默扩张并汇总
"""

from ..analysis import aggregate, build_chains, detect_all, label_apps
from ..analysis.expansion import expanding_packages
from ..analysis.stats import flagged_packages
from ..catalog import load_catalog
from ..core.base_stage import BaseStage
from ..models import ApkFacts
from ..utils.jsonl import read_records, write_json, write_jsonl
from ..workspace import RunConfig, RunLayout


class ExpandStage(BaseStage):
    name = "expand"
    description = "按包名构建版本链，检测权限组静默扩张，写出 events.jsonl 与 summary.json"
    order = 20
    in_pipeline = True

    def run(self, config: RunConfig, layout: RunLayout) -> int:
        layout.require(layout.facts)
        catalog = load_catalog(config.catalog)

        with self.logger.step("构建版本链") as s:
            chains, dropped = build_chains(read_records(layout.facts, ApkFacts.from_dict))
            s.add_field(chains=len(chains), dropped=dropped)

        with self.logger.step("检测扩张", workers=config.workers) as s:
            events = detect_all(chains, catalog, workers=config.workers)
            events.sort(key=lambda e: e.key)
            write_jsonl(layout.events, (e.to_dict() for e in events))
            s.add_field(events=len(events))

        labels = label_apps(chains, expanding_packages(events))
        flagged = flagged_packages(labels, config.threshold)
        summary = aggregate(
            events,
            chains,
            dropped=dropped,
            flags={x.package: x.package in flagged for x in labels},
            threshold=config.threshold,
        )
        write_json(layout.summary, summary.to_dict())
        write_json(
            layout.chains_summary,
            {
                "chains": len(chains),
                "dropped": dropped,
                "apps": [
                    {
                        "package": c.package_name,
                        "versions": len(c.versions),
                        "max_detections": c.max_detections,
                        "max_permissions": c.max_permission_count,
                    }
                    for c in chains
                ],
            },
        )
        self.logger.info(
            "扩张汇总",
            expanding=summary.expanding_apps,
            share=f"{summary.expanding_share:.2f}%",
            mean=f"{summary.mean_events_per_app:.2f}",
        )
        return 0
