#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
语料级分析：权限组扩张、恶意软件关联统计、自定义权限关联
"""

from permdrift.analysis.custom_perms import (
    CustomClassification,
    EligibleProvider,
    KeywordMap,
    categorize,
    classify_custom,
    eligible_providers,
    latest_versions,
    link_pairs,
    load_keywords,
    role_split,
)
from permdrift.analysis.expansion import (
    ExpansionSummary,
    aggregate,
    build_chains,
    detect_all,
    detect_expansions,
    flow_table,
    top_flows,
)
from permdrift.analysis.stats import (
    AppLabel,
    chi_squared,
    compute_stats,
    label_apps,
    mantel_haenszel,
    odds_ratio,
    stratify,
    threshold_sweep,
)

__all__ = [
    "CustomClassification",
    "EligibleProvider",
    "KeywordMap",
    "categorize",
    "classify_custom",
    "eligible_providers",
    "latest_versions",
    "link_pairs",
    "load_keywords",
    "role_split",
    "ExpansionSummary",
    "aggregate",
    "build_chains",
    "detect_all",
    "detect_expansions",
    "flow_table",
    "top_flows",
    "AppLabel",
    "chi_squared",
    "compute_stats",
    "label_apps",
    "mantel_haenszel",
    "odds_ratio",
    "stratify",
    "threshold_sweep",
]
