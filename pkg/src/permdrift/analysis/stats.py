#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
恶意软件关联统计

按 VirusTotal 检出数给应用打标签，在 2×2 表上计算优势比、Pearson χ²
与按最大权限数分层的 Mantel-Haenszel 合并优势比。
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
from scipy.stats import chi2, chi2_contingency, norm

from ..errors import DegenerateStratum, DegenerateTable
from ..models import (
    ContingencyTable,
    MantelHaenszelResult,
    StatsResult,
    StratificationConfig,
    VersionChain,
    VtLabelConfig,
)

logger = logging.getLogger("permdrift.analysis.stats")

CI_LEVEL = 0.95


@dataclass(frozen=True)
class AppLabel:
    """一个多版本应用的标签输入：跨版本最高检出数、最大权限数、是否扩张过"""

    package: str
    max_detections: int
    max_permissions: int
    expanding: bool

    def flagged(self, threshold: int) -> bool:
        return self.max_detections >= threshold


def label_apps(chains: Iterable[VersionChain], expanding: Set[str]) -> List[AppLabel]:
    """
    为每条版本链生成标签输入

    Args:
        chains: 版本链
        expanding: 出现过扩张事件的包名

    Returns:
        按包名排序的 AppLabel；是否标记取决于阈值，由 AppLabel.flagged(t) 给出
    """
    labels = [
        AppLabel(
            package=c.package_name,
            max_detections=c.max_detections,
            max_permissions=c.max_permission_count,
            expanding=c.package_name in expanding,
        )
        for c in chains
    ]
    labels.sort(key=lambda x: x.package)
    return labels


def flagged_packages(labels: Iterable[AppLabel], threshold: int) -> Set[str]:
    return {x.package for x in labels if x.flagged(threshold)}


def contingency(labels: Iterable[AppLabel], threshold: int) -> ContingencyTable:
    a = b = c = d = 0
    for x in labels:
        flagged = x.flagged(threshold)
        if x.expanding:
            if flagged:
                a += 1
            else:
                b += 1
        elif flagged:
            c += 1
        else:
            d += 1
    return ContingencyTable(a, b, c, d)


def odds_ratio(table: ContingencyTable) -> float:
    """
    (a·d)/(b·c)

    Raises:
        DegenerateTable: b·c = 0，优势比无定义
    """
    denominator = table.b * table.c
    if denominator == 0:
        raise DegenerateTable(f"b·c = 0，优势比无定义: {table.cells}")
    return (table.a * table.d) / denominator


def chi_squared(table: ContingencyTable) -> Tuple[float, float]:
    """
    Pearson χ²（1 自由度，不做连续性校正）

    Returns:
        (统计量, p 值)

    Raises:
        DegenerateTable: 任一行或列的边际为 0
    """
    observed = np.array(table.as_matrix(), dtype=float)
    if (observed.sum(axis=0) == 0).any() or (observed.sum(axis=1) == 0).any():
        raise DegenerateTable(f"边际为 0，χ² 无定义: {table.cells}")
    statistic, p_value, _, _ = chi2_contingency(observed, correction=False)
    return float(statistic), float(p_value)


def mantel_haenszel(strata: Sequence[ContingencyTable], level: float = CI_LEVEL) -> MantelHaenszelResult:
    """
    Mantel-Haenszel 合并优势比

    置信区间用 Robins-Breslow-Greenland 方差在对数尺度上构造；
    p 值为不带连续性校正的 Cochran-Mantel-Haenszel 检验。总数为 0 的分层不参与计算。

    Args:
        strata: 各分层的 2×2 表
        level: 置信水平

    Returns:
        MantelHaenszelResult

    Raises:
        DegenerateStratum: 没有非空分层，或 Σ b·c/n = 0、Σ a·d/n = 0
    """
    used = [t for t in strata if t.n > 0]
    if not used:
        raise DegenerateStratum("没有非空分层")
    cells = np.array([t.cells for t in used], dtype=float)
    a, b, c, d = cells.T
    n = a + b + c + d

    r = a * d / n
    s = b * c / n
    r_sum, s_sum = r.sum(), s.sum()
    if s_sum == 0:
        raise DegenerateStratum("Σ b·c/n = 0，合并优势比无定义")
    if r_sum == 0:
        raise DegenerateStratum("Σ a·d/n = 0，合并优势比为 0，置信区间无定义")
    pooled = float(r_sum / s_sum)

    p = (a + d) / n
    q = (b + c) / n
    variance = (
        (p * r).sum() / (2 * r_sum**2)
        + (p * s + q * r).sum() / (2 * r_sum * s_sum)
        + (q * s).sum() / (2 * s_sum**2)
    )
    z = norm.ppf(0.5 + level / 2)
    half = z * math.sqrt(variance)
    log_or = math.log(pooled)

    # CMH 检验: Σ(a - E[a])² / Σ Var(a)
    expected = (a + b) * (a + c) / n
    with np.errstate(divide="ignore", invalid="ignore"):
        var_a = np.where(n > 1, (a + b) * (c + d) * (a + c) * (b + d) / (n**2 * (n - 1)), 0.0)
    var_sum = var_a.sum()
    p_value = None
    if var_sum > 0:
        statistic = (a - expected).sum() ** 2 / var_sum
        p_value = float(chi2.sf(statistic, 1))

    return MantelHaenszelResult(
        odds_ratio=pooled,
        ci_low=math.exp(log_or - half),
        ci_high=math.exp(log_or + half),
        p_value=p_value,
        strata=tuple(strata),
    )


def stratify(
    labels: Iterable[AppLabel], threshold: int, config: Optional[StratificationConfig] = None
) -> List[ContingencyTable]:
    """按应用最大声明权限数分层构建 2×2 表；没有声明任何权限的应用不入层"""
    config = config or StratificationConfig()
    buckets: List[List[AppLabel]] = [[] for _ in config.bounds]
    for x in labels:
        i = config.index_of(x.max_permissions)
        if i is not None:
            buckets[i].append(x)
    return [contingency(bucket, threshold) for bucket in buckets]


def compute_stats(
    labels: Sequence[AppLabel],
    threshold: int,
    stratification: Optional[StratificationConfig] = None,
) -> StatsResult:
    """
    单一阈值下的完整统计

    2×2 表退化时返回带 degenerate 原因的结果而不是抛出；
    分层退化只让 MH 字段为空。
    """
    table = contingency(labels, threshold)
    try:
        or_value = odds_ratio(table)
        statistic, p_value = chi_squared(table)
    except DegenerateTable as e:
        return StatsResult(threshold=threshold, table=table, degenerate=str(e))

    mh: Optional[MantelHaenszelResult] = None
    if stratification is not None:
        try:
            mh = mantel_haenszel(stratify(labels, threshold, stratification))
        except DegenerateStratum as e:
            logger.warning(f"t={threshold} 分层退化: {e}")

    return StatsResult(
        threshold=threshold,
        table=table,
        odds_ratio=or_value,
        chi_squared=statistic,
        p_value=p_value,
        mh_odds_ratio=mh.odds_ratio if mh else None,
        mh_ci_low=mh.ci_low if mh else None,
        mh_ci_high=mh.ci_high if mh else None,
        mh_p_value=mh.p_value if mh else None,
    )


def threshold_sweep(
    labels: Sequence[AppLabel],
    config: Optional[VtLabelConfig] = None,
    stratification: Optional[StratificationConfig] = None,
) -> List[StatsResult]:
    """
    阈值敏感性扫描

    按阈值升序逐个计算；某个阈值退化时记为带标记的条目，继续扫描。
    """
    config = config or VtLabelConfig()
    results = []
    for t in sorted(set(config.sweep)):
        result = compute_stats(labels, t, stratification)
        if result.degenerate:
            logger.info(f"t={t} 退化: {result.degenerate}")
        results.append(result)
    return results
