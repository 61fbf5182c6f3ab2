#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
报告表格

每种报告先构造 (表头, 行)，再分别渲染成对齐文本和 CSV。
文本里的数字带千分位，CSV 保留原始值，便于重新计算。
"""

import csv
import io
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from ..analysis.custom_perms import LEVEL_ORDER, NORMAL_BREAKDOWN, CustomClassification, pair_attribution
from ..analysis.expansion import MARKET_STRATA, ExpansionSummary, top_flows
from ..catalog import ROSTER, PermissionLabels
from ..models import CrossDevPair, FlowEntry, StatsResult

Rows = List[List[Any]]

# 流向表第一张的组，其余组放在第二张
MAIN_FLOW_GROUPS = ("CONTACTS", "SMS", "PHONE", "CALL_LOG")

CATEGORY_TITLES = {
    "contacts": "Contact data",
    "auth_credentials": "Authentication credentials",
    "user_identity": "User identity",
    "location": "Location",
    "messages": "Messages",
    "file_paths": "File and storage paths",
    "medical": "Medical / health records",
    "financial": "Financial data",
    "settings": "Settings / config",
    "uncategorized": "Uncategorized",
}

ARROW = "→"


# ---------------------------------------------------------------- 渲染


def _cell(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, int):
        return f"{value:,}"
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def render_table(title: str, headers: Sequence[str], rows: Rows, footer: Optional[List[Any]] = None) -> str:
    """
    渲染对齐文本表；首列左对齐，其余列右对齐

    Args:
        title: 表标题
        headers: 表头
        rows: 数据行
        footer: 合计行，画在分隔线之后

    Returns:
        以换行结尾的文本
    """
    body = [[_cell(v) for v in row] for row in rows]
    foot = [_cell(v) for v in footer] if footer else None
    widths = [len(h) for h in headers]
    for row in body + ([foot] if foot else []):
        for i, text in enumerate(row):
            widths[i] = max(widths[i], len(text))

    def line(cells: Sequence[str]) -> str:
        parts = [
            cells[i].ljust(widths[i]) if i == 0 else cells[i].rjust(widths[i])
            for i in range(len(cells))
        ]
        return "  ".join(parts).rstrip()

    rule = "-" * (sum(widths) + 2 * (len(widths) - 1))
    out = [title, rule, line(list(headers)), rule]
    out.extend(line(r) for r in body)
    if foot:
        out.append(rule)
        out.append(line(foot))
    out.append(rule)
    return "\n".join(out) + "\n"


def to_csv(headers: Sequence[str], rows: Rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(headers)
    for row in rows:
        writer.writerow(["" if v is None else v for v in row])
    return buf.getvalue()


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


# ---------------------------------------------------------------- 流向


FLOW_HEADERS = ("Group", "Flow", "Count")


def flow_rows(entries: Iterable[FlowEntry], labels: PermissionLabels, k: int, groups: Sequence[str]) -> Rows:
    tops = top_flows(entries, k)
    rows: Rows = []
    for group in groups:
        for e in tops.get(group, []):
            flow = f"{labels.flow_label(e.from_permission)} {ARROW} {labels.flow_label(e.to_permission)}"
            rows.append([group, flow, e.count])
    return rows


def flows_report(entries: Sequence[FlowEntry], labels: PermissionLabels, k: int) -> Tuple[str, str]:
    """Top-k 流向：主要通信/身份类组一张，其余组一张"""
    rest = tuple(g for g in ROSTER if g not in MAIN_FLOW_GROUPS)
    main_rows = flow_rows(entries, labels, k, MAIN_FLOW_GROUPS)
    rest_rows = flow_rows(entries, labels, k, rest)
    text = render_table(f"Top-{k} permission-group expansion flows (main groups)", FLOW_HEADERS, main_rows)
    text += "\n" + render_table(f"Top-{k} permission-group expansion flows (remaining groups)", FLOW_HEADERS, rest_rows)
    return text, to_csv(FLOW_HEADERS, main_rows + rest_rows)


# ---------------------------------------------------------------- 按组 / 按年


GROUP_HEADERS = ("Permission Group", "Expanding Apps", "Expansions", "% of Total")


def groups_report(summary: ExpansionSummary) -> Tuple[str, str]:
    groups = sorted(ROSTER, key=lambda g: (-summary.group_events.get(g, 0), ROSTER.index(g)))
    rows: Rows = [
        [g, summary.group_apps.get(g, 0), summary.group_events.get(g, 0), round(summary.group_percent(g), 1)]
        for g in groups
    ]
    footer = ["Total", summary.expanding_apps, summary.events, 100.0 if summary.events else 0.0]
    title = f"Permission-group expansion volume over {summary.chains:,} multi-version apps"
    text = render_table(title, GROUP_HEADERS, rows, footer)
    text += (
        f"\nExpanding apps: {summary.expanding_apps:,} ({summary.expanding_share:.1f}%), "
        f"mean {summary.mean_events_per_app:.2f} additions per expanding app\n"
    )
    strata = ", ".join(
        f"{s} {summary.strata.get(s, 0):,} ({summary.stratum_share(s):.1f}%)" for s in MARKET_STRATA
    )
    text += f"Markets: {strata}; cross-market {summary.cross_market_apps:,} ({summary.cross_market_share:.2f}%)\n"
    if summary.threshold is not None:
        shares = ", ".join(
            f"{g} {summary.group_malware_share(g):.2f}%" for g in ROSTER if summary.group_apps.get(g)
        )
        text += f"Malware share at t={summary.threshold}: {shares}\n"
    csv_rows = rows + [footer]
    return text, to_csv(GROUP_HEADERS, csv_rows)


YEAR_HEADERS = ("year", "expanding_apps", "events", "mean_per_app")


def yearly_csv(summary: ExpansionSummary) -> str:
    years = sorted(set(summary.year_apps) | set(summary.year_events))
    rows: Rows = [
        [y, summary.year_apps.get(y, 0), summary.year_events.get(y, 0), round(summary.year_mean(y), 4)]
        for y in years
    ]
    return to_csv(YEAR_HEADERS, rows)


# ---------------------------------------------------------------- 统计


SWEEP_HEADERS = (
    "threshold", "a", "b", "c", "d", "or", "chi2", "p",
    "mh_or", "mh_ci_low", "mh_ci_high", "degenerate",
)


def sweep_csv(results: Iterable[StatsResult]) -> str:
    rows: Rows = [
        [
            r.threshold, r.table.a, r.table.b, r.table.c, r.table.d,
            r.odds_ratio, r.chi_squared, r.p_value,
            r.mh_odds_ratio, r.mh_ci_low, r.mh_ci_high, r.degenerate,
        ]
        for r in results
    ]
    return to_csv(SWEEP_HEADERS, rows)


STRATA_HEADERS = ("Max Permission Quartile", "Apps (n)", "OR")


def stratified_report(stats: Dict[str, Any]) -> Tuple[str, str]:
    """
    分层优势比

    Args:
        stats: stats 阶段写出的 stats.json
    """
    rows: Rows = [[s["label"], s["n"], s.get("or")] for s in stats.get("strata") or []]
    primary = stats.get("primary") or {}
    mh = primary.get("mh_or")
    ci = primary.get("mh_ci")
    pooled = f"{mh:.2f} [{ci[0]:.2f}, {ci[1]:.2f}]" if mh is not None and ci else None
    footer = ["Pooled Mantel-Haenszel", sum(s["n"] for s in stats.get("strata") or []), pooled]
    title = f"Quartile-stratified malware odds ratios (VT >= {primary.get('threshold')})"
    text = render_table(title, STRATA_HEADERS, rows, footer)
    if primary.get("mh_p") is not None:
        text += f"CMH p = {primary['mh_p']:.3g}\n"
    if primary.get("or") is not None:
        text += (
            f"Crude OR = {primary['or']:.2f}, chi2 = {primary['chi2']:.1f}, p = {primary['p']:.3g}\n"
        )
    elif primary.get("degenerate"):
        text += f"Crude OR undefined: {primary['degenerate']}\n"
    csv_rows = [[s["label"], s["n"], s.get("or"), s["a"], s["b"], s["c"], s["d"]] for s in stats.get("strata") or []]
    csv_rows.append(["pooled", footer[1], mh, None, None, None, None])
    return text, to_csv(STRATA_HEADERS + ("a", "b", "c", "d"), csv_rows)


# ---------------------------------------------------------------- 自定义权限


def custom_levels_report(classification: CustomClassification) -> Tuple[str, str]:
    level_rows: Rows = [
        [lv, classification.histogram.get(lv, 0), round(classification.level_share(lv), 1)]
        for lv in LEVEL_ORDER
    ]
    normal_total = sum(classification.normal_breakdown.values())
    kind_rows: Rows = [
        [k, classification.normal_breakdown.get(k, 0), round(classification.breakdown_share(k), 1)]
        for k in NORMAL_BREAKDOWN
    ]
    text = render_table(
        "Custom permissions: protection-level split",
        ("Protection level", "Count", "%"),
        level_rows,
        ["Total", classification.total, 100.0 if classification.total else 0.0],
    )
    text += "\n" + render_table(
        "Normal custom permissions: guarded component type",
        ("Component (normal)", "Count", "%"),
        kind_rows,
        ["Total", normal_total, 100.0 if normal_total else 0.0],
    )
    csv_rows = [["level", *r] for r in level_rows] + [["normal_component", *r] for r in kind_rows]
    return text, to_csv(("panel", "bucket", "count", "percent"), csv_rows)


CATEGORY_HEADERS = ("Type", "Data Category", "Pairs", "AOSP Gate (Type A only)")


def categories_report(
    category_rows: Sequence[Dict[str, Any]],
    roles: Dict[str, int],
    attribution: Dict[str, int],
) -> Tuple[str, str]:
    rows: Rows = [
        [r["type"] or "-", CATEGORY_TITLES.get(r["category"], r["category"]), r["pairs"], r["aosp_gate"]]
        for r in category_rows
    ]
    total = sum(r["pairs"] for r in category_rows)
    text = render_table(
        "Primary data category per cross-developer pair",
        CATEGORY_HEADERS,
        rows,
        ["Total", None, total, None],
    )
    text += "\nRoles: " + ", ".join(f"{k} {v:,}" for k, v in roles.items()) + "\n"
    text += "Call-site attribution: " + ", ".join(f"{k} {v:,}" for k, v in attribution.items()) + "\n"
    csv_rows = [[r["type"], r["category"], r["pairs"], r["aosp_gate"]] for r in category_rows]
    return text, to_csv(("type", "category", "pairs", "aosp_gate"), csv_rows)


# ---------------------------------------------------------------- 监控


def monitor_report(summary: Optional[Dict[str, Any]], burden: Sequence[Tuple[float, float, float]]) -> str:
    """
    监控摘要与通知负担估计

    Args:
        summary: monitor_summary.json；没有监控日志时为 None
        burden: [(应用数, 每应用每年新增数, 每周通知数)]
    """
    lines = ["Update-time monitor", "-" * 40]
    if summary is None:
        lines.append("no monitor log replayed")
    else:
        gap = summary.get("mean_gap_days")
        lines.append(f"log entries:        {summary.get('entries', 0):,}")
        lines.append(f"notifications:      {summary.get('notifications', 0):,}")
        lines.append(f"notified apps:      {summary.get('packages', 0):,}")
        lines.append(f"span (days):        {summary.get('span_days', 0):.1f}")
        lines.append(f"mean gap (days):    {gap:.2f}" if gap is not None else "mean gap (days):    undefined")
    lines.append("")
    lines.append("Estimated burden")
    for apps, rate, weekly in burden:
        lines.append(f"{apps:g} apps x {rate:g}/app/year -> {weekly:.2f} notifications/week")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- 利用对清单


PAIR_HEADERS = (
    "permission", "exploitable", "authority", "exploiting",
    "category", "type", "aosp_gate", "store_kind", "attribution",
)


def pairs_csv(pairs: Sequence[CrossDevPair], display: Optional[Dict[str, Dict[str, str]]] = None) -> str:
    """
    利用对逐行清单

    display 为按包名的附加列（如安装量档位），原样追加为
    exploitable_<列> 与 exploiting_<列>。
    """
    display = display or {}
    extra = sorted({k for cols in display.values() for k in cols})
    headers = list(PAIR_HEADERS)
    headers += [f"exploitable_{k}" for k in extra] + [f"exploiting_{k}" for k in extra]
    rows: Rows = []
    for p in pairs:
        left = display.get(p.exploitable.package, {})
        right = display.get(p.exploiting.package, {})
        rows.append(
            [
                p.permission_name, p.exploitable.package, p.exploitable.authority, p.exploiting.package,
                p.category, p.type, p.aosp_gate, p.exploitable.sensitivity.store_kind, pair_attribution(p),
                *[left.get(k) for k in extra],
                *[right.get(k) for k in extra],
            ]
        )
    return to_csv(headers, rows)
