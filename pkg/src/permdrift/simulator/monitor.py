#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
更新时透明度监控

消费包安装 / 替换事件，按包缓存权限快照；替换时新增的权限落在已授予的组里，
且上一版本已经声明过该组成员，才发出通知。同一 (包, 版本) 只处理一次。
"""

import logging
from dataclasses import dataclass, replace
from datetime import datetime
from typing import Any, Dict, Iterable, List, Optional, Tuple

import pytz

from ..catalog import GroupCatalog, PermissionLabels, qualify
from ..errors import InvalidConfig, OutOfOrder, UnknownPackage
from ..models import MonitorState, NotificationRecord, Snapshot

logger = logging.getLogger("permdrift.simulator.monitor")

PACKAGE_EVENTS = ("added", "replaced")
WEEKS_PER_YEAR = 52


def parse_timestamp(text: str) -> datetime:
    """ISO-8601 时间戳转为 UTC；不带时区的按 UTC 处理"""
    value = text.strip()
    if value.endswith("Z"):
        value = value[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(value)
    except ValueError as e:
        raise InvalidConfig(f"无法解析时间戳: {text!r}") from e
    if ts.tzinfo is None:
        return pytz.utc.localize(ts)
    return ts.astimezone(pytz.utc)


def on_package_event(
    state: MonitorState,
    event: str,
    package: str,
    version_code: int,
    permissions: Iterable[str],
    granted_groups: Iterable[str],
    catalog: GroupCatalog,
    labels: PermissionLabels,
    timestamp: datetime,
    year: Optional[int] = None,
    strict: bool = False,
) -> Tuple[MonitorState, List[NotificationRecord]]:
    """
    处理一条包事件

    Args:
        state: 监控状态
        event: added / replaced
        package: 包名
        version_code: 新版本号
        permissions: 新版本声明的权限
        granted_groups: 事件发生前该包已授予的权限组（由授权视图提供）
        catalog: 权限组目录
        labels: 权限显示标签
        timestamp: 事件时间
        year: 目录年份，默认取事件时间的年份
        strict: 为 True 时，没有先前快照的 replaced 事件直接报错

    Returns:
        (新状态, 本次发出的通知)；重复事件返回原状态与空列表

    Raises:
        InvalidConfig: 未知事件类型
        UnknownPackage: strict 模式下替换了从未见过的包
    """
    if event not in PACKAGE_EVENTS:
        raise InvalidConfig(f"未知包事件: {event!r}")
    key = (package, version_code)
    if key in state.seen:
        logger.debug(f"重复事件 {package}@{version_code}，跳过")
        return state, []

    requested = frozenset(qualify(p) for p in permissions)
    snapshot = Snapshot(version_code=version_code, requested_permissions=requested)
    snapshots = dict(state.snapshots)
    snapshots[package] = snapshot
    seen = state.seen | {key}

    previous = state.snapshots.get(package)
    if event == "replaced" and previous is None:
        if strict:
            raise UnknownPackage(f"{package}@{version_code} 没有先前快照")
        logger.warning(f"{package}@{version_code} 没有先前快照，按 added 处理")
    if event == "added" or previous is None:
        return replace(state, snapshots=snapshots, seen=seen), []

    year = year if year is not None else timestamp.year
    granted = frozenset(granted_groups)
    prior_groups = {catalog.group_of(p, year) for p in previous.requested_permissions}
    notes: List[NotificationRecord] = []
    for perm in sorted(requested - previous.requested_permissions):
        group = catalog.group_of(perm, year)
        # 首次引入的组不通知
        if group is None or group not in granted or group not in prior_groups:
            continue
        notes.append(
            NotificationRecord(
                package=package,
                permission=perm,
                group=group,
                human_label=labels.human_label(perm),
                settings_link_hint=f"package:{package}",
                timestamp=timestamp,
                version_code=version_code,
            )
        )
    return (
        replace(state, snapshots=snapshots, seen=seen, notifications=state.notifications + tuple(notes)),
        notes,
    )


@dataclass(frozen=True)
class MonitorSummary:
    """部署摘要：通知数、被通知的包数、日志跨度（天）、平均通知间隔（天）"""

    entries: int = 0
    notifications: int = 0
    packages: int = 0
    span_days: float = 0.0
    mean_gap_days: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "entries": self.entries,
            "notifications": self.notifications,
            "packages": self.packages,
            "span_days": round(self.span_days, 4),
            "mean_gap_days": round(self.mean_gap_days, 4) if self.mean_gap_days is not None else None,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MonitorSummary":
        return cls(
            entries=int(data.get("entries", 0)),
            notifications=int(data.get("notifications", 0)),
            packages=int(data.get("packages", 0)),
            span_days=float(data.get("span_days", 0.0)),
            mean_gap_days=data.get("mean_gap_days"),
        )


def summarize(state: MonitorState, first: Optional[datetime], last: Optional[datetime], entries: int) -> MonitorSummary:
    count = len(state.notifications)
    span = (last - first).total_seconds() / 86400 if first and last else 0.0
    return MonitorSummary(
        entries=entries,
        notifications=count,
        packages=len({n.package for n in state.notifications}),
        span_days=span,
        mean_gap_days=span / count if count >= 2 else None,
    )


def replay_log(
    events: Iterable[Dict[str, Any]],
    catalog: GroupCatalog,
    labels: PermissionLabels,
    state: Optional[MonitorState] = None,
    strict: bool = False,
) -> Tuple[MonitorState, MonitorSummary]:
    """
    回放事件日志

    日志行: {timestamp, event, package, version_code, permissions[], granted_groups[]}，
    可选 year 字段覆盖目录年份。

    Raises:
        OutOfOrder: 时间戳非单调
        UnknownPackage: strict 模式下出现没有先前快照的 replaced 事件
    """
    state = state or MonitorState()
    first: Optional[datetime] = None
    last: Optional[datetime] = None
    entries = 0
    for row in events:
        ts = parse_timestamp(row["timestamp"])
        if last is not None and ts < last:
            raise OutOfOrder(f"第 {entries + 1} 条事件 {ts.isoformat()} 早于 {last.isoformat()}")
        first = first or ts
        last = ts
        entries += 1
        state, _ = on_package_event(
            state,
            event=row["event"],
            package=row["package"],
            version_code=int(row["version_code"]),
            permissions=row.get("permissions") or (),
            granted_groups=row.get("granted_groups") or (),
            catalog=catalog,
            labels=labels,
            timestamp=ts,
            year=row.get("year"),
            strict=strict,
        )
    return state, summarize(state, first, last, entries)


def estimate_burden(app_count: float, additions_per_app_per_year: float) -> float:
    """每周通知数 = 应用数 × 每应用每年组内新增数 / 52"""
    if app_count < 0 or additions_per_app_per_year < 0:
        raise ValueError("应用数与新增速率不能为负")
    return app_count * additions_per_app_per_year / WEEKS_PER_YEAR
