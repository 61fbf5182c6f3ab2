#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
设备授权状态与更新监控状态模型

状态对象按值使用：每次操作返回新的状态，旧状态不被修改。
"""

from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Dict, FrozenSet, Optional, Tuple

from .facts import PermissionDef

PROMPT_OUTCOMES = ("shown_granted", "shown_denied", "auto_granted")


@dataclass(frozen=True)
class InstalledApp:
    version_code: int
    requested_permissions: FrozenSet[str]
    permission_defs: Tuple[PermissionDef, ...] = ()
    cert_digest: Optional[str] = None


@dataclass(frozen=True)
class PromptEvent:
    """授权事件；auto_granted 必须带上触发它的权限组"""

    package: str
    permission: str
    outcome: str
    group: Optional[str] = None

    def __post_init__(self):
        if self.outcome not in PROMPT_OUTCOMES:
            raise ValueError(f"未知授权结果: {self.outcome}")
        if self.outcome == "auto_granted" and not self.group:
            raise ValueError("auto_granted 事件必须记录权限组")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "package": self.package,
            "permission": self.permission,
            "outcome": self.outcome,
            "group": self.group,
        }


@dataclass(frozen=True)
class DeviceState:
    """
    模拟设备

    grants 只为已安装包保存条目；prompt_log 只追加。
    custom_levels 记录已安装应用定义的自定义权限保护级别，custom_owners 记录定义它的包。
    """

    year: int
    installed: Dict[str, InstalledApp] = field(default_factory=dict)
    grants: Dict[Tuple[str, str], bool] = field(default_factory=dict)
    prompt_log: Tuple[PromptEvent, ...] = ()
    custom_levels: Dict[str, str] = field(default_factory=dict)
    custom_owners: Dict[str, str] = field(default_factory=dict)

    def granted(self, package: str) -> FrozenSet[str]:
        return frozenset(p for (pkg, p), ok in self.grants.items() if pkg == package and ok)

    def to_dict(self) -> Dict[str, Any]:
        installed = {
            pkg: {
                "version_code": app.version_code,
                "requested_permissions": sorted(app.requested_permissions),
                "permission_defs": [d.to_dict() for d in app.permission_defs],
            }
            for pkg, app in sorted(self.installed.items())
        }
        grants: Dict[str, Dict[str, bool]] = {}
        for (pkg, perm), ok in sorted(self.grants.items()):
            grants.setdefault(pkg, {})[perm] = ok
        return {
            "year": self.year,
            "installed": installed,
            "grants": grants,
            "prompt_log": [e.to_dict() for e in self.prompt_log],
        }


@dataclass(frozen=True)
class Snapshot:
    version_code: int
    requested_permissions: FrozenSet[str]


@dataclass(frozen=True)
class NotificationRecord:
    """更新时通知"""

    package: str
    permission: str
    group: str
    human_label: str
    settings_link_hint: str
    timestamp: datetime
    version_code: int = 0

    @property
    def text(self) -> str:
        return f"This app has gained a new permission: {self.human_label}. Review in Settings."

    def to_dict(self) -> Dict[str, Any]:
        return {
            "package": self.package,
            "permission": self.permission,
            "group": self.group,
            "human_label": self.human_label,
            "settings_link_hint": self.settings_link_hint,
            "timestamp": self.timestamp.isoformat(),
            "version_code": self.version_code,
            "text": self.text,
        }


@dataclass(frozen=True)
class MonitorState:
    """监控器缓存：每包一个快照，seen 单调增长，notifications 按发出顺序"""

    snapshots: Dict[str, Snapshot] = field(default_factory=dict)
    seen: FrozenSet[Tuple[str, int]] = frozenset()
    notifications: Tuple[NotificationRecord, ...] = ()
