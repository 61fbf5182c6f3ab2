#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
安装 / 更新授权语义状态机

- 安装: normal 权限（AOSP normal 与已定义的 normal 自定义权限）直接授予，不弹窗；
  dangerous 权限初始未授予
- 用户授权: 只对已声明的 dangerous 权限，记一次 shown_granted
- 更新: 新增的 dangerous 权限所属组在更新前已有授予成员时静默授予（auto_granted），
  否则保持未授予且不产生事件
- 撤销: 只能按组整体撤销，不提供单个权限撤销

所有操作返回新的 DeviceState，不修改传入的状态。
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, List, Optional, Tuple

from ..catalog import ROSTER, AospList, GroupCatalog, qualify
from ..conf import DEFAULT_SIMULATOR_YEAR
from ..errors import (
    AlreadyInstalled,
    DowngradeRejected,
    InvalidConfig,
    NotDangerous,
    NotInstalled,
    NotRequested,
)
from ..models import ApkFacts, DeviceState, InstalledApp, PromptEvent
from ..models.facts import PermissionDef

logger = logging.getLogger("permdrift.simulator.grants")

EVENT_KINDS = ("install", "user_grant", "user_deny", "update", "revoke_group")
ANDROID_PREFIX = "android.permission."

# 九组配对场景里每组优先使用的 (基线, 新增) 权限；目录里缺失时退回按名字排序的前两个
PREFERRED_PAIRS: Dict[str, Tuple[str, str]] = {
    "STORAGE": ("READ_MEDIA_IMAGES", "READ_MEDIA_VIDEO"),
    "LOCATION": ("ACCESS_COARSE_LOCATION", "ACCESS_FINE_LOCATION"),
    "PHONE": ("READ_PHONE_STATE", "CALL_PHONE"),
    "CONTACTS": ("READ_CONTACTS", "WRITE_CONTACTS"),
    "SMS": ("READ_SMS", "SEND_SMS"),
    "NEARBY_DEVICES": ("BLUETOOTH_SCAN", "BLUETOOTH_CONNECT"),
    "CALENDAR": ("READ_CALENDAR", "WRITE_CALENDAR"),
    "CALL_LOG": ("READ_CALL_LOG", "WRITE_CALL_LOG"),
    "SENSORS": ("BODY_SENSORS", "BODY_SENSORS_BACKGROUND"),
}


def new_device(year: int = DEFAULT_SIMULATOR_YEAR) -> DeviceState:
    return DeviceState(year=year)


def permission_level(
    state: DeviceState, permission: str, catalog: GroupCatalog, aosp: Optional[AospList] = None
) -> Optional[str]:
    """
    当前设备上权限的保护级别

    Returns:
        dangerous / normal / signature / other；设备不认识的权限返回 None
    """
    if catalog.is_dangerous(permission, state.year):
        return "dangerous"
    if permission in state.custom_levels:
        return state.custom_levels[permission]
    if aosp is not None:
        return aosp.level_of(permission)
    return "normal" if permission.startswith(ANDROID_PREFIX) else None


def _install_time_grant(
    state: DeviceState,
    package: str,
    cert_digest: Optional[str],
    permission: str,
    catalog: GroupCatalog,
    aosp: Optional[AospList],
) -> bool:
    level = permission_level(state, permission, catalog, aosp)
    if level == "normal":
        return True
    if level == "signature" and permission in state.custom_owners:
        owner = state.custom_owners[permission]
        if owner == package:
            return True
        owner_app = state.installed.get(owner)
        return bool(owner_app and cert_digest and owner_app.cert_digest == cert_digest)
    return False


def _register_definitions(
    state: DeviceState, package: str, defs: Iterable[PermissionDef], catalog: GroupCatalog
) -> Tuple[Dict[str, str], Dict[str, str]]:
    levels = dict(state.custom_levels)
    owners = dict(state.custom_owners)
    for pd in defs:
        # 平台 dangerous 权限不能被应用重新定义
        if catalog.is_dangerous(pd.name, state.year):
            continue
        if pd.name in owners and owners[pd.name] != package:
            logger.debug(f"{pd.name} 已由 {owners[pd.name]} 定义，忽略 {package} 的重复定义")
            continue
        levels[pd.name] = pd.protection_level
        owners[pd.name] = package
    return levels, owners


def install(
    state: DeviceState, facts: ApkFacts, catalog: GroupCatalog, aosp: Optional[AospList] = None
) -> DeviceState:
    """
    安装应用

    Raises:
        AlreadyInstalled: 包已安装
    """
    package = facts.package_name
    if package in state.installed:
        raise AlreadyInstalled(package)
    levels, owners = _register_definitions(state, package, facts.permission_defs, catalog)
    installed = dict(state.installed)
    installed[package] = InstalledApp(
        version_code=facts.version_code,
        requested_permissions=facts.requested_permissions,
        permission_defs=facts.permission_defs,
        cert_digest=facts.cert_digest,
    )
    staged = replace(state, installed=installed, custom_levels=levels, custom_owners=owners)
    grants = dict(state.grants)
    for perm in sorted(facts.requested_permissions):
        grants[(package, perm)] = _install_time_grant(staged, package, facts.cert_digest, perm, catalog, aosp)
    return replace(staged, grants=grants)


def _require_installed(state: DeviceState, package: str) -> InstalledApp:
    app = state.installed.get(package)
    if app is None:
        raise NotInstalled(package)
    return app


def _check_user_decision(
    state: DeviceState, package: str, permission: str, catalog: GroupCatalog, aosp: Optional[AospList]
) -> str:
    app = _require_installed(state, package)
    permission = qualify(permission)
    if permission not in app.requested_permissions:
        raise NotRequested(f"{package} 未声明 {permission}")
    if permission_level(state, permission, catalog, aosp) != "dangerous":
        raise NotDangerous(f"{permission} 不是 dangerous 权限")
    return permission


def user_grant(
    state: DeviceState,
    package: str,
    permission: str,
    catalog: GroupCatalog,
    aosp: Optional[AospList] = None,
) -> DeviceState:
    """
    用户在运行时弹窗中同意

    Raises:
        NotInstalled / NotRequested / NotDangerous
    """
    permission = _check_user_decision(state, package, permission, catalog, aosp)
    grants = dict(state.grants)
    grants[(package, permission)] = True
    event = PromptEvent(
        package=package,
        permission=permission,
        outcome="shown_granted",
        group=catalog.group_of(permission, state.year),
    )
    return replace(state, grants=grants, prompt_log=state.prompt_log + (event,))


def user_deny(
    state: DeviceState,
    package: str,
    permission: str,
    catalog: GroupCatalog,
    aosp: Optional[AospList] = None,
) -> DeviceState:
    """用户在运行时弹窗中拒绝；授予状态不变"""
    permission = _check_user_decision(state, package, permission, catalog, aosp)
    event = PromptEvent(
        package=package,
        permission=permission,
        outcome="shown_denied",
        group=catalog.group_of(permission, state.year),
    )
    return replace(state, prompt_log=state.prompt_log + (event,))


def granted_groups(state: DeviceState, package: str, catalog: GroupCatalog) -> frozenset:
    """包当前至少有一个成员被授予的权限组"""
    groups = set()
    for perm in state.granted(package):
        group = catalog.group_of(perm, state.year)
        if group is not None:
            groups.add(group)
    return frozenset(groups)


def update(
    state: DeviceState, facts: ApkFacts, catalog: GroupCatalog, aosp: Optional[AospList] = None
) -> DeviceState:
    """
    更新已安装应用

    新增的 dangerous 权限所属组在更新前已有授予成员时静默授予并记 auto_granted；
    不再声明的权限从授予表中移除。

    Raises:
        NotInstalled: 包未安装
        DowngradeRejected: version_code 不高于已安装版本
    """
    package = facts.package_name
    old = _require_installed(state, package)
    if facts.version_code <= old.version_code:
        raise DowngradeRejected(f"{package}: {facts.version_code} <= {old.version_code}")

    before = granted_groups(state, package, catalog)
    levels, owners = _register_definitions(state, package, facts.permission_defs, catalog)
    installed = dict(state.installed)
    installed[package] = InstalledApp(
        version_code=facts.version_code,
        requested_permissions=facts.requested_permissions,
        permission_defs=facts.permission_defs,
        cert_digest=facts.cert_digest,
    )
    staged = replace(state, installed=installed, custom_levels=levels, custom_owners=owners)

    grants = {k: v for k, v in state.grants.items() if k[0] != package or k[1] in facts.requested_permissions}
    events: List[PromptEvent] = []
    for perm in sorted(facts.requested_permissions - old.requested_permissions):
        if permission_level(staged, perm, catalog, aosp) == "dangerous":
            group = catalog.group_of(perm, state.year)
            if group in before:
                grants[(package, perm)] = True
                events.append(PromptEvent(package=package, permission=perm, outcome="auto_granted", group=group))
            else:
                grants[(package, perm)] = False
        else:
            grants[(package, perm)] = _install_time_grant(staged, package, facts.cert_digest, perm, catalog, aosp)
    return replace(staged, grants=grants, prompt_log=state.prompt_log + tuple(events))


def revoke_group(state: DeviceState, package: str, group: str, catalog: GroupCatalog) -> DeviceState:
    """
    在设置里关闭一个权限组：该组全部已授予成员一起撤销

    Raises:
        NotInstalled: 包未安装
    """
    _require_installed(state, package)
    grants = dict(state.grants)
    for (pkg, perm), ok in state.grants.items():
        if pkg == package and ok and catalog.group_of(perm, state.year) == group:
            grants[(pkg, perm)] = False
    return replace(state, grants=grants)


def verify_prompt_log(state: DeviceState, catalog: GroupCatalog) -> List[str]:
    """
    用授权事件日志回放检查授予表

    检查项:
    - 每个已授予的 dangerous 权限在日志里都有 shown_granted 或 auto_granted 事件
    - auto_granted 的组与目录一致，且此前该包在同组已有授予事件

    Returns:
        违规描述列表，空列表表示一致
    """
    problems: List[str] = []
    granted_events = {
        (e.package, e.permission) for e in state.prompt_log if e.outcome in ("shown_granted", "auto_granted")
    }
    for (pkg, perm), ok in sorted(state.grants.items()):
        if ok and catalog.is_dangerous(perm, state.year) and (pkg, perm) not in granted_events:
            problems.append(f"{pkg}: {perm} 已授予但日志中没有授予事件")

    seen_groups: Dict[str, set] = {}
    for i, e in enumerate(state.prompt_log):
        groups = seen_groups.setdefault(e.package, set())
        if e.outcome == "auto_granted":
            if catalog.group_of(e.permission, state.year) != e.group:
                problems.append(f"#{i} {e.package}: {e.permission} 不属于 {e.group}")
            if e.group not in groups:
                problems.append(f"#{i} {e.package}: {e.group} 此前没有授予成员却被静默授予")
        if e.outcome in ("shown_granted", "auto_granted") and e.group:
            groups.add(e.group)
    return problems


# ---------------------------------------------------------------- 场景


@dataclass
class ScenarioResult:
    """场景回放结果；steps 记录每一步产生的授权事件"""

    state: DeviceState
    steps: List[Tuple[str, str, Tuple[PromptEvent, ...]]] = field(default_factory=list)

    def prompts_for(self, kind: str) -> List[PromptEvent]:
        return [e for k, _, events in self.steps if k == kind for e in events]

    def outcome_counts(self, kind: Optional[str] = None) -> Dict[str, int]:
        events = self.prompts_for(kind) if kind else list(self.state.prompt_log)
        counts = {"shown_granted": 0, "shown_denied": 0, "auto_granted": 0}
        for e in events:
            counts[e.outcome] += 1
        return counts

    def to_dict(self) -> Dict[str, Any]:
        return {
            "state": self.state.to_dict(),
            "outcomes": self.outcome_counts(),
            "update_outcomes": self.outcome_counts("update"),
            "auto_granted_groups": sorted({e.group for e in self.prompts_for("update")}),
        }


def app_from_event(data: Dict[str, Any]) -> ApkFacts:
    """场景事件里的内联应用描述；权限可写短名"""
    return ApkFacts(
        sha256=data.get("sha256", ""),
        package_name=data["package_name"],
        version_code=int(data.get("version_code", 0)),
        cert_digest=data.get("cert_digest"),
        requested_permissions=frozenset(qualify(p) for p in data.get("requested_permissions") or ()),
        permission_defs=tuple(PermissionDef.from_dict(p) for p in data.get("permission_defs") or ()),
    )


def apply_event(
    state: DeviceState, event: Dict[str, Any], catalog: GroupCatalog, aosp: Optional[AospList] = None
) -> DeviceState:
    kind = event.get("event")
    if kind == "install":
        return install(state, app_from_event(event["app"]), catalog, aosp)
    if kind == "update":
        return update(state, app_from_event(event["app"]), catalog, aosp)
    if kind == "user_grant":
        return user_grant(state, event["package"], event["permission"], catalog, aosp)
    if kind == "user_deny":
        return user_deny(state, event["package"], event["permission"], catalog, aosp)
    if kind == "revoke_group":
        return revoke_group(state, event["package"], event["group"], catalog)
    raise InvalidConfig(f"未知场景事件: {kind!r}（可选 {', '.join(EVENT_KINDS)}）")


def _event_package(event: Dict[str, Any]) -> str:
    return event.get("package") or (event.get("app") or {}).get("package_name", "")


def run_scenario(
    events: Iterable[Dict[str, Any]],
    catalog: GroupCatalog,
    year: int = DEFAULT_SIMULATOR_YEAR,
    aosp: Optional[AospList] = None,
) -> ScenarioResult:
    """
    按顺序回放场景事件

    Args:
        events: {event: install|update|user_grant|user_deny|revoke_group, ...}
        catalog: 权限组目录
        year: 平台年份，整个场景固定

    Returns:
        ScenarioResult
    """
    result = ScenarioResult(state=new_device(year))
    for event in events:
        before = len(result.state.prompt_log)
        result.state = apply_event(result.state, event, catalog, aosp)
        result.steps.append(
            (event["event"], _event_package(event), result.state.prompt_log[before:])
        )
    return result


def _pair_for(group: str, catalog: GroupCatalog, year: int) -> Optional[Tuple[str, str]]:
    members = catalog.members(group, year)
    preferred = PREFERRED_PAIRS.get(group)
    if preferred:
        base, added = (qualify(p) for p in preferred)
        if base in members and added in members:
            return base, added
    ordered = sorted(members)
    return (ordered[0], ordered[1]) if len(ordered) >= 2 else None


def nine_group_scenario(catalog: GroupCatalog, year: int = DEFAULT_SIMULATOR_YEAR) -> List[Dict[str, Any]]:
    """
    九组配对场景

    每组一个测试包: v1 只声明一个成员并由用户授予，v2 再声明同组另一个成员。
    先完成全部基线安装与授权，再依次更新。
    """
    baseline: List[Dict[str, Any]] = []
    updates: List[Dict[str, Any]] = []
    for group in ROSTER:
        pair = _pair_for(group, catalog, year)
        if pair is None:
            logger.warning(f"{group} 在 {year} 年不足两个成员，跳过")
            continue
        base, added = pair
        package = f"sim.pair.{group.lower()}"
        baseline.append(
            {"event": "install", "app": {"package_name": package, "version_code": 1, "requested_permissions": [base]}}
        )
        baseline.append({"event": "user_grant", "package": package, "permission": base})
        updates.append(
            {
                "event": "update",
                "app": {"package_name": package, "version_code": 2, "requested_permissions": [base, added]},
            }
        )
    return baseline + updates
