#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
随时间变化的 dangerous 权限组目录

每条记录: (权限, 组, 加入年份, 移出年份)，区间左闭右开；
移出年份为空表示至今有效。同一权限同一年最多属于一个组。
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Tuple

from ..conf import GROUP_CATALOG_FILE
from ..errors import CatalogInvalid
from ..utils.datafiles import iter_tsv

logger = logging.getLogger("permdrift.catalog.groups")

ROSTER: Tuple[str, ...] = (
    "STORAGE",
    "LOCATION",
    "PHONE",
    "CONTACTS",
    "SMS",
    "NEARBY_DEVICES",
    "CALENDAR",
    "CALL_LOG",
    "SENSORS",
)

ANDROID_PREFIX = "android.permission."


def qualify(permission: str) -> str:
    """'READ_SMS' -> 'android.permission.READ_SMS'；已带包名的原样返回"""
    return permission if "." in permission else ANDROID_PREFIX + permission


def short_name(permission: str) -> str:
    """'android.permission.READ_SMS' -> 'READ_SMS'"""
    return permission.rsplit(".", 1)[-1]


@dataclass(frozen=True)
class CatalogEntry:
    permission: str
    group: str
    year_added: int
    year_removed: Optional[int] = None

    def active(self, year: int) -> bool:
        return self.year_added <= year and (self.year_removed is None or year < self.year_removed)


@dataclass(frozen=True)
class GroupCatalog:
    """加载后只读，可在 worker 之间共享"""

    entries: Tuple[CatalogEntry, ...] = ()
    groups: Tuple[str, ...] = ROSTER
    _by_permission: Dict[str, Tuple[CatalogEntry, ...]] = field(
        default_factory=dict, init=False, compare=False, repr=False
    )

    def __post_init__(self):
        index: Dict[str, List[CatalogEntry]] = defaultdict(list)
        for e in self.entries:
            index[e.permission].append(e)
        object.__setattr__(
            self, "_by_permission", {k: tuple(sorted(v, key=lambda e: e.year_added)) for k, v in index.items()}
        )

    def group_of(self, permission: str, year: int) -> Optional[str]:
        """该年份权限所属的组；未分组或未知权限返回 None"""
        for e in self._by_permission.get(qualify(permission), ()):
            if e.active(year):
                return e.group
        return None

    def is_dangerous(self, permission: str, year: int) -> bool:
        return self.group_of(permission, year) is not None

    def members(self, group: str, year: int) -> FrozenSet[str]:
        return frozenset(e.permission for e in self.entries if e.group == group and e.active(year))

    def permissions(self) -> FrozenSet[str]:
        return frozenset(self._by_permission)

    def transitions(self, permission: str) -> List[Tuple[int, Optional[str]]]:
        """权限的组变化点 [(年份, 组)]，组为 None 表示移出"""
        points: List[Tuple[int, Optional[str]]] = []
        for e in self._by_permission.get(qualify(permission), ()):
            points.append((e.year_added, e.group))
            if e.year_removed is not None:
                points.append((e.year_removed, None))
        points.sort(key=lambda p: (p[0], p[1] is not None))
        return points

    def __len__(self) -> int:
        return len(self.entries)


def _validate(rows: List[Tuple[int, CatalogEntry]]) -> List[str]:
    errors = []
    for lineno, e in rows:
        if e.group not in ROSTER:
            errors.append(f"第 {lineno} 行: 组 {e.group} 不在九组名单内")
        if e.year_removed is not None and e.year_removed <= e.year_added:
            errors.append(f"第 {lineno} 行: year_removed {e.year_removed} <= year_added {e.year_added}")
    by_perm: Dict[str, List[Tuple[int, CatalogEntry]]] = defaultdict(list)
    for lineno, e in rows:
        by_perm[e.permission].append((lineno, e))
    for perm, items in by_perm.items():
        items.sort(key=lambda it: it[1].year_added)
        for (l1, e1), (l2, e2) in zip(items, items[1:]):
            end = e1.year_removed
            if end is None or end > e2.year_added:
                errors.append(f"第 {l1}/{l2} 行: {perm} 的有效区间重叠")
    return errors


def load_catalog(path: Optional[Path] = None) -> GroupCatalog:
    """
    读取权限组目录 TSV

    列: permission_name, group_name, year_added, year_removed（空 = 至今）

    Args:
        path: 目录文件，默认使用随包数据

    Returns:
        GroupCatalog

    Raises:
        CatalogInvalid: 列出每一条违规行
    """
    path = Path(path or GROUP_CATALOG_FILE)
    rows: List[Tuple[int, CatalogEntry]] = []
    errors: List[str] = []
    for lineno, cells in iter_tsv(path):
        cells = cells + [""] * (4 - len(cells))
        perm, group, added, removed = cells[:4]
        if not perm or not group:
            errors.append(f"第 {lineno} 行: 缺少权限名或组名")
            continue
        try:
            entry = CatalogEntry(
                permission=qualify(perm),
                group=group,
                year_added=int(added),
                year_removed=int(removed) if removed else None,
            )
        except ValueError:
            errors.append(f"第 {lineno} 行: 年份不是整数 ({added!r}, {removed!r})")
            continue
        rows.append((lineno, entry))
    errors.extend(_validate(rows))
    if errors:
        raise CatalogInvalid(errors)
    logger.debug(f"已加载权限组目录 {len(rows)} 条: {path}")
    return GroupCatalog(entries=tuple(e for _, e in rows))
