#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
权限组扩张模型
"""

from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, Tuple

from .facts import ApkFacts


@dataclass(frozen=True)
class VersionChain:
    """同一包名的版本序列，按版本排序规则升序"""

    package_name: str
    versions: Tuple[ApkFacts, ...]

    def __post_init__(self):
        for v in self.versions:
            if v.package_name != self.package_name:
                raise ValueError(
                    f"版本链混入其它包: {v.package_name} != {self.package_name}"
                )

    def adjacent_pairs(self):
        return zip(self.versions, self.versions[1:])

    @property
    def max_detections(self) -> int:
        return max((v.vt_detections or 0) for v in self.versions)

    @property
    def max_permission_count(self) -> int:
        return max(len(v.requested_permissions) for v in self.versions)


@dataclass(frozen=True)
class ExpansionEvent:
    """相邻两个版本之间一次组内静默新增"""

    package_name: str
    from_version: int
    to_version: int
    group: str
    added_permission: str
    prior_members: FrozenSet[str]
    year: int
    cross_market: bool = False

    def __post_init__(self):
        if not self.prior_members:
            raise ValueError("prior_members 不能为空")
        if self.added_permission in self.prior_members:
            raise ValueError("新增权限不能已在早期版本中")

    @property
    def key(self) -> Tuple[str, int, int, str]:
        return (self.package_name, self.from_version, self.to_version, self.added_permission)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "package_name": self.package_name,
            "from_version": self.from_version,
            "to_version": self.to_version,
            "group": self.group,
            "added_permission": self.added_permission,
            "prior_members": sorted(self.prior_members),
            "year": self.year,
            "cross_market": self.cross_market,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExpansionEvent":
        return cls(
            package_name=data["package_name"],
            from_version=int(data["from_version"]),
            to_version=int(data["to_version"]),
            group=data["group"],
            added_permission=data["added_permission"],
            prior_members=frozenset(data["prior_members"]),
            year=int(data["year"]),
            cross_market=bool(data.get("cross_market", False)),
        )


@dataclass(frozen=True)
class FlowEntry:
    """组内流向计数：from_permission 已存在时新增 to_permission"""

    group: str
    from_permission: str
    to_permission: str
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count 必须 >= 1")
        if self.from_permission == self.to_permission:
            raise ValueError("流向两端不能相同")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "group": self.group,
            "from_permission": self.from_permission,
            "to_permission": self.to_permission,
            "count": self.count,
        }
