#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
字节码分析结果模型
"""

from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, Optional

OP_KINDS = ("query", "insert", "update", "delete", "call")
ATTRIBUTIONS = ("app_core", "third_party", "unclassified")
STORE_KINDS = ("sqlite", "file", "none-detected")


@dataclass(frozen=True)
class CallSite:
    """ContentResolver 调用点"""

    declaring_class: str
    method_name: str
    op_kind: str
    resolved_authority: Optional[str] = None  # 规范化后不含 content:// 前缀
    attribution: str = "unclassified"
    offset: int = 0  # 方法内指令偏移（code unit），用于稳定排序

    def __post_init__(self):
        if self.op_kind not in OP_KINDS:
            raise ValueError(f"未知操作: {self.op_kind}")
        if self.attribution not in ATTRIBUTIONS:
            raise ValueError(f"未知归属: {self.attribution}")
        if self.resolved_authority is not None:
            if not self.resolved_authority or "content://" in self.resolved_authority:
                raise ValueError(f"authority 未规范化: {self.resolved_authority!r}")

    @property
    def sort_key(self):
        return (self.declaring_class, self.method_name, self.offset)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "declaring_class": self.declaring_class,
            "method_name": self.method_name,
            "op_kind": self.op_kind,
            "resolved_authority": self.resolved_authority,
            "attribution": self.attribution,
            "offset": self.offset,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CallSite":
        return cls(
            declaring_class=data["declaring_class"],
            method_name=data["method_name"],
            op_kind=data["op_kind"],
            resolved_authority=data.get("resolved_authority"),
            attribution=data.get("attribution", "unclassified"),
            offset=int(data.get("offset", 0)),
        )


@dataclass(frozen=True)
class ProviderSensitivity:
    """provider query() 返回路径上暴露的列名常量与底层存储类型"""

    provider_class: str
    column_constants: FrozenSet[str] = frozenset()
    store_kind: str = "none-detected"

    def __post_init__(self):
        if self.store_kind not in STORE_KINDS:
            raise ValueError(f"未知存储类型: {self.store_kind}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "provider_class": self.provider_class,
            "column_constants": sorted(self.column_constants),
            "store_kind": self.store_kind,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ProviderSensitivity":
        return cls(
            provider_class=data["provider_class"],
            column_constants=frozenset(data.get("column_constants") or ()),
            store_kind=data.get("store_kind", "none-detected"),
        )
