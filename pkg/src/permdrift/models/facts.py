#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
APK 事实模型

一次解析得到的全部信息：身份、证书摘要、请求权限、权限定义、组件、语料元数据。
对象不可变，可在线程/进程间传递。
"""

import json
from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, Optional, Tuple

PROTECTION_LEVELS = ("normal", "dangerous", "signature", "other")
COMPONENT_KINDS = ("provider", "activity", "service", "receiver")


@dataclass(frozen=True)
class PermissionDef:
    """<permission> 定义"""

    name: str
    protection_level: str = "normal"
    explicit_level: bool = False  # 清单省略 protectionLevel 时为 False

    def __post_init__(self):
        if self.protection_level not in PROTECTION_LEVELS:
            raise ValueError(f"未知保护级别: {self.protection_level}")
        if not self.explicit_level and self.protection_level != "normal":
            raise ValueError("省略 protectionLevel 时级别必须为 normal")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "protection_level": self.protection_level,
            "explicit_level": self.explicit_level,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PermissionDef":
        return cls(
            name=data["name"],
            protection_level=data.get("protection_level", "normal"),
            explicit_level=bool(data.get("explicit_level", False)),
        )


@dataclass(frozen=True)
class ComponentDecl:
    """四大组件声明"""

    kind: str  # provider / activity / service / receiver
    class_name: str
    exported: bool = False
    guard_permission: Optional[str] = None  # 组件上的 android:permission
    authorities: Tuple[str, ...] = ()  # 仅 provider
    read_permission: Optional[str] = None  # 仅 provider
    write_permission: Optional[str] = None  # 仅 provider

    def __post_init__(self):
        if self.kind not in COMPONENT_KINDS:
            raise ValueError(f"未知组件类型: {self.kind}")
        if self.authorities and self.kind != "provider":
            raise ValueError("只有 provider 可以声明 authorities")

    @property
    def guards(self) -> FrozenSet[str]:
        """组件被哪些权限保护（permission / readPermission / writePermission）"""
        names = {self.guard_permission, self.read_permission, self.write_permission}
        return frozenset(n for n in names if n)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "kind": self.kind,
            "class_name": self.class_name,
            "exported": self.exported,
            "guard_permission": self.guard_permission,
            "authorities": list(self.authorities),
        }
        if self.kind == "provider":
            data["read_permission"] = self.read_permission
            data["write_permission"] = self.write_permission
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ComponentDecl":
        return cls(
            kind=data["kind"],
            class_name=data["class_name"],
            exported=bool(data.get("exported", False)),
            guard_permission=data.get("guard_permission"),
            authorities=tuple(data.get("authorities") or ()),
            read_permission=data.get("read_permission"),
            write_permission=data.get("write_permission"),
        )


@dataclass(frozen=True)
class CorpusMetadata:
    """语料元数据 CSV 的一行"""

    sha256: str
    pkg_name: str = ""
    vercode: Optional[int] = None
    vt_detection: int = 0
    markets: FrozenSet[str] = frozenset()
    dex_year: Optional[int] = None


@dataclass(frozen=True)
class ApkFacts:
    """
    单个 APK 的全部提取结果

    元数据字段 (dex_year / markets / vt_detections) 来自语料 CSV；
    缺少元数据行时 dex_year 与 vt_detections 为 None，由下游跳过。
    """

    # --- 身份 ---
    sha256: str
    package_name: str
    version_code: int = 0
    cert_digest: Optional[str] = None

    # --- 清单 ---
    requested_permissions: FrozenSet[str] = frozenset()
    permission_defs: Tuple[PermissionDef, ...] = ()
    components: Tuple[ComponentDecl, ...] = ()

    # --- 语料元数据 ---
    dex_year: Optional[int] = None
    markets: FrozenSet[str] = frozenset()
    vt_detections: Optional[int] = None

    # --- 扩展字段 ---
    version_name: Optional[str] = None
    min_sdk: Optional[int] = None
    target_sdk: Optional[int] = None
    max_sdk_by_permission: Tuple[Tuple[str, int], ...] = ()  # 仅记录，不参与过滤
    dex_entries: Tuple[str, ...] = ()

    def __post_init__(self):
        if not self.package_name:
            raise ValueError("package_name 不能为空")
        if self.version_code < 0:
            raise ValueError(f"version_code 不能为负: {self.version_code}")
        if self.vt_detections is not None and self.vt_detections < 0:
            raise ValueError(f"vt_detections 不能为负: {self.vt_detections}")

    @property
    def has_metadata(self) -> bool:
        return self.dex_year is not None and self.vt_detections is not None

    def providers(self) -> Tuple[ComponentDecl, ...]:
        return tuple(c for c in self.components if c.kind == "provider")

    def to_dict(self) -> Dict[str, Any]:
        """序列化为字典，集合排序以保证输出稳定"""
        return {
            "sha256": self.sha256,
            "package_name": self.package_name,
            "version_code": self.version_code,
            "cert_digest": self.cert_digest,
            "requested_permissions": sorted(self.requested_permissions),
            "permission_defs": [p.to_dict() for p in self.permission_defs],
            "components": [c.to_dict() for c in self.components],
            "dex_year": self.dex_year,
            "markets": sorted(self.markets),
            "vt_detections": self.vt_detections,
            "version_name": self.version_name,
            "min_sdk": self.min_sdk,
            "target_sdk": self.target_sdk,
            "max_sdk_by_permission": dict(self.max_sdk_by_permission),
            "dex_entries": list(self.dex_entries),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ApkFacts":
        """从字典反序列化"""
        return cls(
            sha256=data["sha256"],
            package_name=data["package_name"],
            version_code=int(data.get("version_code", 0)),
            cert_digest=data.get("cert_digest"),
            requested_permissions=frozenset(data.get("requested_permissions") or ()),
            permission_defs=tuple(
                PermissionDef.from_dict(p) for p in data.get("permission_defs") or ()
            ),
            components=tuple(
                ComponentDecl.from_dict(c) for c in data.get("components") or ()
            ),
            dex_year=data.get("dex_year"),
            markets=frozenset(data.get("markets") or ()),
            vt_detections=data.get("vt_detections"),
            version_name=data.get("version_name"),
            min_sdk=data.get("min_sdk"),
            target_sdk=data.get("target_sdk"),
            max_sdk_by_permission=tuple(
                sorted((data.get("max_sdk_by_permission") or {}).items())
            ),
            dex_entries=tuple(data.get("dex_entries") or ()),
        )

    def to_json(self) -> str:
        """序列化为 JSON 字符串"""
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_json(cls, json_str: str) -> "ApkFacts":
        """从 JSON 字符串反序列化"""
        return cls.from_dict(json.loads(json_str))
