#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
自定义权限与跨开发者利用对模型
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

from .dex import CallSite, ProviderSensitivity
from .facts import ComponentDecl

CATEGORIES = (
    "contacts",
    "auth_credentials",
    "user_identity",
    "location",
    "messages",
    "file_paths",
    "medical",
    "financial",
    "settings",
)

# Type A 类别 -> 对应的 AOSP dangerous 门控权限
AOSP_GATES = {
    "contacts": "android.permission.READ_CONTACTS",
    "auth_credentials": "android.permission.GET_ACCOUNTS",
    "user_identity": "android.permission.READ_PHONE_STATE",
    "location": "android.permission.ACCESS_FINE_LOCATION",
    "messages": "android.permission.READ_SMS",
}


@dataclass(frozen=True)
class CustomPermissionRecord:
    """一个 (定义包, 权限名) 的自定义权限"""

    name: str
    protection_level: str
    defining_package: str
    cert_digest: Optional[str]
    guarded_components: Tuple[ComponentDecl, ...] = ()
    sha256: Optional[str] = None  # 定义该权限的 APK，用于回查 DEX

    @property
    def attached(self) -> bool:
        return bool(self.guarded_components)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "protection_level": self.protection_level,
            "defining_package": self.defining_package,
            "cert_digest": self.cert_digest,
            "guarded_components": [c.to_dict() for c in self.guarded_components],
            "attached": self.attached,
            "sha256": self.sha256,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CustomPermissionRecord":
        return cls(
            name=data["name"],
            protection_level=data["protection_level"],
            defining_package=data["defining_package"],
            cert_digest=data.get("cert_digest"),
            guarded_components=tuple(
                ComponentDecl.from_dict(c) for c in data.get("guarded_components") or ()
            ),
            sha256=data.get("sha256"),
        )


@dataclass(frozen=True)
class ExploitableSide:
    package: str
    cert_digest: Optional[str]
    authority: str
    sensitivity: ProviderSensitivity

    def to_dict(self) -> Dict[str, Any]:
        return {
            "package": self.package,
            "cert_digest": self.cert_digest,
            "authority": self.authority,
            "sensitivity": self.sensitivity.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExploitableSide":
        return cls(
            package=data["package"],
            cert_digest=data.get("cert_digest"),
            authority=data["authority"],
            sensitivity=ProviderSensitivity.from_dict(data["sensitivity"]),
        )


@dataclass(frozen=True)
class ExploitingSide:
    package: str
    cert_digest: Optional[str]
    call_sites: Tuple[CallSite, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "package": self.package,
            "cert_digest": self.cert_digest,
            "call_sites": [c.to_dict() for c in self.call_sites],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExploitingSide":
        return cls(
            package=data["package"],
            cert_digest=data.get("cert_digest"),
            call_sites=tuple(CallSite.from_dict(c) for c in data["call_sites"]),
        )


@dataclass(frozen=True)
class CrossDevPair:
    """
    静态确认的跨开发者利用对

    category 为 None 表示无法归类（Uncategorized，照常报告不丢弃）。
    """

    permission_name: str
    exploitable: ExploitableSide
    exploiting: ExploitingSide
    category: Optional[str] = None
    type: Optional[str] = None  # "A" / "B"
    aosp_gate: Optional[str] = None

    def __post_init__(self):
        if self.exploitable.cert_digest == self.exploiting.cert_digest:
            raise ValueError("利用对两端证书相同")
        if not self.exploiting.call_sites:
            raise ValueError("利用对必须锚定至少一个调用点")
        for site in self.exploiting.call_sites:
            if site.resolved_authority != self.exploitable.authority:
                raise ValueError(
                    f"调用点 authority 不匹配: {site.resolved_authority} != {self.exploitable.authority}"
                )
        if (self.type == "A") != (self.aosp_gate is not None):
            raise ValueError("仅 Type A 带 aosp_gate")

    @property
    def key(self) -> Tuple[str, str, str, str]:
        return (
            self.permission_name,
            self.exploitable.package,
            self.exploitable.authority,
            self.exploiting.package,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "permission_name": self.permission_name,
            "exploitable": self.exploitable.to_dict(),
            "exploiting": self.exploiting.to_dict(),
            "category": self.category,
            "type": self.type,
            "aosp_gate": self.aosp_gate,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CrossDevPair":
        return cls(
            permission_name=data["permission_name"],
            exploitable=ExploitableSide.from_dict(data["exploitable"]),
            exploiting=ExploitingSide.from_dict(data["exploiting"]),
            category=data.get("category"),
            type=data.get("type"),
            aosp_gate=data.get("aosp_gate"),
        )
