#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
清单元素树

二进制 AXML 与明文 XML 解码到同一种 XmlElement：
- 标签、属性名用 Clark 记法 "{uri}name" 表示命名空间
- 属性值带类型：str / bool / int；引用写成 "@0x7f010001"
明文解析时按同一套规则把文本转成带类型的值，两条路径才能逐字段相等。
"""

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Union

from ..errors import MalformedManifest

ANDROID_NS = "http://schemas.android.com/apk/res/android"

AttrValue = Union[str, bool, int]

# android 属性资源 ID（framework R.attr），混淆或裁剪了属性名字符串的 APK 靠它还原
ANDROID_ATTR_IDS: Dict[str, int] = {
    "label": 0x01010001,
    "icon": 0x01010002,
    "name": 0x01010003,
    "permission": 0x01010006,
    "readPermission": 0x01010007,
    "writePermission": 0x01010008,
    "protectionLevel": 0x01010009,
    "permissionGroup": 0x0101000A,
    "enabled": 0x0101000E,
    "exported": 0x01010010,
    "authorities": 0x01010018,
    "minSdkVersion": 0x0101020C,
    "versionCode": 0x0101021B,
    "versionName": 0x0101021C,
    "targetSdkVersion": 0x01010270,
    "maxSdkVersion": 0x01010271,
}
ANDROID_ATTR_NAMES: Dict[int, str] = {v: k for k, v in ANDROID_ATTR_IDS.items()}

# 明文中按整数编码的 android 属性
_INT_ATTRS = {"versionCode", "minSdkVersion", "targetSdkVersion", "maxSdkVersion"}

# protectionLevel 基础级别与附加标志（PermissionInfo 常量）
PROTECTION_BASE = {
    "normal": 0x0,
    "dangerous": 0x1,
    "signature": 0x2,
    "signatureOrSystem": 0x3,
    "internal": 0x4,
}
PROTECTION_FLAGS = {
    "privileged": 0x10,
    "system": 0x10,
    "development": 0x20,
    "appop": 0x40,
    "pre23": 0x80,
    "installer": 0x100,
    "verifier": 0x200,
    "preinstalled": 0x400,
    "setup": 0x800,
    "instant": 0x1000,
    "runtime": 0x2000,
    "oem": 0x4000,
    "vendorPrivileged": 0x8000,
    "textClassifier": 0x10000,
}

_CLARK = re.compile(r"^\{([^}]*)\}(.*)$")


def android(name: str) -> str:
    """android 命名空间属性的 Clark 键"""
    return f"{{{ANDROID_NS}}}{name}"


def split_clark(key: str):
    """'{uri}name' -> (uri, name)；无命名空间返回 (None, key)"""
    m = _CLARK.match(key)
    if m:
        return m.group(1), m.group(2)
    return None, key


@dataclass
class XmlElement:
    """命名空间已解析、属性已带类型的元素节点"""

    tag: str
    attrs: Dict[str, AttrValue] = field(default_factory=dict)
    children: List["XmlElement"] = field(default_factory=list)
    # 属性键 -> 资源 ID（AXML 资源表中的值，明文路径按已知表补齐）
    resource_ids: Dict[str, int] = field(default_factory=dict, compare=False)

    def get(self, key: str, default: Any = None) -> Any:
        return self.attrs.get(key, default)

    def android_attr(self, name: str, default: Any = None) -> Any:
        return self.attrs.get(android(name), default)

    def iter(self, tag: Optional[str] = None) -> Iterator["XmlElement"]:
        """先序遍历"""
        if tag is None or self.tag == tag:
            yield self
        for child in self.children:
            yield from child.iter(tag)

    def findall(self, tag: str) -> List["XmlElement"]:
        """直接子节点中标签匹配的"""
        return [c for c in self.children if c.tag == tag]


def encode_protection_level(text: str) -> Union[int, str]:
    """'signature|privileged' -> 0x12；出现未知记号时原样返回字符串"""
    value = 0
    tokens = [t.strip() for t in text.split("|") if t.strip()]
    if not tokens:
        return text
    base, flags = tokens[0], tokens[1:]
    if base in PROTECTION_BASE:
        value |= PROTECTION_BASE[base]
    elif base in PROTECTION_FLAGS:
        # 只有标志、没有基础级别的写法
        value |= PROTECTION_FLAGS[base]
    else:
        return text
    for flag in flags:
        if flag not in PROTECTION_FLAGS:
            return text
        value |= PROTECTION_FLAGS[flag]
    return value


def coerce_attribute(key: str, text: str) -> AttrValue:
    """明文属性文本 -> 带类型的值（与 AXML 编码器使用同一规则）"""
    uri, name = split_clark(key)
    if uri == ANDROID_NS:
        if name == "protectionLevel":
            return encode_protection_level(text)
        if name in _INT_ATTRS and re.fullmatch(r"-?\d+", text.strip()):
            return int(text.strip())
    if text in ("true", "false"):
        return text == "true"
    return text


def _from_etree(node: ET.Element) -> XmlElement:
    elem = XmlElement(tag=node.tag)
    for key, text in node.attrib.items():
        elem.attrs[key] = coerce_attribute(key, text)
        uri, name = split_clark(key)
        if uri == ANDROID_NS and name in ANDROID_ATTR_IDS:
            elem.resource_ids[key] = ANDROID_ATTR_IDS[name]
    elem.children = [_from_etree(child) for child in node]
    return elem


def parse_plaintext(data: Union[bytes, str]) -> XmlElement:
    """解析明文 AndroidManifest.xml"""
    try:
        root = ET.fromstring(data)
    except ET.ParseError as e:
        raise MalformedManifest(f"明文清单解析失败: {e}") from e
    return _from_etree(root)
