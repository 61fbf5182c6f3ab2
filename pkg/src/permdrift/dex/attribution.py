#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
调用点归属：应用自身代码 / 第三方 SDK / 无法判断
"""

from pathlib import Path
from typing import Iterable, List, Optional, Sequence

from ..conf import SDK_PREFIX_FILE
from ..utils.datafiles import read_prefix_list


def _under(class_name: str, prefix: str) -> bool:
    prefix = prefix.rstrip(".")
    return bool(prefix) and (class_name == prefix or class_name.startswith(prefix + "."))


def attribute_call_site(declaring_class: str, app_package: str, sdk_prefixes: Sequence[str]) -> str:
    """
    按包名前缀归属调用点

    先判断应用自身前缀，再匹配 SDK 前缀；都不匹配为 unclassified。
    混淆后重新打包到未知前缀的第三方代码只会落进 unclassified，不会被算作 app_core。
    """
    if app_package and declaring_class.startswith(app_package + "."):
        return "app_core"
    if any(_under(declaring_class, p) for p in sdk_prefixes):
        return "third_party"
    return "unclassified"


def load_sdk_prefixes(path: Optional[Path] = None) -> List[str]:
    """读取 SDK 前缀列表，默认使用随包数据文件"""
    return read_prefix_list(path or SDK_PREFIX_FILE)


def summarize_attribution(labels: Iterable[str]) -> str:
    """
    一组调用点的整体归属

    Returns:
        third_party_only / app_core_only / mixed / unclassified
    """
    kinds = set(labels)
    has_core = "app_core" in kinds
    has_third = "third_party" in kinds
    if has_core and has_third:
        return "mixed"
    if has_third:
        return "third_party_only"
    if has_core:
        return "app_core_only"
    return "unclassified"
