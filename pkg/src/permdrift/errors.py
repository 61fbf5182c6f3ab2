#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
异常定义

所有异常都继承 PermdriftError，CLI 据此映射退出码。
"""

from typing import List, Optional


class PermdriftError(Exception):
    """项目异常基类"""


# ---------------------------------------------------------------- 解析


class MalformedContainer(PermdriftError):
    """APK 不是 ZIP 容器，或缺少 AndroidManifest.xml"""


class MalformedManifest(PermdriftError):
    """AXML chunk 结构非法（截断、字符串索引越界、嵌套不平衡）"""


class MalformedDex(PermdriftError):
    """DEX 文件头或结构非法"""


class ClassNotFound(PermdriftError):
    """DEX 集合中找不到指定类"""

    def __init__(self, class_name: str):
        super().__init__(f"类不存在: {class_name}")
        self.class_name = class_name


# ---------------------------------------------------------------- 数据文件


class CatalogInvalid(PermdriftError):
    """权限组目录数据违反不变量，rows 列出每一条违规行"""

    def __init__(self, rows: List[str]):
        super().__init__("权限组目录非法:\n  " + "\n  ".join(rows))
        self.rows = rows


# ---------------------------------------------------------------- 统计


class DegenerateTable(PermdriftError):
    """2×2 表退化（b·c = 0 或边际为 0），统计量无定义"""


class DegenerateStratum(PermdriftError):
    """Mantel-Haenszel 分层退化（Σ b·c/n = 0 或分层为空）"""


# ---------------------------------------------------------------- 关联


class Uncategorized(PermdriftError):
    """列名常量无法匹配任何敏感类别"""

    def __init__(self, columns: Optional[List[str]] = None):
        cols = ", ".join(sorted(columns or [])) or "(空)"
        super().__init__(f"无法归类的列集合: {cols}")
        self.columns = sorted(columns or [])


# ---------------------------------------------------------------- 模拟器


class AlreadyInstalled(PermdriftError):
    """安装已存在的包"""


class NotInstalled(PermdriftError):
    """操作未安装的包"""


class NotRequested(PermdriftError):
    """授予应用未声明的权限"""


class NotDangerous(PermdriftError):
    """对非 dangerous 权限发起用户授权"""


class DowngradeRejected(PermdriftError):
    """更新的 version_code 不高于已安装版本"""


# ---------------------------------------------------------------- 监控


class UnknownPackage(PermdriftError):
    """replaced 事件没有先前快照"""


class OutOfOrder(PermdriftError):
    """事件日志时间戳非单调"""


# ---------------------------------------------------------------- CLI


class MissingInput(PermdriftError):
    """上游产物缺失"""

    def __init__(self, path):
        super().__init__(f"缺少输入文件: {path}")
        self.path = path


class InvalidConfig(PermdriftError):
    """运行配置校验失败"""
