#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
AOSP 平台权限清单（按发布年份）

不在清单里的 <permission> 定义视为自定义权限。
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple

from ..conf import AOSP_LIST_FILE
from ..errors import CatalogInvalid
from ..utils.datafiles import iter_tsv
from .groups import qualify

logger = logging.getLogger("permdrift.catalog.aosp")


@dataclass(frozen=True)
class AospList:
    """{权限: (出现年份, 保护级别)}"""

    entries: Dict[str, Tuple[int, str]]

    def is_aosp(self, permission: str, year: Optional[int] = None) -> bool:
        """截至 year 的任一发布里出现过；year 省略时取全部年份的并集"""
        item = self.entries.get(permission)
        if item is None:
            return False
        return year is None or item[0] <= year

    def level_of(self, permission: str) -> Optional[str]:
        item = self.entries.get(permission)
        return item[1] if item else None

    def is_normal(self, permission: str) -> bool:
        return self.level_of(permission) == "normal"

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, permission: str) -> bool:
        return permission in self.entries


def load_aosp_list(path: Optional[Path] = None) -> AospList:
    """
    读取 AOSP 权限清单 TSV

    列: permission_name, year_added, protection_level
    """
    path = Path(path or AOSP_LIST_FILE)
    entries: Dict[str, Tuple[int, str]] = {}
    errors = []
    for lineno, cells in iter_tsv(path):
        cells = cells + [""] * (3 - len(cells))
        name, year, level = cells[:3]
        try:
            year_int = int(year)
        except ValueError:
            errors.append(f"第 {lineno} 行: 年份不是整数 {year!r}")
            continue
        key = qualify(name)
        # 同名多行保留最早年份
        if key not in entries or entries[key][0] > year_int:
            entries[key] = (year_int, level or "normal")
    if errors:
        raise CatalogInvalid(errors)
    logger.debug(f"已加载 AOSP 权限清单 {len(entries)} 条: {path}")
    return AospList(entries=entries)
