#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
权限显示标签

flow 标签用于流向表（"Get Accts"、"Read"），human 标签用于更新通知（"Read Images"）。
数据文件没有条目时，flow 标签取短名，human 标签取短名的标题式写法。
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple

from ..conf import PERMISSION_LABEL_FILE
from ..utils.datafiles import iter_tsv
from .groups import qualify, short_name


def default_human_label(permission: str) -> str:
    """'android.permission.READ_MEDIA_IMAGES' -> 'Read Media Images'"""
    return " ".join(w.capitalize() for w in short_name(permission).split("_") if w)


@dataclass(frozen=True)
class PermissionLabels:
    labels: Dict[str, Tuple[str, str]]

    def flow_label(self, permission: str) -> str:
        item = self.labels.get(qualify(permission))
        return item[0] if item and item[0] else short_name(permission)

    def human_label(self, permission: str) -> str:
        item = self.labels.get(qualify(permission))
        return item[1] if item and item[1] else default_human_label(permission)


def load_labels(path: Optional[Path] = None) -> PermissionLabels:
    """列: permission_name, flow_label, human_label"""
    labels: Dict[str, Tuple[str, str]] = {}
    for _, cells in iter_tsv(Path(path or PERMISSION_LABEL_FILE)):
        cells = cells + [""] * (3 - len(cells))
        labels[qualify(cells[0])] = (cells[1], cells[2])
    return PermissionLabels(labels=labels)
