#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
权限目录：权限组、AOSP 权限清单、显示标签
"""

from permdrift.catalog.aosp import AospList, load_aosp_list
from permdrift.catalog.groups import ROSTER, CatalogEntry, GroupCatalog, load_catalog, qualify, short_name
from permdrift.catalog.labels import PermissionLabels, default_human_label, load_labels

__all__ = [
    "AospList",
    "load_aosp_list",
    "ROSTER",
    "CatalogEntry",
    "GroupCatalog",
    "load_catalog",
    "qualify",
    "short_name",
    "PermissionLabels",
    "default_human_label",
    "load_labels",
]
