#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
DEX 字节码分析：调用点扫描、provider 列提取、调用点归属
"""

from permdrift.dex.attribution import attribute_call_site, load_sdk_prefixes, summarize_attribution
from permdrift.dex.callsites import normalize_authority, resolve_authority, scan_call_sites
from permdrift.dex.providers import extract_provider_columns
from permdrift.dex.reader import DexFile

__all__ = [
    "attribute_call_site",
    "load_sdk_prefixes",
    "summarize_attribution",
    "normalize_authority",
    "resolve_authority",
    "scan_call_sites",
    "extract_provider_columns",
    "DexFile",
]
