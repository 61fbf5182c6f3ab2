#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
清单解析模块：AXML 解码、签名证书摘要、ApkFacts 提取
"""

from permdrift.manifest.axml import decode_axml, looks_like_axml
from permdrift.manifest.extractor import (
    ScanOutcome,
    facts_from_manifest,
    load_manifest,
    parse_apk,
    read_dex_files,
    scan_directory,
    scan_file,
)
from permdrift.manifest.metadata import load_metadata
from permdrift.manifest.signing import cert_digest
from permdrift.manifest.xmltree import XmlElement, parse_plaintext

__all__ = [
    "decode_axml",
    "looks_like_axml",
    "ScanOutcome",
    "facts_from_manifest",
    "load_manifest",
    "parse_apk",
    "read_dex_files",
    "scan_directory",
    "scan_file",
    "load_metadata",
    "cert_digest",
    "XmlElement",
    "parse_plaintext",
]
