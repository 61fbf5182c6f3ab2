#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
语料元数据 CSV

列: sha256, pkg_name, vercode, vt_detection, markets (| 分隔), dex_date (ISO 日期)
"""

import csv
import logging
from datetime import date
from pathlib import Path
from typing import Dict, Iterator, Optional

from ..errors import InvalidConfig, MissingInput
from ..models import CorpusMetadata

logger = logging.getLogger("permdrift.manifest.metadata")

REQUIRED_COLUMNS = ("sha256", "pkg_name", "vercode", "vt_detection", "markets", "dex_date")


def _parse_int(text: str) -> Optional[int]:
    text = (text or "").strip()
    if not text:
        return None
    try:
        return int(float(text))
    except ValueError:
        return None


def _parse_year(text: str) -> Optional[int]:
    text = (text or "").strip()
    if not text:
        return None
    try:
        return date.fromisoformat(text[:10]).year
    except ValueError:
        # 只给了年份，或带时间的非标准写法
        head = text[:4]
        return int(head) if head.isdigit() else None


def parse_metadata_row(row: Dict[str, str]) -> CorpusMetadata:
    """CSV 一行 -> CorpusMetadata"""
    markets = frozenset(m.strip() for m in (row.get("markets") or "").split("|") if m.strip())
    vt = _parse_int(row.get("vt_detection", ""))
    return CorpusMetadata(
        sha256=row["sha256"].strip().lower(),
        pkg_name=(row.get("pkg_name") or "").strip(),
        vercode=_parse_int(row.get("vercode", "")),
        vt_detection=max(0, vt or 0),
        markets=markets,
        dex_year=_parse_year(row.get("dex_date", "")),
    )


def iter_metadata(csv_path: Path) -> Iterator[CorpusMetadata]:
    """流式读取元数据 CSV"""
    csv_path = Path(csv_path)
    if not csv_path.exists():
        raise MissingInput(csv_path)
    with open(csv_path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        missing = [c for c in REQUIRED_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise InvalidConfig(f"元数据 CSV 缺少列 {missing}: {csv_path}")
        for lineno, row in enumerate(reader, start=2):
            if not (row.get("sha256") or "").strip():
                logger.warning(f"元数据第 {lineno} 行缺少 sha256，已跳过")
                continue
            yield parse_metadata_row(row)


def load_metadata(csv_path: Path) -> Dict[str, CorpusMetadata]:
    """
    读取元数据为 sha256 索引

    Args:
        csv_path: 元数据 CSV 路径

    Returns:
        {sha256: CorpusMetadata}；同一 sha256 出现多次时保留第一行
    """
    index: Dict[str, CorpusMetadata] = {}
    for meta in iter_metadata(csv_path):
        index.setdefault(meta.sha256, meta)
    logger.info(f"已加载元数据 {len(index)} 行: {csv_path}")
    return index
