#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
pairs 阶段：关联跨开发者利用对

回读定义方与请求方 APK 的 DEX：请求方扫描 ContentResolver 调用点，
定义方提取 provider query() 暴露的列名。
"""

import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from tqdm import tqdm

from ..analysis import eligible_providers, latest_versions, link_pairs, load_keywords
from ..core.base_stage import BaseStage
from ..dex import extract_provider_columns, load_sdk_prefixes, scan_call_sites
from ..dex.callsites import load_dex_inputs
from ..dex.reader import DexFile
from ..errors import ClassNotFound, MalformedContainer, MalformedDex
from ..manifest import read_dex_files
from ..models import ApkFacts, CallSite, CustomPermissionRecord, ProviderSensitivity
from ..utils.jsonl import read_json, read_records, write_jsonl
from ..workspace import RunConfig, RunLayout


class _DexCache:
    """按 sha256 缓存已解析的 DEX；APK 缺失或损坏时返回空列表"""

    def __init__(self, index: Dict[str, str], log):
        self._index = index
        self._log = log
        self._cache: Dict[str, List[DexFile]] = {}

    def get(self, sha256: Optional[str]) -> List[DexFile]:
        if not sha256:
            return []
        if sha256 not in self._cache:
            self._cache[sha256] = self._load(sha256)
        return self._cache[sha256]

    def _load(self, sha256: str) -> List[DexFile]:
        path = self._index.get(sha256)
        if path is None:
            self._log.warning("apk_index 中没有该 APK", sha256=sha256)
            return []
        try:
            return load_dex_inputs(read_dex_files(Path(path).read_bytes()))
        except (OSError, MalformedContainer, MalformedDex) as e:
            self._log.warning("读取 DEX 失败", sha256=sha256, error=type(e).__name__, reason=str(e))
            return []


class PairsStage(BaseStage):
    name = "pairs"
    description = "静态确认跨开发者利用对，写出 pairs.jsonl"
    order = 50
    in_pipeline = True

    def run(self, config: RunConfig, layout: RunLayout) -> int:
        layout.require(layout.custom, layout.facts, layout.apk_index)
        records = list(read_records(layout.custom, CustomPermissionRecord.from_dict))
        eligible = eligible_providers(records)
        permissions = {ep.permission for ep in eligible}
        latest = latest_versions(read_records(layout.facts, ApkFacts.from_dict))
        requesters = [
            latest[pkg] for pkg in sorted(latest) if latest[pkg].requested_permissions & permissions
        ]
        self.logger.info("候选", providers=len(eligible), requesters=len(requesters))

        dex = _DexCache(read_json(layout.apk_index), self.logger)
        prefixes = load_sdk_prefixes(config.sdk_prefixes)
        progress = sys.stderr.isatty()

        with self.logger.step("扫描请求方调用点") as s:
            call_sites: Dict[str, List[CallSite]] = {}
            for req in tqdm(requesters, desc="call-sites", unit="app", disable=not progress):
                dexes = dex.get(req.sha256)
                if dexes:
                    call_sites[req.package_name] = scan_call_sites(dexes, req.package_name, prefixes)
            s.add_field(sites=sum(len(v) for v in call_sites.values()))

        with self.logger.step("提取 provider 列名") as s:
            sensitivities: Dict[Tuple[str, str], ProviderSensitivity] = {}
            for ep in eligible:
                key = (ep.package, ep.component.class_name)
                if key in sensitivities:
                    continue
                dexes = dex.get(ep.sha256)
                if not dexes:
                    continue
                try:
                    sensitivities[key] = extract_provider_columns(dexes, ep.component.class_name)
                except (ClassNotFound, MalformedDex) as e:
                    self.logger.warning("provider 列名提取失败", package=ep.package, reason=str(e))
            s.add_field(providers=len(sensitivities))

        with self.logger.step("关联利用对") as s:
            pairs = link_pairs(eligible, requesters, call_sites, sensitivities, load_keywords(config.keywords))
            write_jsonl(layout.pairs, (p.to_dict() for p in pairs))
            s.add_field(pairs=len(pairs), uncategorized=sum(1 for p in pairs if p.category is None))
        return 0
