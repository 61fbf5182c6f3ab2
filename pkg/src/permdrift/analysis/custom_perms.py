#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
自定义权限分类与跨开发者利用对关联

流程:
1. classify_custom: 不在 AOSP 清单里的 <permission> 定义记为自定义权限，
   统计保护级别分布，normal 子集再按所保护的组件类型细分
2. eligible_providers: 只保留 normal 权限保护且 exported 的 provider
3. link_pairs: 请求方声明同名权限，并且至少有一个调用点的 authority
   命中该 provider，且双方证书不同，才构成利用对
4. categorize: 按列名关键词给利用对定敏感类别与 Type A/B
"""

import csv
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from ..catalog import AospList
from ..conf import CATEGORY_KEYWORD_FILE
from ..dex import summarize_attribution
from ..errors import CatalogInvalid, MissingInput, Uncategorized
from ..models import (
    ApkFacts,
    CallSite,
    ComponentDecl,
    CrossDevPair,
    CustomPermissionRecord,
    ExploitableSide,
    ExploitingSide,
    ProviderSensitivity,
)
from ..models.custom import AOSP_GATES, CATEGORIES
from ..models.facts import COMPONENT_KINDS
from ..utils.datafiles import iter_tsv

logger = logging.getLogger("permdrift.analysis.custom_perms")

# 多个类别同时命中时取排在前面的
CATEGORY_PRIORITY: Tuple[str, ...] = (
    "medical",
    "financial",
    "auth_credentials",
    "messages",
    "contacts",
    "location",
    "user_identity",
    "file_paths",
    "settings",
)

# 报告中保护级别的展示顺序
LEVEL_ORDER = ("signature", "normal", "dangerous", "other")
NORMAL_BREAKDOWN = COMPONENT_KINDS + ("unattached",)
ROLES = ("exploitable_only", "exploiting_only", "both")


# ---------------------------------------------------------------- 版本选择


def latest_versions(records: Iterable[ApkFacts]) -> Dict[str, ApkFacts]:
    """每个包取 (version_code, sha256) 最大的版本"""
    latest: Dict[str, ApkFacts] = {}
    for facts in records:
        current = latest.get(facts.package_name)
        if current is None or (facts.version_code, facts.sha256) > (current.version_code, current.sha256):
            latest[facts.package_name] = facts
    return latest


# ---------------------------------------------------------------- 分类


@dataclass
class CustomClassification:
    records: List[CustomPermissionRecord] = field(default_factory=list)
    histogram: Dict[str, int] = field(default_factory=dict)
    normal_breakdown: Dict[str, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.histogram.values())

    def level_share(self, level: str) -> float:
        return 100.0 * self.histogram.get(level, 0) / self.total if self.total else 0.0

    def breakdown_share(self, bucket: str) -> float:
        normal = sum(self.normal_breakdown.values())
        return 100.0 * self.normal_breakdown.get(bucket, 0) / normal if normal else 0.0

    def to_dict(self) -> Dict:
        return {
            "total": self.total,
            "levels": {lv: self.histogram.get(lv, 0) for lv in LEVEL_ORDER},
            "normal_breakdown": {k: self.normal_breakdown.get(k, 0) for k in NORMAL_BREAKDOWN},
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "CustomClassification":
        return cls(
            histogram=dict(data.get("levels") or {}),
            normal_breakdown=dict(data.get("normal_breakdown") or {}),
        )


def primary_kind(components: Sequence[ComponentDecl]) -> str:
    """一个权限只计入一个桶：按 provider > activity > service > receiver 取首个"""
    kinds = {c.kind for c in components}
    for kind in COMPONENT_KINDS:
        if kind in kinds:
            return kind
    return "unattached"


def classify_custom(
    records: Iterable[ApkFacts], aosp: AospList, year: Optional[int] = None
) -> CustomClassification:
    """
    自定义权限分类

    Args:
        records: ApkFacts 流；同一包只看最新版本
        aosp: AOSP 权限清单
        year: 只把截至该年的 AOSP 权限视为平台权限；None 取全部年份

    Returns:
        每个 (定义包, 权限名) 一条记录，附保护级别分布与 normal 子集的组件细分
    """
    result = CustomClassification()
    levels: Counter = Counter()
    breakdown: Counter = Counter()
    for package, facts in sorted(latest_versions(records).items()):
        seen = set()
        for pd in facts.permission_defs:
            if pd.name in seen or aosp.is_aosp(pd.name, year):
                continue
            seen.add(pd.name)
            guarded = tuple(c for c in facts.components if pd.name in c.guards)
            record = CustomPermissionRecord(
                name=pd.name,
                protection_level=pd.protection_level,
                defining_package=package,
                cert_digest=facts.cert_digest,
                guarded_components=guarded,
                sha256=facts.sha256,
            )
            result.records.append(record)
            levels[pd.protection_level] += 1
            if pd.protection_level == "normal":
                breakdown[primary_kind(guarded)] += 1
    result.histogram = dict(levels)
    result.normal_breakdown = dict(breakdown)
    logger.debug(f"自定义权限 {result.total} 条: {dict(levels)}")
    return result


# ---------------------------------------------------------------- 可利用 provider


@dataclass(frozen=True)
class EligibleProvider:
    """normal 自定义权限保护的 exported provider"""

    permission: str
    package: str
    cert_digest: Optional[str]
    sha256: Optional[str]
    component: ComponentDecl

    @property
    def authorities(self) -> Tuple[str, ...]:
        return self.component.authorities


def eligible_providers(records: Iterable[CustomPermissionRecord]) -> List[EligibleProvider]:
    """
    筛选可被跨开发者利用的 provider

    signature 级别的保护不能被转授，未导出的 provider 外部不可达，二者都排除。
    """
    out = []
    for record in records:
        if record.protection_level != "normal":
            continue
        for comp in record.guarded_components:
            if comp.kind == "provider" and comp.exported and comp.authorities:
                out.append(
                    EligibleProvider(
                        permission=record.name,
                        package=record.defining_package,
                        cert_digest=record.cert_digest,
                        sha256=record.sha256,
                        component=comp,
                    )
                )
    out.sort(key=lambda e: (e.permission, e.package, e.component.class_name))
    return out


# ---------------------------------------------------------------- 类别


@dataclass(frozen=True)
class KeywordMap:
    """列名子串 -> 类别，匹配不区分大小写"""

    entries: Tuple[Tuple[str, str], ...]

    def categories_of(self, column: str) -> List[str]:
        upper = column.upper()
        return [cat for kw, cat in self.entries if kw in upper]


def load_keywords(path: Optional[Path] = None) -> KeywordMap:
    """列: keyword, category"""
    entries = []
    errors = []
    for lineno, cells in iter_tsv(Path(path or CATEGORY_KEYWORD_FILE)):
        if len(cells) < 2 or not cells[0]:
            errors.append(f"第 {lineno} 行: 需要 keyword 与 category 两列")
            continue
        keyword, category = cells[0].upper(), cells[1]
        if category not in CATEGORIES:
            errors.append(f"第 {lineno} 行: 未知类别 {category}")
            continue
        entries.append((keyword, category))
    if errors:
        raise CatalogInvalid(errors)
    return KeywordMap(entries=tuple(entries))


def categorize(
    columns: Iterable[str], keywords: KeywordMap
) -> Tuple[str, str, Optional[str]]:
    """
    按列名常量给出主类别

    Args:
        columns: provider 暴露的列名常量
        keywords: 关键词表

    Returns:
        (类别, "A"/"B", AOSP 门控权限)；Type B 门控为 None

    Raises:
        Uncategorized: 没有任何关键词命中
    """
    columns = list(columns)
    hits = set()
    for col in columns:
        hits.update(keywords.categories_of(col))
    for category in CATEGORY_PRIORITY:
        if category in hits:
            gate = AOSP_GATES.get(category)
            return category, ("A" if gate else "B"), gate
    raise Uncategorized(columns)


# ---------------------------------------------------------------- 关联


def _different_developers(left: Optional[str], right: Optional[str]) -> bool:
    # 未签名的一侧无法证明是不同开发者
    return left is not None and right is not None and left != right


def link_pairs(
    eligible: Sequence[EligibleProvider],
    requesters: Iterable[ApkFacts],
    call_sites: Mapping[str, Sequence[CallSite]],
    sensitivities: Optional[Mapping[Tuple[str, str], ProviderSensitivity]] = None,
    keywords: Optional[KeywordMap] = None,
) -> List[CrossDevPair]:
    """
    关联跨开发者利用对

    Args:
        eligible: eligible_providers 的结果
        requesters: 请求方 ApkFacts（每包一个版本）
        call_sites: 包名 -> 该包的调用点
        sensitivities: (包名, provider 类名) -> 列名与存储类型；缺失时视为未检出
        keywords: 关键词表；提供时给利用对定类别，无法归类的保留且类别为空

    Returns:
        按 (权限, 被利用包, authority, 利用包) 排序的利用对
    """
    by_permission: Dict[str, List[EligibleProvider]] = defaultdict(list)
    for ep in eligible:
        by_permission[ep.permission].append(ep)
    sensitivities = sensitivities or {}

    pairs: Dict[Tuple[str, str, str, str], CrossDevPair] = {}
    for req in requesters:
        for perm in sorted(req.requested_permissions & by_permission.keys()):
            for ep in by_permission[perm]:
                if ep.package == req.package_name:
                    continue
                if not _different_developers(ep.cert_digest, req.cert_digest):
                    continue
                sites = call_sites.get(req.package_name, ())
                for authority in sorted(set(ep.authorities)):
                    matched = tuple(s for s in sites if s.resolved_authority == authority)
                    if not matched:
                        continue
                    key = (perm, ep.package, authority, req.package_name)
                    if key in pairs:
                        continue
                    sensitivity = sensitivities.get(
                        (ep.package, ep.component.class_name),
                        ProviderSensitivity(provider_class=ep.component.class_name),
                    )
                    category = kind = gate = None
                    if keywords is not None:
                        try:
                            category, kind, gate = categorize(sensitivity.column_constants, keywords)
                        except Uncategorized as e:
                            logger.info(f"{ep.package} <- {req.package_name}: {e}")
                    pairs[key] = CrossDevPair(
                        permission_name=perm,
                        exploitable=ExploitableSide(
                            package=ep.package,
                            cert_digest=ep.cert_digest,
                            authority=authority,
                            sensitivity=sensitivity,
                        ),
                        exploiting=ExploitingSide(
                            package=req.package_name,
                            cert_digest=req.cert_digest,
                            call_sites=matched,
                        ),
                        category=category,
                        type=kind,
                        aosp_gate=gate,
                    )
    return [pairs[k] for k in sorted(pairs)]


# ---------------------------------------------------------------- 汇总


def role_split(pairs: Iterable[CrossDevPair]) -> Dict[str, int]:
    """按包统计角色: 只被利用 / 只利用他人 / 两者皆有"""
    exploitable = set()
    exploiting = set()
    for pair in pairs:
        exploitable.add(pair.exploitable.package)
        exploiting.add(pair.exploiting.package)
    return {
        "exploitable_only": len(exploitable - exploiting),
        "exploiting_only": len(exploiting - exploitable),
        "both": len(exploitable & exploiting),
    }


def pair_attribution(pair: CrossDevPair) -> str:
    return summarize_attribution(s.attribution for s in pair.exploiting.call_sites)


def attribution_summary(pairs: Iterable[CrossDevPair]) -> Dict[str, int]:
    counts = Counter(pair_attribution(p) for p in pairs)
    return {k: counts.get(k, 0) for k in ("third_party_only", "mixed", "app_core_only", "unclassified")}


def category_table(pairs: Iterable[CrossDevPair]) -> List[Dict]:
    """每个类别一行: 类别、Type、门控权限、对数；无法归类的单独一行"""
    counts = Counter(p.category for p in pairs)
    rows = []
    for category in CATEGORY_PRIORITY:
        gate = AOSP_GATES.get(category)
        rows.append(
            {
                "category": category,
                "type": "A" if gate else "B",
                "aosp_gate": gate,
                "pairs": counts.get(category, 0),
            }
        )
    rows.sort(key=lambda r: (r["type"], -r["pairs"], CATEGORY_PRIORITY.index(r["category"])))
    rows.append({"category": "uncategorized", "type": None, "aosp_gate": None, "pairs": counts.get(None, 0)})
    return rows


def load_display_csv(path: Path) -> Dict[str, Dict[str, str]]:
    """
    读取按包名展示的附加列（如安装量档位），原样拼进报告，不参与任何计算

    CSV 必须含 package 列。
    """
    path = Path(path)
    if not path.exists():
        raise MissingInput(path)
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if not reader.fieldnames or "package" not in reader.fieldnames:
            raise CatalogInvalid([f"{path}: 缺少 package 列"])
        return {row["package"]: {k: v for k, v in row.items() if k != "package"} for row in reader}
