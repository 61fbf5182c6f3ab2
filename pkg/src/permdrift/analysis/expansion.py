#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
权限组静默扩张检测与汇总

同一包名的版本按 (version_code, dex_year, sha256) 排序，只比较相邻版本：
后一版本新增的权限所属的组（按后一版本年份的目录）在前一版本已有成员时，
记一次扩张事件。
"""

import logging
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from ..catalog import GroupCatalog
from ..conf import PLAY_MARKET
from ..models import ApkFacts, ExpansionEvent, FlowEntry, VersionChain

logger = logging.getLogger("permdrift.analysis.expansion")

MARKET_STRATA = ("play_only", "non_play_only", "mixed")


def _version_key(facts: ApkFacts) -> Tuple[int, int, str]:
    return (facts.version_code, facts.dex_year if facts.dex_year is not None else -1, facts.sha256)


def build_chains(
    records: Iterable[ApkFacts], require_metadata: bool = True
) -> Tuple[List[VersionChain], int]:
    """
    按包名聚合版本链

    Args:
        records: ApkFacts 流
        require_metadata: 为 True 时跳过缺少语料元数据的记录

    Returns:
        (版本数 >= 2 的链，按包名排序；被丢弃的单版本包数)
    """
    by_package: Dict[str, Dict[str, ApkFacts]] = defaultdict(dict)
    skipped = 0
    for facts in records:
        if require_metadata and not facts.has_metadata:
            skipped += 1
            continue
        # 同一 APK 重复出现只保留一份
        by_package[facts.package_name].setdefault(facts.sha256, facts)
    if skipped:
        logger.warning(f"跳过 {skipped} 条缺少元数据的记录")

    chains: List[VersionChain] = []
    dropped = 0
    for package in sorted(by_package):
        versions = sorted(by_package[package].values(), key=_version_key)
        if len(versions) < 2:
            dropped += 1
            continue
        chains.append(VersionChain(package_name=package, versions=tuple(versions)))
    return chains, dropped


def _cross_market(earlier: ApkFacts, later: ApkFacts) -> bool:
    # 任一侧市场未知时不判定为跨市场
    if not earlier.markets or not later.markets:
        return False
    return earlier.markets.isdisjoint(later.markets)


def detect_expansions(chain: VersionChain, catalog: GroupCatalog) -> List[ExpansionEvent]:
    """
    检测一条版本链上的全部组内静默新增

    Args:
        chain: 版本链
        catalog: 权限组目录，年份取后一版本的 dex_year

    Returns:
        事件列表，按相邻对顺序、同一对内按权限名排序
    """
    events: List[ExpansionEvent] = []
    for earlier, later in chain.adjacent_pairs():
        year = later.dex_year
        if year is None:
            continue
        added = later.requested_permissions - earlier.requested_permissions
        if not added:
            continue
        prior_groups: Dict[str, Set[str]] = defaultdict(set)
        for perm in earlier.requested_permissions:
            group = catalog.group_of(perm, year)
            if group is not None:
                prior_groups[group].add(perm)
        cross = _cross_market(earlier, later)
        for perm in sorted(added):
            group = catalog.group_of(perm, year)
            if group is None or group not in prior_groups:
                continue
            events.append(
                ExpansionEvent(
                    package_name=chain.package_name,
                    from_version=earlier.version_code,
                    to_version=later.version_code,
                    group=group,
                    added_permission=perm,
                    prior_members=frozenset(prior_groups[group]),
                    year=year,
                    cross_market=cross,
                )
            )
    return events


def _detect_batch(args: Tuple[Sequence[VersionChain], GroupCatalog]) -> List[ExpansionEvent]:
    chains, catalog = args
    out: List[ExpansionEvent] = []
    for chain in chains:
        out.extend(detect_expansions(chain, catalog))
    return out


def detect_all(
    chains: Sequence[VersionChain], catalog: GroupCatalog, workers: int = 1
) -> List[ExpansionEvent]:
    """
    对全部版本链检测扩张

    workers > 1 时按包切块交给进程池；结果顺序与顺序执行一致。
    """
    if workers <= 1 or len(chains) < 2 * workers:
        return _detect_batch((chains, catalog))
    size = -(-len(chains) // workers)
    batches = [(chains[i : i + size], catalog) for i in range(0, len(chains), size)]
    events: List[ExpansionEvent] = []
    with ProcessPoolExecutor(max_workers=workers) as executor:
        for part in executor.map(_detect_batch, batches):
            events.extend(part)
    return events


def flow_table(events: Iterable[ExpansionEvent]) -> List[FlowEntry]:
    """
    组内流向计数

    每个事件对 prior_members 中的每个成员各记一次 (成员 -> 新增权限)。
    结果按组名、计数降序、两端权限名排序。
    """
    counts: Counter = Counter()
    for event in events:
        for member in event.prior_members:
            counts[(event.group, member, event.added_permission)] += 1
    entries = [
        FlowEntry(group=g, from_permission=src, to_permission=dst, count=n)
        for (g, src, dst), n in counts.items()
    ]
    entries.sort(key=lambda e: (e.group, -e.count, e.from_permission, e.to_permission))
    return entries


def top_flows(entries: Iterable[FlowEntry], k: int) -> Dict[str, List[FlowEntry]]:
    """每组保留计数最高的 k 条；entries 须已按 flow_table 的顺序排列"""
    out: Dict[str, List[FlowEntry]] = defaultdict(list)
    for entry in entries:
        if len(out[entry.group]) < k:
            out[entry.group].append(entry)
    return dict(out)


def market_stratum(chain: VersionChain) -> str:
    """play_only: 每个版本都只在 Play；non_play_only: 没有版本上过 Play；其余为 mixed"""
    if all(v.markets == frozenset({PLAY_MARKET}) for v in chain.versions):
        return "play_only"
    if all(PLAY_MARKET not in v.markets for v in chain.versions):
        return "non_play_only"
    return "mixed"


def _pct(part: float, whole: float) -> float:
    return 100.0 * part / whole if whole else 0.0


def _add_counts(left: Mapping, right: Mapping) -> Dict:
    out = dict(left)
    for k, v in right.items():
        out[k] = out.get(k, 0) + v
    return out


@dataclass
class ExpansionSummary:
    """
    扩张汇总

    所有字段都是计数，不同 worker 的部分结果（包集合互不相交）可以直接相加。
    """

    chains: int = 0
    dropped: int = 0
    expanding_apps: int = 0
    events: int = 0
    cross_market_apps: int = 0
    group_apps: Dict[str, int] = field(default_factory=dict)
    group_events: Dict[str, int] = field(default_factory=dict)
    year_apps: Dict[int, int] = field(default_factory=dict)
    year_events: Dict[int, int] = field(default_factory=dict)
    strata: Dict[str, int] = field(default_factory=dict)
    threshold: Optional[int] = None
    group_flagged: Dict[str, int] = field(default_factory=dict)

    def merge(self, other: "ExpansionSummary") -> "ExpansionSummary":
        if self.threshold is not None and other.threshold is not None and self.threshold != other.threshold:
            raise ValueError(f"阈值不一致，无法合并: {self.threshold} != {other.threshold}")
        return ExpansionSummary(
            chains=self.chains + other.chains,
            dropped=self.dropped + other.dropped,
            expanding_apps=self.expanding_apps + other.expanding_apps,
            events=self.events + other.events,
            cross_market_apps=self.cross_market_apps + other.cross_market_apps,
            group_apps=_add_counts(self.group_apps, other.group_apps),
            group_events=_add_counts(self.group_events, other.group_events),
            year_apps=_add_counts(self.year_apps, other.year_apps),
            year_events=_add_counts(self.year_events, other.year_events),
            strata=_add_counts(self.strata, other.strata),
            threshold=self.threshold if self.threshold is not None else other.threshold,
            group_flagged=_add_counts(self.group_flagged, other.group_flagged),
        )

    __add__ = merge

    @property
    def mean_events_per_app(self) -> float:
        return self.events / self.expanding_apps if self.expanding_apps else 0.0

    @property
    def expanding_share(self) -> float:
        return _pct(self.expanding_apps, self.chains)

    @property
    def cross_market_share(self) -> float:
        return _pct(self.cross_market_apps, self.expanding_apps)

    def group_percent(self, group: str) -> float:
        return _pct(self.group_events.get(group, 0), self.events)

    def group_malware_share(self, group: str) -> Optional[float]:
        if self.threshold is None:
            return None
        return _pct(self.group_flagged.get(group, 0), self.group_apps.get(group, 0))

    def year_mean(self, year: int) -> float:
        apps = self.year_apps.get(year, 0)
        return self.year_events.get(year, 0) / apps if apps else 0.0

    def stratum_share(self, stratum: str) -> float:
        return _pct(self.strata.get(stratum, 0), self.expanding_apps)

    def to_dict(self) -> Dict:
        groups = sorted(set(self.group_events) | set(self.group_apps))
        years = sorted(set(self.year_events) | set(self.year_apps))
        return {
            "chains": self.chains,
            "dropped_single_version": self.dropped,
            "expanding_apps": self.expanding_apps,
            "expanding_share": round(self.expanding_share, 4),
            "events": self.events,
            "mean_events_per_app": round(self.mean_events_per_app, 4),
            "per_group": [
                {
                    "group": g,
                    "expanding_apps": self.group_apps.get(g, 0),
                    "events": self.group_events.get(g, 0),
                    "percent": round(self.group_percent(g), 4),
                    "flagged_apps": self.group_flagged.get(g, 0) if self.threshold is not None else None,
                    "malware_share": (
                        round(self.group_malware_share(g), 4)
                        if self.threshold is not None
                        else None
                    ),
                }
                for g in groups
            ],
            "per_year": [
                {
                    "year": y,
                    "expanding_apps": self.year_apps.get(y, 0),
                    "events": self.year_events.get(y, 0),
                    "mean_per_app": round(self.year_mean(y), 4),
                }
                for y in years
            ],
            "markets": {
                **{s: self.strata.get(s, 0) for s in MARKET_STRATA},
                **{f"{s}_share": round(self.stratum_share(s), 4) for s in MARKET_STRATA},
                "cross_market": self.cross_market_apps,
                "cross_market_share": round(self.cross_market_share, 4),
            },
            "threshold": self.threshold,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ExpansionSummary":
        per_group = data.get("per_group") or []
        per_year = data.get("per_year") or []
        markets = data.get("markets") or {}
        threshold = data.get("threshold")
        group_flagged = {
            r["group"]: r["flagged_apps"] for r in per_group if r.get("flagged_apps") is not None
        }
        return cls(
            chains=data.get("chains", 0),
            dropped=data.get("dropped_single_version", 0),
            expanding_apps=data.get("expanding_apps", 0),
            events=data.get("events", 0),
            cross_market_apps=markets.get("cross_market", 0),
            group_apps={r["group"]: r["expanding_apps"] for r in per_group},
            group_events={r["group"]: r["events"] for r in per_group},
            year_apps={int(r["year"]): r["expanding_apps"] for r in per_year},
            year_events={int(r["year"]): r["events"] for r in per_year},
            strata={s: markets.get(s, 0) for s in MARKET_STRATA},
            threshold=threshold,
            group_flagged=group_flagged,
        )


def aggregate(
    events: Iterable[ExpansionEvent],
    chains: Sequence[VersionChain],
    dropped: int = 0,
    flags: Optional[Mapping[str, bool]] = None,
    threshold: Optional[int] = None,
) -> ExpansionSummary:
    """
    汇总扩张事件

    Args:
        events: 扩张事件
        chains: 参与检测的全部版本链（用于分母与市场分层）
        dropped: build_chains 丢弃的单版本包数
        flags: 包名 -> 是否被标记为恶意；提供时统计每组的恶意占比
        threshold: flags 对应的阈值，仅用于记录

    Returns:
        ExpansionSummary；没有事件时全部为 0
    """
    by_app: Dict[str, List[ExpansionEvent]] = defaultdict(list)
    for event in events:
        by_app[event.package_name].append(event)
    chain_index = {c.package_name: c for c in chains}

    summary = ExpansionSummary(
        chains=len(chains),
        dropped=dropped,
        threshold=threshold if flags is not None else None,
    )
    group_apps: Counter = Counter()
    group_events: Counter = Counter()
    group_flagged: Counter = Counter()
    year_apps: Counter = Counter()
    year_events: Counter = Counter()
    strata: Counter = Counter()
    for package, app_events in by_app.items():
        summary.expanding_apps += 1
        summary.events += len(app_events)
        if any(e.cross_market for e in app_events):
            summary.cross_market_apps += 1
        chain = chain_index.get(package)
        if chain is not None:
            strata[market_stratum(chain)] += 1
        groups = {e.group for e in app_events}
        for g in groups:
            group_apps[g] += 1
            if flags is not None and flags.get(package, False):
                group_flagged[g] += 1
        for e in app_events:
            group_events[e.group] += 1
            year_events[e.year] += 1
        for y in {e.year for e in app_events}:
            year_apps[y] += 1

    summary.group_apps = dict(group_apps)
    summary.group_events = dict(group_events)
    summary.group_flagged = dict(group_flagged) if flags is not None else {}
    summary.year_apps = dict(year_apps)
    summary.year_events = dict(year_events)
    summary.strata = dict(strata)
    logger.debug(
        f"汇总: chains={summary.chains} expanding={summary.expanding_apps} events={summary.events}"
    )
    return summary


def expanding_packages(events: Iterable[ExpansionEvent]) -> Set[str]:
    return {e.package_name for e in events}
