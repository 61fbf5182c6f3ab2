#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
合成语料与暴力对照

对照实现只用集合运算逐对比较，不复用被测代码。
"""

import hashlib
import random
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from permdrift.catalog import GroupCatalog
from permdrift.models import ApkFacts, ComponentDecl, PermissionDef

PLAY = "play.google.com"

NORMAL_PERMISSIONS = (
    "android.permission.INTERNET",
    "android.permission.ACCESS_NETWORK_STATE",
    "android.permission.VIBRATE",
    "android.permission.WAKE_LOCK",
    "android.permission.NFC",
    "android.permission.RECEIVE_BOOT_COMPLETED",
)


def sha(*parts) -> str:
    return hashlib.sha256("/".join(str(p) for p in parts).encode("utf-8")).hexdigest()


def make_facts(
    package: str,
    version: int,
    permissions: Iterable[str] = (),
    year: Optional[int] = 2020,
    vt: Optional[int] = 0,
    markets: Iterable[str] = (PLAY,),
    cert: Optional[str] = None,
    defs: Sequence[PermissionDef] = (),
    components: Sequence[ComponentDecl] = (),
    digest: Optional[str] = None,
) -> ApkFacts:
    return ApkFacts(
        sha256=digest or sha(package, version),
        package_name=package,
        version_code=version,
        cert_digest=cert,
        requested_permissions=frozenset(permissions),
        permission_defs=tuple(defs),
        components=tuple(components),
        dex_year=year,
        markets=frozenset(markets),
        vt_detections=vt,
    )


# ---------------------------------------------------------------- 扩张


def oracle_events(records: Iterable[ApkFacts], catalog: GroupCatalog) -> Set[Tuple[str, int, int, str]]:
    """按包分组、排序，逐个相邻对做集合差"""
    by_package: Dict[str, List[ApkFacts]] = {}
    for r in records:
        by_package.setdefault(r.package_name, []).append(r)
    out = set()
    for package, versions in by_package.items():
        versions = sorted(versions, key=lambda v: (v.version_code, v.dex_year, v.sha256))
        for earlier, later in zip(versions, versions[1:]):
            year = later.dex_year
            present = {catalog.group_of(p, year) for p in earlier.requested_permissions} - {None}
            for perm in later.requested_permissions - earlier.requested_permissions:
                if catalog.group_of(perm, year) in present:
                    out.add((package, earlier.version_code, later.version_code, perm))
    return out


def oracle_flows(records: Iterable[ApkFacts], catalog: GroupCatalog) -> Dict[Tuple[str, str, str], int]:
    """(组, 已有成员, 新增权限) -> 次数"""
    by_package: Dict[str, List[ApkFacts]] = {}
    for r in records:
        by_package.setdefault(r.package_name, []).append(r)
    counts: Dict[Tuple[str, str, str], int] = {}
    for versions in by_package.values():
        versions = sorted(versions, key=lambda v: (v.version_code, v.dex_year, v.sha256))
        for earlier, later in zip(versions, versions[1:]):
            year = later.dex_year
            for perm in later.requested_permissions - earlier.requested_permissions:
                group = catalog.group_of(perm, year)
                if group is None:
                    continue
                for member in earlier.requested_permissions:
                    if catalog.group_of(member, year) == group:
                        key = (group, member, perm)
                        counts[key] = counts.get(key, 0) + 1
    return counts


def random_expansion_corpus(
    catalog: GroupCatalog, packages: int = 200, seed: int = 7, year: int = 2020
) -> Tuple[List[ApkFacts], Set[Tuple[str, int, int, str]]]:
    """
    每个包 2–6 个版本；按概率向已有成员的组注入新成员（即扩张），
    其余转移只动 normal 权限、首次引入新组或删掉权限。

    Returns:
        (打乱顺序的记录, 注入的事件键)
    """
    rng = random.Random(seed)
    groups = {g: sorted(catalog.members(g, year)) for g in catalog.groups}
    groups = {g: m for g, m in groups.items() if len(m) >= 2}
    names = sorted(groups)
    records: List[ApkFacts] = []
    injected: Set[Tuple[str, int, int, str]] = set()
    for i in range(packages):
        package = f"com.corpus.app{i:04d}"
        main = rng.choice(names)
        pool = list(groups[main])
        rng.shuffle(pool)
        current = {rng.choice(NORMAL_PERMISSIONS)}
        if rng.random() < 0.8:
            current.add(pool.pop())
        n_versions = rng.randint(2, 6)
        code = rng.randint(1, 50)
        records.append(make_facts(package, code, current, year=year, vt=rng.randint(0, 40)))
        for _ in range(n_versions - 1):
            prev_code = code
            code += rng.randint(1, 5)
            roll = rng.random()
            has_member = any(p in groups[main] for p in current)
            if roll < 0.45 and has_member and pool:
                added = pool.pop()
                current.add(added)
                injected.add((package, prev_code, code, added))
            elif roll < 0.6 and not has_member and pool:
                # 首次引入，不算扩张
                current.add(pool.pop())
            elif roll < 0.75:
                members = [p for p in current if p in groups[main]]
                if members:
                    dropped = rng.choice(members)
                    current.discard(dropped)
                    pool.insert(0, dropped)
            else:
                current.add(rng.choice(NORMAL_PERMISSIONS))
            records.append(make_facts(package, code, current, year=year, vt=rng.randint(0, 40)))
    for j in range(packages // 10):
        records.append(make_facts(f"com.corpus.single{j}", 1, {"android.permission.READ_SMS"}, year=year))
    rng.shuffle(records)
    return records, injected


def scaled_expansion_corpus(expanding: int = 1000, events: int = 2440, quiet: int = 500) -> List[ApkFacts]:
    """
    expanding 个扩张应用，合计 events 次扩张；另有 quiet 个无扩张的多版本应用

    两事件应用: CONTACTS 逐个补齐三个成员；三事件应用: SMS 连续补三个成员。
    """
    three = events - 2 * expanding
    if not 0 <= three <= expanding:
        raise ValueError("events 必须在 [2·expanding, 3·expanding] 之间")
    contacts = ["READ_CONTACTS", "WRITE_CONTACTS", "GET_ACCOUNTS"]
    sms = ["READ_SMS", "SEND_SMS", "RECEIVE_SMS", "RECEIVE_MMS"]
    records: List[ApkFacts] = []
    for i in range(expanding):
        steps = sms if i < three else contacts
        package = f"com.scaled.exp{i:05d}"
        for v in range(len(steps)):
            perms = {f"android.permission.{p}" for p in steps[: v + 1]}
            records.append(make_facts(package, v + 1, perms))
    for i in range(quiet):
        package = f"com.scaled.quiet{i:05d}"
        records.append(make_facts(package, 1, {"android.permission.INTERNET"}))
        records.append(make_facts(package, 2, {"android.permission.INTERNET", "android.permission.READ_SMS"}))
    return records
