#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
APK 清单提取

APK (ZIP) -> AndroidManifest.xml (AXML 或明文) -> ApkFacts。
解析是纯函数：同样的 (apk_bytes, metadata) 总是得到同样的 ApkFacts。
"""

import hashlib
import io
import logging
import re
import zipfile
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from tqdm import tqdm

from ..errors import MalformedContainer, MalformedManifest, PermdriftError
from ..models import ApkFacts, ComponentDecl, CorpusMetadata, PermissionDef
from .axml import decode_axml, looks_like_axml
from .signing import cert_digest
from .xmltree import XmlElement, parse_plaintext

logger = logging.getLogger("permdrift.manifest.extractor")

MANIFEST_ENTRY = "AndroidManifest.xml"

_DEX_ENTRY = re.compile(r"^classes(\d*)\.dex$")

# 组件标签 -> ComponentDecl.kind
_COMPONENT_TAGS = {
    "provider": "provider",
    "activity": "activity",
    "service": "service",
    "receiver": "receiver",
}

# <uses-permission-sdk-23> 同样是运行时请求
_USES_PERMISSION_TAGS = ("uses-permission", "uses-permission-sdk-23")

# provider 在 targetSdk < 17 时默认导出
_PROVIDER_EXPORT_DEFAULT_BELOW = 17

_LEVEL_BY_BASE = {0x0: "normal", 0x1: "dangerous", 0x2: "signature", 0x3: "signature"}
_LEVEL_BY_TOKEN = {
    "normal": "normal",
    "dangerous": "dangerous",
    "signature": "signature",
    "signatureOrSystem": "signature",
}


def load_manifest(manifest_bytes: bytes) -> XmlElement:
    """AXML 文件头合法时按二进制解码，否则按明文 XML 解析"""
    if looks_like_axml(manifest_bytes):
        return decode_axml(manifest_bytes)
    if not manifest_bytes:
        raise MalformedManifest("空清单")
    return parse_plaintext(manifest_bytes)


def protection_level_of(value) -> str:
    """
    保护级别归一化

    二进制取低 4 位基础级别；明文取第一个 "|" 记号。
    signatureOrSystem 视为 signature，其余未知值为 other。
    """
    if isinstance(value, bool):
        return "other"
    if isinstance(value, int):
        return _LEVEL_BY_BASE.get(value & 0xF, "other")
    token = str(value).split("|", 1)[0].strip()
    return _LEVEL_BY_TOKEN.get(token, "other")


def expand_class_name(name: str, package: str) -> str:
    """'.Foo' / 'Foo' 相对类名按清单包名补全"""
    if name.startswith("."):
        return package + name
    if "." not in name and package:
        return f"{package}.{name}"
    return name


def _as_int(value) -> Optional[int]:
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value
    if isinstance(value, str) and re.fullmatch(r"-?\d+", value.strip()):
        return int(value.strip())
    return None


def _as_str(value) -> Optional[str]:
    if value is None or isinstance(value, bool):
        return None
    text = str(value).strip()
    return text or None


def _resolve_exported(elem: XmlElement, kind: str, effective_target: int) -> bool:
    explicit = elem.android_attr("exported")
    if isinstance(explicit, bool):
        return explicit
    if kind == "provider":
        return effective_target < _PROVIDER_EXPORT_DEFAULT_BELOW
    return bool(elem.findall("intent-filter"))


def _component(elem: XmlElement, kind: str, package: str, effective_target: int) -> Optional[ComponentDecl]:
    name = _as_str(elem.android_attr("name"))
    if not name:
        logger.debug(f"跳过无名组件 <{kind}>")
        return None
    authorities: Tuple[str, ...] = ()
    read_perm = write_perm = None
    if kind == "provider":
        raw = _as_str(elem.android_attr("authorities")) or ""
        authorities = tuple(a.strip() for a in raw.split(";") if a.strip())
        read_perm = _as_str(elem.android_attr("readPermission"))
        write_perm = _as_str(elem.android_attr("writePermission"))
    return ComponentDecl(
        kind=kind,
        class_name=expand_class_name(name, package),
        exported=_resolve_exported(elem, kind, effective_target),
        guard_permission=_as_str(elem.android_attr("permission")),
        authorities=authorities,
        read_permission=read_perm,
        write_permission=write_perm,
    )


def facts_from_manifest(
    root: XmlElement,
    sha256: str,
    cert: Optional[str] = None,
    metadata: Optional[CorpusMetadata] = None,
    dex_entries: Tuple[str, ...] = (),
) -> ApkFacts:
    """
    元素树 -> ApkFacts

    Args:
        root: <manifest> 元素
        sha256: APK 文件摘要
        cert: 签名证书摘要
        metadata: 语料元数据行，缺失时元数据字段为 None
        dex_entries: classes*.dex 条目名

    Returns:
        ApkFacts
    """
    if root.tag != "manifest":
        raise MalformedManifest(f"根元素不是 <manifest>: <{root.tag}>")
    package = _as_str(root.get("package"))
    if not package:
        raise MalformedManifest("<manifest> 缺少 package 属性")

    version_code = _as_int(root.android_attr("versionCode")) or 0
    version_name = _as_str(root.android_attr("versionName"))

    min_sdk = target_sdk = None
    for sdk in root.findall("uses-sdk"):
        min_sdk = _as_int(sdk.android_attr("minSdkVersion"))
        target_sdk = _as_int(sdk.android_attr("targetSdkVersion"))
    # 未声明 targetSdk 时平台按 minSdk 处理，minSdk 缺省为 1
    effective_target = target_sdk or min_sdk or 1

    requested = set()
    max_sdk: Dict[str, int] = {}
    for tag in _USES_PERMISSION_TAGS:
        for elem in root.findall(tag):
            name = _as_str(elem.android_attr("name"))
            if not name:
                continue
            requested.add(name)
            limit = _as_int(elem.android_attr("maxSdkVersion"))
            if limit is not None:
                max_sdk[name] = limit

    defs: List[PermissionDef] = []
    seen_defs = set()
    for elem in root.findall("permission"):
        name = _as_str(elem.android_attr("name"))
        if not name or name in seen_defs:
            continue
        seen_defs.add(name)
        raw_level = elem.android_attr("protectionLevel")
        if raw_level is None:
            defs.append(PermissionDef(name=name))
        else:
            defs.append(
                PermissionDef(
                    name=name,
                    protection_level=protection_level_of(raw_level),
                    explicit_level=True,
                )
            )

    components: List[ComponentDecl] = []
    for app in root.findall("application"):
        for child in app.children:
            kind = _COMPONENT_TAGS.get(child.tag)
            if kind is None:
                continue
            decl = _component(child, kind, package, effective_target)
            if decl is not None:
                components.append(decl)

    meta_year = meta_markets = meta_vt = None
    if metadata is not None:
        meta_year = metadata.dex_year
        meta_markets = metadata.markets
        meta_vt = metadata.vt_detection

    return ApkFacts(
        sha256=sha256,
        package_name=package,
        version_code=max(0, version_code),
        cert_digest=cert,
        requested_permissions=frozenset(requested),
        permission_defs=tuple(defs),
        components=tuple(components),
        dex_year=meta_year,
        markets=meta_markets or frozenset(),
        vt_detections=meta_vt,
        version_name=version_name,
        min_sdk=min_sdk,
        target_sdk=target_sdk,
        max_sdk_by_permission=tuple(sorted(max_sdk.items())),
        dex_entries=dex_entries,
    )


def _dex_sort_key(name: str) -> int:
    m = _DEX_ENTRY.match(name)
    return int(m.group(1) or 1) if m else 0


def list_dex_entries(zf: zipfile.ZipFile) -> Tuple[str, ...]:
    """classes.dex, classes2.dex, ... 按编号排序"""
    names = [n for n in zf.namelist() if _DEX_ENTRY.match(n)]
    return tuple(sorted(names, key=_dex_sort_key))


def open_apk(apk_bytes: bytes) -> zipfile.ZipFile:
    try:
        return zipfile.ZipFile(io.BytesIO(apk_bytes))
    except (zipfile.BadZipFile, ValueError) as e:
        raise MalformedContainer(f"不是 ZIP 容器: {e}") from e


def read_dex_files(apk_bytes: bytes) -> List[bytes]:
    """按顺序读出 APK 中全部 classes*.dex"""
    with open_apk(apk_bytes) as zf:
        return [zf.read(name) for name in list_dex_entries(zf)]


def parse_apk(apk_bytes: bytes, metadata: Optional[CorpusMetadata] = None) -> ApkFacts:
    """
    解析单个 APK

    Args:
        apk_bytes: APK 文件内容
        metadata: 语料元数据行

    Returns:
        ApkFacts

    Raises:
        MalformedContainer: 不是 ZIP 或缺少 AndroidManifest.xml
        MalformedManifest: 清单结构非法
    """
    data = bytes(apk_bytes)
    with open_apk(data) as zf:
        try:
            manifest_bytes = zf.read(MANIFEST_ENTRY)
        except KeyError as e:
            raise MalformedContainer(f"缺少 {MANIFEST_ENTRY}") from e
        except (zipfile.BadZipFile, OSError, EOFError) as e:
            raise MalformedContainer(f"读取 {MANIFEST_ENTRY} 失败: {e}") from e
        dex_entries = list_dex_entries(zf)

    root = load_manifest(manifest_bytes)
    return facts_from_manifest(
        root,
        sha256=hashlib.sha256(data).hexdigest(),
        cert=cert_digest(data),
        metadata=metadata,
        dex_entries=dex_entries,
    )


@dataclass(frozen=True)
class ScanOutcome:
    """单个 APK 的扫描结果：facts 与 error 二选一"""

    path: str
    sha256: str
    facts: Optional[ApkFacts] = None
    error: Optional[str] = None
    reason: Optional[str] = None

    def error_dict(self) -> Dict[str, str]:
        return {"path": self.path, "sha256": self.sha256, "error": self.error, "reason": self.reason}


def scan_file(path: Path, metadata_index: Optional[Dict[str, CorpusMetadata]] = None) -> ScanOutcome:
    """解析一个文件；解析失败记为结果而不是抛出"""
    data = Path(path).read_bytes()
    digest = hashlib.sha256(data).hexdigest()
    meta = (metadata_index or {}).get(digest)
    try:
        facts = parse_apk(data, meta)
    except PermdriftError as e:
        return ScanOutcome(path=str(path), sha256=digest, error=type(e).__name__, reason=str(e))
    return ScanOutcome(path=str(path), sha256=digest, facts=facts)


def find_apks(input_dir: Path) -> List[Path]:
    return sorted(p for p in Path(input_dir).rglob("*.apk") if p.is_file())


def scan_directory(
    input_dir: Path,
    metadata_index: Optional[Dict[str, CorpusMetadata]] = None,
    workers: int = 1,
    progress: bool = False,
) -> List[ScanOutcome]:
    """
    扫描目录下全部 *.apk

    Args:
        input_dir: APK 目录（递归）
        metadata_index: sha256 -> 元数据
        workers: 进程数，1 表示在当前进程内顺序执行
        progress: 是否显示 tqdm 进度条

    Returns:
        按路径排序的扫描结果
    """
    paths = find_apks(input_dir)
    outcomes: List[ScanOutcome] = []
    if workers <= 1 or len(paths) <= 1:
        for path in tqdm(paths, desc="scan", unit="apk", disable=not progress):
            outcomes.append(scan_file(path, metadata_index))
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            tasks = [executor.submit(scan_file, path, metadata_index) for path in paths]
            with tqdm(total=len(tasks), desc="scan", unit="apk", disable=not progress) as pbar:
                for future in as_completed(tasks):
                    outcomes.append(future.result())
                    pbar.update()
    outcomes.sort(key=lambda o: o.path)
    return outcomes
