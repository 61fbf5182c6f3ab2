#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
ContentResolver 调用点扫描

对每个包含 query / insert / update / delete / call 调用的方法跑一次常量传播，
再从调用点入口状态里取 URI 参数，能确定为编译期常量时才给出 authority。
"""

import logging
import re
from typing import Dict, List, Optional, Sequence, Union

from ..errors import MalformedDex
from ..models import CallSite
from ..models.dex import OP_KINDS
from . import opcodes as ops
from .attribution import attribute_call_site
from .dataflow import STRING, URI, ConstantPropagation, Const, MethodBody, UriVal, invoke_arguments
from .reader import DexFile, MethodRef, descriptor_to_name

logger = logging.getLogger("permdrift.dex.callsites")

CONTENT_RESOLVER = "Landroid/content/ContentResolver;"
CONTENT_SCHEME = "content://"

_AUTHORITY_END = re.compile(r"[/?#]")

DexInput = Union[bytes, DexFile]


def normalize_authority(text: Optional[str]) -> Optional[str]:
    """'content://com.x.data/items' -> 'com.x.data'；不是 content URI 返回 None"""
    if not text or not text.lower().startswith(CONTENT_SCHEME):
        return None
    rest = text[len(CONTENT_SCHEME):]
    authority = _AUTHORITY_END.split(rest, maxsplit=1)[0]
    return authority or None


def is_resolver_operation(method: MethodRef) -> bool:
    """
    ContentResolver 操作匹配

    按类描述符 + 方法名匹配；接收者是 ContentResolver 子类（类名以 ContentResolver 结尾）
    时按名字回退匹配。第一个参数必须是 Uri（call 还接受 String authority）。
    """
    if method.name not in OP_KINDS:
        return False
    if method.class_desc != CONTENT_RESOLVER and not method.class_desc.endswith("ContentResolver;"):
        return False
    params = method.proto.params
    if not params:
        return False
    if params[0] == URI:
        return True
    return method.name == "call" and params[0] == STRING


def resolve_authority(
    body: MethodBody, site_addr: int, analysis: Optional[ConstantPropagation] = None
) -> Optional[str]:
    """
    解析调用点 URI 参数的 authority

    Args:
        body: 所在方法体
        site_addr: 调用指令地址
        analysis: 已求解的常量传播结果，省略时现场计算

    Returns:
        所有参与拼接的字符串都是常量时返回 authority，否则 None
    """
    if analysis is None:
        analysis = ConstantPropagation(body)
        analysis.run()
    state = analysis.state_at(site_addr)
    insn = body.insns.get(site_addr)
    if state is None or insn is None or insn.op not in ops.METHOD_INVOKE_OPS:
        return None
    method = body.dex.method(insn.idx)
    _, params = invoke_arguments(insn, method, insn.op in ops.STATIC_INVOKE_OPS)
    if not params:
        return None
    ptype, reg = params[0]
    value = state.regs.get(reg)
    if ptype == URI:
        return normalize_authority(value.text) if isinstance(value, UriVal) else None
    if ptype == STRING and isinstance(value, Const):
        # call(String authority, ...) 直接给出 authority
        if value.text.lower().startswith(CONTENT_SCHEME):
            return normalize_authority(value.text)
        authority = value.text.strip()
        return authority if authority and not _AUTHORITY_END.search(authority) else None
    return None


def load_dex_inputs(dex_inputs: Sequence[DexInput]) -> List[DexFile]:
    """解析 DEX 集合；损坏的文件记日志后跳过，不影响其它文件"""
    dexes: List[DexFile] = []
    for i, item in enumerate(dex_inputs):
        if isinstance(item, DexFile):
            dexes.append(item)
            continue
        name = f"classes{i + 1 if i else ''}.dex"
        try:
            dexes.append(DexFile(item, name=name))
        except MalformedDex as e:
            logger.warning(f"跳过损坏的 DEX {name}: {e}")
    return dexes


def collect_static_strings(dexes: Sequence[DexFile]) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for dex in dexes:
        for key, value in dex.static_string_constants().items():
            out.setdefault(key, value)
    return out


def _scan_dex(dex: DexFile, static_strings: Dict[str, str]) -> List[CallSite]:
    target_ids = {i for i, m in enumerate(dex.methods) if is_resolver_operation(m)}
    if not target_ids:
        return []
    sites: List[CallSite] = []
    for cls in dex.classes:
        for em, mref in dex.iter_methods(cls):
            code = dex.code_item(em.code_off)
            if code is None:
                continue
            try:
                body = MethodBody(
                    dex, cls.class_desc, mref, code, static_strings,
                    is_static=bool(em.access_flags & 0x8),
                )
            except MalformedDex as e:
                logger.warning(f"跳过无法解码的方法 {cls.class_desc}->{mref.name}: {e}")
                continue
            invokes = [
                insn for insn in body.insns.values()
                if insn.op in ops.METHOD_INVOKE_OPS and insn.idx in target_ids
            ]
            if not invokes:
                continue
            analysis = ConstantPropagation(body)
            analysis.run()
            for insn in invokes:
                sites.append(
                    CallSite(
                        declaring_class=descriptor_to_name(cls.class_desc),
                        method_name=mref.name,
                        op_kind=dex.method(insn.idx).name,
                        resolved_authority=resolve_authority(body, insn.addr, analysis),
                        offset=insn.addr,
                    )
                )
    return sites


def scan_call_sites(
    dex_inputs: Sequence[DexInput],
    app_package: Optional[str] = None,
    sdk_prefixes: Sequence[str] = (),
) -> List[CallSite]:
    """
    扫描 DEX 集合中的全部 ContentResolver 调用点

    Args:
        dex_inputs: DEX 字节或已解析的 DexFile
        app_package: 提供时按包名前缀填写 attribution
        sdk_prefixes: 第三方 SDK 包名前缀

    Returns:
        按 (类, 方法, 指令偏移) 排序的调用点
    """
    dexes = load_dex_inputs(dex_inputs)
    static_strings = collect_static_strings(dexes)
    sites: List[CallSite] = []
    for dex in dexes:
        try:
            sites.extend(_scan_dex(dex, static_strings))
        except MalformedDex as e:
            logger.warning(f"DEX {dex.name} 扫描中止: {e}")
    if app_package is not None:
        sites = [
            CallSite(
                declaring_class=s.declaring_class,
                method_name=s.method_name,
                op_kind=s.op_kind,
                resolved_authority=s.resolved_authority,
                attribution=attribute_call_site(s.declaring_class, app_package, sdk_prefixes),
                offset=s.offset,
            )
            for s in sites
        ]
    sites.sort(key=lambda s: s.sort_key)
    return sites
