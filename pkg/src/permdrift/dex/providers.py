#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
ContentProvider 暴露列提取

在 provider 的 query() 实现里，找出能到达"返回非空 Cursor"的全部指令，
收集这些路径上的字符串常量作为暴露列名，并按路径上的 API 判断底层存储。
"""

import logging
import re
from collections import deque
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from ..errors import ClassNotFound
from ..models import ProviderSensitivity
from . import opcodes as ops
from .callsites import DexInput, collect_static_strings, load_dex_inputs
from .dataflow import NULL, STRING, Const, ConstantPropagation, MethodBody, invoke_arguments
from .reader import ClassDef, DexFile, field_key, name_to_descriptor

logger = logging.getLogger("permdrift.dex.providers")

CURSOR = "Landroid/database/Cursor;"

SQLITE_CLASSES = frozenset(
    {
        "Landroid/database/sqlite/SQLiteDatabase;",
        "Landroid/database/sqlite/SQLiteQueryBuilder;",
        "Landroid/database/sqlite/SQLiteOpenHelper;",
    }
)
FILE_CLASSES = frozenset(
    {
        "Ljava/io/File;",
        "Ljava/io/FileInputStream;",
        "Ljava/io/FileReader;",
        "Ljava/io/RandomAccessFile;",
        "Ljava/nio/file/Files;",
        "Landroid/os/ParcelFileDescriptor;",
    }
)
FILE_METHODS = frozenset({"openFileInput", "getFilesDir", "getCacheDir", "openFileDescriptor"})

# 第一个 String 参数是表名的 SQLite 帮助方法
_TABLE_ARG_METHODS = {
    ("Landroid/database/sqlite/SQLiteDatabase;", "query"),
    ("Landroid/database/sqlite/SQLiteDatabase;", "queryWithFactory"),
    ("Landroid/database/sqlite/SQLiteQueryBuilder;", "setTables"),
}

IDENTIFIER = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_SELECT = re.compile(r"^\s*select\s+(?:distinct\s+)?(.+?)\s+from\s+[`\"']?([A-Za-z_][A-Za-z0-9_]*)", re.I | re.S)


def split_select(sql: str) -> Tuple[Set[str], Optional[str]]:
    """
    'SELECT a, t.b AS c FROM users' -> ({'a', 'c'}, 'users')

    Returns:
        (列名集合, 表名)；不是 SELECT 语句时返回 (空集, None)
    """
    m = _SELECT.match(sql)
    if not m:
        return set(), None
    columns = set()
    for part in m.group(1).split(","):
        part = part.strip()
        alias = re.split(r"\s+as\s+", part, flags=re.I)
        name = alias[-1].split(".")[-1].strip("`\"' ")
        if IDENTIFIER.match(name):
            columns.add(name)
    return columns, m.group(2)


class _DexSet:
    """多个 DEX 的类索引"""

    def __init__(self, dexes: Sequence[DexFile]):
        self.dexes = list(dexes)
        self.static_strings = collect_static_strings(self.dexes)

    def find(self, class_desc: str) -> Optional[Tuple[DexFile, ClassDef]]:
        for dex in self.dexes:
            cls = dex.find_class(class_desc)
            if cls is not None:
                return dex, cls
        return None

    def ancestors(self, class_desc: str) -> List[str]:
        """类自身及其在集合内可见的父类链"""
        chain = []
        seen = set()
        desc: Optional[str] = class_desc
        while desc and desc not in seen:
            seen.add(desc)
            chain.append(desc)
            found = self.find(desc)
            desc = found[1].superclass if found else None
        return chain


def _query_bodies(dex_set: _DexSet, class_desc: str) -> List[MethodBody]:
    """沿父类链找到第一个实现了 query() 的类，返回它的全部 query 重载"""
    for desc in dex_set.ancestors(class_desc):
        found = dex_set.find(desc)
        if not found:
            break
        dex, cls = found
        bodies = []
        for em, mref in dex.iter_methods(cls):
            if mref.name != "query" or mref.proto.return_type != CURSOR:
                continue
            code = dex.code_item(em.code_off)
            if code is None:
                continue
            bodies.append(
                MethodBody(dex, desc, mref, code, dex_set.static_strings, bool(em.access_flags & 0x8))
            )
        if bodies:
            return bodies
    return []


def _return_paths(analysis: ConstantPropagation) -> Set[int]:
    """能到达"返回非空对象"的可达指令地址"""
    reachable = analysis.in_states
    preds: Dict[int, Set[int]] = {}
    returns = []
    for addr in reachable:
        insn = analysis.insns[addr]
        if insn.op == ops.OP_RETURN_OBJECT and reachable[addr].regs.get(insn.a) is not NULL:
            returns.append(addr)
        succs = analysis.successors(insn) + analysis.exception_successors(addr)
        for succ in succs:
            if succ in reachable:
                preds.setdefault(succ, set()).add(addr)
    on_path: Set[int] = set(returns)
    queue = deque(returns)
    while queue:
        addr = queue.popleft()
        for p in preds.get(addr, ()):
            if p not in on_path:
                on_path.add(p)
                queue.append(p)
    return on_path


def _store_kind(class_desc: str, method_name: Optional[str], dex_set: _DexSet) -> Optional[str]:
    chain = dex_set.ancestors(class_desc)
    if any(c in SQLITE_CLASSES for c in chain):
        return "sqlite"
    if any(c in FILE_CLASSES for c in chain) or method_name in FILE_METHODS:
        return "file"
    return None


def _analyse_query(body: MethodBody, dex_set: _DexSet):
    analysis = ConstantPropagation(body)
    analysis.run()
    strings: Set[str] = set()
    tables: Set[str] = set()
    kinds: Set[str] = set()
    for addr in sorted(_return_paths(analysis)):
        insn = analysis.insns[addr]
        state = analysis.in_states[addr]
        if insn.op in (ops.OP_CONST_STRING, ops.OP_CONST_STRING_JUMBO):
            strings.add(body.dex.string(insn.idx))
        elif insn.op == ops.OP_SGET_OBJECT:
            value = dex_set.static_strings.get(field_key(body.dex.field(insn.idx)))
            if value is not None:
                strings.add(value)
        elif insn.op == ops.OP_NEW_INSTANCE:
            kind = _store_kind(body.dex.type(insn.idx), None, dex_set)
            if kind:
                kinds.add(kind)
        elif insn.op in ops.METHOD_INVOKE_OPS:
            method = body.dex.method(insn.idx)
            kind = _store_kind(method.class_desc, method.name, dex_set)
            if kind:
                kinds.add(kind)
            if (method.class_desc, method.name) in _TABLE_ARG_METHODS:
                _, params = invoke_arguments(insn, method, insn.op in ops.STATIC_INVOKE_OPS)
                for ptype, reg in params:
                    if ptype == STRING:
                        value = state.regs.get(reg)
                        if isinstance(value, Const):
                            tables.add(value.text)
                        break
    return strings, tables, kinds


def _columns_from(strings: Iterable[str], tables: Set[str]) -> Set[str]:
    columns: Set[str] = set()
    excluded = set(tables)
    for text in strings:
        if IDENTIFIER.match(text):
            columns.add(text)
            continue
        selected, table = split_select(text)
        columns |= selected
        if table:
            excluded.add(table)
    return columns - excluded


def extract_provider_columns(dex_inputs: Sequence[DexInput], provider_class: str) -> ProviderSensitivity:
    """
    提取 provider query() 返回路径上的列名常量与存储类型

    Args:
        dex_inputs: DEX 字节或已解析的 DexFile
        provider_class: 全限定类名

    Returns:
        ProviderSensitivity；query() 只返回 null 时列集合为空、存储为 none-detected

    Raises:
        ClassNotFound: DEX 集合中没有该类
    """
    dex_set = _DexSet(load_dex_inputs(dex_inputs))
    class_desc = name_to_descriptor(provider_class)
    if dex_set.find(class_desc) is None:
        raise ClassNotFound(provider_class)

    strings: Set[str] = set()
    tables: Set[str] = set()
    kinds: Set[str] = set()
    for body in _query_bodies(dex_set, class_desc):
        s, t, k = _analyse_query(body, dex_set)
        strings |= s
        tables |= t
        kinds |= k

    if "sqlite" in kinds:
        store = "sqlite"
    elif "file" in kinds:
        store = "file"
    else:
        store = "none-detected"
    columns = _columns_from(strings, tables)
    logger.debug(f"{provider_class}: columns={sorted(columns)} store={store}")
    return ProviderSensitivity(provider_class=provider_class, column_constants=frozenset(columns), store_kind=store)
