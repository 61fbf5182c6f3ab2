#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
常用 DEX 片段：ContentResolver 调用方、ContentProvider 实现
"""

from typing import Iterable, Optional, Sequence, Tuple

from permdrift.dex.reader import name_to_descriptor

from .dex_assembler import (
    CURSOR,
    QUERY_PROTO,
    RESOLVER_QUERY,
    URI_PARSE,
    DexBuilder,
)

CONTENT_PROVIDER = "Landroid/content/ContentProvider;"
MATRIX_CURSOR = "Landroid/database/MatrixCursor;"
FILE = "Ljava/io/File;"
FILE_INIT = "Ljava/io/File;-><init>(Ljava/lang/String;)V"
SQLITE_RAW_QUERY = (
    "Landroid/database/sqlite/SQLiteDatabase;->rawQuery(Ljava/lang/String;[Ljava/lang/String;)"
    "Landroid/database/Cursor;"
)
QUERY_BUILDER_SET_TABLES = "Landroid/database/sqlite/SQLiteQueryBuilder;->setTables(Ljava/lang/String;)V"


def query_spec(class_desc: str) -> str:
    ret, params = QUERY_PROTO
    return f"{class_desc}->query({''.join(params)}){ret}"


def add_resolver_caller(dex: DexBuilder, class_name: str, authority: str, method: str = "load") -> None:
    """class_name.method(): getContentResolver().query(Uri.parse("content://<authority>"), ...)"""
    desc = name_to_descriptor(class_name)
    cls = dex.add_class(desc)
    asm = dex.asm(registers=16, ins=1)
    asm.const_string(1, f"content://{authority}/items")
    asm.invoke_static(URI_PARSE, 1)
    asm.move_result_object(2)
    asm.query(3, 2)
    asm.return_void()
    dex.add_method(cls, f"{desc}->{method}()V", asm.build())


def add_provider(
    dex: DexBuilder, class_name: str, columns: Sequence[str], store: Optional[str] = "sqlite"
) -> None:
    """
    provider.query() 在返回路径上引用 columns；store 为 sqlite / file / None
    """
    desc = name_to_descriptor(class_name)
    cls = dex.add_class(desc, superclass=CONTENT_PROVIDER)
    asm = dex.asm(registers=12, ins=6)
    if store == "sqlite":
        asm.const_string(0, "records")
        asm.invoke_virtual(QUERY_BUILDER_SET_TABLES, 7, 0)
        if columns:
            asm.const_string(1, f"SELECT {', '.join(columns)} FROM records")
        else:
            asm.const_string(1, "SELECT 1 FROM records")
        asm.const4(2, 0)
        asm.invoke_virtual(SQLITE_RAW_QUERY, 8, 1, 2)
        asm.move_result_object(3)
        asm.return_object(3)
    else:
        if store == "file":
            asm.new_instance(0, FILE)
            asm.const_string(1, "export.dat")
            asm.invoke_direct(FILE_INIT, 0, 1)
        for col in columns:
            asm.const_string(2, col)
        asm.new_instance(3, MATRIX_CURSOR)
        asm.return_object(3)
    dex.add_method(cls, query_spec(desc), asm.build())


def app_dex(
    callers: Iterable[Tuple[str, str]] = (),
    providers: Iterable[Tuple[str, Sequence[str], Optional[str]]] = (),
) -> bytes:
    """
    Args:
        callers: [(类名, authority)]
        providers: [(类名, 列名, 存储)]
    """
    dex = DexBuilder()
    for class_name, authority in callers:
        add_resolver_caller(dex, class_name, authority)
    for class_name, columns, store in providers:
        add_provider(dex, class_name, columns, store)
    dex.add_class(name_to_descriptor("app.Placeholder"))
    return dex.to_bytes()
