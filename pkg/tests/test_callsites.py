#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
ContentResolver 调用点与 URI 常量传播
"""

import pytest

from permdrift.dex.callsites import normalize_authority, scan_call_sites
from permdrift.dex.reader import DexFile

from tests.support.dex_assembler import (
    RESOLVER_CALL,
    RESOLVER_DELETE,
    RESOLVER_INSERT,
    SB_APPEND,
    SB_INIT,
    SB_INIT_STRING,
    SB_TO_STRING,
    STRING_BUILDER,
    STRING_CONCAT,
    SYSTEM_GET_PROPERTY,
    URI_APPEND_PATH,
    URI_PARSE,
    DexBuilder,
    Handler,
)

CALLER = "Lcom/x/Caller;"


def _single_method(emit, statics=None) -> bytes:
    dex = DexBuilder()
    if statics:
        holder = dex.add_class("Lcom/x/Const;")
        for name, value in statics.items():
            dex.add_static_field(holder, name, value)
    cls = dex.add_class(CALLER)
    asm = dex.asm(registers=16, ins=1)
    emit(asm)
    dex.add_method(cls, f"{CALLER}->load()V", asm.build())
    return dex.to_bytes()


def _parse_and_query(asm, text_reg: int) -> None:
    asm.invoke_static(URI_PARSE, text_reg)
    asm.move_result_object(8)
    asm.query(9, 8)
    asm.return_void()


def direct_constant(asm):
    asm.const_string(1, "content://com.x.data")
    _parse_and_query(asm, 1)


def no_resolver_call(asm):
    asm.const_string(1, "content://com.x.data")
    asm.invoke_static(URI_PARSE, 1)
    asm.move_result_object(2)
    asm.return_void()


def builder_chain(asm):
    asm.new_instance(0, STRING_BUILDER)
    asm.const_string(1, "content://")
    asm.invoke_direct(SB_INIT_STRING, 0, 1)
    asm.const_string(1, "com.x")
    asm.invoke_virtual(SB_APPEND, 0, 1)
    asm.move_result_object(0)
    asm.const_string(1, ".data")
    asm.invoke_virtual(SB_APPEND, 0, 1)
    asm.move_result_object(0)
    asm.invoke_virtual(SB_TO_STRING, 0)
    asm.move_result_object(2)
    _parse_and_query(asm, 2)


def string_concat(asm):
    asm.const_string(1, "content://com.x")
    asm.const_string(2, ".data")
    asm.invoke_virtual(STRING_CONCAT, 1, 2)
    asm.move_result_object(3)
    _parse_and_query(asm, 3)


def appended_path_insert(asm):
    asm.const_string(1, "content://com.x.data")
    asm.invoke_static(URI_PARSE, 1)
    asm.move_result_object(2)
    asm.const_string(3, "items")
    asm.invoke_static(URI_APPEND_PATH, 2, 3)
    asm.move_result_object(4)
    asm.invoke_virtual(RESOLVER_INSERT, 5, 4, 6)
    asm.move_result_object(7)
    asm.return_void()


def static_field_delete(asm):
    asm.sget_object(1, "Lcom/x/Const;->AUTHORITY:Ljava/lang/String;")
    asm.invoke_static(URI_PARSE, 1)
    asm.move_result_object(2)
    asm.const4(3, 0)
    asm.invoke_virtual(RESOLVER_DELETE, 4, 2, 3, 3)
    asm.move_result(5)
    asm.return_void()


def _branches(first: str, second: str):
    def emit(asm):
        asm.if_eqz(7, "else")
        asm.const_string(1, first)
        asm.goto("join")
        asm.label("else")
        asm.const_string(1, second)
        asm.label("join")
        _parse_and_query(asm, 1)

    return emit


def dynamic_string(asm):
    asm.const_string(0, "provider.authority")
    asm.invoke_static(SYSTEM_GET_PROPERTY, 0)
    asm.move_result_object(1)
    _parse_and_query(asm, 1)


def call_with_authority(asm):
    asm.const_string(1, "com.x.auth")
    asm.const_string(2, "sync")
    asm.const4(3, 0)
    asm.invoke_virtual(RESOLVER_CALL, 4, 1, 2, 3, 3)
    asm.move_result_object(5)
    asm.return_void()


def builder_with_dynamic_part(asm):
    asm.new_instance(0, STRING_BUILDER)
    asm.invoke_direct(SB_INIT, 0)
    asm.const_string(1, "content://")
    asm.invoke_virtual(SB_APPEND, 0, 1)
    asm.move_result_object(0)
    asm.const_string(2, "key")
    asm.invoke_static(SYSTEM_GET_PROPERTY, 2)
    asm.move_result_object(3)
    asm.invoke_virtual(SB_APPEND, 0, 3)
    asm.move_result_object(0)
    asm.invoke_virtual(SB_TO_STRING, 0)
    asm.move_result_object(4)
    _parse_and_query(asm, 4)


def file_scheme(asm):
    asm.const_string(1, "file:///sdcard/export.db")
    _parse_and_query(asm, 1)


def overwritten_in_try(asm):
    handler = Handler(catch_all="handler")
    asm.const_string(1, "content://com.a")
    asm.label("try_start")
    asm.const_string(1, "content://com.b")
    asm.invoke_static(SYSTEM_GET_PROPERTY, 1)
    asm.label("try_end")
    asm.return_void()
    asm.label("handler")
    asm.move_exception(5)
    _parse_and_query(asm, 1)
    asm.try_range("try_start", "try_end", handler)


# (名字, 生成器, 静态常量, 期望的 [(op_kind, authority)])
FIXTURES = [
    ("direct_constant", direct_constant, None, [("query", "com.x.data")]),
    ("no_resolver_call", no_resolver_call, None, []),
    ("builder_chain", builder_chain, None, [("query", "com.x.data")]),
    ("string_concat", string_concat, None, [("query", "com.x.data")]),
    ("appended_path_insert", appended_path_insert, None, [("insert", "com.x.data")]),
    (
        "static_field_delete",
        static_field_delete,
        {"AUTHORITY": "content://com.x.cfg/items"},
        [("delete", "com.x.cfg")],
    ),
    ("branch_conflict", _branches("content://com.a", "content://com.b"), None, [("query", None)]),
    ("branch_path_mismatch", _branches("content://com.same/a", "content://com.same"), None, [("query", None)]),
    ("dynamic_string", dynamic_string, None, [("query", None)]),
    ("call_with_authority", call_with_authority, None, [("call", "com.x.auth")]),
    ("builder_with_dynamic_part", builder_with_dynamic_part, None, [("query", None)]),
    ("file_scheme", file_scheme, None, [("query", None)]),
]


@pytest.mark.parametrize("name,emit,statics,expected", FIXTURES, ids=[f[0] for f in FIXTURES])
def test_fixture_resolution(name, emit, statics, expected):
    sites = scan_call_sites([_single_method(emit, statics)])
    assert [(s.op_kind, s.resolved_authority) for s in sites] == expected
    for s in sites:
        assert s.declaring_class == "com.x.Caller"
        assert s.method_name == "load"


def test_identical_constants_on_both_branches_resolve():
    sites = scan_call_sites([_single_method(_branches("content://com.same", "content://com.same"))])
    assert [s.resolved_authority for s in sites] == ["com.same"]


def test_exception_edge_carries_both_states():
    sites = scan_call_sites([_single_method(overwritten_in_try)])
    assert [s.resolved_authority for s in sites] == [None]


def test_static_constant_from_another_dex():
    holder = DexBuilder()
    cls = holder.add_class("Lcom/x/Const;")
    holder.add_static_field(cls, "AUTHORITY", "content://com.split.data")
    caller = _single_method(static_field_delete)
    sites = scan_call_sites([caller, holder.to_bytes()])
    assert [s.resolved_authority for s in sites] == ["com.split.data"]


def test_attribution_is_filled_when_package_given():
    sites = scan_call_sites([_single_method(direct_constant)], app_package="com.x", sdk_prefixes=["com.ads"])
    assert sites[0].attribution == "app_core"
    sites = scan_call_sites([_single_method(direct_constant)], app_package="org.y", sdk_prefixes=["com.x"])
    assert sites[0].attribution == "third_party"


def test_corrupted_dex_is_skipped(caplog):
    good = _single_method(direct_constant)
    sites = scan_call_sites([b"dex\n035\x00" + b"\x00" * 10, good])
    assert [s.resolved_authority for s in sites] == ["com.x.data"]
    assert "DEX" in caplog.text


def test_parsed_dexfile_is_accepted():
    dex = DexFile(_single_method(direct_constant))
    assert scan_call_sites([dex]) == scan_call_sites([dex.data])


@pytest.mark.parametrize(
    "text,authority",
    [
        ("content://com.x.data/items/1", "com.x.data"),
        ("CONTENT://com.x.data", "com.x.data"),
        ("content://com.x.data?limit=1", "com.x.data"),
        ("content://", None),
        ("https://example.com", None),
        (None, None),
    ],
)
def test_normalize_authority(text, authority):
    assert normalize_authority(text) == authority
