#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
最小 DEX 汇编器

按 permdrift.dex.reader 读取的表生成合法 DEX：字符串、类型、原型、字段、
方法、类定义、class_data、code_item（可带 try/catch）和静态字段初始值。
索引按加入顺序分配，不做排序；reader 不要求有序。

方法签名写成 smali 形式：
    "Landroid/net/Uri;->parse(Ljava/lang/String;)Landroid/net/Uri;"
"""

import hashlib
import re
import struct
import zlib
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

OBJECT = "Ljava/lang/Object;"
STRING = "Ljava/lang/String;"
URI = "Landroid/net/Uri;"
CURSOR = "Landroid/database/Cursor;"
RESOLVER = "Landroid/content/ContentResolver;"
STRING_BUILDER = "Ljava/lang/StringBuilder;"

URI_PARSE = "Landroid/net/Uri;->parse(Ljava/lang/String;)Landroid/net/Uri;"
URI_APPEND_PATH = "Landroid/net/Uri;->withAppendedPath(Landroid/net/Uri;Ljava/lang/String;)Landroid/net/Uri;"
RESOLVER_QUERY = (
    "Landroid/content/ContentResolver;->query(Landroid/net/Uri;[Ljava/lang/String;Ljava/lang/String;"
    "[Ljava/lang/String;Ljava/lang/String;)Landroid/database/Cursor;"
)
RESOLVER_INSERT = (
    "Landroid/content/ContentResolver;->insert(Landroid/net/Uri;Landroid/content/ContentValues;)Landroid/net/Uri;"
)
RESOLVER_DELETE = (
    "Landroid/content/ContentResolver;->delete(Landroid/net/Uri;Ljava/lang/String;[Ljava/lang/String;)I"
)
RESOLVER_CALL = (
    "Landroid/content/ContentResolver;->call(Ljava/lang/String;Ljava/lang/String;Ljava/lang/String;"
    "Landroid/os/Bundle;)Landroid/os/Bundle;"
)
SB_INIT = "Ljava/lang/StringBuilder;-><init>()V"
SB_INIT_STRING = "Ljava/lang/StringBuilder;-><init>(Ljava/lang/String;)V"
SB_APPEND = "Ljava/lang/StringBuilder;->append(Ljava/lang/String;)Ljava/lang/StringBuilder;"
SB_TO_STRING = "Ljava/lang/StringBuilder;->toString()Ljava/lang/String;"
STRING_CONCAT = "Ljava/lang/String;->concat(Ljava/lang/String;)Ljava/lang/String;"
SYSTEM_GET_PROPERTY = "Ljava/lang/System;->getProperty(Ljava/lang/String;)Ljava/lang/String;"

QUERY_PROTO = (CURSOR, (URI, "[Ljava/lang/String;", STRING, "[Ljava/lang/String;", STRING))

ACC_PUBLIC = 0x1
ACC_STATIC = 0x8
ACC_FINAL = 0x10
ACC_CONSTRUCTOR = 0x10000

NO_INDEX = 0xFFFFFFFF

_METHOD_SPEC = re.compile(r"^(L[^;]+;)->([^(]+)\((.*)\)(.+)$")
_FIELD_SPEC = re.compile(r"^(L[^;]+;)->([^:]+):(.+)$")
_TYPE_TOKEN = re.compile(r"\[*(?:L[^;]+;|[VZBSCIJFD])")


def split_params(text: str) -> Tuple[str, ...]:
    return tuple(_TYPE_TOKEN.findall(text))


def _shorty(desc: str) -> str:
    return "L" if desc[0] in "L[" else desc


def uleb128(value: int) -> bytes:
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def sleb128(value: int) -> bytes:
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        done = (value == 0 and not byte & 0x40) or (value == -1 and byte & 0x40)
        out.append(byte if done else byte | 0x80)
        if done:
            return bytes(out)


def _align(buf: bytearray, n: int) -> None:
    while len(buf) % n:
        buf.append(0)


@dataclass
class Handler:
    """catch 处理器：[(异常类型, 标签)] + 可选 catch-all 标签"""

    catches: List[Tuple[str, str]] = field(default_factory=list)
    catch_all: Optional[str] = None


@dataclass
class _Try:
    start: str
    end: str
    handler: Handler


@dataclass
class Code:
    registers: int
    ins: int
    outs: int
    insns: List[int]
    tries: List[Tuple[int, int, Handler]] = field(default_factory=list)
    labels: Dict[str, int] = field(default_factory=dict)


class Asm:
    """
    单个方法体的指令汇编

    Args:
        dex: 所属 DexBuilder，用于登记字符串 / 类型 / 方法索引
        registers: 寄存器总数
        ins: 参数寄存器数（包括 this）
    """

    def __init__(self, dex: "DexBuilder", registers: int = 16, ins: int = 0):
        self.dex = dex
        self.registers = registers
        self.ins = ins
        self.units: List[int] = []
        self.labels: Dict[str, int] = {}
        self._fixups: List[Tuple[int, str, str]] = []
        self._tries: List[_Try] = []
        self._outs = 0

    # ------------------------------------------------------------ 基础

    def _emit(self, *units: int) -> "Asm":
        self.units.extend(u & 0xFFFF for u in units)
        return self

    def label(self, name: str) -> "Asm":
        self.labels[name] = len(self.units)
        return self

    def try_range(self, start: str, end: str, handler: Handler) -> "Asm":
        for exc, _ in handler.catches:
            self.dex.type(exc)
        self._tries.append(_Try(start, end, handler))
        return self

    # ------------------------------------------------------------ 指令

    def nop(self) -> "Asm":
        return self._emit(0x00)

    def const4(self, reg: int, value: int) -> "Asm":
        return self._emit(0x12 | ((reg | ((value & 0xF) << 4)) << 8))

    def const16(self, reg: int, value: int) -> "Asm":
        return self._emit(0x13 | (reg << 8), value & 0xFFFF)

    def const_string(self, reg: int, text: str) -> "Asm":
        return self._emit(0x1A | (reg << 8), self.dex.string(text))

    def const_string_jumbo(self, reg: int, text: str) -> "Asm":
        idx = self.dex.string(text)
        return self._emit(0x1B | (reg << 8), idx & 0xFFFF, idx >> 16)

    def move_object(self, dst: int, src: int) -> "Asm":
        return self._emit(0x07 | ((dst | (src << 4)) << 8))

    def move_result(self, reg: int) -> "Asm":
        return self._emit(0x0A | (reg << 8))

    def move_result_object(self, reg: int) -> "Asm":
        return self._emit(0x0C | (reg << 8))

    def move_exception(self, reg: int) -> "Asm":
        return self._emit(0x0D | (reg << 8))

    def return_void(self) -> "Asm":
        return self._emit(0x0E)

    def return_object(self, reg: int) -> "Asm":
        return self._emit(0x11 | (reg << 8))

    def new_instance(self, reg: int, type_desc: str) -> "Asm":
        return self._emit(0x22 | (reg << 8), self.dex.type(type_desc))

    def check_cast(self, reg: int, type_desc: str) -> "Asm":
        return self._emit(0x1F | (reg << 8), self.dex.type(type_desc))

    def throw(self, reg: int) -> "Asm":
        return self._emit(0x27 | (reg << 8))

    def sget_object(self, reg: int, field_spec: str) -> "Asm":
        return self._emit(0x62 | (reg << 8), self.dex.field(field_spec))

    def sput_object(self, reg: int, field_spec: str) -> "Asm":
        return self._emit(0x69 | (reg << 8), self.dex.field(field_spec))

    def goto(self, target: str) -> "Asm":
        self._fixups.append((len(self.units), target, "10t"))
        return self._emit(0x28)

    def if_eqz(self, reg: int, target: str) -> "Asm":
        self._fixups.append((len(self.units), target, "21t"))
        return self._emit(0x38 | (reg << 8), 0)

    def if_nez(self, reg: int, target: str) -> "Asm":
        self._fixups.append((len(self.units), target, "21t"))
        return self._emit(0x39 | (reg << 8), 0)

    def _invoke(self, op: int, spec: str, regs: Sequence[int]) -> "Asm":
        if len(regs) > 5:
            raise ValueError("35c 调用最多 5 个寄存器")
        idx = self.dex.method(spec)
        r = list(regs) + [0] * (5 - len(regs))
        self._outs = max(self._outs, len(regs))
        return self._emit(
            op | (((len(regs) << 4) | r[4]) << 8),
            idx,
            r[0] | (r[1] << 4) | (r[2] << 8) | (r[3] << 12),
        )

    def invoke_virtual(self, spec: str, *regs: int) -> "Asm":
        return self._invoke(0x6E, spec, regs)

    def invoke_direct(self, spec: str, *regs: int) -> "Asm":
        return self._invoke(0x70, spec, regs)

    def invoke_static(self, spec: str, *regs: int) -> "Asm":
        return self._invoke(0x71, spec, regs)

    def invoke_virtual_range(self, spec: str, first: int, count: int) -> "Asm":
        idx = self.dex.method(spec)
        self._outs = max(self._outs, count)
        return self._emit(0x74 | (count << 8), idx, first)

    # ------------------------------------------------------------ 组合

    def move_object_from16(self, dst: int, src: int) -> "Asm":
        return self._emit(0x08 | (dst << 8), src)

    def query(self, resolver: int, uri: int) -> "Asm":
        """
        resolver.query(uri, null, null, null, null)

        query 占 6 个参数寄存器，35c 放不下：把参数搬到最后 6 个寄存器后用 invoke-virtual/range。
        调用方自己的寄存器不要用到 registers - 6 以上。
        """
        base = self.registers - 6
        self.move_object_from16(base, resolver)
        self.move_object_from16(base + 1, uri)
        for i in range(2, 6):
            self.const16(base + i, 0)
        return self.invoke_virtual_range(RESOLVER_QUERY, base, 6)

    def build(self) -> Code:
        for at, target, fmt in self._fixups:
            if target not in self.labels:
                raise ValueError(f"未定义的标签: {target}")
            offset = self.labels[target] - at
            if fmt == "10t":
                self.units[at] = 0x28 | ((offset & 0xFF) << 8)
            else:
                self.units[at + 1] = offset & 0xFFFF
        tries = []
        for t in self._tries:
            start, end = self.labels[t.start], self.labels[t.end]
            tries.append((start, end - start, t.handler))
        return Code(
            registers=self.registers,
            ins=self.ins,
            outs=self._outs,
            insns=list(self.units),
            tries=tries,
            labels=dict(self.labels),
        )


@dataclass
class _Method:
    spec: str
    access: int
    code: Optional[Code]


@dataclass
class _Class:
    desc: str
    superclass: Optional[str]
    access: int
    static_fields: List[Tuple[str, int, Optional[str]]] = field(default_factory=list)
    instance_fields: List[Tuple[str, int]] = field(default_factory=list)
    direct: List[_Method] = field(default_factory=list)
    virtual: List[_Method] = field(default_factory=list)


class DexBuilder:
    """
    组装一个 DEX 文件

    用法：
        dex = DexBuilder()
        cls = dex.add_class("Lcom/x/Main;")
        asm = dex.asm(registers=6, ins=1)
        ...
        dex.add_method(cls, "Lcom/x/Main;->run()V", asm.build())
        data = dex.to_bytes()
    """

    def __init__(self):
        self._strings: Dict[str, int] = {}
        self._types: Dict[str, int] = {}
        self._protos: Dict[Tuple[str, Tuple[str, ...]], int] = {}
        self._fields: Dict[Tuple[str, str, str], int] = {}
        self._methods: Dict[Tuple[str, str, str, Tuple[str, ...]], int] = {}
        self._classes: List[_Class] = []

    # ------------------------------------------------------------ 索引登记

    def string(self, text: str) -> int:
        return self._strings.setdefault(text, len(self._strings))

    def type(self, desc: str) -> int:
        if desc not in self._types:
            self.string(desc)
            self._types[desc] = len(self._types)
        return self._types[desc]

    def proto(self, return_type: str, params: Sequence[str]) -> int:
        key = (return_type, tuple(params))
        if key not in self._protos:
            self.string(_shorty(return_type) + "".join(_shorty(p) for p in params))
            self.type(return_type)
            for p in params:
                self.type(p)
            self._protos[key] = len(self._protos)
        return self._protos[key]

    def field(self, spec: str) -> int:
        m = _FIELD_SPEC.match(spec)
        if not m:
            raise ValueError(f"字段签名非法: {spec}")
        key = (m.group(1), m.group(3), m.group(2))
        if key not in self._fields:
            self.type(key[0])
            self.type(key[1])
            self.string(key[2])
            self._fields[key] = len(self._fields)
        return self._fields[key]

    def method(self, spec: str) -> int:
        m = _METHOD_SPEC.match(spec)
        if not m:
            raise ValueError(f"方法签名非法: {spec}")
        cls, name, params, ret = m.group(1), m.group(2), split_params(m.group(3)), m.group(4)
        key = (cls, name, ret, params)
        if key not in self._methods:
            self.type(cls)
            self.string(name)
            self.proto(ret, params)
            self._methods[key] = len(self._methods)
        return self._methods[key]

    # ------------------------------------------------------------ 类

    def asm(self, registers: int = 16, ins: int = 0) -> Asm:
        return Asm(self, registers=registers, ins=ins)

    def add_class(self, desc: str, superclass: Optional[str] = OBJECT, access: int = ACC_PUBLIC) -> _Class:
        self.type(desc)
        if superclass:
            self.type(superclass)
        cls = _Class(desc=desc, superclass=superclass, access=access)
        self._classes.append(cls)
        return cls

    def add_static_field(
        self, cls: _Class, name: str, value: Optional[str], type_desc: str = STRING,
        access: int = ACC_PUBLIC | ACC_STATIC | ACC_FINAL,
    ) -> None:
        spec = f"{cls.desc}->{name}:{type_desc}"
        self.field(spec)
        if value is not None:
            self.string(value)
        cls.static_fields.append((spec, access, value))

    def add_method(
        self, cls: _Class, spec: str, code: Optional[Code], access: int = ACC_PUBLIC, direct: bool = False
    ) -> None:
        self.method(spec)
        target = cls.direct if direct or access & ACC_STATIC or "-><init>" in spec else cls.virtual
        target.append(_Method(spec, access, code))

    # ------------------------------------------------------------ 输出

    def to_bytes(self) -> bytes:
        strings = sorted(self._strings, key=self._strings.get)
        types = sorted(self._types, key=self._types.get)
        protos = sorted(self._protos, key=self._protos.get)
        fields = sorted(self._fields, key=self._fields.get)
        methods = sorted(self._methods, key=self._methods.get)

        header_size = 0x70
        string_ids_off = header_size
        type_ids_off = string_ids_off + 4 * len(strings)
        proto_ids_off = type_ids_off + 4 * len(types)
        field_ids_off = proto_ids_off + 12 * len(protos)
        method_ids_off = field_ids_off + 8 * len(fields)
        class_defs_off = method_ids_off + 8 * len(methods)
        data_off = class_defs_off + 32 * len(self._classes)

        data = bytearray()

        def here() -> int:
            return data_off + len(data)

        string_offs = []
        for s in strings:
            string_offs.append(here())
            raw = s.encode("utf-8").replace(b"\x00", b"\xc0\x80")
            data += uleb128(len(s.encode("utf-16-le")) // 2) + raw + b"\x00"

        proto_params_off = []
        for ret, params in protos:
            if not params:
                proto_params_off.append(0)
                continue
            _align(data, 4)
            proto_params_off.append(here())
            data += struct.pack("<I", len(params))
            data += b"".join(struct.pack("<H", self._types[p]) for p in params)

        code_offs: Dict[Tuple[int, str], int] = {}
        for ci, cls in enumerate(self._classes):
            for m in cls.direct + cls.virtual:
                if m.code is None:
                    continue
                _align(data, 4)
                code_offs[(ci, m.spec)] = here()
                data += self._code_item(m.code)

        class_data_offs = []
        static_values_offs = []
        for ci, cls in enumerate(self._classes):
            statics = sorted(cls.static_fields, key=lambda f: self.field(f[0]))
            if statics and any(v is not None for _, _, v in statics):
                static_values_offs.append(here())
                data += uleb128(len(statics))
                for _, _, value in statics:
                    if value is None:
                        data.append(0x1E)
                    else:
                        idx = self._strings[value]
                        width = max(1, (idx.bit_length() + 7) // 8)
                        data.append(0x17 | ((width - 1) << 5))
                        data += idx.to_bytes(width, "little")
            else:
                static_values_offs.append(0)

            if not (cls.static_fields or cls.instance_fields or cls.direct or cls.virtual):
                class_data_offs.append(0)
                continue
            class_data_offs.append(here())
            direct = sorted(cls.direct, key=lambda m: self.method(m.spec))
            virtual = sorted(cls.virtual, key=lambda m: self.method(m.spec))
            data += uleb128(len(statics)) + uleb128(0) + uleb128(len(direct)) + uleb128(len(virtual))
            prev = 0
            for spec, access, _ in statics:
                idx = self.field(spec)
                data += uleb128(idx - prev) + uleb128(access)
                prev = idx
            for group in (direct, virtual):
                prev = 0
                for m in group:
                    idx = self.method(m.spec)
                    data += uleb128(idx - prev) + uleb128(m.access) + uleb128(code_offs.get((ci, m.spec), 0))
                    prev = idx

        _align(data, 4)
        file_size = data_off + len(data)

        out = bytearray(header_size)
        out += b"".join(struct.pack("<I", off) for off in string_offs)
        out += b"".join(struct.pack("<I", self._strings[t]) for t in types)
        for (ret, params), params_off in zip(protos, proto_params_off):
            shorty = _shorty(ret) + "".join(_shorty(p) for p in params)
            out += struct.pack("<III", self._strings[shorty], self._types[ret], params_off)
        for cls_desc, type_desc, name in fields:
            out += struct.pack("<HHI", self._types[cls_desc], self._types[type_desc], self._strings[name])
        for cls_desc, name, ret, params in methods:
            out += struct.pack(
                "<HHI", self._types[cls_desc], self._protos[(ret, params)], self._strings[name]
            )
        for cls, cd_off, sv_off in zip(self._classes, class_data_offs, static_values_offs):
            super_idx = self._types[cls.superclass] if cls.superclass else NO_INDEX
            out += struct.pack(
                "<8I", self._types[cls.desc], cls.access, super_idx, 0, NO_INDEX, 0, cd_off, sv_off
            )
        out += data

        struct.pack_into(
            "<8sI20s20I",
            out,
            0,
            b"dex\n035\x00",
            0,
            b"\x00" * 20,
            file_size,
            header_size,
            0x12345678,
            0,
            0,
            0,
            len(strings),
            string_ids_off if strings else 0,
            len(types),
            type_ids_off if types else 0,
            len(protos),
            proto_ids_off if protos else 0,
            len(fields),
            field_ids_off if fields else 0,
            len(methods),
            method_ids_off if methods else 0,
            len(self._classes),
            class_defs_off if self._classes else 0,
            len(data),
            data_off,
        )
        out[12:32] = hashlib.sha1(bytes(out[32:])).digest()
        struct.pack_into("<I", out, 8, zlib.adler32(bytes(out[12:])))
        return bytes(out)

    def _code_item(self, code: Code) -> bytes:
        item = bytearray(
            struct.pack("<HHHHII", code.registers, code.ins, code.outs, len(code.tries), 0, len(code.insns))
        )
        item += struct.pack(f"<{len(code.insns)}H", *code.insns)
        if not code.tries:
            return bytes(item)
        if len(code.insns) % 2:
            item += b"\x00\x00"

        handlers: List[Handler] = []
        for _, _, h in code.tries:
            if not any(h is x for x in handlers):
                handlers.append(h)
        blob = bytearray(uleb128(len(handlers)))
        handler_offs = []
        for h in handlers:
            handler_offs.append(len(blob))
            size = len(h.catches)
            blob += sleb128(-size if h.catch_all else size)
            for exc, target in h.catches:
                blob += uleb128(self.type(exc)) + uleb128(code.labels[target])
            if h.catch_all:
                blob += uleb128(code.labels[h.catch_all])
        for start, count, h in code.tries:
            off = handler_offs[next(i for i, x in enumerate(handlers) if x is h)]
            item += struct.pack("<IHH", start, count, off)
        item += blob
        return bytes(item)
