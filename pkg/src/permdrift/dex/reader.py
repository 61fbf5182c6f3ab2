#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
DEX 文件读取

只读取分析需要的表：字符串、类型、原型、字段、方法、类定义、
class_data、code_item（含 try/catch）以及静态字段初始值（encoded_array）。
所有偏移都做越界检查，结构损坏时抛 MalformedDex。
"""

import collections
import logging
import re
import struct
from typing import Dict, Iterator, List, Optional, Tuple

from ..errors import MalformedDex

logger = logging.getLogger("permdrift.dex.reader")

_DEX_MAGIC = re.compile(rb"^dex\n\d{3}\x00$")
_ENDIAN_CONSTANT = 0x12345678
NO_INDEX = 0xFFFFFFFF

ACC_STATIC = 0x8
ACC_FINAL = 0x10

_DEX_HEADER_FMT = (
    ("magic", "8s"),
    ("checksum", "I"),
    ("signature", "20s"),
    ("file_size", "I"),
    ("header_size", "I"),
    ("endian_tag", "I"),
    ("link_size", "I"),
    ("link_off", "I"),
    ("map_off", "I"),
    ("string_ids_size", "I"),
    ("string_ids_off", "I"),
    ("type_ids_size", "I"),
    ("type_ids_off", "I"),
    ("proto_ids_size", "I"),
    ("proto_ids_off", "I"),
    ("field_ids_size", "I"),
    ("field_ids_off", "I"),
    ("method_ids_size", "I"),
    ("method_ids_off", "I"),
    ("class_defs_size", "I"),
    ("class_defs_off", "I"),
    ("data_size", "I"),
    ("data_off", "I"),
)
_HEADER_STRUCT = struct.Struct("<" + "".join(t[1] for t in _DEX_HEADER_FMT))

DexHeader = collections.namedtuple("DexHeader", ",".join(t[0] for t in _DEX_HEADER_FMT))
ProtoRef = collections.namedtuple("ProtoRef", "shorty,return_type,params")
FieldRef = collections.namedtuple("FieldRef", "class_desc,type_desc,name")
MethodRef = collections.namedtuple("MethodRef", "class_desc,name,proto")
EncodedField = collections.namedtuple("EncodedField", "field_idx,access_flags")
EncodedMethod = collections.namedtuple("EncodedMethod", "method_idx,access_flags,code_off")
TryItem = collections.namedtuple("TryItem", "start_addr,insn_count,handler_off")
CatchHandler = collections.namedtuple("CatchHandler", "pairs,catch_all_addr")
CodeItem = collections.namedtuple(
    "CodeItem", "offset,registers_size,ins_size,outs_size,insns,tries,handlers"
)
ClassDef = collections.namedtuple(
    "ClassDef",
    "class_desc,access_flags,superclass,static_fields,instance_fields,"
    "direct_methods,virtual_methods,static_values",
)


def descriptor_to_name(desc: str) -> str:
    """'Lcom/x/Y;' -> 'com.x.Y'；数组与基本类型原样返回"""
    if desc.startswith("L") and desc.endswith(";"):
        return desc[1:-1].replace("/", ".")
    return desc


def name_to_descriptor(name: str) -> str:
    """'com.x.Y' -> 'Lcom/x/Y;'"""
    return "L" + name.replace(".", "/") + ";"


def decode_mutf8(raw: bytes) -> str:
    """Modified UTF-8：C0 80 表示 \\0，补充平面字符按代理对分开编码"""
    text = raw.replace(b"\xc0\x80", b"\x00").decode("utf-8", errors="surrogatepass")
    return text.encode("utf-16-le", errors="surrogatepass").decode("utf-16-le", errors="replace")


class _Reader:
    """带越界检查的小端读取器"""

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def seek(self, pos: int) -> "_Reader":
        if not 0 <= pos <= len(self.data):
            raise MalformedDex(f"偏移越界: {pos:#x}")
        self.pos = pos
        return self

    def _take(self, n: int) -> bytes:
        end = self.pos + n
        if end > len(self.data):
            raise MalformedDex(f"读取越界: {self.pos:#x}+{n}")
        chunk = self.data[self.pos : end]
        self.pos = end
        return chunk

    def u8(self) -> int:
        return self._take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self._take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def raw(self, n: int) -> bytes:
        return self._take(n)

    def uleb128(self) -> int:
        result = 0
        for i in range(5):
            b = self.u8()
            result |= (b & 0x7F) << (7 * i)
            if not b & 0x80:
                return result
        raise MalformedDex("uleb128 过长")

    def sleb128(self) -> int:
        result = 0
        shift = 0
        for _ in range(5):
            b = self.u8()
            result |= (b & 0x7F) << shift
            shift += 7
            if not b & 0x80:
                if b & 0x40:
                    result -= 1 << shift
                return result
        raise MalformedDex("sleb128 过长")

    def align(self, n: int) -> None:
        self.pos = (self.pos + n - 1) // n * n

    def cstring(self) -> bytes:
        end = self.data.find(b"\x00", self.pos)
        if end < 0:
            raise MalformedDex(f"字符串未以 \\0 结尾: {self.pos:#x}")
        chunk = self.data[self.pos : end]
        self.pos = end + 1
        return chunk


class DexFile:
    """
    单个 DEX 文件

    Args:
        data: DEX 文件内容

    Raises:
        MalformedDex: 魔数错误或结构越界
    """

    def __init__(self, data: bytes, name: str = "classes.dex"):
        self.data = bytes(data)
        self.name = name
        if len(self.data) < _HEADER_STRUCT.size:
            raise MalformedDex(f"{name}: 文件过短")
        self.header = DexHeader._make(_HEADER_STRUCT.unpack_from(self.data, 0))
        if not _DEX_MAGIC.match(self.header.magic):
            raise MalformedDex(f"{name}: 魔数错误 {self.header.magic!r}")
        if self.header.endian_tag != _ENDIAN_CONSTANT:
            raise MalformedDex(f"{name}: 不支持的字节序标记 {self.header.endian_tag:#x}")

        r = _Reader(self.data)
        self.strings = self._read_strings(r)
        self.types = self._read_types(r)
        self.protos = self._read_protos(r)
        self.fields = self._read_fields(r)
        self.methods = self._read_methods(r)
        self.classes = self._read_class_defs(r)
        self._class_index = {c.class_desc: c for c in self.classes}
        self._code_cache: Dict[int, CodeItem] = {}

    # ------------------------------------------------------------ 索引表

    def _read_strings(self, r: _Reader) -> List[str]:
        h = self.header
        r.seek(h.string_ids_off)
        offsets = [r.u32() for _ in range(h.string_ids_size)]
        strings = []
        for off in offsets:
            r.seek(off)
            r.uleb128()  # utf16 长度
            strings.append(decode_mutf8(r.cstring()))
        return strings

    def string(self, idx: int) -> str:
        if idx >= len(self.strings):
            raise MalformedDex(f"字符串索引越界: {idx}")
        return self.strings[idx]

    def _read_types(self, r: _Reader) -> List[str]:
        h = self.header
        r.seek(h.type_ids_off)
        return [self.string(r.u32()) for _ in range(h.type_ids_size)]

    def type(self, idx: int) -> str:
        if idx >= len(self.types):
            raise MalformedDex(f"类型索引越界: {idx}")
        return self.types[idx]

    def _read_type_list(self, off: int) -> Tuple[str, ...]:
        if off == 0:
            return ()
        r = _Reader(self.data, 0).seek(off)
        size = r.u32()
        return tuple(self.type(r.u16()) for _ in range(size))

    def _read_protos(self, r: _Reader) -> List[ProtoRef]:
        h = self.header
        r.seek(h.proto_ids_off)
        raw = [(r.u32(), r.u32(), r.u32()) for _ in range(h.proto_ids_size)]
        return [
            ProtoRef(self.string(shorty), self.type(ret), self._read_type_list(params))
            for shorty, ret, params in raw
        ]

    def _read_fields(self, r: _Reader) -> List[FieldRef]:
        h = self.header
        r.seek(h.field_ids_off)
        raw = [(r.u16(), r.u16(), r.u32()) for _ in range(h.field_ids_size)]
        return [FieldRef(self.type(c), self.type(t), self.string(n)) for c, t, n in raw]

    def _read_methods(self, r: _Reader) -> List[MethodRef]:
        h = self.header
        r.seek(h.method_ids_off)
        raw = [(r.u16(), r.u16(), r.u32()) for _ in range(h.method_ids_size)]
        out = []
        for c, p, n in raw:
            if p >= len(self.protos):
                raise MalformedDex(f"原型索引越界: {p}")
            out.append(MethodRef(self.type(c), self.string(n), self.protos[p]))
        return out

    def field(self, idx: int) -> FieldRef:
        if idx >= len(self.fields):
            raise MalformedDex(f"字段索引越界: {idx}")
        return self.fields[idx]

    def method(self, idx: int) -> MethodRef:
        if idx >= len(self.methods):
            raise MalformedDex(f"方法索引越界: {idx}")
        return self.methods[idx]

    # ------------------------------------------------------------ 类定义

    def _read_class_defs(self, r: _Reader) -> List[ClassDef]:
        h = self.header
        r.seek(h.class_defs_off)
        raw = [tuple(r.u32() for _ in range(8)) for _ in range(h.class_defs_size)]
        classes = []
        for class_idx, flags, super_idx, _ifaces, _src, _annos, data_off, values_off in raw:
            static_fields: Tuple[EncodedField, ...] = ()
            instance_fields: Tuple[EncodedField, ...] = ()
            direct: Tuple[EncodedMethod, ...] = ()
            virtual: Tuple[EncodedMethod, ...] = ()
            if data_off:
                static_fields, instance_fields, direct, virtual = self._read_class_data(data_off)
            classes.append(
                ClassDef(
                    class_desc=self.type(class_idx),
                    access_flags=flags,
                    superclass=None if super_idx == NO_INDEX else self.type(super_idx),
                    static_fields=static_fields,
                    instance_fields=instance_fields,
                    direct_methods=direct,
                    virtual_methods=virtual,
                    static_values=self._read_encoded_array(values_off) if values_off else (),
                )
            )
        return classes

    def _read_class_data(self, off: int):
        r = _Reader(self.data).seek(off)
        sizes = [r.uleb128() for _ in range(4)]

        def fields(count):
            out, idx = [], 0
            for _ in range(count):
                idx += r.uleb128()
                out.append(EncodedField(idx, r.uleb128()))
            return tuple(out)

        def methods(count):
            out, idx = [], 0
            for _ in range(count):
                idx += r.uleb128()
                out.append(EncodedMethod(idx, r.uleb128(), r.uleb128()))
            return tuple(out)

        return fields(sizes[0]), fields(sizes[1]), methods(sizes[2]), methods(sizes[3])

    # ------------------------------------------------------------ encoded_value

    def _read_encoded_array(self, off: int) -> Tuple:
        r = _Reader(self.data).seek(off)
        return self._encoded_array(r)

    def _encoded_array(self, r: _Reader) -> Tuple:
        size = r.uleb128()
        return tuple(self._encoded_value(r) for _ in range(size))

    def _encoded_value(self, r: _Reader):
        """只保留字符串值；其它类型读过后返回 None（null / boolean 也是 None）"""
        head = r.u8()
        value_type, value_arg = head & 0x1F, head >> 5
        if value_type == 0x17:  # VALUE_STRING
            idx = int.from_bytes(r.raw(value_arg + 1), "little")
            return self.string(idx)
        if value_type == 0x1C:  # VALUE_ARRAY
            self._encoded_array(r)
            return None
        if value_type == 0x1D:  # VALUE_ANNOTATION
            r.uleb128()
            for _ in range(r.uleb128()):
                r.uleb128()
                self._encoded_value(r)
            return None
        if value_type in (0x1E, 0x1F):  # VALUE_NULL / VALUE_BOOLEAN
            return None
        r.raw(value_arg + 1)
        return None

    # ------------------------------------------------------------ 代码

    def code_item(self, off: int) -> Optional[CodeItem]:
        if off == 0:
            return None
        if off in self._code_cache:
            return self._code_cache[off]
        r = _Reader(self.data).seek(off)
        registers_size = r.u16()
        ins_size = r.u16()
        outs_size = r.u16()
        tries_size = r.u16()
        r.u32()  # debug_info_off
        insns_size = r.u32()
        insns = struct.unpack(f"<{insns_size}H", r.raw(insns_size * 2))
        tries: Tuple[TryItem, ...] = ()
        handlers: Dict[int, CatchHandler] = {}
        if tries_size:
            if insns_size % 2:
                r.u16()  # padding
            tries = tuple(TryItem(r.u32(), r.u16(), r.u16()) for _ in range(tries_size))
            list_start = r.pos
            for _ in range(r.uleb128()):
                rel = r.pos - list_start
                size = r.sleb128()
                pairs = tuple((r.uleb128(), r.uleb128()) for _ in range(abs(size)))
                catch_all = r.uleb128() if size <= 0 else None
                handlers[rel] = CatchHandler(pairs, catch_all)
        item = CodeItem(off, registers_size, ins_size, outs_size, insns, tries, handlers)
        self._code_cache[off] = item
        return item

    # ------------------------------------------------------------ 便捷接口

    def find_class(self, class_desc: str) -> Optional[ClassDef]:
        return self._class_index.get(class_desc)

    def iter_methods(self, cls: ClassDef) -> Iterator[Tuple[EncodedMethod, MethodRef]]:
        for em in cls.direct_methods + cls.virtual_methods:
            yield em, self.method(em.method_idx)

    def static_string_constants(self) -> Dict[str, str]:
        """
        static final String 字段的编译期常量

        Returns:
            {"Lcom/x/C;->NAME:Ljava/lang/String;": value}
        """
        out: Dict[str, str] = {}
        for cls in self.classes:
            for i, ef in enumerate(cls.static_fields):
                if i >= len(cls.static_values):
                    break
                value = cls.static_values[i]
                if not isinstance(value, str):
                    continue
                if ef.access_flags & (ACC_STATIC | ACC_FINAL) != (ACC_STATIC | ACC_FINAL):
                    continue
                ref = self.field(ef.field_idx)
                if ref.type_desc == "Ljava/lang/String;":
                    out[field_key(ref)] = value
        return out


def field_key(ref: FieldRef) -> str:
    return f"{ref.class_desc}->{ref.name}:{ref.type_desc}"


def load_dex_set(dex_files: List[bytes]) -> List[DexFile]:
    """按顺序解析多个 DEX；任一文件损坏即抛 MalformedDex"""
    return [DexFile(data, name=f"classes{i + 1 if i else ''}.dex") for i, data in enumerate(dex_files)]
