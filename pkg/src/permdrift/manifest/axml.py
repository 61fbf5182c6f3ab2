#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
二进制 AXML 解码

chunk 头：type u16 | header_size u16 | chunk_size u32，全部小端。
只解析清单需要的 chunk：字符串池、资源 ID 表、命名空间、元素起止；
其余 chunk 按 size 跳过。
"""

import collections
import logging
import struct
from typing import Dict, List, Optional

from ..errors import MalformedManifest
from .xmltree import ANDROID_ATTR_NAMES, ANDROID_NS, AttrValue, XmlElement

logger = logging.getLogger("permdrift.manifest.axml")

# chunk 类型
RES_STRING_POOL_TYPE = 0x0001
RES_XML_TYPE = 0x0003
RES_XML_START_NAMESPACE_TYPE = 0x0100
RES_XML_END_NAMESPACE_TYPE = 0x0101
RES_XML_START_ELEMENT_TYPE = 0x0102
RES_XML_END_ELEMENT_TYPE = 0x0103
RES_XML_CDATA_TYPE = 0x0104
RES_XML_RESOURCE_MAP_TYPE = 0x0180

# Res_value 数据类型
TYPE_NULL = 0x00
TYPE_REFERENCE = 0x01
TYPE_ATTRIBUTE = 0x02
TYPE_STRING = 0x03
TYPE_FLOAT = 0x04
TYPE_INT_DEC = 0x10
TYPE_INT_HEX = 0x11
TYPE_INT_BOOLEAN = 0x12

UTF8_FLAG = 0x100
NO_INDEX = 0xFFFFFFFF

_CHUNK_HEADER = struct.Struct("<HHI")
_STRING_POOL_HEADER = struct.Struct("<IIIII")
_NODE_EXT = struct.Struct("<II")  # lineNumber, comment
_START_ELEMENT = struct.Struct("<IIHHHHHH")
_ATTRIBUTE = struct.Struct("<IIIHBBI")

ChunkHeader = collections.namedtuple("ChunkHeader", "type,header_size,size")
Attribute = collections.namedtuple(
    "Attribute", "ns,name,raw_value,value_size,res0,data_type,data"
)


def looks_like_axml(data: bytes) -> bool:
    """以合法的 RES_XML_TYPE 文件头开头"""
    if len(data) < _CHUNK_HEADER.size:
        return False
    ctype, hsize, size = _CHUNK_HEADER.unpack_from(data, 0)
    return ctype == RES_XML_TYPE and hsize == _CHUNK_HEADER.size and size >= hsize


class _StringPool:
    def __init__(self, strings: List[str]):
        self.strings = strings

    def get(self, index: int) -> Optional[str]:
        if index == NO_INDEX:
            return None
        if index >= len(self.strings):
            raise MalformedManifest(f"字符串索引越界: {index} >= {len(self.strings)}")
        return self.strings[index]


def _read_chunk_header(data: bytes, pos: int, end: int) -> ChunkHeader:
    if pos + _CHUNK_HEADER.size > end:
        raise MalformedManifest(f"chunk 头被截断: offset={pos}")
    header = ChunkHeader._make(_CHUNK_HEADER.unpack_from(data, pos))
    if header.header_size < _CHUNK_HEADER.size or header.size < header.header_size:
        raise MalformedManifest(f"chunk 尺寸非法: offset={pos} {header}")
    if pos + header.size > end:
        raise MalformedManifest(f"chunk 被截断: offset={pos} size={header.size}")
    return header


def _decode_length(data: bytes, pos: int, utf8: bool):
    """返回 (长度, 新位置)；高位置 1 时长度占两个单元"""
    if utf8:
        first = data[pos]
        if first & 0x80:
            return ((first & 0x7F) << 8) | data[pos + 1], pos + 2
        return first, pos + 1
    (first,) = struct.unpack_from("<H", data, pos)
    if first & 0x8000:
        (second,) = struct.unpack_from("<H", data, pos + 2)
        return ((first & 0x7FFF) << 16) | second, pos + 4
    return first, pos + 2


def _parse_string_pool(data: bytes, pos: int, header: ChunkHeader) -> _StringPool:
    end = pos + header.size
    if header.header_size < _CHUNK_HEADER.size + _STRING_POOL_HEADER.size:
        raise MalformedManifest("字符串池头过短")
    count, _styles, flags, strings_start, _styles_start = _STRING_POOL_HEADER.unpack_from(
        data, pos + _CHUNK_HEADER.size
    )
    utf8 = bool(flags & UTF8_FLAG)
    offsets_pos = pos + header.header_size
    if offsets_pos + count * 4 > end:
        raise MalformedManifest("字符串偏移表被截断")
    offsets = struct.unpack_from(f"<{count}I", data, offsets_pos)
    base = pos + strings_start
    strings: List[str] = []
    try:
        for off in offsets:
            p = base + off
            if p >= end:
                raise MalformedManifest(f"字符串偏移越界: {off}")
            if utf8:
                _, p = _decode_length(data, p, True)  # UTF-16 长度，忽略
                n, p = _decode_length(data, p, True)
                raw = data[p : p + n]
                if p + n > end:
                    raise MalformedManifest("字符串数据被截断")
                strings.append(raw.decode("utf-8", errors="replace"))
            else:
                n, p = _decode_length(data, p, False)
                if p + n * 2 > end:
                    raise MalformedManifest("字符串数据被截断")
                strings.append(data[p : p + n * 2].decode("utf-16-le", errors="replace"))
    except (IndexError, struct.error) as e:
        raise MalformedManifest(f"字符串池损坏: {e}") from e
    return _StringPool(strings)


def _typed_value(attr: Attribute, pool: _StringPool) -> AttrValue:
    if attr.data_type == TYPE_STRING:
        index = attr.raw_value if attr.raw_value != NO_INDEX else attr.data
        return pool.get(index) or ""
    if attr.data_type == TYPE_INT_BOOLEAN:
        return attr.data != 0
    if attr.data_type in (TYPE_INT_DEC, TYPE_INT_HEX):
        return attr.data
    if attr.data_type == TYPE_REFERENCE:
        return f"@0x{attr.data:08x}"
    if attr.data_type == TYPE_ATTRIBUTE:
        return f"?0x{attr.data:08x}"
    # 其它类型（float、dimension、颜色）清单分析用不到，保留原始文本
    if attr.raw_value != NO_INDEX:
        return pool.get(attr.raw_value) or ""
    return str(attr.data)


def _qualify(ns: Optional[str], name: str) -> str:
    return f"{{{ns}}}{name}" if ns else name


def decode_axml(axml_bytes: bytes) -> XmlElement:
    """
    解码二进制清单为 XmlElement 树

    Args:
        axml_bytes: AndroidManifest.xml 原始字节

    Returns:
        根元素

    Raises:
        MalformedManifest: chunk 截断、字符串索引越界、元素嵌套不平衡
    """
    data = bytes(axml_bytes)
    if not data:
        raise MalformedManifest("空输入")
    if not looks_like_axml(data):
        raise MalformedManifest("缺少 AXML 文件头")
    file_header = _read_chunk_header(data, 0, len(data))
    end = file_header.size

    pool: Optional[_StringPool] = None
    resource_map: List[int] = []
    stack: List[XmlElement] = []
    root: Optional[XmlElement] = None

    pos = file_header.header_size
    while pos < end:
        header = _read_chunk_header(data, pos, end)
        body = pos + header.header_size

        if header.type == RES_STRING_POOL_TYPE:
            pool = _parse_string_pool(data, pos, header)
        elif header.type == RES_XML_RESOURCE_MAP_TYPE:
            n = (header.size - header.header_size) // 4
            resource_map = list(struct.unpack_from(f"<{n}I", data, body))
        elif header.type in (RES_XML_START_NAMESPACE_TYPE, RES_XML_END_NAMESPACE_TYPE):
            pass
        elif header.type == RES_XML_START_ELEMENT_TYPE:
            if pool is None:
                raise MalformedManifest("元素出现在字符串池之前")
            elem = _parse_start_element(data, pos, header, pool, resource_map)
            if stack:
                stack[-1].children.append(elem)
            elif root is None:
                root = elem
            else:
                raise MalformedManifest("出现多个根元素")
            stack.append(elem)
        elif header.type == RES_XML_END_ELEMENT_TYPE:
            if pool is None or body + 8 > pos + header.size:
                raise MalformedManifest("结束元素 chunk 非法")
            ns_idx, name_idx = struct.unpack_from("<II", data, body)
            tag = _qualify(pool.get(ns_idx), pool.get(name_idx) or "")
            if not stack or stack[-1].tag != tag:
                raise MalformedManifest(f"元素嵌套不平衡: </{tag}>")
            stack.pop()
        elif header.type == RES_XML_CDATA_TYPE:
            pass
        else:
            logger.debug(f"跳过未知 chunk: type=0x{header.type:04x}")
        pos += header.size

    if stack:
        raise MalformedManifest(f"元素未闭合: <{stack[-1].tag}>")
    if root is None:
        raise MalformedManifest("清单中没有元素")
    return root


def _parse_start_element(
    data: bytes,
    pos: int,
    header: ChunkHeader,
    pool: _StringPool,
    resource_map: List[int],
) -> XmlElement:
    body = pos + header.header_size
    chunk_end = pos + header.size
    if body + _START_ELEMENT.size > chunk_end:
        raise MalformedManifest("开始元素 chunk 被截断")
    ns_idx, name_idx, attr_start, attr_size, attr_count, *_ = _START_ELEMENT.unpack_from(
        data, body
    )
    if attr_size < _ATTRIBUTE.size and attr_count:
        raise MalformedManifest(f"属性记录尺寸非法: {attr_size}")
    elem = XmlElement(tag=_qualify(pool.get(ns_idx), pool.get(name_idx) or ""))

    attrs: Dict[str, AttrValue] = {}
    for i in range(attr_count):
        apos = body + attr_start + i * attr_size
        if apos + _ATTRIBUTE.size > chunk_end:
            raise MalformedManifest("属性记录被截断")
        attr = Attribute._make(_ATTRIBUTE.unpack_from(data, apos))
        name = pool.get(attr.name) or ""
        res_id = resource_map[attr.name] if attr.name < len(resource_map) else None
        ns = pool.get(attr.ns)
        if ns == ANDROID_NS and res_id in ANDROID_ATTR_NAMES:
            name = ANDROID_ATTR_NAMES[res_id]
        key = _qualify(ns, name)
        attrs[key] = _typed_value(attr, pool)
        if res_id is not None and res_id != 0:
            elem.resource_ids[key] = res_id
    elem.attrs = attrs
    return elem
