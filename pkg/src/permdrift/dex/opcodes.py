#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Dalvik 指令解码

每个操作码都有确定的格式与长度（含 switch / array 数据伪指令），
未建模的指令也能被安全跳过。
"""

import collections
from typing import Dict, List, Optional, Tuple

from ..errors import MalformedDex

# 格式 -> 长度（16 位单元）
FORMAT_UNITS = {
    "10x": 1, "12x": 1, "11n": 1, "11x": 1, "10t": 1,
    "20t": 2, "22x": 2, "21t": 2, "21s": 2, "21h": 2, "21c": 2,
    "23x": 2, "22b": 2, "22t": 2, "22s": 2, "22c": 2,
    "32x": 3, "30t": 3, "31t": 3, "31i": 3, "31c": 3, "35c": 3, "3rc": 3,
    "45cc": 4, "4rcc": 4,
    "51l": 5,
}


def _build_formats() -> List[str]:
    fmt = ["10x"] * 256
    spans = [
        (0x00, 0x00, "10x"), (0x01, 0x01, "12x"), (0x02, 0x02, "22x"), (0x03, 0x03, "32x"),
        (0x04, 0x04, "12x"), (0x05, 0x05, "22x"), (0x06, 0x06, "32x"),
        (0x07, 0x07, "12x"), (0x08, 0x08, "22x"), (0x09, 0x09, "32x"),
        (0x0A, 0x0D, "11x"), (0x0E, 0x0E, "10x"), (0x0F, 0x11, "11x"),
        (0x12, 0x12, "11n"), (0x13, 0x13, "21s"), (0x14, 0x14, "31i"), (0x15, 0x15, "21h"),
        (0x16, 0x16, "21s"), (0x17, 0x17, "31i"), (0x18, 0x18, "51l"), (0x19, 0x19, "21h"),
        (0x1A, 0x1A, "21c"), (0x1B, 0x1B, "31c"), (0x1C, 0x1C, "21c"),
        (0x1D, 0x1E, "11x"), (0x1F, 0x1F, "21c"), (0x20, 0x20, "22c"), (0x21, 0x21, "12x"),
        (0x22, 0x22, "21c"), (0x23, 0x23, "22c"), (0x24, 0x24, "35c"), (0x25, 0x25, "3rc"),
        (0x26, 0x26, "31t"), (0x27, 0x27, "11x"), (0x28, 0x28, "10t"), (0x29, 0x29, "20t"),
        (0x2A, 0x2A, "30t"), (0x2B, 0x2C, "31t"), (0x2D, 0x31, "23x"),
        (0x32, 0x37, "22t"), (0x38, 0x3D, "21t"), (0x3E, 0x43, "10x"),
        (0x44, 0x51, "23x"), (0x52, 0x5F, "22c"), (0x60, 0x6D, "21c"),
        (0x6E, 0x72, "35c"), (0x73, 0x73, "10x"), (0x74, 0x78, "3rc"), (0x79, 0x7A, "10x"),
        (0x7B, 0x8F, "12x"), (0x90, 0xAF, "23x"), (0xB0, 0xCF, "12x"),
        (0xD0, 0xD7, "22s"), (0xD8, 0xE2, "22b"), (0xE3, 0xF9, "10x"),
        (0xFA, 0xFA, "45cc"), (0xFB, 0xFB, "4rcc"), (0xFC, 0xFC, "35c"), (0xFD, 0xFD, "3rc"),
        (0xFE, 0xFF, "21c"),
    ]
    for lo, hi, f in spans:
        for op in range(lo, hi + 1):
            fmt[op] = f
    return fmt


FORMATS = _build_formats()

# 常用操作码
OP_MOVE_RESULT = 0x0A
OP_MOVE_RESULT_WIDE = 0x0B
OP_MOVE_RESULT_OBJECT = 0x0C
OP_RETURN_VOID = 0x0E
OP_RETURN_OBJECT = 0x11
OP_CONST_4 = 0x12
OP_CONST_STRING = 0x1A
OP_CONST_STRING_JUMBO = 0x1B
OP_CHECK_CAST = 0x1F
OP_NEW_INSTANCE = 0x22
OP_THROW = 0x27
OP_PACKED_SWITCH = 0x2B
OP_SPARSE_SWITCH = 0x2C
OP_SGET_OBJECT = 0x62

MOVE_OPS = {0x01, 0x02, 0x03, 0x07, 0x08, 0x09}
WIDE_MOVE_OPS = {0x04, 0x05, 0x06}
RETURN_OPS = {0x0E, 0x0F, 0x10, 0x11}
GOTO_OPS = {0x28, 0x29, 0x2A}
IF_OPS = set(range(0x32, 0x3E))
INVOKE_OPS = set(range(0x6E, 0x73)) | set(range(0x74, 0x79)) | {0xFA, 0xFB, 0xFC, 0xFD}
METHOD_INVOKE_OPS = set(range(0x6E, 0x73)) | set(range(0x74, 0x79))
STATIC_INVOKE_OPS = {0x71, 0x77}
CONST_NUMERIC_OPS = {0x12, 0x13, 0x14, 0x15}

# 写 vA 的指令（不含已单独建模的 move / const-string / new-instance / move-result）
_WRITES_A = (
    {0x0D, 0x1C, 0x20, 0x21, 0x23, 0xFE, 0xFF}
    | set(range(0x12, 0x1A))
    | set(range(0x2D, 0x32))
    | set(range(0x44, 0x4B))
    | set(range(0x52, 0x59))
    | set(range(0x60, 0x67))
    | set(range(0x7B, 0xE3))
)

# 写 vA、vA+1 的宽指令
WIDE_DEST_OPS = (
    {0x04, 0x05, 0x06, 0x0B, 0x16, 0x17, 0x18, 0x19, 0x45, 0x53, 0x61}
    | {0x7D, 0x7E, 0x80, 0x81, 0x83, 0x86, 0x88, 0x89, 0x8B}
    | set(range(0x9B, 0xA6))
    | set(range(0xAB, 0xB0))
    | set(range(0xBB, 0xC6))
    | set(range(0xCB, 0xD0))
)

PACKED_SWITCH_PAYLOAD = 0x0100
SPARSE_SWITCH_PAYLOAD = 0x0200
FILL_ARRAY_DATA_PAYLOAD = 0x0300

Insn = collections.namedtuple("Insn", "addr,op,fmt,length,a,b,c,idx,args,lit,target")


def writes_register(op: int) -> bool:
    return op in _WRITES_A


def _s8(v: int) -> int:
    return v - 0x100 if v & 0x80 else v


def _s16(v: int) -> int:
    return v - 0x10000 if v & 0x8000 else v


def _s32(v: int) -> int:
    return v - 0x100000000 if v & 0x80000000 else v


def _payload_units(insns, addr: int) -> Optional[int]:
    ident = insns[addr]
    if ident == PACKED_SWITCH_PAYLOAD:
        size = insns[addr + 1]
        return 4 + size * 2
    if ident == SPARSE_SWITCH_PAYLOAD:
        size = insns[addr + 1]
        return 2 + size * 4
    if ident == FILL_ARRAY_DATA_PAYLOAD:
        width = insns[addr + 1]
        size = insns[addr + 2] | (insns[addr + 3] << 16)
        return 4 + (size * width + 1) // 2
    return None


def decode_one(insns, addr: int) -> Insn:
    """解码 addr 处的一条指令"""
    u0 = insns[addr]
    op = u0 & 0xFF
    fmt = FORMATS[op]
    length = FORMAT_UNITS[fmt]
    if addr + length > len(insns):
        raise MalformedDex(f"指令被截断: addr={addr} op={op:#04x}")
    u = insns[addr : addr + length]
    a = b = c = idx = lit = target = None
    args: Tuple[int, ...] = ()
    hi = u0 >> 8

    if fmt == "12x":
        a, b = hi & 0xF, hi >> 4
    elif fmt == "11n":
        nibble = hi >> 4
        a, lit = hi & 0xF, nibble - 16 if nibble & 0x8 else nibble
    elif fmt == "11x":
        a = hi
    elif fmt == "10t":
        target = addr + _s8(hi)
    elif fmt == "20t":
        target = addr + _s16(u[1])
    elif fmt == "22x":
        a, b = hi, u[1]
    elif fmt == "21t":
        a, target = hi, addr + _s16(u[1])
    elif fmt == "21s":
        a, lit = hi, _s16(u[1])
    elif fmt == "21h":
        a, lit = hi, u[1]
    elif fmt == "21c":
        a, idx = hi, u[1]
    elif fmt == "23x":
        a, b, c = hi, u[1] & 0xFF, u[1] >> 8
    elif fmt == "22b":
        a, b, lit = hi, u[1] & 0xFF, _s8(u[1] >> 8)
    elif fmt == "22t":
        a, b, target = hi & 0xF, hi >> 4, addr + _s16(u[1])
    elif fmt == "22s":
        a, b, lit = hi & 0xF, hi >> 4, _s16(u[1])
    elif fmt == "22c":
        a, b, idx = hi & 0xF, hi >> 4, u[1]
    elif fmt == "32x":
        a, b = u[1], u[2]
    elif fmt == "30t":
        target = addr + _s32(u[1] | (u[2] << 16))
    elif fmt == "31t":
        a, target = hi, addr + _s32(u[1] | (u[2] << 16))
    elif fmt == "31i":
        a, lit = hi, _s32(u[1] | (u[2] << 16))
    elif fmt == "31c":
        a, idx = hi, u[1] | (u[2] << 16)
    elif fmt in ("35c", "45cc"):
        count = hi >> 4
        regs = (u[2] & 0xF, (u[2] >> 4) & 0xF, (u[2] >> 8) & 0xF, u[2] >> 12, hi & 0xF)
        idx, args = u[1], regs[:count]
    elif fmt in ("3rc", "4rcc"):
        idx, args = u[1], tuple(range(u[2], u[2] + hi))
    elif fmt == "51l":
        a = hi
        lit = u[1] | (u[2] << 16) | (u[3] << 32) | (u[4] << 48)
    return Insn(addr, op, fmt, length, a, b, c, idx, args, lit, target)


def decode_method(insns) -> Dict[int, Insn]:
    """
    线性解码整个方法体

    Returns:
        {地址: 指令}，数据伪指令不出现在结果中
    """
    out: Dict[int, Insn] = {}
    addr = 0
    n = len(insns)
    while addr < n:
        if insns[addr] & 0xFF == 0x00 and insns[addr] >> 8 in (0x01, 0x02, 0x03):
            try:
                units = _payload_units(insns, addr)
            except IndexError as e:
                raise MalformedDex(f"数据伪指令被截断: addr={addr}") from e
            if units is None or addr + units > n:
                raise MalformedDex(f"数据伪指令越界: addr={addr}")
            addr += units
            continue
        insn = decode_one(insns, addr)
        out[addr] = insn
        addr += insn.length
    return out


def switch_targets(insns, insn: Insn) -> List[int]:
    """packed/sparse-switch 的分支目标（相对 switch 指令地址）"""
    base = insn.addr
    p = insn.target
    if p is None or not 0 <= p < len(insns) - 1:
        raise MalformedDex(f"switch 数据越界: addr={base}")
    ident = insns[p]
    size = insns[p + 1]
    if ident == PACKED_SWITCH_PAYLOAD:
        offs_at = p + 4
    elif ident == SPARSE_SWITCH_PAYLOAD:
        offs_at = p + 2 + size * 2
    else:
        raise MalformedDex(f"switch 数据标识错误: {ident:#06x}")
    if offs_at + 2 * size > len(insns):
        raise MalformedDex(f"switch 数据被截断: addr={base}")
    targets = []
    for i in range(size):
        lo, hi = insns[offs_at + 2 * i], insns[offs_at + 2 * i + 1]
        targets.append(base + _s32(lo | (hi << 16)))
    return targets


def successors(insns, insn: Insn) -> List[int]:
    """正常控制流后继（不含异常边）"""
    nxt = insn.addr + insn.length
    if insn.op in RETURN_OPS or insn.op == OP_THROW:
        return []
    if insn.op in GOTO_OPS:
        return [insn.target]
    if insn.op in IF_OPS:
        return [nxt, insn.target]
    if insn.op in (OP_PACKED_SWITCH, OP_SPARSE_SWITCH):
        return [nxt] + switch_targets(insns, insn)
    return [nxt]
