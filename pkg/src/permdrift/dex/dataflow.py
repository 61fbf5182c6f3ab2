#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
方法内字符串常量传播

前向 worklist 数据流：
- 寄存器取值：Const(字符串) / UriVal(Uri 对象) / BuilderRef(分配点) / NULL；
  字典里没有的寄存器即"未知"
- StringBuilder / StringBuffer 的内容保存在按分配点编号的堆里，别名共享同一内容
- 汇合点上取值不一致即变为未知

只在方法内部传播；跨方法的值一律未知。
"""

import heapq
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple, Union

from . import opcodes as ops
from .opcodes import Insn
from .reader import CodeItem, DexFile, MethodRef, field_key

logger = logging.getLogger("permdrift.dex.dataflow")

STRING = "Ljava/lang/String;"
CHAR_SEQUENCE = "Ljava/lang/CharSequence;"
OBJECT = "Ljava/lang/Object;"
URI = "Landroid/net/Uri;"
BUILDER_TYPES = frozenset({"Ljava/lang/StringBuilder;", "Ljava/lang/StringBuffer;"})

# 超过这个迭代次数仍未收敛的方法放弃分析（只影响精度，不影响保守性）
MAX_ITERATIONS = 20000


@dataclass(frozen=True)
class Const:
    text: str


@dataclass(frozen=True)
class UriVal:
    text: str


@dataclass(frozen=True)
class BuilderRef:
    site: int


class _Null:
    def __repr__(self):
        return "NULL"


NULL = _Null()

Value = Union[Const, UriVal, BuilderRef, _Null]


@dataclass
class State:
    """寄存器 + builder 堆 + 待取的调用结果；缺失的键表示未知"""

    regs: Dict[int, Value] = field(default_factory=dict)
    heap: Dict[int, str] = field(default_factory=dict)
    result: Optional[Value] = None

    def copy(self) -> "State":
        return State(dict(self.regs), dict(self.heap), self.result)

    def join(self, other: "State") -> "State":
        return State(
            {r: v for r, v in self.regs.items() if other.regs.get(r) == v},
            {s: t for s, t in self.heap.items() if other.heap.get(s) == t},
            self.result if self.result == other.result else None,
        )

    def kill(self, reg: int, wide: bool = False) -> None:
        self.regs.pop(reg, None)
        if wide:
            self.regs.pop(reg + 1, None)

    def as_text(self, value: Optional[Value]) -> Optional[str]:
        """字符串语义的取值：常量、Uri.toString()、builder 当前内容"""
        if isinstance(value, Const):
            return value.text
        if isinstance(value, UriVal):
            return value.text
        if isinstance(value, BuilderRef):
            return self.heap.get(value.site)
        return None


@dataclass
class MethodBody:
    """待分析的方法体"""

    dex: DexFile
    class_desc: str
    method: MethodRef
    code: CodeItem
    static_strings: Dict[str, str] = field(default_factory=dict)
    is_static: bool = False

    def __post_init__(self):
        self.insns: Dict[int, Insn] = ops.decode_method(self.code.insns)

    @property
    def name(self) -> str:
        return self.method.name


def invoke_arguments(insn: Insn, method: MethodRef, is_static: bool) -> Tuple[Optional[int], List[Tuple[str, int]]]:
    """
    调用指令的 (接收者寄存器, [(参数类型, 寄存器)])

    long / double 参数占两个寄存器，取第一个。
    """
    regs = list(insn.args)
    receiver = None
    pos = 0
    if not is_static:
        if not regs:
            return None, []
        receiver = regs[0]
        pos = 1
    params = []
    for ptype in method.proto.params:
        if pos >= len(regs):
            break
        params.append((ptype, regs[pos]))
        pos += 2 if ptype in ("J", "D") else 1
    return receiver, params


class ConstantPropagation:
    """
    对单个方法体求每条指令入口处的状态

    Args:
        body: 方法体
    """

    def __init__(self, body: MethodBody):
        self.body = body
        self.dex = body.dex
        self.insns = body.insns
        self.in_states: Dict[int, State] = {}
        self.converged = False
        self._handlers = self._handler_map()

    # ------------------------------------------------------------ CFG

    def _handler_map(self) -> Dict[int, List[int]]:
        out: Dict[int, List[int]] = {}
        code = self.body.code
        for t in code.tries:
            handler = code.handlers.get(t.handler_off)
            if handler is None:
                continue
            addrs = [addr for _type, addr in handler.pairs]
            if handler.catch_all_addr is not None:
                addrs.append(handler.catch_all_addr)
            for addr in self.insns:
                if t.start_addr <= addr < t.start_addr + t.insn_count:
                    out.setdefault(addr, []).extend(addrs)
        return out

    def successors(self, insn: Insn) -> List[int]:
        return ops.successors(self.body.code.insns, insn)

    def exception_successors(self, addr: int) -> List[int]:
        return self._handlers.get(addr, [])

    # ------------------------------------------------------------ 求解

    def run(self) -> Dict[int, State]:
        if not self.insns:
            return self.in_states
        self.in_states = {0: State()}
        worklist = [0]
        queued = {0}
        iterations = 0
        while worklist:
            iterations += 1
            if iterations > MAX_ITERATIONS:
                logger.debug(f"常量传播未收敛: {self.body.class_desc}->{self.body.name}")
                self.in_states = {}
                return self.in_states
            addr = heapq.heappop(worklist)
            queued.discard(addr)
            insn = self.insns.get(addr)
            if insn is None:
                continue
            state_in = self.in_states[addr]
            state_out = self.transfer(state_in, insn)

            edges = [(s, state_out) for s in self.successors(insn)]
            for h in self.exception_successors(addr):
                # 抛异常时指令可能尚未完成，两种状态都要流到处理器
                edges.append((h, state_in.join(state_out)))
            for succ, state in edges:
                if succ not in self.insns:
                    continue
                old = self.in_states.get(succ)
                new = state.copy() if old is None else old.join(state)
                if old is None or new != old:
                    self.in_states[succ] = new
                    if succ not in queued:
                        heapq.heappush(worklist, succ)
                        queued.add(succ)
        self.converged = True
        return self.in_states

    def state_at(self, addr: int) -> Optional[State]:
        """addr 处指令执行前的状态；不可达返回 None"""
        return self.in_states.get(addr)

    # ------------------------------------------------------------ 转移函数

    def transfer(self, state: State, insn: Insn) -> State:
        s = state.copy()
        op = insn.op
        if op not in ops.INVOKE_OPS and op not in (
            ops.OP_MOVE_RESULT,
            ops.OP_MOVE_RESULT_WIDE,
            ops.OP_MOVE_RESULT_OBJECT,
        ):
            s.result = None

        if op in (ops.OP_CONST_STRING, ops.OP_CONST_STRING_JUMBO):
            s.regs[insn.a] = Const(self.dex.string(insn.idx))
        elif op in ops.MOVE_OPS:
            value = s.regs.get(insn.b)
            s.kill(insn.a)
            if value is not None:
                s.regs[insn.a] = value
        elif op in ops.WIDE_MOVE_OPS:
            s.kill(insn.a, wide=True)
        elif op == ops.OP_MOVE_RESULT_OBJECT:
            value = s.result
            s.kill(insn.a)
            if value is not None:
                s.regs[insn.a] = value
            s.result = None
        elif op in (ops.OP_MOVE_RESULT, ops.OP_MOVE_RESULT_WIDE):
            s.kill(insn.a, wide=op == ops.OP_MOVE_RESULT_WIDE)
            s.result = None
        elif op in ops.CONST_NUMERIC_OPS:
            s.kill(insn.a)
            if insn.lit == 0:
                s.regs[insn.a] = NULL
        elif op == ops.OP_NEW_INSTANCE:
            s.kill(insn.a)
            if self.dex.type(insn.idx) in BUILDER_TYPES:
                s.regs[insn.a] = BuilderRef(insn.addr)
                s.heap.pop(insn.addr, None)
        elif op == ops.OP_SGET_OBJECT:
            ref = self.dex.field(insn.idx)
            s.kill(insn.a)
            value = self.body.static_strings.get(field_key(ref))
            if value is not None:
                s.regs[insn.a] = Const(value)
        elif op == ops.OP_CHECK_CAST:
            pass
        elif op in (0x4D, 0x5B, 0x69):  # aput-object / iput-object / sput-object
            self._escape(s, [s.regs.get(insn.a)])
        elif op in ops.METHOD_INVOKE_OPS:
            self._invoke(s, insn)
        elif op in ops.INVOKE_OPS or op in (0x24, 0x25):
            # invoke-polymorphic / invoke-custom / filled-new-array
            self._escape(s, [s.regs.get(r) for r in insn.args])
            s.result = None
        elif ops.writes_register(op):
            s.kill(insn.a, wide=op in ops.WIDE_DEST_OPS)
        return s

    @staticmethod
    def _escape(s: State, values: Iterable[Optional[Value]]) -> None:
        for v in values:
            if isinstance(v, BuilderRef):
                s.heap.pop(v.site, None)

    def _invoke(self, s: State, insn: Insn) -> None:
        method = self.dex.method(insn.idx)
        is_static = insn.op in ops.STATIC_INVOKE_OPS
        receiver_reg, params = invoke_arguments(insn, method, is_static)
        receiver = s.regs.get(receiver_reg) if receiver_reg is not None else None
        args = [(ptype, s.regs.get(reg)) for ptype, reg in params]
        s.result = None

        cls, name = method.class_desc, method.name
        if cls in BUILDER_TYPES:
            self._builder_call(s, name, receiver, args)
        elif cls == STRING and name == "concat" and len(args) == 1:
            left, right = s.as_text(receiver), s.as_text(args[0][1])
            if isinstance(receiver, Const) and left is not None and right is not None:
                s.result = Const(left + right)
        elif cls == STRING and name in ("toString", "intern") and not args:
            if isinstance(receiver, Const):
                s.result = receiver
        elif cls == STRING and name == "valueOf" and is_static and len(args) == 1:
            ptype, value = args[0]
            if ptype in (OBJECT, CHAR_SEQUENCE, STRING):
                text = s.as_text(value)
                if text is not None:
                    s.result = Const(text)
        elif cls == URI and name == "parse" and is_static and len(args) == 1:
            text = s.as_text(args[0][1])
            if text is not None and not isinstance(args[0][1], UriVal):
                s.result = UriVal(text)
        elif cls == URI and name == "withAppendedPath" and is_static and len(args) == 2:
            base, seg = args[0][1], s.as_text(args[1][1])
            if isinstance(base, UriVal) and seg is not None:
                s.result = UriVal(base.text.rstrip("/") + "/" + seg)
        elif cls == URI and name == "toString" and not args:
            if isinstance(receiver, UriVal):
                s.result = Const(receiver.text)
        else:
            self._escape(s, [receiver] + [v for _, v in args])

    def _builder_call(self, s: State, name: str, receiver, args) -> None:
        if not isinstance(receiver, BuilderRef):
            self._escape(s, [v for _, v in args])
            return
        site = receiver.site
        if name == "<init>":
            if not args or args[0][0] == "I":
                s.heap[site] = ""
            elif args[0][0] in (STRING, CHAR_SEQUENCE):
                text = s.as_text(args[0][1])
                if text is not None:
                    s.heap[site] = text
                else:
                    s.heap.pop(site, None)
            else:
                s.heap.pop(site, None)
        elif name == "append" and len(args) == 1:
            ptype, value = args[0]
            current = s.heap.get(site)
            text = s.as_text(value) if ptype in (STRING, CHAR_SEQUENCE, OBJECT) else None
            if current is not None and text is not None:
                s.heap[site] = current + text
            else:
                s.heap.pop(site, None)
            s.result = receiver
        elif name == "toString" and not args:
            current = s.heap.get(site)
            if current is not None:
                s.result = Const(current)
        else:
            # insert / reverse / setLength / deleteCharAt ... 内容不再可知
            s.heap.pop(site, None)
            self._escape(s, [v for _, v in args])
