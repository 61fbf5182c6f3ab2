#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
恶意软件关联统计模型
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from ..conf import DEFAULT_QUARTILES, DEFAULT_SWEEP, DEFAULT_THRESHOLD, SWEEP_MAX, SWEEP_MIN


@dataclass(frozen=True)
class VtLabelConfig:
    """VirusTotal 阈值配置：检出引擎数 >= threshold 即标记"""

    threshold: int = DEFAULT_THRESHOLD
    sweep: Tuple[int, ...] = DEFAULT_SWEEP

    def __post_init__(self):
        if self.threshold < 1:
            raise ValueError(f"阈值必须 >= 1: {self.threshold}")
        bad = [t for t in self.sweep if not SWEEP_MIN <= t <= SWEEP_MAX]
        if bad:
            raise ValueError(f"扫描阈值超出 [{SWEEP_MIN}, {SWEEP_MAX}]: {bad}")


@dataclass(frozen=True)
class ContingencyTable:
    """
    2×2 列联表

              flagged  benign
    expanding    a       b
    non-exp      c       d
    """

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if min(self.a, self.b, self.c, self.d) < 0:
            raise ValueError(f"单元格不能为负: {self.cells}")

    @property
    def cells(self) -> Tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    @property
    def n(self) -> int:
        return self.a + self.b + self.c + self.d

    @property
    def expanding(self) -> int:
        return self.a + self.b

    @property
    def flagged(self) -> int:
        return self.a + self.c

    def as_matrix(self) -> List[List[int]]:
        return [[self.a, self.b], [self.c, self.d]]

    def __add__(self, other: "ContingencyTable") -> "ContingencyTable":
        return ContingencyTable(
            self.a + other.a, self.b + other.b, self.c + other.c, self.d + other.d
        )

    def to_dict(self) -> Dict[str, int]:
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ContingencyTable":
        return cls(int(data["a"]), int(data["b"]), int(data["c"]), int(data["d"]))


@dataclass(frozen=True)
class StratificationConfig:
    """按应用最大声明权限数分层，区间闭合，末层上界 None 表示无穷"""

    bounds: Tuple[Tuple[int, Optional[int]], ...] = DEFAULT_QUARTILES

    def __post_init__(self):
        expected = 1
        for i, (low, high) in enumerate(self.bounds):
            if low != expected:
                raise ValueError(f"分层必须从 {expected} 连续开始: {self.bounds}")
            if high is None:
                if i != len(self.bounds) - 1:
                    raise ValueError("只有最后一层可以没有上界")
                return
            if high < low:
                raise ValueError(f"分层区间非法: ({low}, {high})")
            expected = high + 1
        raise ValueError("最后一层必须没有上界，才能覆盖全部正整数")

    def labels(self) -> List[str]:
        out = []
        for i, (low, high) in enumerate(self.bounds, start=1):
            span = f"{low}--{high}" if high is not None else f"{low}+"
            out.append(f"Q{i} ({span})")
        return out

    def index_of(self, count: int) -> Optional[int]:
        """count 落在哪一层；0 个权限不属于任何层"""
        for i, (low, high) in enumerate(self.bounds):
            if count >= low and (high is None or count <= high):
                return i
        return None


@dataclass(frozen=True)
class StatsResult:
    """单一阈值下的完整统计；退化时 degenerate 记录原因"""

    threshold: int
    table: ContingencyTable
    odds_ratio: Optional[float] = None
    chi_squared: Optional[float] = None
    p_value: Optional[float] = None
    mh_odds_ratio: Optional[float] = None
    mh_ci_low: Optional[float] = None
    mh_ci_high: Optional[float] = None
    mh_p_value: Optional[float] = None
    degenerate: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "threshold": self.threshold,
            **self.table.to_dict(),
            "or": self.odds_ratio,
            "chi2": self.chi_squared,
            "p": self.p_value,
            "mh_or": self.mh_odds_ratio,
            "mh_ci": (
                [self.mh_ci_low, self.mh_ci_high]
                if self.mh_ci_low is not None
                else None
            ),
            "mh_p": self.mh_p_value,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class MantelHaenszelResult:
    odds_ratio: float
    ci_low: float
    ci_high: float
    p_value: Optional[float] = None
    strata: Tuple[ContingencyTable, ...] = field(default=(), compare=False)
