"""JSONL 读写

所有中间产物都按行写 JSON；键顺序由记录的 to_dict() 决定，
不做 sort_keys，保证重跑输出逐字节一致。
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, Iterator, TypeVar

from ..errors import MissingInput

T = TypeVar("T")


def dumps(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(", ", ": "))


def write_jsonl(path: Path, rows: Iterable[Dict[str, Any]]) -> int:
    """写 JSONL，返回行数"""
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in rows:
            f.write(dumps(row))
            f.write("\n")
            count += 1
    return count


def iter_jsonl(path: Path) -> Iterator[Dict[str, Any]]:
    if not path.exists():
        raise MissingInput(path)
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield json.loads(line)


def read_records(path: Path, factory: Callable[[Dict[str, Any]], T]) -> Iterator[T]:
    """按行反序列化为记录对象"""
    for row in iter_jsonl(path):
        yield factory(row)


def write_json(path: Path, obj: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(obj, f, ensure_ascii=False, indent=2)
        f.write("\n")


def read_json(path: Path) -> Any:
    if not path.exists():
        raise MissingInput(path)
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
