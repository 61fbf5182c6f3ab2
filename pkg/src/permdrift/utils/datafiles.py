"""随包数据文件读取：UTF-8，"#" 注释，空行忽略"""

from __future__ import annotations

from pathlib import Path
from typing import Iterator, List, Tuple

from ..errors import MissingInput


def iter_data_lines(path: Path) -> Iterator[Tuple[int, str]]:
    """逐行产出 (行号, 去掉注释后的内容)"""
    if not Path(path).exists():
        raise MissingInput(path)
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].rstrip("\r\n")
            if line.strip():
                yield lineno, line


def iter_tsv(path: Path) -> Iterator[Tuple[int, List[str]]]:
    """逐行产出 TSV 字段；尾部空列保留为空字符串"""
    for lineno, line in iter_data_lines(path):
        yield lineno, [cell.strip() for cell in line.split("\t")]


def read_prefix_list(path: Path) -> List[str]:
    """每行一个包名前缀"""
    return [line.strip() for _, line in iter_data_lines(path)]
