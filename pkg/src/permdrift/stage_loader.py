#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
阶段加载器

扫描内置阶段模块和 stages/ 目录，动态发现并注册所有 BaseStage 子类。
"""

import importlib
import inspect
import logging
from typing import Dict, List, Optional, Type

from .conf import STAGES_DIR
from .core.base_stage import BaseStage

logger = logging.getLogger("permdrift.stage_loader")

# 内置阶段模块 (在 stages/ 下)
_BUILTIN_MODULES = [
    "permdrift.stages.scan",
    "permdrift.stages.expand",
    "permdrift.stages.stats",
    "permdrift.stages.custom",
    "permdrift.stages.pairs",
    "permdrift.stages.simulate",
    "permdrift.stages.monitor",
    "permdrift.stages.report",
]


class StageLoader:
    """
    阶段加载器

    扫描来源:
    1. 内置阶段 (_BUILTIN_MODULES)
    2. stages/ 目录下其余不以 _ 开头的模块
    同名阶段后注册的覆盖先注册的。
    """

    def __init__(self):
        self._stages: Dict[str, BaseStage] = {}
        self._loaded = False

    def load(self) -> None:
        """扫描并加载所有阶段"""
        if self._loaded:
            return

        for module_path in _BUILTIN_MODULES:
            self._load_module(module_path)

        if STAGES_DIR.exists():
            for path in sorted(STAGES_DIR.glob("*.py")):
                if path.name.startswith("_"):
                    continue
                module_name = f"permdrift.stages.{path.stem}"
                if module_name not in _BUILTIN_MODULES:
                    self._load_module(module_name)

        self._loaded = True
        logger.debug(f"已加载 {len(self._stages)} 个阶段: {self.list_stage_names()}")

    def _load_module(self, module_path: str) -> None:
        try:
            module = importlib.import_module(module_path)
            self._discover_stages(module)
        except Exception as e:
            logger.warning(f"加载模块失败 {module_path}: {e}")

    def _discover_stages(self, module) -> None:
        """从模块中发现 BaseStage 子类；只注册在该模块中定义的类"""
        for name, obj in inspect.getmembers(module, inspect.isclass):
            if (
                issubclass(obj, BaseStage)
                and obj is not BaseStage
                and not inspect.isabstract(obj)
                and obj.__module__ == module.__name__
            ):
                try:
                    stage = obj()
                    self._stages[stage.name] = stage
                    logger.debug(f"注册阶段: {stage.name} -> {obj.__name__}")
                except Exception as e:
                    logger.warning(f"注册阶段 {name} 失败: {e}")

    def get_stage(self, name: str) -> Optional[BaseStage]:
        """
        获取指定阶段

        Args:
            name: 阶段名 (如 "scan")

        Returns:
            阶段实例，未找到返回 None
        """
        if not self._loaded:
            self.load()
        return self._stages.get(name)

    def get_stage_class(self, name: str) -> Optional[Type[BaseStage]]:
        stage = self.get_stage(name)
        return type(stage) if stage else None

    def list_stages(self) -> List[BaseStage]:
        """按 order 排序的全部阶段"""
        if not self._loaded:
            self.load()
        return sorted(self._stages.values(), key=lambda s: (s.order, s.name))

    def list_stage_names(self) -> List[str]:
        return [s.name for s in sorted(self._stages.values(), key=lambda s: (s.order, s.name))]

    def pipeline(self) -> List[BaseStage]:
        """`permdrift run` 依次执行的阶段"""
        return [s for s in self.list_stages() if s.in_pipeline]

    def reload(self) -> None:
        self._stages.clear()
        self._loaded = False
        self.load()


# 全局单例
_loader: Optional[StageLoader] = None


def get_stage_loader() -> StageLoader:
    """获取全局阶段加载器单例"""
    global _loader
    if _loader is None:
        _loader = StageLoader()
        _loader.load()
    return _loader
