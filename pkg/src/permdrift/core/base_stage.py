#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
流水线阶段基类 BaseStage

每个 CLI 子命令对应一个阶段。阶段只读写 RunLayout 下的文件，
彼此之间不共享内存状态，所以任何阶段都可以单独重跑。
"""

import argparse
from abc import ABC, abstractmethod
from typing import List

from ..utils.log import StepLogger, get_logger
from ..workspace import RunConfig, RunLayout


class BaseStage(ABC):
    """
    阶段基类

    子类需要提供:
    - name: 子命令名 (如 "scan")
    - description: 中文说明，用于 --help 和 list
    - run(config, layout): 执行阶段，返回退出码
    可选:
    - order: list 与 run 命令中的排序
    - in_pipeline: 是否参与 `permdrift run` 的整条流水线
    - add_arguments(parser): 阶段自己的命令行参数
    """

    order: int = 100
    in_pipeline: bool = False

    def __init__(self):
        self.logger: StepLogger = get_logger(self.name)

    @property
    @abstractmethod
    def name(self) -> str:
        """
        子命令名

        Returns:
            如 "scan", "expand"
        """
        pass

    @property
    @abstractmethod
    def description(self) -> str:
        """
        阶段说明

        Returns:
            如 "解析 APK 目录，写出 ApkFacts"
        """
        pass

    @property
    def examples(self) -> List[str]:
        """--help 末尾展示的示例命令"""
        return []

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        """注册阶段专属参数，默认没有"""
        pass

    @abstractmethod
    def run(self, config: RunConfig, layout: RunLayout) -> int:
        """
        执行阶段

        Args:
            config: 已校验的运行配置
            layout: 输出目录布局

        Returns:
            退出码: 0 成功，2 输入为空或非法

        Raises:
            MissingInput: 上游产物缺失
            InvalidConfig: 阶段参数非法
        """
        pass
