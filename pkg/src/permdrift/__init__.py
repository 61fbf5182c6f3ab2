#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
permdrift - Android 权限组静默扩张与自定义权限关联分析
"""

__version__ = "1.0.0"
__logo__ = r"""
                              _      _  __ _
  _ __   ___ _ __ _ __ ___   __| |_ __(_)/ _| |_
 | '_ \ / _ \ '__| '_ ` _ \ / _` | '__| | |_| __|
 | |_) |  __/ |  | | | | | | (_| | |  | |  _| |_
 | .__/ \___|_|  |_| |_| |_|\__,_|_|  |_|_|  \__|
 |_|
"""

from permdrift.core.base_stage import BaseStage
from permdrift.stage_loader import StageLoader, get_stage_loader
from permdrift.workspace import RunConfig, RunLayout

__all__ = [
    "BaseStage",
    "StageLoader",
    "get_stage_loader",
    "RunConfig",
    "RunLayout",
    "__version__",
    "__logo__",
]
