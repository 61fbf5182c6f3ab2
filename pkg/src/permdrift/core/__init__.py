#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
核心抽象
"""

from permdrift.core.base_stage import BaseStage

__all__ = ["BaseStage"]
