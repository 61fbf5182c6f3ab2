#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
工具模块
"""

from permdrift.utils.log import enable_file_logging, get_logger, set_console_level, setup_logging

__all__ = ["setup_logging", "get_logger", "enable_file_logging", "set_console_level"]
