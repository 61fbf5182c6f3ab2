#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
报告渲染：对齐文本与 CSV
"""

from permdrift.report.tables import render_table, to_csv, write_text

__all__ = ["render_table", "to_csv", "write_text"]
