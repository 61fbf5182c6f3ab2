#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
内置流水线阶段，由 StageLoader 自动发现
"""
