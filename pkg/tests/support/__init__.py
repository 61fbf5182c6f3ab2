#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
测试用样本构造工具：AXML 编码、DEX 汇编、APK 打包与签名、合成语料
"""
