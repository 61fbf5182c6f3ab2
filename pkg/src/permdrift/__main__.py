#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
permdrift - Android 权限组静默扩张与自定义权限关联分析
"""

import sys
from permdrift.cli.cli import main

if __name__ == "__main__":
    sys.exit(main())
