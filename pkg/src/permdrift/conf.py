"""
项目配置文件
"""

import os
from pathlib import Path

# 包内基础目录（仅用于定位包内资源，例如 data/）
BASE_DIR = Path(__file__).parent

# 随包发布的数据文件目录
DATA_DIR = BASE_DIR / "data"

# 运行时数据目录：logs、默认输出写到调用者的工作目录下，避免污染包目录
RUNTIME_DIR = Path.cwd()

# 日志配置
LOG_LEVEL = "INFO"  # 设置日志级别为INFO，只打印INFO及以上级别的日志

# 控制台日志级别
CONSOLE_LOG_LEVEL = "INFO"  # 控制台输出的日志级别

# 日志文件目录
LOGS_DIR = RUNTIME_DIR / "logs"

# 默认输出目录
OUTPUT_DIR = RUNTIME_DIR / "out"

# 流水线阶段目录
STAGES_DIR = BASE_DIR / "stages"

# 数据文件默认路径
GROUP_CATALOG_FILE = DATA_DIR / "groups.tsv"
AOSP_LIST_FILE = DATA_DIR / "aosp_permissions.tsv"
SDK_PREFIX_FILE = DATA_DIR / "sdk_prefixes.txt"
CATEGORY_KEYWORD_FILE = DATA_DIR / "category_keywords.tsv"
PERMISSION_LABEL_FILE = DATA_DIR / "permission_labels.tsv"

# VirusTotal 阈值：主阈值与敏感性扫描
DEFAULT_THRESHOLD = 20
DEFAULT_SWEEP = (2, 5, 10, 20, 39)
SWEEP_MIN = 2
SWEEP_MAX = 39

# 最大权限数分层（闭区间，None 表示无上界）
DEFAULT_QUARTILES = ((1, 8), (9, 12), (13, 23), (24, None))

# 模拟器默认平台年份（Android 16）
DEFAULT_SIMULATOR_YEAR = 2025

# 流向表每组保留条数
DEFAULT_TOP_FLOWS = 6

# Google Play 在语料元数据 markets 列中的名称
PLAY_MARKET = "play.google.com"

# 并发 worker 数
DEFAULT_WORKERS = max(1, min(8, os.cpu_count() or 1))
