#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
数据模型模块
"""

from permdrift.models.facts import ApkFacts, ComponentDecl, CorpusMetadata, PermissionDef
from permdrift.models.dex import CallSite, ProviderSensitivity
from permdrift.models.expansion import ExpansionEvent, FlowEntry, VersionChain
from permdrift.models.stats import (
    ContingencyTable,
    MantelHaenszelResult,
    StatsResult,
    StratificationConfig,
    VtLabelConfig,
)
from permdrift.models.custom import (
    CrossDevPair,
    CustomPermissionRecord,
    ExploitableSide,
    ExploitingSide,
)
from permdrift.models.device import (
    DeviceState,
    InstalledApp,
    MonitorState,
    NotificationRecord,
    PromptEvent,
    Snapshot,
)

__all__ = [
    "ApkFacts",
    "ComponentDecl",
    "CorpusMetadata",
    "PermissionDef",
    "CallSite",
    "ProviderSensitivity",
    "ExpansionEvent",
    "FlowEntry",
    "VersionChain",
    "ContingencyTable",
    "MantelHaenszelResult",
    "StatsResult",
    "StratificationConfig",
    "VtLabelConfig",
    "CrossDevPair",
    "CustomPermissionRecord",
    "ExploitableSide",
    "ExploitingSide",
    "DeviceState",
    "InstalledApp",
    "MonitorState",
    "NotificationRecord",
    "PromptEvent",
    "Snapshot",
]
