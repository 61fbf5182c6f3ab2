#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
授权语义模拟器与更新时监控
"""

from permdrift.simulator.grants import (
    ScenarioResult,
    install,
    nine_group_scenario,
    revoke_group,
    run_scenario,
    update,
    user_deny,
    user_grant,
    verify_prompt_log,
)
from permdrift.simulator.monitor import (
    MonitorSummary,
    estimate_burden,
    on_package_event,
    replay_log,
)

__all__ = [
    "ScenarioResult",
    "install",
    "nine_group_scenario",
    "revoke_group",
    "run_scenario",
    "update",
    "user_deny",
    "user_grant",
    "verify_prompt_log",
    "MonitorSummary",
    "estimate_burden",
    "on_package_event",
    "replay_log",
]
