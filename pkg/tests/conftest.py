#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
公共 fixture
"""

import logging

import pytest

from permdrift.catalog import load_aosp_list, load_catalog, load_labels


@pytest.fixture(scope="session")
def catalog():
    return load_catalog()


@pytest.fixture(scope="session")
def labels():
    return load_labels()


@pytest.fixture(scope="session")
def aosp():
    return load_aosp_list()


@pytest.fixture(autouse=True)
def _quiet_progress(monkeypatch):
    # tqdm 在非交互终端里仍会输出，测试里统一关闭
    monkeypatch.setenv("TQDM_DISABLE", "1")


@pytest.fixture
def caplog_info(caplog):
    caplog.set_level(logging.INFO, logger="permdrift")
    return caplog
