#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
权限组目录
"""

import pytest

from permdrift.catalog import ROSTER, load_catalog, qualify, short_name
from permdrift.errors import CatalogInvalid, MissingInput


def test_contacts_members(catalog):
    assert catalog.members("CONTACTS", 2020) == {
        "android.permission.READ_CONTACTS",
        "android.permission.WRITE_CONTACTS",
        "android.permission.GET_ACCOUNTS",
    }


@pytest.mark.parametrize(
    "permission,year,group",
    [
        ("READ_CALL_LOG", 2017, "PHONE"),
        ("READ_CALL_LOG", 2019, "CALL_LOG"),
        ("android.permission.PROCESS_OUTGOING_CALLS", 2018, "CALL_LOG"),
        ("android.permission.INTERNET", 2015, None),
        ("READ_MEDIA_IMAGES", 2023, "STORAGE"),
        ("READ_MEDIA_IMAGES", 2021, None),
        ("READ_EXTERNAL_STORAGE", 2023, "STORAGE"),
        ("BLUETOOTH_SCAN", 2021, "NEARBY_DEVICES"),
        ("NEARBY_WIFI_DEVICES", 2021, None),
        ("BODY_SENSORS_BACKGROUND", 2022, "SENSORS"),
        ("com.vendor.UNKNOWN", 2020, None),
    ],
)
def test_group_of(catalog, permission, year, group):
    assert catalog.group_of(permission, year) == group


def test_every_group_is_in_roster(catalog):
    assert {e.group for e in catalog.entries} <= set(ROSTER)
    assert len(ROSTER) == 9


def test_at_most_one_group_per_year(catalog):
    for perm in catalog.permissions():
        for year in range(2008, 2027):
            active = [e for e in catalog.entries if e.permission == perm and e.active(year)]
            assert len(active) <= 1


def test_call_log_transition(catalog):
    assert catalog.transitions("READ_CALL_LOG") == [(2012, "PHONE"), (2018, None), (2018, "CALL_LOG")]


def test_empty_file_gives_empty_catalog(tmp_path):
    path = tmp_path / "groups.tsv"
    path.write_text("# nothing\n", encoding="utf-8")
    empty = load_catalog(path)
    assert len(empty) == 0
    assert empty.group_of("READ_SMS", 2020) is None


def test_invalid_rows_are_all_reported(tmp_path):
    path = tmp_path / "groups.tsv"
    path.write_text(
        "READ_SMS\tSMS\t2010\t2008\n"
        "READ_FOO\tMADE_UP\t2010\t\n"
        "READ_BAR\tSMS\tlater\t\n"
        "READ_BAZ\tSMS\t2010\t\n"
        "READ_BAZ\tPHONE\t2012\t\n",
        encoding="utf-8",
    )
    with pytest.raises(CatalogInvalid) as info:
        load_catalog(path)
    assert len(info.value.rows) == 4


def test_missing_file(tmp_path):
    with pytest.raises(MissingInput):
        load_catalog(tmp_path / "nope.tsv")


def test_name_helpers():
    assert qualify("READ_SMS") == "android.permission.READ_SMS"
    assert qualify("com.x.P") == "com.x.P"
    assert short_name("android.permission.READ_SMS") == "READ_SMS"
