#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
安装 / 更新授权语义
"""

from dataclasses import replace

import pytest

from permdrift.catalog import ROSTER
from permdrift.errors import (
    AlreadyInstalled,
    DowngradeRejected,
    InvalidConfig,
    NotDangerous,
    NotInstalled,
    NotRequested,
)
from permdrift.models import PermissionDef
from permdrift.simulator.grants import (
    granted_groups,
    install,
    new_device,
    nine_group_scenario,
    permission_level,
    revoke_group,
    run_scenario,
    update,
    user_deny,
    user_grant,
    verify_prompt_log,
)

from tests.support.corpus import make_facts

P = "android.permission."


def app(package, version, permissions, cert="cert-a", defs=()):
    return make_facts(package, version, {p if "." in p else P + p for p in permissions}, cert=cert, defs=defs)


def test_sms_send_is_granted_silently_on_update(catalog):
    state = install(new_device(), app("com.sms", 1, ["READ_SMS"]), catalog)
    assert state.granted("com.sms") == frozenset()
    state = user_grant(state, "com.sms", "READ_SMS", catalog)
    state = update(state, app("com.sms", 2, ["READ_SMS", "SEND_SMS"]), catalog)

    assert state.grants[("com.sms", P + "SEND_SMS")] is True
    outcomes = [(e.permission, e.outcome, e.group) for e in state.prompt_log]
    assert outcomes == [
        (P + "READ_SMS", "shown_granted", "SMS"),
        (P + "SEND_SMS", "auto_granted", "SMS"),
    ]
    assert verify_prompt_log(state, catalog) == []


def test_new_group_on_update_stays_ungranted(catalog):
    state = install(new_device(), app("com.a", 1, ["READ_SMS"]), catalog)
    state = user_grant(state, "com.a", "READ_SMS", catalog)
    state = update(state, app("com.a", 2, ["READ_SMS", "READ_CONTACTS"]), catalog)
    assert state.grants[("com.a", P + "READ_CONTACTS")] is False
    assert [e.outcome for e in state.prompt_log] == ["shown_granted"]


def test_denied_group_does_not_expand(catalog):
    state = install(new_device(), app("com.a", 1, ["READ_SMS"]), catalog)
    state = user_deny(state, "com.a", "READ_SMS", catalog)
    state = update(state, app("com.a", 2, ["READ_SMS", "SEND_SMS"]), catalog)
    assert state.granted("com.a") == frozenset()
    assert [e.outcome for e in state.prompt_log] == ["shown_denied"]


def test_normal_permissions_granted_at_install(catalog):
    state = install(new_device(), app("com.a", 1, ["INTERNET", "READ_SMS"]), catalog)
    assert state.grants[("com.a", P + "INTERNET")] is True
    assert state.grants[("com.a", P + "READ_SMS")] is False
    assert state.prompt_log == ()


def test_custom_normal_permission_is_granted_to_any_requester(catalog):
    owner = app("com.owner", 1, [], cert="cert-owner", defs=[PermissionDef("com.owner.ACCESS")])
    signed = app(
        "com.owner2",
        1,
        [],
        cert="cert-owner",
        defs=[PermissionDef("com.owner2.PRIVATE", "signature", explicit_level=True)],
    )
    state = install(new_device(), owner, catalog)
    state = install(state, signed, catalog)
    state = install(state, app("com.other", 1, ["com.owner.ACCESS", "com.owner2.PRIVATE"], cert="cert-x"), catalog)
    state = install(state, app("com.friend", 1, ["com.owner2.PRIVATE"], cert="cert-owner"), catalog)

    assert permission_level(state, "com.owner.ACCESS", catalog) == "normal"
    assert state.grants[("com.other", "com.owner.ACCESS")] is True
    assert state.grants[("com.other", "com.owner2.PRIVATE")] is False
    assert state.grants[("com.friend", "com.owner2.PRIVATE")] is True
    assert state.prompt_log == ()


def test_app_cannot_redefine_dangerous_permission(catalog):
    rogue = app("com.rogue", 1, [], defs=[PermissionDef(P + "READ_SMS")])
    state = install(new_device(), rogue, catalog)
    state = install(state, app("com.b", 1, ["READ_SMS"]), catalog)
    assert permission_level(state, P + "READ_SMS", catalog) == "dangerous"
    assert state.grants[("com.b", P + "READ_SMS")] is False


def test_revoke_group_revokes_every_member(catalog):
    state = install(new_device(), app("com.a", 1, ["READ_SMS", "READ_CONTACTS"]), catalog)
    state = user_grant(state, "com.a", "READ_SMS", catalog)
    state = user_grant(state, "com.a", "READ_CONTACTS", catalog)
    state = update(state, app("com.a", 2, ["READ_SMS", "SEND_SMS", "READ_CONTACTS"]), catalog)
    assert granted_groups(state, "com.a", catalog) == {"SMS", "CONTACTS"}

    state = revoke_group(state, "com.a", "SMS", catalog)
    assert state.granted("com.a") == {P + "READ_CONTACTS"}
    # 撤销后再更新，同组新增不会被静默授予
    state = update(state, app("com.a", 3, ["READ_SMS", "SEND_SMS", "RECEIVE_SMS", "READ_CONTACTS"]), catalog)
    assert state.grants[("com.a", P + "RECEIVE_SMS")] is False


def test_update_drops_permissions_no_longer_requested(catalog):
    state = install(new_device(), app("com.a", 1, ["READ_SMS", "INTERNET"]), catalog)
    state = user_grant(state, "com.a", "READ_SMS", catalog)
    state = update(state, app("com.a", 2, ["INTERNET"]), catalog)
    assert ("com.a", P + "READ_SMS") not in state.grants


def test_operations_do_not_mutate_input(catalog):
    state = install(new_device(), app("com.a", 1, ["READ_SMS"]), catalog)
    snapshot = state.to_dict()
    user_grant(state, "com.a", "READ_SMS", catalog)
    update(state, app("com.a", 2, ["READ_SMS", "SEND_SMS"]), catalog)
    assert state.to_dict() == snapshot


@pytest.mark.parametrize(
    "call, error",
    [
        (lambda s, c: install(s, app("com.a", 1, []), c), AlreadyInstalled),
        (lambda s, c: update(s, app("com.a", 1, []), c), DowngradeRejected),
        (lambda s, c: update(s, app("com.zzz", 2, []), c), NotInstalled),
        (lambda s, c: user_grant(s, "com.zzz", "READ_SMS", c), NotInstalled),
        (lambda s, c: user_grant(s, "com.a", "SEND_SMS", c), NotRequested),
        (lambda s, c: user_grant(s, "com.a", "INTERNET", c), NotDangerous),
        (lambda s, c: revoke_group(s, "com.zzz", "SMS", c), NotInstalled),
    ],
)
def test_state_errors(catalog, call, error):
    state = install(new_device(), app("com.a", 1, ["READ_SMS", "INTERNET"]), catalog)
    with pytest.raises(error):
        call(state, catalog)


def test_verify_prompt_log_flags_unexplained_grant(catalog):
    state = install(new_device(), app("com.a", 1, ["READ_SMS"]), catalog)
    grants = dict(state.grants)
    grants[("com.a", P + "READ_SMS")] = True
    problems = verify_prompt_log(replace(state, grants=grants), catalog)
    assert len(problems) == 1 and "READ_SMS" in problems[0]


def test_nine_group_scenario(catalog):
    events = nine_group_scenario(catalog)
    result = run_scenario(events, catalog)

    assert result.outcome_counts("update") == {"shown_granted": 0, "shown_denied": 0, "auto_granted": 9}
    assert result.to_dict()["auto_granted_groups"] == sorted(ROSTER)
    assert result.outcome_counts()["shown_granted"] == 9
    assert verify_prompt_log(result.state, catalog) == []
    for kind, package, prompts in result.steps:
        if kind == "update":
            assert len(prompts) == 1 and prompts[0].outcome == "auto_granted"


def test_scenario_accepts_short_names_and_rejects_unknown_events(catalog):
    events = [
        {"event": "install", "app": {"package_name": "com.a", "version_code": 1, "requested_permissions": ["READ_SMS"]}},
        {"event": "user_grant", "package": "com.a", "permission": "READ_SMS"},
        {"event": "update", "app": {"package_name": "com.a", "version_code": 2,
                                    "requested_permissions": ["READ_SMS", "SEND_SMS"]}},
    ]
    result = run_scenario(events, catalog)
    assert result.to_dict()["update_outcomes"]["auto_granted"] == 1
    assert [s[:2] for s in result.steps] == [("install", "com.a"), ("user_grant", "com.a"), ("update", "com.a")]

    with pytest.raises(InvalidConfig):
        run_scenario([{"event": "factory_reset"}], catalog)
