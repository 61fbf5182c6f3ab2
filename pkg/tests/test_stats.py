#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
恶意软件关联统计
"""

import pytest

from permdrift.analysis.expansion import build_chains
from permdrift.analysis.stats import (
    AppLabel,
    chi_squared,
    compute_stats,
    contingency,
    flagged_packages,
    label_apps,
    mantel_haenszel,
    odds_ratio,
    stratify,
    threshold_sweep,
)
from permdrift.errors import DegenerateStratum, DegenerateTable
from permdrift.models import ContingencyTable, StratificationConfig, VtLabelConfig

from tests.support.corpus import make_facts

# 与整体语料同量级的四格表
CORPUS_TABLE = ContingencyTable(6225, 374801, 22730, 1840819)

QUARTILE_TABLES = [
    ContingencyTable(958, 69042, 9000, 603493),
    ContingencyTable(865, 59135, 7200, 383829),
    ContingencyTable(780, 89220, 6000, 480347),
    ContingencyTable(2116, 158910, 2400, 371280),
]


def test_odds_ratio_on_corpus_table():
    assert odds_ratio(CORPUS_TABLE) == pytest.approx(1.35, abs=0.01)


def test_chi_squared_on_corpus_table():
    statistic, p_value = chi_squared(CORPUS_TABLE)
    assert statistic == pytest.approx(425.87, abs=1.0)
    assert p_value < 1e-50


def test_chi_squared_on_alternate_cells():
    # 与语料报告的两个比例（1.63% 与 1.29%）取整后一致的另一组单元格
    table = ContingencyTable(6225, 374801, 22690, 1840859)
    assert odds_ratio(table) == pytest.approx(1.348, abs=0.01)
    assert chi_squared(table)[0] == pytest.approx(430.9, abs=2.0)


@pytest.mark.parametrize("k", [2, 10, 1000])
@pytest.mark.parametrize(
    "scale",
    [
        lambda t, k: ContingencyTable(k * t.a, k * t.b, t.c, t.d),
        lambda t, k: ContingencyTable(t.a, t.b, k * t.c, k * t.d),
        lambda t, k: ContingencyTable(k * t.a, t.b, k * t.c, t.d),
        lambda t, k: ContingencyTable(t.a, k * t.b, t.c, k * t.d),
    ],
    ids=["row1", "row2", "col1", "col2"],
)
def test_odds_ratio_invariant_under_row_and_column_scaling(scale, k):
    t = ContingencyTable(12, 5, 7, 30)
    assert odds_ratio(scale(t, k)) == pytest.approx(odds_ratio(t), rel=1e-12)


@pytest.mark.parametrize(
    "table",
    [ContingencyTable(1, 1, 1, 1), ContingencyTable(2, 4, 3, 6), ContingencyTable(10, 30, 50, 150)],
)
def test_chi_squared_proportional_rows_is_zero(table):
    statistic, p_value = chi_squared(table)
    assert statistic == pytest.approx(0.0, abs=1e-12)
    assert p_value == pytest.approx(1.0)


def test_chi_squared_matches_closed_form():
    t = ContingencyTable(12, 5, 7, 30)
    n = t.n
    expected = n * (t.a * t.d - t.b * t.c) ** 2 / ((t.a + t.b) * (t.c + t.d) * (t.a + t.c) * (t.b + t.d))
    assert chi_squared(t)[0] == pytest.approx(expected)


@pytest.mark.parametrize("table", [ContingencyTable(3, 0, 4, 9), ContingencyTable(3, 2, 0, 9)])
def test_odds_ratio_degenerate(table):
    with pytest.raises(DegenerateTable):
        odds_ratio(table)


def test_chi_squared_zero_margin():
    with pytest.raises(DegenerateTable):
        chi_squared(ContingencyTable(0, 0, 4, 9))


def test_mantel_haenszel_quartiles():
    result = mantel_haenszel(QUARTILE_TABLES)
    assert result.odds_ratio == pytest.approx(1.0589, abs=0.001)
    assert result.ci_low < result.odds_ratio < result.ci_high
    assert result.ci_low > 1.0
    assert result.p_value is not None and result.p_value < 0.01


def test_mantel_haenszel_single_stratum_equals_crude_or():
    t = ContingencyTable(20, 80, 10, 90)
    result = mantel_haenszel([t])
    assert result.odds_ratio == pytest.approx(odds_ratio(t), rel=1e-12)


def test_mantel_haenszel_skips_empty_strata():
    with_empty = mantel_haenszel(QUARTILE_TABLES + [ContingencyTable(0, 0, 0, 0)])
    assert with_empty.odds_ratio == pytest.approx(mantel_haenszel(QUARTILE_TABLES).odds_ratio)


@pytest.mark.parametrize(
    "strata",
    [
        [],
        [ContingencyTable(0, 0, 0, 0)],
        [ContingencyTable(5, 0, 0, 5)],
        [ContingencyTable(0, 5, 5, 0)],
    ],
)
def test_mantel_haenszel_degenerate(strata):
    with pytest.raises(DegenerateStratum):
        mantel_haenszel(strata)


def _labels():
    return [
        AppLabel("com.a", max_detections=25, max_permissions=5, expanding=True),
        AppLabel("com.b", max_detections=3, max_permissions=10, expanding=True),
        AppLabel("com.c", max_detections=0, max_permissions=15, expanding=True),
        AppLabel("com.d", max_detections=40, max_permissions=30, expanding=False),
        AppLabel("com.e", max_detections=12, max_permissions=2, expanding=False),
        AppLabel("com.f", max_detections=0, max_permissions=0, expanding=False),
        AppLabel("com.g", max_detections=1, max_permissions=20, expanding=False),
    ]


def test_contingency_from_labels():
    labels = _labels()
    assert contingency(labels, 20).cells == (1, 2, 1, 3)
    assert contingency(labels, 2).cells == (2, 1, 2, 2)
    assert flagged_packages(labels, 10) == {"com.a", "com.d", "com.e"}


def test_label_apps_uses_max_over_versions():
    records = [
        make_facts("com.a", 1, {"android.permission.READ_SMS"}, vt=4),
        make_facts("com.a", 2, {"android.permission.READ_SMS", "android.permission.SEND_SMS"}, vt=22),
        make_facts("com.a", 3, {"android.permission.SEND_SMS"}, vt=1),
        make_facts("com.b", 1, (), vt=0),
        make_facts("com.b", 2, {"android.permission.INTERNET"}, vt=0),
    ]
    chains, _ = build_chains(records)
    labels = label_apps(chains, expanding={"com.a"})
    assert labels == [
        AppLabel("com.a", max_detections=22, max_permissions=2, expanding=True),
        AppLabel("com.b", max_detections=0, max_permissions=1, expanding=False),
    ]


def test_stratify_by_permission_count():
    strata = stratify(_labels(), 20)
    assert len(strata) == 4
    # com.f 没有声明权限，不入任何层
    assert sum(t.n for t in strata) == 6
    assert strata[0].cells == (1, 0, 0, 1)
    assert strata[1].cells == (0, 1, 0, 0)
    assert strata[2].cells == (0, 1, 0, 1)
    assert strata[3].cells == (0, 0, 1, 0)


def test_stratification_config_validation():
    assert StratificationConfig().labels() == ["Q1 (1--8)", "Q2 (9--12)", "Q3 (13--23)", "Q4 (24+)"]
    with pytest.raises(ValueError):
        StratificationConfig(((2, 8), (9, None)))
    with pytest.raises(ValueError):
        StratificationConfig(((1, 8), (10, None)))
    with pytest.raises(ValueError):
        StratificationConfig(((1, 8), (9, 12)))
    assert StratificationConfig(((1, None),)).index_of(1000) == 0


def test_vt_label_config_validation():
    assert VtLabelConfig().threshold == 20
    with pytest.raises(ValueError):
        VtLabelConfig(threshold=0)
    with pytest.raises(ValueError):
        VtLabelConfig(sweep=(1, 5))
    with pytest.raises(ValueError):
        VtLabelConfig(sweep=(40,))


def _population():
    labels = []
    for i in range(40):
        labels.append(AppLabel(f"com.exp{i:02d}", max_detections=i, max_permissions=1 + i % 30, expanding=True))
    for i in range(120):
        labels.append(
            AppLabel(f"com.non{i:03d}", max_detections=i % 30, max_permissions=1 + i % 28, expanding=False)
        )
    return labels


def test_compute_stats_fields():
    result = compute_stats(_population(), 20, StratificationConfig())
    assert result.degenerate is None
    assert result.odds_ratio == pytest.approx(odds_ratio(result.table))
    assert result.chi_squared == pytest.approx(chi_squared(result.table)[0])
    assert result.mh_odds_ratio is not None
    assert result.to_dict()["mh_ci"] == [result.mh_ci_low, result.mh_ci_high]


def test_compute_stats_degenerate_is_reported_not_raised():
    labels = [AppLabel("com.a", 0, 3, True), AppLabel("com.b", 0, 3, False)]
    result = compute_stats(labels, 20)
    assert result.degenerate
    assert result.odds_ratio is None
    assert result.to_dict()["or"] is None


def test_sweep_equals_per_threshold_runs():
    labels = _population()
    config = VtLabelConfig(sweep=(39, 2, 10, 5, 20, 10))
    strat = StratificationConfig()
    results = threshold_sweep(labels, config, strat)
    assert [r.threshold for r in results] == [2, 5, 10, 20, 39]
    for r in results:
        assert r == compute_stats(labels, r.threshold, strat)
    # 检出数最多 39，t=39 时非扩张组无人被标记
    assert results[-1].degenerate


def test_flagged_set_grows_as_threshold_drops():
    labels = _population()
    previous = set()
    for t in range(39, 1, -1):
        current = flagged_packages(labels, t)
        assert previous <= current
        previous = current


@pytest.mark.parametrize("detections, flagged", [(19, False), (20, True), (21, True)])
def test_threshold_is_inclusive(detections, flagged):
    label = AppLabel("com.a", max_detections=detections, max_permissions=3, expanding=True)
    assert label.flagged(20) is flagged
    assert (flagged_packages([label], 20) == {"com.a"}) is flagged
    assert contingency([label], 20).a == int(flagged)


def test_sweep_without_detections_is_degenerate_everywhere():
    labels = [
        AppLabel(f"com.app{i}", max_detections=0, max_permissions=1 + i, expanding=i % 2 == 0) for i in range(10)
    ]
    results = threshold_sweep(labels, VtLabelConfig(sweep=(2, 39)), StratificationConfig())
    assert [r.threshold for r in results] == [2, 39]
    assert all(r.degenerate for r in results)
    assert all(r.odds_ratio is None for r in results)
