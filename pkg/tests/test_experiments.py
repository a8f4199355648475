"""Тесты прогонов экспериментов и упорядоченной агрегации."""

import numpy as np
import pytest

from experiments import (
    CROWD_METRICS,
    ResultRow,
    TrialTask,
    aggregate,
    build_tasks,
    crapid_trial,
    erapid_trial,
    heuristic_rows,
    reduce_trials,
    sucre_trial,
)
from spec_manager import ExperimentSpec
from sucre_protocol import CROWD_MODES


def test_aggregate():
    """Среднее и стандартная ошибка."""
    mean, stderr = aggregate([1.0, 2.0, 3.0])
    assert mean == 2.0
    assert stderr == pytest.approx(1.0 / np.sqrt(3.0))
    assert aggregate([5.0]) == (5.0, 0.0)


def test_aggregate_matches_naive_loop():
    """Агрегация совпадает с последовательным пересчетом бит в бит."""
    values = list(np.random.default_rng(3).random(37))
    total = 0.0
    for value in values:
        total += value
    assert aggregate(values)[0] == total / len(values)


def test_build_tasks():
    """Задачи упорядочены по точкам развертки, затем по прогонам."""
    spec = ExperimentSpec(
        kind="sucre_fig3",
        sweep_name="experiment.num_devices",
        sweep_values=(100, 200),
        num_trials=3,
    )
    tasks = build_tasks(spec)
    assert [(t.sweep_index, t.trial_index) for t in tasks] == [
        (0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)
    ]
    assert tasks[4].spec.num_devices == 200


def test_reduce_order_independent():
    """Порядок завершения прогонов не влияет на строки."""
    spec = ExperimentSpec(kind="validate", num_trials=3)
    tasks = [TrialTask(spec, 0, 0.0, t) for t in range(3)]
    outcomes = [[("a", "m", float(t)), ("b", "m", 10.0 * t)] for t in range(3)]

    rows = reduce_trials(spec, tasks, outcomes)
    shuffled = reduce_trials(spec, tasks[::-1], outcomes[::-1])
    assert rows == shuffled
    assert [(r.mode, r.metric) for r in rows] == [("a", "m"), ("b", "m")]
    assert rows[0].mean == 1.0
    assert rows[1].trials == 3


def test_result_row_csv():
    """Числа записываются через repr, без потери точности."""
    row = ResultRow("validate", "none", 0.0, "x", "passed", 1 / 3, 0.0, 1, 42)
    assert float(row.as_csv_row()["mean"]) == 1 / 3
    assert row.as_csv_row()["seed"] == 42


def test_sucre_trial_small():
    """Все режимы толпы на одной популяции."""
    spec = ExperimentSpec(
        kind="sucre_fig3", num_devices=50, activation_prob=0.01, num_slots=50, warmup_slots=10
    )
    measurements = sucre_trial(TrialTask(spec, 0, 0.0, 0))
    assert len(measurements) == len(CROWD_MODES) * len(CROWD_METRICS)
    assert [m[0] for m in measurements[:: len(CROWD_METRICS)]] == list(CROWD_MODES)
    again = sucre_trial(TrialTask(spec, 0, 0.0, 0))
    np.testing.assert_array_equal([m[2] for m in again], [m[2] for m in measurements])


def test_erapid_trial_small():
    """Оптимум для каждого числа антенн из сетки."""
    spec = ExperimentSpec(
        kind="erapid_fig4",
        erapid={"num_devices": 50, "mc_slots": 20, "num_pilots": 10, "slot_length": 100},
        grid={"antennas": (16, 32), "activation_prob": (0.1, 0.2), "num_pilots": (5, 10)},
    )
    measurements = erapid_trial(TrialTask(spec, 0, 0.0, 0))
    modes = [m[0] for m in measurements]
    assert modes.count("M16") == 6 and modes.count("M32") == 6
    rates = {m[0]: m[2] for m in measurements if m[1] == "sum_rate"}
    assert rates["M32"] > rates["M16"]


def test_crapid_trial_small():
    """Пропускная способность и отношение к SMM для каждой схемы."""
    spec = ExperimentSpec(
        kind="crapid_fig5",
        num_frames=2,
        crapid={"num_devices": 20},
        grid={
            "antennas": (64,),
            "code_rates": (0.5,),
            "num_pilots": (5,),
            "frame_length": (4,),
            "activation_prob": (0.2,),
        },
    )
    measurements = crapid_trial(TrialTask(spec, 0, 0.0, 0))
    modes = sorted({m[0] for m in measurements})
    assert modes == ["aloha_M64_R0.5", "crapid_M64_R0.5", "smm_M64_R0.5"]
    ratio = [m[2] for m in measurements if m[0] == "smm_M64_R0.5" and m[1] == "ratio_to_smm"]
    assert ratio == [1.0]


def test_heuristic_rows():
    """Подгонка sqrt(M tau_u) по средним значениям развертки."""
    spec = ExperimentSpec(
        kind="erapid_fig4",
        sweep_name="erapid.slot_length",
        sweep_values=(100, 300),
        erapid={"num_pilots": 10},
    )
    rows = []
    for tau in (100.0, 300.0):
        for m in (100, 400):
            product = m * tau
            for metric, value in (("sum_rate", 2.0 * np.sqrt(product)), ("mean_active", 0.5 * np.sqrt(product))):
                rows.append(ResultRow("erapid_fig4", spec.sweep_name, tau, f"M{m}", metric, value, 0.0, 1, 0))
    fit = {row.metric: row.mean for row in heuristic_rows(spec, rows)}
    assert fit["x"] == pytest.approx(0.5)
    assert fit["slope"] == pytest.approx(0.5)


def test_heuristic_rows_other_kinds():
    assert heuristic_rows(ExperimentSpec(kind="validate"), []) == []
