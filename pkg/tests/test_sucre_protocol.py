"""Тесты четырехфазного случайного доступа SUCRe."""

import numpy as np
import pytest

from channel_core import Population, SystemConfig
from sucre_protocol import (
    AccessState,
    SucreConfig,
    phase1,
    phase2_gain_estimate,
    run_access_slot,
    run_crowd_scenario,
    sucre_decision,
)


def two_devices(gains):
    """Два активных устройства в центре соты."""
    return Population(np.zeros((2, 2)), np.asarray(gains, dtype=float), 1.0)


# Crowd geometry of the bundled Fig. 3 experiment
CROWD_SYSTEM = SystemConfig(shadowing_std_db=12.0)


@pytest.fixture
def one_pilot():
    return SystemConfig(num_pilots=1, slot_length=1)


def test_decision_rule():
    """Повтор пилота только если beta_k строго больше alpha / 2."""
    assert sucre_decision(3.0, 4.0) is True
    assert sucre_decision(2.0, 4.0) is False
    assert sucre_decision(1.0, 4.0) is False
    assert sucre_decision(3.0, 4.0, decision_bias=1.5) is False
    assert sucre_decision(np.array([3.0, 1.0]), np.array([4.0, 4.0])).tolist() == [True, False]


def test_decision_scale_invariance():
    """Умножение всех beta коллизии на константу не меняет решений."""
    gains = np.array([5.0, 1.5, 0.7, 0.2])
    expected = sucre_decision(gains, np.full(4, gains.sum()))
    for scale in (1e-6, 0.3, 17.0, 1e9):
        scaled = gains * scale
        assert sucre_decision(scaled, np.full(4, scaled.sum())).tolist() == expected.tolist()
    assert expected.tolist() == [True, False, False, False]


def test_access_state():
    """Нулевое число попыток означает простой."""
    state = AccessState.idle(3)
    assert not state.backlogged.any()
    copy = state.copy()
    copy.attempts[0] = 2
    assert state.attempts[0] == 0


def test_strongest_admitted(one_pilot, rng):
    """beta = [3, 1] на одном пилоте: допущено только сильное устройство."""
    access_round, state = run_access_slot(
        two_devices([3.0, 1.0]), one_pilot, SucreConfig(), AccessState.idle(2), rng
    )
    assert access_round.admitted == {0}
    assert access_round.contenders == {0: [0, 1]}
    assert access_round.phase3_contenders == {0: [0]}
    assert state.attempts.tolist() == [0, 1]
    assert access_round.resolved_collisions() == 1


def test_equal_gains_backlog(one_pilot, rng):
    """Равные коэффициенты: оба молчат в фазе 3 и остаются в очереди."""
    access_round, state = run_access_slot(
        two_devices([1.0, 1.0]), one_pilot, SucreConfig(), AccessState.idle(2), rng
    )
    assert access_round.admitted == set()
    assert state.backlogged.tolist() == [True, True]


def test_baseline_deadlock(one_pilot, rng):
    """Базовый протокол без разрешения: после max_attempts оба получают отказ."""
    population = two_devices([3.0, 1.0])
    sucre_config = SucreConfig(retry_prob=1.0, max_attempts=10)
    state = AccessState.idle(2)
    for slot in range(10):
        access_round, state = run_access_slot(
            population, one_pilot, sucre_config, state, rng, mode="baseline"
        )
        assert access_round.admitted == set()
        if slot < 9:
            assert len(access_round.denied) == 0
    assert sorted(access_round.denied.tolist()) == [0, 1]
    assert state.attempts.tolist() == [0, 0]


def test_centralized_needs_patterns(one_pilot, rng):
    """Централизованный режим требует кодированных пилотов."""
    with pytest.raises(ValueError):
        run_access_slot(
            two_devices([1.0, 1.0]), one_pilot, SucreConfig(), AccessState.idle(2), rng,
            mode="centralized",
        )


def test_noisy_estimate_median(rng):
    """Медиана шумовой оценки alpha для одиночного устройства близка к истине."""
    config = SystemConfig(num_antennas=100, num_pilots=10, noise_power=1.0)
    population = Population(np.zeros((1, 2)), np.array([1.0]), 1.0)
    sucre_config = SucreConfig(estimator_mode="noisy")
    estimates = []
    for _ in range(400):
        observation = phase1([(0, 3)], population, config, rng)
        estimates.append(
            phase2_gain_estimate(0, 3, observation, population, config, sucre_config, rng)
        )
    assert 0.9 <= np.median(estimates) <= 1.1


def test_noisy_estimate_two_contenders(rng):
    """Два устройства с beta = 1 на одном пилоте: медиана alpha / (beta_1 + beta_2) около 1."""
    config = SystemConfig(num_antennas=100, num_pilots=10, noise_power=1.0)
    population = Population(np.zeros((2, 2)), np.array([1.0, 1.0]), 1.0)
    sucre_config = SucreConfig(estimator_mode="noisy")
    ratios = []
    for _ in range(2000):
        observation = phase1([(0, 3), (1, 3)], population, config, rng)
        estimate = phase2_gain_estimate(0, 3, observation, population, config, sucre_config, rng)
        ratios.append(estimate / 2.0)
    assert 0.9 <= np.median(ratios) <= 1.1


def test_estimate_requires_contender(rng):
    """Оценка для устройства, не передававшего пилот, - ошибка."""
    config = SystemConfig()
    population = Population(np.zeros((2, 2)), np.array([1.0, 1.0]), 1.0)
    observation = phase1([(0, 3)], population, config, rng)
    with pytest.raises(ValueError):
        phase2_gain_estimate(1, 3, observation, population, config, SucreConfig(), rng)


def test_light_crowd_admitted(rng):
    """При K = 100 практически все запросы допускаются с первой попытки."""
    stats = run_crowd_scenario(100, SystemConfig(), SucreConfig(), "sucre", 2000, rng)
    assert stats.finished_requests > 100
    assert stats.admission_fraction > 0.99
    assert stats.mean_attempts < 1.1
    assert stats.denied_fraction < 0.01


def test_centralized_crowd(rng):
    """Централизованный режим работает на небольшой толпе."""
    stats = run_crowd_scenario(200, SystemConfig(), SucreConfig(), "centralized", 500, rng)
    assert 0.0 <= stats.admission_fraction <= 1.0
    assert stats.finished_requests > 0


@pytest.mark.slow
def test_sucre_beats_baseline(rng):
    """При K = 8000 SUCRe допускает больше запросов, чем базовый протокол."""
    config, sucre_config = SystemConfig(), SucreConfig()
    sucre = run_crowd_scenario(8000, config, sucre_config, "sucre", 300, rng)
    baseline = run_crowd_scenario(8000, config, sucre_config, "baseline", 300, rng)
    assert sucre.admission_fraction > baseline.admission_fraction
    assert sucre.mean_attempts < baseline.mean_attempts


def test_resolution_undefined_without_collisions(rng):
    """Без коллизий доля разрешенных коллизий не определена."""
    stats = run_crowd_scenario(
        1, SystemConfig(), SucreConfig(), "sucre", 200, rng, activation_prob=0.5, warmup_slots=0
    )
    assert stats.collisions == 0
    assert np.isnan(stats.resolution_fraction)
    assert stats.admission_fraction == 1.0


def crowd_average(num_devices, mode, seeds=(1, 2, 3, 4), num_slots=2000):
    """Средние по нескольким независимым толпам."""
    runs = [
        run_crowd_scenario(
            num_devices, CROWD_SYSTEM, SucreConfig(), mode, num_slots, np.random.default_rng(seed)
        )
        for seed in seeds
    ]
    return {
        metric: float(np.mean([getattr(run, metric) for run in runs]))
        for metric in ("admission_fraction", "resolution_fraction", "mean_attempts")
    }


@pytest.mark.slow
def test_overloaded_crowd_admitted():
    """K = 10000 (один запрос на пилот): SUCRe допускает и разрешает не меньше 85%."""
    sucre = crowd_average(10000, "sucre")
    assert sucre["admission_fraction"] >= 0.85
    assert sucre["resolution_fraction"] >= 0.85

    baseline = crowd_average(10000, "baseline", seeds=(1, 2), num_slots=1000)
    assert baseline["admission_fraction"] <= 0.05


@pytest.mark.slow
def test_moderate_crowd_delay():
    """До K = 4000 попыток не больше 1.5, у базового протокола в 3 раза больше."""
    assert crowd_average(2000, "sucre", seeds=(1, 2))["mean_attempts"] <= 1.5
    sucre = crowd_average(4000, "sucre", seeds=(1, 2))
    baseline = crowd_average(4000, "baseline", seeds=(1, 2))
    assert sucre["mean_attempts"] <= 1.5
    assert baseline["mean_attempts"] >= 3.0 * sucre["mean_attempts"]


@pytest.mark.slow
def test_admission_monotone_in_crowd_size():
    """Доля допущенных не растет с K (допуск 1 п.п.)."""
    fractions = [
        run_crowd_scenario(
            k, CROWD_SYSTEM, SucreConfig(), "sucre", 1000, np.random.default_rng(7)
        ).admission_fraction
        for k in (100, 2000, 8000, 12000)
    ]
    for lighter, heavier in zip(fractions, fractions[1:]):
        assert heavier <= lighter + 0.01
