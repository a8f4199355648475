"""Тесты кодированных пилотов и централизованного обнаружения коллизий."""

import numpy as np
import pytest

from coded_pilot import (
    CodedPilot,
    CollisionOutcome,
    assign_unique_patterns,
    detect_collision,
    detection_threshold,
    generate_coded_pilot,
    missed_detection_probability,
    noiseless_energy,
    received_energy,
    resolve_centralized,
)


def test_generate_coded_pilot(rng):
    """Ровно l различных нулевых позиций в пределах длины."""
    pilot = generate_coded_pilot(20, 10, rng)
    assert pilot.num_nulls == 10
    assert list(pilot.null_positions) == sorted(set(pilot.null_positions))
    assert all(0 <= i < 20 for i in pilot.null_positions)
    assert int(pilot.pattern.sum()) == 10
    assert len(pilot.useful_positions) == 10


@pytest.mark.parametrize("nulls", [0, 8])
def test_generate_rejects_bad_nulls(rng, nulls):
    """l должно лежать строго между 0 и tau."""
    with pytest.raises(ValueError):
        generate_coded_pilot(8, nulls, rng)


def test_unique_patterns(rng):
    """Шаблоны устройств различны, переполнение отклоняется."""
    pilots = assign_unique_patterns(6, 4, 2, rng)
    assert len({p.null_positions for p in pilots}) == 6
    with pytest.raises(ValueError):
        assign_unique_patterns(7, 4, 2, rng)


def test_detect_single_user():
    """Одиночная передача не считается коллизией."""
    pilot = CodedPilot(6, (0, 2, 4))
    assert detect_collision(noiseless_energy([pilot]), 3, 0.5) is CollisionOutcome.NO_COLLISION


def test_detect_collision():
    """Два разных шаблона дают меньше l тихих позиций."""
    pilots = [CodedPilot(6, (0, 2, 4)), CodedPilot(6, (0, 1, 2))]
    assert detect_collision(noiseless_energy(pilots), 3, 0.5) is CollisionOutcome.COLLISION


def test_detect_no_transmission():
    """Тишина на всех позициях."""
    assert detect_collision(np.zeros(6), 3, 0.5) is CollisionOutcome.NO_TRANSMISSION


def test_detect_rejects_threshold():
    """Порог должен быть положительным."""
    with pytest.raises(ValueError):
        detect_collision(np.ones(6), 3, 0.0)


@pytest.mark.parametrize("length,nulls,count", [(6, 3, 20), (8, 4, 70), (10, 3, 120)])
def test_missed_detection_enumeration(length, nulls, count):
    """Пропуск коллизии только при совпадении шаблонов: 1 / C(tau, l)."""
    assert missed_detection_probability(length, nulls) == pytest.approx(1.0 / count)


def test_noisy_detector_single_user(rng):
    """При 10 дБ ложная коллизия у одиночного устройства реже 1%."""
    pilot = generate_coded_pilot(20, 10, rng)
    threshold = detection_threshold(1.0)
    trials = 2000
    false_alarms = 0
    for _ in range(trials):
        energy = received_energy([pilot], [10.0], 16, 1.0, rng)
        false_alarms += detect_collision(energy, 10, threshold) is CollisionOutcome.COLLISION
    assert false_alarms / trials < 0.01


def test_noisy_detector_collision(rng):
    """При 20 дБ коллизии двух устройств обнаруживаются."""
    detected = 0
    for _ in range(200):
        pilots = assign_unique_patterns(2, 20, 10, rng)
        energy = received_energy(pilots, [100.0, 100.0], 16, 1.0, rng)
        detected += detect_collision(energy, 10, detection_threshold(1.0)) is CollisionOutcome.COLLISION
    assert detected >= 190


def test_resolve_centralized(rng):
    """Одиночка допущен сразу, столкнувшиеся повторяют пилот."""
    coded = [CodedPilot(6, (0, 2, 4)), CodedPilot(6, (1, 3, 5)), CodedPilot(6, (0, 1, 2))]
    admitted, retry = resolve_centralized([0, 0, 1], coded, 2, rng, redraw_pilots=1)
    assert admitted.tolist() == [False, False, True]
    assert retry.tolist() == [0, 0, -1]


def test_resolve_missed_detection(rng):
    """Совпавшие шаблоны: коллизия пропущена, никто не допущен."""
    coded = [CodedPilot(6, (0, 2, 4)), CodedPilot(6, (0, 2, 4))]
    admitted, retry = resolve_centralized([3, 3], coded, 4, rng)
    assert not admitted.any()
    assert retry.tolist() == [-1, -1]
