"""Тесты встроенного набора самопроверок."""

import pytest

from cli_manager import EXIT_OK, EXIT_VALIDATION_FAILED, CliManager
from validation import CHECKS, run_validation


def test_check_names_unique():
    names = [name for name, _ in CHECKS]
    assert len(names) == len(set(names))


def test_failing_check_reported(monkeypatch):
    """Исключение в проверке засчитывается как провал, а не обрывает набор."""

    def broken(rng):
        raise RuntimeError("boom")

    monkeypatch.setattr("validation.CHECKS", [("broken", broken), CHECKS[1]])
    results = run_validation(0)
    assert [r.passed for r in results] == [False, True]
    assert "boom" in results[0].detail
    assert CliManager().validate(0) == EXIT_VALIDATION_FAILED


@pytest.mark.slow
def test_all_checks_pass():
    """Полный набор проходит при seed = 0."""
    failed = [r for r in run_validation(0) if not r.passed]
    assert failed == []


@pytest.mark.slow
def test_cli_validate():
    assert CliManager().validate(0) == EXIT_OK
