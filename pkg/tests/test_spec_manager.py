"""Тесты загрузки и проверки файлов спецификаций."""

import os
import shutil
import tempfile
from contextlib import contextmanager
from pathlib import Path

import pytest

from spec_manager import ExperimentSpec, SpecError, SpecManager

SPECS_DIR = Path(__file__).parent.parent / "specs"


@contextmanager
def temp_directory():
    """Временная директория с автоочисткой."""
    test_dir = tempfile.mkdtemp()
    try:
        yield test_dir
    finally:
        shutil.rmtree(test_dir, ignore_errors=True)


@pytest.fixture
def spec_dir():
    with temp_directory() as test_dir:
        yield test_dir


def write_spec(directory, text, name="spec.ini"):
    path = os.path.join(directory, name)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    return path


def test_load_bundled_sucre_spec():
    """Спецификация рисунка с SUCRe читается целиком."""
    spec = SpecManager().load_spec(str(SPECS_DIR / "fig3_sucre.ini"))
    assert spec.kind == "sucre_fig3"
    assert spec.sweep_name == "experiment.num_devices"
    assert spec.sweep_values[0] == 100.0
    assert spec.system.num_antennas == 100
    assert spec.sucre.max_attempts == 10
    assert spec.num_trials == 20


def test_load_bundled_scaling_spec():
    """Сетка масштабирования: M из {50, 100, 200, 400} и tau_u из {100, 300}."""
    spec = SpecManager().load_spec(str(SPECS_DIR / "fig4_scaling.ini"))
    assert spec.kind == "erapid_fig4"
    assert spec.sweep_name == "erapid.slot_length"
    assert spec.sweep_values == (100.0, 300.0)
    assert spec.grid_values("antennas", []) == [50.0, 100.0, 200.0, 400.0]


def test_list_bundled_specs():
    """Все спецификации из specs/ перечисляются."""
    specs = SpecManager(str(SPECS_DIR)).list_specs()
    kinds = {spec["kind"] for spec in specs}
    assert kinds == {"sucre_fig3", "erapid_fig4", "crapid_fig5", "validate"}


def test_error_names_field(spec_dir):
    """Ошибка указывает секцию и поле."""
    path = write_spec(spec_dir, "[experiment]\nkind = validate\n\n[system]\nnum_pilots = 0\n")
    with pytest.raises(SpecError) as error:
        SpecManager().load_spec(path)
    assert error.value.location == "system.num_pilots"


def test_error_names_experiment_key(spec_dir):
    """Для [experiment] используется имя ключа из файла."""
    path = write_spec(spec_dir, "[experiment]\nkind = validate\ntrials = 0\n")
    with pytest.raises(SpecError) as error:
        SpecManager().load_spec(path)
    assert error.value.location == "experiment.trials"


@pytest.mark.parametrize(
    "text",
    [
        "[system]\nnum_antennas = 10\n",
        "[experiment]\nkind = fig9\n",
        "[experiment]\nkind = validate\n\n[unknown]\na = 1\n",
        "[experiment]\nkind = validate\nsweep = system.no_such_field\n",
        "[experiment]\nkind = validate\nvalues = 1, x\n",
        "[experiment]\nkind = validate\ncolour = red\n",
        "no section header\n",
    ],
)
def test_bad_specs_rejected(spec_dir, text):
    """Некорректные спецификации отклоняются с SpecError."""
    path = write_spec(spec_dir, text)
    with pytest.raises(SpecError):
        SpecManager().load_spec(path)


def test_missing_file():
    with pytest.raises(SpecError):
        SpecManager().load_spec("/nonexistent/spec.ini")


def test_sweep_value_applied():
    """Значение развертки подставляется в нужное поле."""
    spec = ExperimentSpec(
        kind="erapid_fig4",
        sweep_name="erapid.slot_length",
        sweep_values=(30, 300),
        erapid={"num_pilots": 10},
    )
    point = spec.at_sweep_value(30.0)
    assert point.erapid.slot_length == 30
    assert isinstance(point.erapid.slot_length, int)
    assert spec.erapid.slot_length == 300


def test_sweep_value_invalid():
    """Недопустимое значение развертки называет поле."""
    spec = ExperimentSpec(kind="erapid_fig4", sweep_name="erapid.slot_length", sweep_values=(5,))
    with pytest.raises(SpecError) as error:
        spec.at_sweep_value(5.0)
    assert error.value.location.startswith("erapid")


def test_overrides():
    """Флаги командной строки имеют приоритет."""
    spec = ExperimentSpec(kind="validate", master_seed=1, num_trials=2)
    updated = SpecManager.apply_overrides(spec, seed=99, trials=5, output="out.csv")
    assert (updated.master_seed, updated.num_trials, updated.output_path) == (99, 5, "out.csv")
    with pytest.raises(SpecError):
        SpecManager.apply_overrides(spec, trials=0)


def test_save_and_load(spec_dir):
    """Сохраненная спецификация загружается обратно без изменений."""
    spec = ExperimentSpec(
        kind="crapid_fig5",
        master_seed=7,
        num_trials=3,
        grid={"antennas": (64.0, 256.0), "code_rates": (0.5,)},
    )
    manager = SpecManager()
    path = os.path.join(spec_dir, "nested", "saved.ini")
    manager.save_spec(spec, path)
    assert manager.load_spec(path) == spec
