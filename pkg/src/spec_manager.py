"""Experiment spec files: loading, validation, listing and saving."""

import configparser
import logging
import os
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from channel_core import SystemConfig
from config import EXPERIMENT_DESCRIPTIONS, SPECS_DIR, WARMUP_SLOTS
from crapid import CrapidConfig
from erapid import ErapidConfig
from streams import MAX_SEED
from sucre_protocol import SucreConfig

logger = logging.getLogger(__name__)

ExperimentKind = Literal["sucre_fig3", "erapid_fig4", "crapid_fig5", "validate"]

NO_SWEEP = "none"
PARAMETER_SECTIONS = ("system", "sucre", "erapid", "crapid")

# INI key in [experiment] -> ExperimentSpec field
EXPERIMENT_KEYS = {
    "kind": "kind",
    "sweep": "sweep_name",
    "values": "sweep_values",
    "seed": "master_seed",
    "trials": "num_trials",
    "output": "output_path",
    "devices": "num_devices",
    "activation_prob": "activation_prob",
    "slots": "num_slots",
    "warmup_slots": "warmup_slots",
    "frames": "num_frames",
}
FIELD_KEYS = {field: key for key, field in EXPERIMENT_KEYS.items()}


class SpecError(ValueError):
    """Invalid spec file or parameter combination; `location` is section.field."""

    def __init__(self, location: str, message: str):
        self.location = location
        super().__init__(f"{location}: {message}")


class ExperimentSpec(BaseModel):
    """One experiment: what to sweep, how often, and every fixed parameter."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ExperimentKind
    sweep_name: str = NO_SWEEP
    sweep_values: Tuple[float, ...] = (0.0,)
    master_seed: int = Field(0, ge=0, le=MAX_SEED)
    num_trials: int = Field(1, ge=1)
    output_path: Optional[str] = None

    # crowd scenario (sucre_fig3)
    num_devices: int = Field(1000, ge=1)
    activation_prob: float = Field(0.001, ge=0, le=1)
    num_slots: int = Field(2000, ge=1)
    warmup_slots: int = Field(WARMUP_SLOTS, ge=0)

    # frames per grid point (crapid_fig5)
    num_frames: int = Field(20, ge=1)

    system: SystemConfig = SystemConfig()
    sucre: SucreConfig = SucreConfig()
    erapid: ErapidConfig = ErapidConfig()
    crapid: CrapidConfig = CrapidConfig()
    grid: Dict[str, Tuple[float, ...]] = {}

    @model_validator(mode="after")
    def _check_sweep(self):
        if not self.sweep_values:
            raise ValueError("sweep values must not be empty")
        if self.sweep_name == NO_SWEEP:
            return self
        section, _, name = self.sweep_name.partition(".")
        if section == "experiment":
            if name not in FIELD_KEYS or name in ("kind", "sweep_name", "sweep_values"):
                raise ValueError(f"cannot sweep experiment field {name!r}")
        elif section in PARAMETER_SECTIONS:
            if name not in type(getattr(self, section)).model_fields:
                raise ValueError(f"section [{section}] has no field {name!r}")
        else:
            raise ValueError(f"sweep must be 'none' or section.field, got {self.sweep_name!r}")
        return self

    def at_sweep_value(self, value: float) -> "ExperimentSpec":
        """Copy with the swept field set to `value`, validated again."""
        if self.sweep_name == NO_SWEEP:
            return self
        section, _, name = self.sweep_name.partition(".")
        data = self.model_dump()
        if section == "experiment":
            data[name] = value
        else:
            data[section][name] = value
        try:
            return ExperimentSpec.model_validate(data)
        except ValidationError as e:
            raise _spec_error(e) from e

    def grid_values(self, name: str, default) -> List[float]:
        return list(self.grid.get(name, default))


def _location(loc: Tuple) -> str:
    if not loc:
        return "experiment"
    if loc[0] in PARAMETER_SECTIONS or loc[0] == "grid":
        return ".".join(str(part) for part in loc[:2])
    return f"experiment.{FIELD_KEYS.get(loc[0], loc[0])}"


def _spec_error(error: ValidationError) -> SpecError:
    first = error.errors()[0]
    return SpecError(_location(tuple(first["loc"])), first["msg"])


def _parse_numbers(text: str) -> List[float]:
    return [float(item) for item in text.replace("\n", ",").split(",") if item.strip()]


class SpecManager:
    """Loads INI experiment specs and the bundled spec directory."""

    def __init__(self, specs_dir: str = SPECS_DIR):
        self.specs_dir = specs_dir

    def load_spec(self, path: str) -> ExperimentSpec:
        """Read and validate a spec file."""
        if not os.path.exists(path):
            raise SpecError("experiment", f"spec file not found: {path}")
        parser = configparser.ConfigParser()
        try:
            with open(path, encoding="utf-8") as f:
                parser.read_file(f)
        except configparser.Error as e:
            raise SpecError("experiment", f"cannot parse {path}: {e}") from e
        return self.parse_spec(parser)

    def parse_spec(self, parser: configparser.ConfigParser) -> ExperimentSpec:
        if not parser.has_section("experiment"):
            raise SpecError("experiment.kind", "missing [experiment] section")

        data: Dict = {}
        for key, value in parser.items("experiment"):
            if key not in EXPERIMENT_KEYS:
                raise SpecError(f"experiment.{key}", "unknown key")
            field = EXPERIMENT_KEYS[key]
            if field == "sweep_values":
                data[field] = self._numbers("experiment", key, value)
            else:
                data[field] = value

        for section in parser.sections():
            if section == "experiment":
                continue
            if section == "grid":
                data["grid"] = {
                    key: self._numbers("grid", key, value)
                    for key, value in parser.items("grid")
                }
            elif section in PARAMETER_SECTIONS:
                data[section] = dict(parser.items(section))
            else:
                raise SpecError(section, "unknown section")

        try:
            spec = ExperimentSpec.model_validate(data)
        except ValidationError as e:
            raise _spec_error(e) from e
        logger.debug("Loaded spec %s with %d sweep values", spec.kind, len(spec.sweep_values))
        return spec

    @staticmethod
    def _numbers(section: str, key: str, value: str) -> List[float]:
        try:
            return _parse_numbers(value)
        except ValueError as e:
            raise SpecError(f"{section}.{key}", f"expected comma-separated numbers: {e}") from e

    @staticmethod
    def apply_overrides(
        spec: ExperimentSpec,
        seed: Optional[int] = None,
        trials: Optional[int] = None,
        output: Optional[str] = None,
    ) -> ExperimentSpec:
        """Command-line flags take precedence over the file."""
        data = spec.model_dump()
        if seed is not None:
            data["master_seed"] = seed
        if trials is not None:
            data["num_trials"] = trials
        if output is not None:
            data["output_path"] = output
        try:
            return ExperimentSpec.model_validate(data)
        except ValidationError as e:
            raise _spec_error(e) from e

    def list_specs(self) -> List[Dict]:
        """Bundled spec files with their kind and description."""
        specs = []
        if not os.path.isdir(self.specs_dir):
            return specs

        for file in sorted(os.listdir(self.specs_dir)):
            if not file.endswith(".ini"):
                continue
            path = os.path.join(self.specs_dir, file)
            try:
                kind = self.load_spec(path).kind
            except SpecError as e:
                logger.warning("Skipping invalid spec %s: %s", path, e)
                continue
            specs.append(
                {
                    "name": file[:-4],
                    "path": path,
                    "kind": kind,
                    "description": EXPERIMENT_DESCRIPTIONS[kind],
                }
            )
        return specs

    def save_spec(self, spec: ExperimentSpec, path: str):
        """Write a spec back to INI; parameter sections hold every field."""
        parser = configparser.ConfigParser()
        experiment = {}
        for field, value in spec.model_dump(exclude=set(PARAMETER_SECTIONS) | {"grid"}).items():
            if value is None:
                continue
            if field == "sweep_values":
                value = ", ".join(repr(v) for v in value)
            experiment[FIELD_KEYS[field]] = str(value)
        parser["experiment"] = experiment

        for section in PARAMETER_SECTIONS:
            parser[section] = {
                key: str(value) for key, value in getattr(spec, section).model_dump().items()
            }
        if spec.grid:
            parser["grid"] = {
                key: ", ".join(repr(v) for v in values) for key, values in spec.grid.items()
            }

        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            parser.write(f)
