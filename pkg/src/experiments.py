"""
Per-trial workloads of every experiment kind and their ordered reduction.

A trial is identified by (spec at one sweep value, sweep index, trial index) and
derives its own random stream inside the worker, so results never depend on
which process ran it or in what order.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from config import EXPERIMENT_IDS
from crapid import CrapidConfig, compare_schemes
from erapid import ErapidConfig, SweepPoint, draw_common_numbers, fit_heuristic, optimize_erapid
from spec_manager import ExperimentSpec
from streams import derive_stream
from sucre_protocol import CROWD_MODES, run_crowd_scenario
from validation import run_validation

logger = logging.getLogger(__name__)

# (mode, metric, value) in emission order
Measurement = Tuple[str, str, float]

CROWD_METRICS = (
    "mean_attempts",
    "admission_fraction",
    "resolution_fraction",
    "denied_fraction",
    "collision_fraction",
    "collisions",
)

DEFAULT_ERAPID_ACTIVATION_GRID = tuple(np.round(np.arange(1, 21) * 0.0125, 4))
DEFAULT_CRAPID_PILOT_GRID = (64, 128, 192, 256, 320)
DEFAULT_CRAPID_FRAME_GRID = (10, 15, 20)
DEFAULT_CRAPID_ACTIVATION_GRID = (0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.7)


@dataclass(frozen=True)
class TrialTask:
    spec: ExperimentSpec
    sweep_index: int
    sweep_value: float
    trial_index: int

    def stream(self):
        return derive_stream(
            self.spec.master_seed,
            EXPERIMENT_IDS[self.spec.kind],
            self.sweep_index,
            self.trial_index,
        )


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    sweep_name: str
    sweep_value: float
    mode: str
    metric: str
    mean: float
    stderr: float
    trials: int
    seed: int

    def as_csv_row(self) -> Dict:
        return {
            "experiment": self.experiment,
            "sweep_name": self.sweep_name,
            "sweep_value": repr(float(self.sweep_value)),
            "mode": self.mode,
            "metric": self.metric,
            "mean": repr(float(self.mean)),
            "stderr": repr(float(self.stderr)),
            "trials": self.trials,
            "seed": self.seed,
        }


def aggregate(values: Sequence[float]) -> Tuple[float, float]:
    """
    Mean and standard error, summed sequentially in the given order.

    NaN marks a metric undefined in that trial (e.g. no collisions) and is skipped.
    """
    values = [float(value) for value in values if not np.isnan(value)]
    count = len(values)
    if count == 0:
        return float("nan"), float("nan")
    total = 0.0
    for value in values:
        total += value
    mean = total / count
    if count < 2:
        return mean, 0.0
    squares = 0.0
    for value in values:
        squares += (value - mean) ** 2
    return mean, float(np.sqrt(squares / (count - 1) / count))


def sucre_trial(task: TrialTask) -> List[Measurement]:
    """All crowd modes on the same population (common random numbers)."""
    spec = task.spec
    measurements = []
    for mode in CROWD_MODES:
        stats = run_crowd_scenario(
            spec.num_devices,
            spec.system,
            spec.sucre,
            mode,
            spec.num_slots,
            task.stream(),
            activation_prob=spec.activation_prob,
            warmup_slots=spec.warmup_slots,
        )
        measurements.extend((mode, metric, getattr(stats, metric)) for metric in CROWD_METRICS)
    return measurements


def _pilot_grid(spec: ExperimentSpec, cfg: ErapidConfig) -> List[int]:
    if "num_pilots" in spec.grid:
        return [int(t) for t in spec.grid["num_pilots"]]
    grid = np.linspace(1, cfg.slot_length - 1, 15).astype(int)
    return sorted(set(int(t) for t in grid))


def erapid_trial(task: TrialTask) -> List[Measurement]:
    """Optimized E-RAPiD bound for every array size, one draw of common numbers."""
    spec = task.spec
    antennas = spec.grid_values("antennas", [spec.erapid.num_antennas])
    activation_grid = spec.grid_values("activation_prob", DEFAULT_ERAPID_ACTIVATION_GRID)
    draws = draw_common_numbers(spec.erapid, task.stream())

    measurements = []
    for num_antennas in antennas:
        cfg = ErapidConfig.model_validate(
            {**spec.erapid.model_dump(), "num_antennas": int(num_antennas)}
        )
        optimum = optimize_erapid(cfg, activation_grid, _pilot_grid(spec, cfg), draws=draws)
        mode = f"M{int(num_antennas)}"
        measurements.extend(
            [
                (mode, "sum_rate", optimum.bound.sum_rate),
                (mode, "mean_active", optimum.bound.mean_active),
                (mode, "per_active_rate", optimum.bound.per_active_rate),
                (mode, "pilot_fraction", optimum.pilot_fraction),
                (mode, "activation_prob", optimum.activation_prob),
                (mode, "num_pilots", float(optimum.num_pilots)),
            ]
        )
    return measurements


def crapid_trial(task: TrialTask) -> List[Measurement]:
    """Optimized throughput of C-RAPiD, ALOHA and SMM per (M, R)."""
    spec = task.spec
    cfg: CrapidConfig = spec.crapid
    rows = compare_schemes(
        cfg,
        [int(m) for m in spec.grid_values("antennas", [cfg.num_antennas])],
        spec.grid_values("code_rates", [cfg.code_rate]),
        [int(t) for t in spec.grid_values("num_pilots", DEFAULT_CRAPID_PILOT_GRID)],
        [int(d) for d in spec.grid_values("frame_length", DEFAULT_CRAPID_FRAME_GRID)],
        spec.grid_values("activation_prob", DEFAULT_CRAPID_ACTIVATION_GRID),
        spec.num_frames,
        task.stream(),
    )

    scheduled = {
        (row.num_antennas, row.code_rate): row.throughput for row in rows if row.scheme == "smm"
    }
    measurements = []
    for row in rows:
        mode = f"{row.scheme}_M{row.num_antennas}_R{row.code_rate:g}"
        reference = scheduled[(row.num_antennas, row.code_rate)]
        measurements.extend(
            [
                (mode, "throughput", row.throughput),
                (mode, "ratio_to_smm", row.throughput / reference if reference > 0 else 0.0),
                (mode, "num_pilots", float(row.num_pilots)),
                (mode, "frame_length", float(row.frame_length)),
                (mode, "activation_prob", row.activation_prob),
            ]
        )
    return measurements


def validate_trial(task: TrialTask) -> List[Measurement]:
    results = run_validation(task.spec.master_seed, task.trial_index)
    return [(result.name, "passed", float(result.passed)) for result in results]


TRIAL_FUNCTIONS = {
    "sucre_fig3": sucre_trial,
    "erapid_fig4": erapid_trial,
    "crapid_fig5": crapid_trial,
    "validate": validate_trial,
}


def run_trial(task: TrialTask) -> List[Measurement]:
    """Picklable entry point for worker processes."""
    logger.debug(
        "%s sweep %d trial %d", task.spec.kind, task.sweep_index, task.trial_index
    )
    return TRIAL_FUNCTIONS[task.spec.kind](task)


def build_tasks(spec: ExperimentSpec) -> List[TrialTask]:
    """Every (sweep value, trial) pair, sweep-major."""
    tasks = []
    for sweep_index, value in enumerate(spec.sweep_values):
        point = spec.at_sweep_value(value)
        for trial_index in range(spec.num_trials):
            tasks.append(TrialTask(point, sweep_index, float(value), trial_index))
    return tasks


def reduce_trials(
    spec: ExperimentSpec,
    tasks: Sequence[TrialTask],
    outcomes: Sequence[List[Measurement]],
) -> List[ResultRow]:
    """
    One row per (sweep value, mode, metric) with values taken in trial-index order.

    Row order follows the sweep values, then the emission order of the first trial.
    """
    by_point: Dict[int, List[Tuple[int, List[Measurement]]]] = {}
    values: Dict[int, float] = {}
    for task, outcome in zip(tasks, outcomes):
        by_point.setdefault(task.sweep_index, []).append((task.trial_index, outcome))
        values[task.sweep_index] = task.sweep_value

    rows = []
    for sweep_index in sorted(by_point):
        trials = [outcome for _, outcome in sorted(by_point[sweep_index], key=lambda t: t[0])]
        keys = [(mode, metric) for mode, metric, _ in trials[0]]
        per_key: Dict[Tuple[str, str], List[float]] = {key: [] for key in keys}
        for outcome in trials:
            for mode, metric, value in outcome:
                per_key[(mode, metric)].append(float(value))

        for mode, metric in keys:
            mean, stderr = aggregate(per_key[(mode, metric)])
            rows.append(
                ResultRow(
                    experiment=spec.kind,
                    sweep_name=spec.sweep_name,
                    sweep_value=values[sweep_index],
                    mode=mode,
                    metric=metric,
                    mean=mean,
                    stderr=stderr,
                    trials=len(per_key[(mode, metric)]),
                    seed=spec.master_seed,
                )
            )
    return rows


def heuristic_rows(spec: ExperimentSpec, rows: Sequence[ResultRow]) -> List[ResultRow]:
    """Fit of the sqrt(M tau_u) scaling over an E-RAPiD sweep; empty if the sweep is too small."""
    if spec.kind != "erapid_fig4":
        return []

    by_point: Dict[Tuple[float, str], Dict[str, float]] = {}
    for row in rows:
        by_point.setdefault((row.sweep_value, row.mode), {})[row.metric] = row.mean

    points = []
    for (sweep_value, mode), metrics in by_point.items():
        point = spec.at_sweep_value(sweep_value)
        points.append(
            SweepPoint(
                num_antennas=int(mode[1:]),
                slot_length=point.erapid.slot_length,
                sum_rate=metrics["sum_rate"],
                mean_active=metrics["mean_active"],
            )
        )
    try:
        model = fit_heuristic(points)
    except ValueError as e:
        logger.info("Skipping heuristic fit: %s", e)
        return []

    return [
        ResultRow(spec.kind, "fit", 0.0, "heuristic", metric, value, 0.0, spec.num_trials, spec.master_seed)
        for metric, value in (
            ("x", model.x),
            ("slope", model.slope),
            ("intercept", model.intercept),
        )
    ]
