"""
Experiment orchestration.

Expands a spec into trials, runs them on the worker pool, reduces them in
trial-index order and writes the result files.
"""

import logging
import sys
from typing import List, Optional

from tqdm import tqdm

from experiments import ResultRow, build_tasks, heuristic_rows, reduce_trials, run_trial
from file_manager import FileManager
from spec_manager import ExperimentSpec
from trial_pool import TrialPool

logger = logging.getLogger(__name__)


class ExperimentRunner:
    """
    Main orchestrator for experiment runs.

    Coordinates between the trial pool, the ordered reduction and file output.
    """

    def __init__(
        self,
        workers: int = 1,
        file_manager: Optional[FileManager] = None,
        show_progress: bool = True,
    ):
        self.workers = workers
        self.file_manager = file_manager or FileManager()
        self.show_progress = show_progress
        self.last_output_path: Optional[str] = None

    async def run_trials(self, spec: ExperimentSpec) -> List[ResultRow]:
        """Run every trial of `spec` and return the reduced rows (no file output)."""
        tasks = build_tasks(spec)
        print(
            f"\n🚀 {spec.kind}: {len(spec.sweep_values)} точек × {spec.num_trials} прогонов"
        )

        with tqdm(
            total=len(tasks),
            desc=spec.kind,
            file=sys.stderr,
            disable=not self.show_progress,
        ) as progress:
            async with TrialPool(self.workers) as pool:
                outcomes = await pool.map(run_trial, tasks, progress.update)

        rows = reduce_trials(spec, tasks, outcomes)
        rows.extend(heuristic_rows(spec, rows))
        logger.info("%s: %d rows from %d trials", spec.kind, len(rows), len(tasks))
        return rows

    async def run_experiment(self, spec: ExperimentSpec) -> List[ResultRow]:
        """Run `spec` and write its CSV and manifest."""
        rows = await self.run_trials(spec)

        manifest = {
            "kind": spec.kind,
            "seed": spec.master_seed,
            "trials": spec.num_trials,
            "spec": spec.model_dump(mode="json", exclude={"output_path"}),
        }
        self.last_output_path = self.file_manager.save_results(
            spec.kind,
            [row.as_csv_row() for row in rows],
            spec.output_path,
            manifest,
        )
        print(f"✅ {spec.kind}: записано строк {len(rows)}")
        return rows
