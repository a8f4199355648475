"""Command-line interface for the random access simulator."""

import argparse
import logging
from typing import List, Optional

from config import EXPERIMENT_DESCRIPTIONS, EXPERIMENT_IDS
from experiment_runner import ExperimentRunner
from spec_manager import SpecError, SpecManager
from validation import run_validation

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_BAD_SPEC = 2


def seed_value(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer: {text}")
    return value


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer: {text}")
    return value


class CliManager:
    """Parses arguments and dispatches the subcommands."""

    def __init__(self, spec_manager: Optional[SpecManager] = None):
        self.spec_manager = spec_manager or SpecManager()

    def build_parser(self) -> argparse.ArgumentParser:
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument("--seed", type=seed_value, help="master seed (u64)")
        common.add_argument("--workers", type=positive_int, default=1, help="worker processes")
        common.add_argument("--verbose", action="store_true", help="debug logging")

        parser = argparse.ArgumentParser(
            prog="massive-mimo-random-access",
            description="Massive MIMO random access experiments (SUCRe, E-RAPiD, C-RAPiD)",
        )
        commands = parser.add_subparsers(dest="command", required=True)

        run = commands.add_parser("run", parents=[common], help="run an experiment spec")
        run.add_argument("spec", help="path to an INI spec file")
        run.add_argument("--trials", type=positive_int, help="replications per sweep value")
        run.add_argument("--out", help="output CSV path")
        run.add_argument("--no-progress", action="store_true", help="hide the progress bar")

        commands.add_parser("validate", parents=[common], help="run the self-test suite")
        commands.add_parser(
            "list-experiments", parents=[common], help="list experiment kinds and specs"
        )
        return parser

    def configure_logging(self, verbose: bool):
        logging.basicConfig(
            level=logging.DEBUG if verbose else logging.WARNING,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )

    async def run(self, argv: Optional[List[str]] = None) -> int:
        """Parse `argv` and run the chosen subcommand; returns the exit code."""
        args = self.build_parser().parse_args(argv)
        self.configure_logging(args.verbose)

        if args.command == "run":
            return await self.run_spec(args)
        if args.command == "validate":
            return self.validate(args.seed or 0)
        return self.list_experiments()

    async def run_spec(self, args) -> int:
        try:
            spec = self.spec_manager.load_spec(args.spec)
            spec = self.spec_manager.apply_overrides(spec, args.seed, args.trials, args.out)
        except SpecError as e:
            print(f"❌ Ошибка в спецификации: {e}")
            return EXIT_BAD_SPEC

        runner = ExperimentRunner(workers=args.workers, show_progress=not args.no_progress)
        try:
            rows = await runner.run_experiment(spec)
        except SpecError as e:
            print(f"❌ Ошибка в спецификации: {e}")
            return EXIT_BAD_SPEC
        except OSError as e:
            print(f"❌ Не удалось записать результаты: {e}")
            return EXIT_BAD_SPEC

        if spec.kind == "validate":
            failed = sorted({row.mode for row in rows if row.mean < 1.0})
            for name in failed:
                print(f"❌ Проверка не пройдена: {name}")
            if failed:
                return EXIT_VALIDATION_FAILED
        return EXIT_OK

    def validate(self, seed: int) -> int:
        print("\n🔍 Проверка инвариантов и эталонных значений...")
        results = run_validation(seed)
        for result in results:
            status = "✅" if result.passed else "❌"
            print(f"  {status} {result.name}: {result.detail}")

        failed = [result for result in results if not result.passed]
        print("\n📊 Статистика:")
        print(f"  ✅ Пройдено: {len(results) - len(failed)}")
        print(f"  ❌ Не пройдено: {len(failed)}")
        return EXIT_VALIDATION_FAILED if failed else EXIT_OK

    def list_experiments(self) -> int:
        print("\n📋 Типы экспериментов:")
        for kind in EXPERIMENT_IDS:
            print(f"  {kind}: {EXPERIMENT_DESCRIPTIONS[kind]}")

        specs = self.spec_manager.list_specs()
        if specs:
            print(f"\n📁 Спецификации в {self.spec_manager.specs_dir}/:")
            for spec in specs:
                print(f"  {spec['path']} ({spec['kind']})")
        else:
            print(f"\n⚠️ В {self.spec_manager.specs_dir}/ нет спецификаций")
        return EXIT_OK
