#!/usr/bin/env python3
"""
Main entry point for the Massive MIMO random access simulator.

Runs experiment specs (SUCRe crowd access, E-RAPiD rate bounds, C-RAPiD
throughput) and writes their results to CSV, or runs the self-test suite.
"""

import asyncio
import sys
from pathlib import Path

# Add src to Python path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from cli_manager import CliManager


def main():
    """Main entry point."""
    if sys.version_info < (3, 9):
        print("Требуется Python 3.9 или выше")
        sys.exit(1)

    try:
        sys.exit(asyncio.run(CliManager().run(sys.argv[1:])))
    except KeyboardInterrupt:
        print("\n\n⏹️ Эксперимент прерван пользователем")
        print("⚠️ Результаты незавершенного запуска не записаны")
        sys.exit(1)
    except Exception as e:
        print(f"\n❌ Ошибка: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
