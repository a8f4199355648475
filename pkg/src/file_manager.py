"""File management operations for experiment results."""

import csv
import json
import os
from typing import Dict, List, Optional

from config import (
    CSV_FIELDNAMES,
    MANIFEST_JSON_TEMPLATE,
    RESULTS_CSV_TEMPLATE,
    RESULTS_DIR,
)


class FileManager:
    """Writes result CSVs and their JSON manifests."""

    def __init__(self, results_dir: str = RESULTS_DIR):
        self.results_dir = results_dir

    def ensure_results_dir(self, path: str):
        """Ensure the directory of `path` exists."""
        directory = os.path.dirname(path)
        if directory and not os.path.exists(directory):
            os.makedirs(directory)

    def get_results_path(self, kind: str, output_path: Optional[str] = None) -> str:
        """Explicit output path, or results/<kind>.csv."""
        if output_path:
            return output_path
        return os.path.join(self.results_dir, RESULTS_CSV_TEMPLATE.format(kind=kind))

    def get_manifest_path(self, csv_path: str, kind: str) -> str:
        """Manifest sits next to the CSV."""
        directory = os.path.dirname(csv_path)
        stem = os.path.splitext(os.path.basename(csv_path))[0]
        name = MANIFEST_JSON_TEMPLATE.format(kind=stem or kind)
        return os.path.join(directory, name)

    def save_results(
        self,
        kind: str,
        rows: List[Dict],
        output_path: Optional[str] = None,
        manifest: Optional[Dict] = None,
    ) -> str:
        """Save result rows to CSV (fixed header) plus a JSON manifest; returns the CSV path."""
        results_csv = self.get_results_path(kind, output_path)
        self.ensure_results_dir(results_csv)

        with open(results_csv, "w", newline="", encoding="utf-8") as csvfile:
            writer = csv.DictWriter(
                csvfile, fieldnames=CSV_FIELDNAMES, lineterminator="\n"
            )
            writer.writeheader()
            writer.writerows(rows)

        manifest_json = self.get_manifest_path(results_csv, kind)
        payload = dict(manifest or {})
        payload["csv"] = os.path.basename(results_csv)
        payload["rows"] = len(rows)
        with open(manifest_json, "w", encoding="utf-8") as f:
            json.dump(payload, f, ensure_ascii=False, indent=2, sort_keys=True)

        print(
            f"📁 Результаты сохранены в {os.path.basename(results_csv)} и {os.path.basename(manifest_json)}"
        )
        return results_csv

    def load_results(self, path: str) -> List[Dict]:
        """Read a results CSV back as a list of string dicts."""
        with open(path, newline="", encoding="utf-8") as csvfile:
            return list(csv.DictReader(csvfile))

    def load_manifest(self, csv_path: str, kind: str) -> Dict:
        manifest_json = self.get_manifest_path(csv_path, kind)
        if not os.path.exists(manifest_json):
            return {}
        with open(manifest_json, encoding="utf-8") as f:
            return json.load(f)
