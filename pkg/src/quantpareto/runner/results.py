"""
Append-only results store: a CSV of RunResult rows in RESULT_COLUMNS order
plus a JSON Lines sidecar holding each run's full config.
"""

import csv
import io
import json
import threading
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from quantpareto.core.errors import QuantParetoError
from quantpareto.runner.config import ExperimentConfig
from quantpareto.runner.models import RESULT_COLUMNS, RunResult


def sidecar_path(csv_path: Path) -> Path:
    return csv_path.with_suffix(".configs.jsonl")


class ResultsStore:
    """Appends one row at a time under a lock; each row is a single write"""

    def __init__(self, path: Path) -> None:
        self.path = path
        self.sidecar = sidecar_path(path)
        self._lock = threading.Lock()

    def append(
        self,
        result: RunResult,
        config: Optional[ExperimentConfig] = None,
        error: Optional[str] = None,
    ) -> None:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=list(RESULT_COLUMNS), lineterminator="\n")

        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            if not self.path.exists() or self.path.stat().st_size == 0:
                writer.writeheader()
            writer.writerow(result.to_row())
            with open(self.path, "a", newline="", encoding="utf-8") as csvfile:
                csvfile.write(buffer.getvalue())
                csvfile.flush()

            entry = {
                "run_id": result.run_id,
                "config_digest": result.config_digest,
                "status": result.status.value,
                "error": error,
                "config": config.model_dump(mode="json") if config else None,
            }
            with open(self.sidecar, "a", encoding="utf-8") as jsonfile:
                jsonfile.write(json.dumps(entry, sort_keys=True) + "\n")

    def read(self) -> list[RunResult]:
        return read_results(self.path)


def read_results(path: Path) -> list[RunResult]:
    try:
        with open(path, newline="", encoding="utf-8") as csvfile:
            reader = csv.DictReader(csvfile)
            missing = set(RESULT_COLUMNS) - set(reader.fieldnames or [])
            if missing:
                raise QuantParetoError(
                    f"Results file {path} lacks columns: {', '.join(sorted(missing))}"
                )
            return [RunResult.from_row(row) for row in reader]
    except OSError as e:
        raise QuantParetoError(f"Failed to read results {path}: {e}") from e
    except ValidationError as e:
        raise QuantParetoError(f"Malformed results row in {path}: {e}") from e


def write_results(rows: list[RunResult], path: Path) -> Path:
    """Rewrite a whole results file (used for exports, not during sweeps)"""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as csvfile:
        writer = csv.DictWriter(csvfile, fieldnames=list(RESULT_COLUMNS))
        writer.writeheader()
        for row in rows:
            writer.writerow(row.to_row())
    return path
