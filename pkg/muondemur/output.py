import csv
import enum
import hashlib
import json
import math
import os
import platform
import time
from datetime import datetime, timezone
from importlib import metadata
from logging import debug
from typing import Dict, Iterable, List, Mapping, Optional

import numpy as np
from cli_ui import debug as verbose
from cli_ui import fatal

from muondemur import EXIT_INVALID_INPUT

OUTPUT_ROOT_VARIABLE = "MUONDEMUR_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "results"
SIGNIFICANT_DIGITS = 9

FORMATS = ("csv", "json")


def config_hash(config: Mapping) -> str:
    canonical = json.dumps(to_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def default_output_root() -> str:
    return os.environ.get(OUTPUT_ROOT_VARIABLE, DEFAULT_OUTPUT_ROOT)


def package_versions() -> Dict[str, str]:
    versions = {"python": platform.python_version()}
    for package in ("muondemur", "numpy", "scipy", "iminuit", "pydantic"):
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = "unknown"
    return versions


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), f".{SIGNIFICANT_DIGITS}g")
    if value is None:
        return ""
    if isinstance(value, enum.Enum):
        return str(value.value)
    return str(value)


def to_jsonable(value):
    if isinstance(value, Mapping):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(item) for item in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, enum.Enum):
        return value.value
    return value


class ResultWriter:
    """
    Writes the artifacts of one experiment below <out_root>/<experiment>/.

    Every artifact is listed in the manifest of the workflow that produced it, next to
    the hash of the effective config.
    """

    def __init__(
        self,
        out_root: str,
        experiment: str,
        config: Mapping,
        formats: Iterable[str] = FORMATS,
        seed: Optional[int] = None,
    ):
        self.directory = os.path.join(out_root, experiment)
        self.experiment = experiment
        self.config = to_jsonable(config)
        self.config_hash = config_hash(config)
        self.formats = tuple(formats)
        self.seed = seed
        self.artifacts: List[str] = []
        self.started = time.perf_counter()

        unknown = [name for name in self.formats if name not in FORMATS]
        if unknown:
            fatal(f"Unknown output format(s): {', '.join(unknown)}", exit_code=EXIT_INVALID_INPUT)
        os.makedirs(self.directory, exist_ok=True)
        debug(f"Writing results to {self.directory}")

    def path(self, filename: str) -> str:
        return os.path.join(self.directory, filename)

    def write_table(self, name: str, rows: List[Mapping]) -> Optional[str]:
        """Writes rows as <name>.csv, and as <name>.json when JSON output is on."""
        written = None
        if "csv" in self.formats:
            written = self._write_csv(f"{name}.csv", rows)
        if "json" in self.formats:
            written = self.write_json(name, {"config_hash": self.config_hash, "rows": rows})
        return written

    def write_columns(self, name: str, columns: Mapping[str, Iterable]) -> Optional[str]:
        names = list(columns)
        arrays = [np.asarray(columns[column]) for column in names]
        rows = [dict(zip(names, values)) for values in zip(*arrays)]
        return self.write_table(name, rows)

    def write_json(self, name: str, data) -> str:
        """Structured results (fit reports, map metadata) are written as JSON whatever the formats."""
        filename = f"{name}.json"
        payload = to_jsonable(data)
        if isinstance(payload, dict):
            payload.setdefault("config_hash", self.config_hash)
        with open(self.path(filename), "w", newline="\n") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write("\n")
        return self._register(filename)

    def mark_failed(self, workflow: str, error: BaseException) -> str:
        filename = f"{workflow}.failed"
        with open(self.path(filename), "w", newline="\n") as handle:
            handle.write(f"{type(error).__name__}: {error}\n")
        verbose(f"Partial results of {workflow} kept in {self.directory}")
        return self._register(filename)

    def write_manifest(self, workflow: str, status: str = "ok", extra: Optional[Mapping] = None) -> str:
        manifest = {
            "experiment": self.experiment,
            "workflow": workflow,
            "status": status,
            "config_hash": self.config_hash,
            "config": self.config,
            "seed": self.seed,
            "versions": package_versions(),
            "artifacts": list(self.artifacts),
            "wall_time_s": time.perf_counter() - self.started,
            "finished_at": datetime.now(timezone.utc).isoformat(),
        }
        manifest.update(extra or {})
        filename = f"{workflow}.manifest.json"
        with open(self.path(filename), "w", newline="\n") as handle:
            json.dump(to_jsonable(manifest), handle, indent=2, sort_keys=True)
            handle.write("\n")
        return self.path(filename)

    def _write_csv(self, filename: str, rows: List[Mapping]) -> str:
        header = []
        for row in rows:
            for key in row:
                if key not in header:
                    header.append(key)
        with open(self.path(filename), "w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_value(row.get(key)) for key in header])
        return self._register(filename)

    def _register(self, filename: str) -> str:
        if filename not in self.artifacts:
            self.artifacts.append(filename)
        return self.path(filename)


def read_table(path: str) -> Dict[str, np.ndarray]:
    """:return: the numeric columns of a CSV file with a header row"""
    with open(path, "r", newline="") as handle:
        reader = csv.DictReader(handle)
        rows = list(reader)
        names = reader.fieldnames or []
    if not rows:
        raise ValueError(f"{path} holds no data rows")
    columns = {}
    for name in names:
        try:
            columns[name] = np.array([float(row[name]) for row in rows])
        except ValueError:
            debug(f"Column {name} of {path} is not numeric, skipped")
    return columns
