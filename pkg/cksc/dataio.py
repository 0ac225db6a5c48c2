"""
File formats for cksc artifacts

- Matrix CSV: rows of floats, no header, 17 significant digits
- Series CSV: one row per time step, one column per channel
- Labels CSV: one label per line
- Manifest CSV: header `path,label`, series paths relative to the manifest
- JSON: written atomically, indented, keys sorted
- JSONL: one record per line
"""

import csv
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from cksc.errors import DimensionError, ParseError
from cksc.kernelcore import TimeSeries

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
MANIFEST_HEADER = ["path", "label"]
TRACE_HEADER = ["iteration", "half_step", "objective"]
SWEEP_HEADER = ["param_name", "param_value", "mean_accuracy", "std_accuracy"]


def format_float(value: float) -> str:
    return FLOAT_FORMAT % value


def _atomic_write(path: Path, write: Any) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp_path = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}_", suffix=".tmp", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            write(f)
        os.replace(temp_path, path)
    except Exception:
        try:
            os.unlink(temp_path)
        except OSError:
            pass
        raise


def write_matrix_csv(path: Path, matrix: np.ndarray) -> None:
    values = np.atleast_2d(np.asarray(matrix, dtype=np.float64))

    def write(f: Any) -> None:
        writer = csv.writer(f, lineterminator="\n")
        for row in values:
            writer.writerow([format_float(v) for v in row])

    _atomic_write(path, write)


def read_matrix_csv(path: Path, allow_empty: bool = False) -> np.ndarray:
    """Rectangular float matrix. Blank lines are skipped."""
    path = Path(path)
    rows: List[List[float]] = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        for line_no, row in enumerate(csv.reader(f), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                values = [float(cell) for cell in row]
            except ValueError as e:
                raise ParseError(path, line_no, f"non-numeric cell ({e})") from e
            if rows and len(values) != len(rows[0]):
                raise ParseError(path, line_no, f"expected {len(rows[0])} columns, got {len(values)}")
            rows.append(values)
    if not rows:
        if allow_empty:
            return np.empty((0, 0))
        raise ParseError(path, 1, "file is empty")
    return np.array(rows, dtype=np.float64)


def read_series_csv(path: Path) -> TimeSeries:
    matrix = read_matrix_csv(path)
    if not np.all(np.isfinite(matrix)):
        raise ParseError(path, 1, "series contains non-finite values")
    return TimeSeries(matrix.T)


def write_series_csv(path: Path, series: TimeSeries) -> None:
    write_matrix_csv(path, series.values.T)


def read_labels(path: Path) -> List[str]:
    path = Path(path)
    labels: List[str] = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            label = line.strip()
            if label:
                labels.append(label)
    return labels


def write_labels(path: Path, labels: Iterable[str]) -> None:
    _atomic_write(path, lambda f: f.writelines(f"{label}\n" for label in labels))


def read_manifest(path: Path) -> List[Tuple[Path, str]]:
    """(series path, label) pairs; relative paths resolve against the manifest directory."""
    path = Path(path)
    entries: List[Tuple[Path, str]] = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != MANIFEST_HEADER:
            raise ParseError(path, 1, "expected header 'path,label'")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 or not row[0].strip() or not row[1].strip():
                raise ParseError(path, line_no, "expected 'path,label'")
            series_path = Path(row[0].strip())
            if not series_path.is_absolute():
                series_path = path.parent / series_path
            entries.append((series_path, row[1].strip()))
    return entries


def load_manifest_series(path: Path) -> Tuple[List[TimeSeries], List[str]]:
    entries = read_manifest(path)
    series = [read_series_csv(p) for p, _ in entries]
    channels = {s.channels for s in series}
    if len(channels) > 1:
        raise DimensionError(f"Inconsistent channel counts in {path}: {sorted(channels)}")
    logger.info("Loaded %d series from %s", len(series), path)
    return series, [label for _, label in entries]


def write_dataset(directory: Path, samples: Sequence[Tuple[TimeSeries, str]]) -> Path:
    """Write series files plus manifest.csv; returns the manifest path."""
    directory = Path(directory)
    (directory / "series").mkdir(parents=True, exist_ok=True)
    rows = []
    for i, (series, label) in enumerate(samples):
        relative = f"series/{i:05d}.csv"
        write_series_csv(directory / relative, series)
        rows.append((relative, label))

    def write(f: Any) -> None:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        writer.writerows(rows)

    manifest = directory / "manifest.csv"
    _atomic_write(manifest, write)
    return manifest


def write_json(path: Path, data: Any) -> None:
    _atomic_write(path, lambda f: f.write(json.dumps(data, indent=2, sort_keys=True) + "\n"))


def read_json(path: Path) -> Any:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(path, e.lineno, e.msg) from e


def write_jsonl(path: Path, records: Iterable[Dict[str, Any]]) -> None:
    lines = [json.dumps(record, sort_keys=True) + "\n" for record in records]
    _atomic_write(path, lambda f: f.writelines(lines))


def trace_rows(trace: Sequence[float]) -> List[Tuple[int, str, float]]:
    """Label a training trace [init, codes_1, dictionary_1, ...] by half-step."""
    rows = [(0, "init", float(trace[0]))] if trace else []
    for i, value in enumerate(trace[1:]):
        rows.append((i // 2 + 1, "codes" if i % 2 == 0 else "dictionary", float(value)))
    return rows


def write_trace_csv(path: Path, trace: Sequence[float]) -> None:
    def write(f: Any) -> None:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for iteration, half_step, value in trace_rows(trace):
            writer.writerow([iteration, half_step, format_float(value)])

    _atomic_write(path, write)


def write_sweep_csv(path: Path, rows: Sequence[Any]) -> None:
    """Rows need param_name, param_value, mean_accuracy, std_accuracy attributes."""

    def write(f: Any) -> None:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for row in rows:
            writer.writerow([row.param_name, format_float(row.param_value),
                             format_float(row.mean_accuracy), format_float(row.std_accuracy)])

    _atomic_write(path, write)
