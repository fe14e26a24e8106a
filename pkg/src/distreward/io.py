"""File formats and persistence: dataset and rollout JSONL, checkpoints, CSV.

All writers are deterministic: JSON objects are emitted with sorted keys,
floats use the shortest round-trip decimal representation (Python's repr),
NaN is serialized as null, and CSV columns have a fixed order with a period
decimal separator. Re-running a command from its echoed config reproduces
every output byte for byte.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterator

import numpy as np

from .policy import GridPolicy, parse_prediction
from .rewards import RolloutSet
from .synthetic import Dataset
from .trainer import TrainLog

__all__ = [
    "TRAIN_LOG_HEADER",
    "RolloutFormatError",
    "iter_rollout_records",
    "json_dumps",
    "load_checkpoint",
    "read_dataset_jsonl",
    "read_json",
    "read_rollout_jsonl",
    "read_train_log",
    "sanitize",
    "save_checkpoint",
    "write_dataset_jsonl",
    "write_json",
    "write_train_log",
]

TRAIN_LOG_HEADER = "step,mean_reward,bracket_rate,entropy,kl,val_spearman,val_rmse"


class RolloutFormatError(ValueError):
    """A rollout JSONL row that violates the schema, with its line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def sanitize(obj):
    """Make an object JSON-safe: arrays to lists, NaN/inf to None."""
    if isinstance(obj, dict):
        return {key: sanitize(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return sanitize(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def json_dumps(obj) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(sanitize(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(json_dumps(obj), encoding="utf-8")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _fmt(value) -> str:
    """CSV cell: shortest round-trip decimal; empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    value = float(value)
    if math.isnan(value):
        return ""
    return repr(value)


def write_dataset_jsonl(data: Dataset, path) -> None:
    lines = []
    for x, y, region in data:
        lines.append(json.dumps({"x": x, "y": y, "region": region}, sort_keys=True))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_dataset_jsonl(path) -> Dataset:
    xs: list[float] = []
    ys: list[float] = []
    regions: list[str] = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RolloutFormatError(line_no, f"invalid JSON: {exc}") from exc
        try:
            x = float(row["x"])
            y = float(row["y"])
            region = str(row["region"])
        except (KeyError, TypeError, ValueError) as exc:
            raise RolloutFormatError(line_no, f"dataset row needs numeric x, y and a region: {exc}") from exc
        if region not in ("interp", "extrap_left", "extrap_right"):
            raise RolloutFormatError(line_no, f"unknown region tag {region!r}")
        xs.append(x)
        ys.append(y)
        regions.append(region)
    if not xs:
        raise RolloutFormatError(0, f"no records in {path}")
    return Dataset(np.array(xs), np.array(ys), np.array(regions, dtype=object))


def _rollout_from_row(row: dict, line_no: int) -> tuple[RolloutSet, int]:
    """Build a RolloutSet from one JSONL row; returns (set, n_invalid_texts)."""
    if not isinstance(row, dict):
        raise RolloutFormatError(line_no, "row must be a JSON object")
    if "target" not in row:
        raise RolloutFormatError(line_no, "row is missing 'target'")
    has_samples = "samples" in row
    has_texts = "texts" in row
    if has_samples == has_texts:
        raise RolloutFormatError(
            line_no, "row must contain exactly one of 'samples' or 'texts'")
    target = row["target"]
    if not isinstance(target, (int, float)) or not math.isfinite(float(target)):
        raise RolloutFormatError(line_no, f"target must be a finite number, got {target!r}")
    example_id = row.get("id", line_no)

    if has_samples:
        samples = row["samples"]
        if not isinstance(samples, list) or not samples:
            raise RolloutFormatError(line_no, "'samples' must be a nonempty list")
        try:
            preds = np.asarray([float(v) for v in samples], dtype=float)
        except (TypeError, ValueError) as exc:
            raise RolloutFormatError(line_no, f"'samples' must be numeric: {exc}") from exc
        if not np.all(np.isfinite(preds)):
            raise RolloutFormatError(line_no, "'samples' must be finite")
        valid = np.ones(len(samples), dtype=bool)
        return RolloutSet(example_id, preds, valid, float(target)), 0

    texts = row["texts"]
    if not isinstance(texts, list) or not texts:
        raise RolloutFormatError(line_no, "'texts' must be a nonempty list")
    preds = np.zeros(len(texts))
    valid = np.zeros(len(texts), dtype=bool)
    for i, text in enumerate(texts):
        value = parse_prediction(text)
        if value is not None:
            preds[i] = value
            valid[i] = True
        else:
            preds[i] = np.nan
    return RolloutSet(example_id, preds, valid, float(target)), int((~valid).sum())


def iter_rollout_records(path) -> Iterator[tuple[int, RolloutSet | None, str | None, int]]:
    """Yield (line_no, rollout_set, error, n_invalid_texts) per JSONL line.

    Schema violations yield an error string instead of raising, so callers
    can report the offending line and keep going. Blank lines are skipped.
    """
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            yield line_no, None, f"invalid JSON: {exc}", 0
            continue
        try:
            rollouts, n_invalid = _rollout_from_row(row, line_no)
        except RolloutFormatError as exc:
            yield line_no, None, str(exc), 0
            continue
        yield line_no, rollouts, None, n_invalid


def read_rollout_jsonl(path) -> list[RolloutSet]:
    """Strict reader: raises on the first malformed row."""
    out = []
    for line_no, rollouts, error, _ in iter_rollout_records(path):
        if error is not None:
            raise RolloutFormatError(line_no, error)
        out.append(rollouts)
    if not out:
        raise RolloutFormatError(0, f"no records in {path}")
    return out


def save_checkpoint(path, policy: GridPolicy, extra: dict | None = None) -> None:
    """Checkpoint JSON: grid spec, basis spec, weights, temperature, extras."""
    payload = {
        "bin_centers": policy.bin_centers.tolist(),
        "basis_centers": policy.basis_centers.tolist(),
        "bandwidth": policy.bandwidth,
        "temperature": policy.temperature,
        "weights": policy.weights.tolist(),
    }
    if extra:
        payload.update(extra)
    write_json(path, payload)


def load_checkpoint(path) -> tuple[GridPolicy, dict]:
    """Load a checkpoint; returns the policy and any extra metadata."""
    payload = read_json(path)
    try:
        policy = GridPolicy(
            bin_centers=np.asarray(payload["bin_centers"], dtype=float),
            basis_centers=np.asarray(payload["basis_centers"], dtype=float),
            bandwidth=float(payload["bandwidth"]),
            weights=np.asarray(payload["weights"], dtype=float),
            temperature=float(payload["temperature"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"not a valid checkpoint file: {path} ({exc})") from exc
    extra = {key: value for key, value in payload.items()
             if key not in ("bin_centers", "basis_centers", "bandwidth",
                            "temperature", "weights")}
    return policy, extra


def write_train_log(log: TrainLog, path) -> None:
    lines = [TRAIN_LOG_HEADER]
    for rec in log.records:
        lines.append(",".join([
            str(rec.step),
            _fmt(rec.mean_reward),
            _fmt(rec.bracket_rate),
            _fmt(rec.entropy),
            _fmt(rec.kl),
            _fmt(rec.val_spearman),
            _fmt(rec.val_rmse),
        ]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_train_log(path) -> list[dict]:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or text[0] != TRAIN_LOG_HEADER:
        raise ValueError(f"unexpected training-log header in {path}")
    columns = TRAIN_LOG_HEADER.split(",")
    rows = []
    for line in text[1:]:
        if not line:
            continue
        cells = line.split(",")
        row = {}
        for name, cell in zip(columns, cells):
            row[name] = None if cell == "" else float(cell)
        row["step"] = int(row["step"])
        rows.append(row)
    return rows
