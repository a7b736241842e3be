"""Feature vectors, sample containers, file ingestion, and the time split.

Feature vectors are plain 1-D float64 numpy arrays, validated once at the
boundary (finite entries, uniform dimension) and treated as immutable
afterwards. Datasets come in two interchange formats: CSV with header
``id,family,first_seen,f0,...,f{d-1}`` and JSONL with one object per line.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

_YEAR_MONTH = re.compile(r"^(\d{4})-(\d{2})$")
_RESERVED_COLUMNS = ("id", "family", "first_seen")


class DimensionMismatchError(ValueError):
    """Two vectors (or a vector and a fitted model) disagree on dimension."""

    def __init__(self, expected: int, got: int, context: str = ""):
        self.expected = int(expected)
        self.got = int(got)
        msg = f"dimension mismatch: expected {self.expected}, got {self.got}"
        if context:
            msg = f"{context}: {msg}"
        super().__init__(msg)


class DataFormatError(ValueError):
    """Malformed input file; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def as_vector(values) -> np.ndarray:
    """Validate *values* as a feature vector and return it read-only.

    Raises ValueError for empty, non-1-D, or non-finite input.
    """
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"feature vector must be 1-D and non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("feature vector contains non-finite entries")
    arr.setflags(write=False)
    return arr


def check_dim(expected: int, got: int, context: str = "") -> None:
    if expected != got:
        raise DimensionMismatchError(expected, got, context)


def euclidean_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between two feature vectors of equal dimension."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_dim(a.shape[-1], b.shape[-1], "euclidean_distance")
    diff = a - b
    return float(math.sqrt(float(np.dot(diff, diff))))


def parse_year_month(value: str) -> tuple[int, int]:
    """Parse a ``YYYY-MM`` date into a comparable (year, month) pair."""
    m = _YEAR_MONTH.match(value)
    if not m:
        raise ValueError(f"expected YYYY-MM date, got {value!r}")
    year, month = int(m.group(1)), int(m.group(2))
    if not 1 <= month <= 12:
        raise ValueError(f"month out of range in {value!r}")
    return year, month


@dataclass(frozen=True)
class Sample:
    """One observation: id, feature vector, optional ground truth and date.

    ``family`` is evaluation-only ground truth; clustering and routing code
    never reads it. ``first_seen`` has year-month granularity.
    """

    id: str
    features: np.ndarray
    family: str | None = None
    first_seen: str | None = None


class Route(str, Enum):
    KNOWN = "known"
    NEW = "new"


@dataclass(frozen=True)
class RouteAssignment:
    """Routing outcome for one stream sample."""

    sample_id: str
    route: Route
    cluster_id: int


@dataclass
class Dataset:
    """An ordered list of samples sharing one feature dimension."""

    samples: list[Sample]
    dim: int

    def __len__(self) -> int:
        return len(self.samples)

    def matrix(self) -> np.ndarray:
        """Stack all feature vectors into an (n, dim) array."""
        if not self.samples:
            return np.empty((0, self.dim), dtype=np.float64)
        return np.stack([s.features for s in self.samples])

    def ids(self) -> list[str]:
        return [s.id for s in self.samples]

    @classmethod
    def from_samples(cls, samples: list[Sample], dim: int | None = None) -> "Dataset":
        """Build a dataset, enforcing uniform dimension and unique ids."""
        if not samples:
            if dim is None:
                raise ValueError("cannot infer dimension of an empty dataset")
            return cls([], int(dim))
        first = samples[0].features.shape[0]
        if dim is not None and dim != first:
            raise DimensionMismatchError(dim, first, f"sample {samples[0].id!r}")
        for s in samples:
            if s.features.shape[0] != first:
                raise DimensionMismatchError(first, s.features.shape[0], f"sample {s.id!r}")
        seen: set[str] = set()
        dups: list[str] = []
        for s in samples:
            if s.id in seen:
                dups.append(s.id)
            seen.add(s.id)
        if dups:
            raise ValueError(f"duplicate sample ids: {sorted(set(dups))}")
        return cls(list(samples), first)


def _infer_format(path: str | Path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("csv", "jsonl"):
            raise ValueError(f"unknown dataset format {fmt!r} (expected 'csv' or 'jsonl')")
        return fmt
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".jsonl", ".ndjson"):
        return "jsonl"
    raise ValueError(f"cannot infer format from {path}; pass fmt='csv' or 'jsonl'")


def _parse_feature(raw: str | float, line: int, column: str) -> float:
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise DataFormatError(f"column {column!r}: not a number: {raw!r}", line) from None
    if not math.isfinite(value):
        raise DataFormatError(f"column {column!r}: non-finite value {raw!r}", line)
    return value


def _build_sample(sid, family, first_seen, values, line: int) -> Sample:
    if not sid:
        raise DataFormatError("empty sample id", line)
    if first_seen is not None:
        try:
            parse_year_month(first_seen)
        except ValueError as exc:
            raise DataFormatError(str(exc), line) from None
    features = np.array(values, dtype=np.float64)
    features.setflags(write=False)
    return Sample(id=str(sid), features=features, family=family, first_seen=first_seen)


def load_dataset(path: str | Path, fmt: str | None = None) -> Dataset:
    """Load samples from a CSV or JSONL file.

    CSV header must be ``id,family,first_seen,f0,...,f{d-1}``; empty strings
    mean an absent family or date. JSONL lines are objects with keys ``id``,
    ``family``, ``first_seen``, ``features``. Raises DataFormatError with the
    offending line number on malformed rows, inconsistent dimensions, or
    non-finite feature values.
    """
    path = Path(path)
    fmt = _infer_format(path, fmt)
    samples = _load_csv(path) if fmt == "csv" else _load_jsonl(path)
    return Dataset.from_samples(samples)


def _load_csv(path: Path) -> list[Sample]:
    samples: list[Sample] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("empty file", 1) from None
        if tuple(header[:3]) != _RESERVED_COLUMNS:
            raise DataFormatError(
                f"header must start with {','.join(_RESERVED_COLUMNS)}, got {header[:3]}", 1
            )
        feature_cols = header[3:]
        if not feature_cols:
            raise DataFormatError("header declares no feature columns", 1)
        expected = [f"f{i}" for i in range(len(feature_cols))]
        if feature_cols != expected:
            raise DataFormatError(
                f"feature columns must be f0..f{len(feature_cols) - 1}, got {feature_cols}", 1
            )
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"expected {len(header)} fields, got {len(row)}", line
                )
            sid, family, first_seen = row[0], row[1] or None, row[2] or None
            values = [_parse_feature(raw, line, col) for raw, col in zip(row[3:], feature_cols)]
            samples.append(_build_sample(sid, family, first_seen, values, line))
    return samples


def _load_jsonl(path: Path) -> list[Sample]:
    samples: list[Sample] = []
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for line, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"invalid JSON: {exc.msg}", line) from None
            if not isinstance(obj, dict) or "id" not in obj or "features" not in obj:
                raise DataFormatError("object must have 'id' and 'features' keys", line)
            values = obj["features"]
            if not isinstance(values, list) or not values:
                raise DataFormatError("'features' must be a non-empty array", line)
            values = [_parse_feature(v, line, f"f{i}") for i, v in enumerate(values)]
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise DataFormatError(
                    f"inconsistent dimension: expected {dim}, got {len(values)}", line
                )
            samples.append(
                _build_sample(
                    obj["id"], obj.get("family") or None, obj.get("first_seen") or None,
                    values, line,
                )
            )
    return samples


def save_dataset(data: Dataset, path: str | Path, fmt: str | None = None) -> None:
    """Write a dataset back out; loading the result returns identical samples."""
    path = Path(path)
    fmt = _infer_format(path, fmt)
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(list(_RESERVED_COLUMNS) + [f"f{i}" for i in range(data.dim)])
            for s in data.samples:
                writer.writerow(
                    [s.id, s.family or "", s.first_seen or ""]
                    + [repr(float(v)) for v in s.features]
                )
    else:
        with open(path, "w", encoding="utf-8") as fh:
            for s in data.samples:
                fh.write(
                    json.dumps(
                        {
                            "id": s.id,
                            "family": s.family,
                            "first_seen": s.first_seen,
                            "features": [float(v) for v in s.features],
                        }
                    )
                    + "\n"
                )


def split_by_time(data: Dataset, cutoff: str) -> tuple[Dataset, Dataset]:
    """Split into (corpus, stream) at a year-month cutoff.

    The corpus keeps samples first seen strictly before the cutoff, in input
    order. The stream holds the rest in ascending first_seen order; ties keep
    input order. Every sample must carry a first_seen date.
    """
    cut = parse_year_month(cutoff)
    missing = [s.id for s in data.samples if s.first_seen is None]
    if missing:
        shown = missing[:10]
        suffix = "" if len(missing) <= 10 else f" (+{len(missing) - 10} more)"
        raise ValueError(f"samples missing first_seen: {shown}{suffix}")
    corpus = [s for s in data.samples if parse_year_month(s.first_seen) < cut]
    stream = [s for s in data.samples if parse_year_month(s.first_seen) >= cut]
    stream.sort(key=lambda s: parse_year_month(s.first_seen))  # stable: ties keep input order
    return (
        Dataset.from_samples(corpus, dim=data.dim),
        Dataset.from_samples(stream, dim=data.dim),
    )
