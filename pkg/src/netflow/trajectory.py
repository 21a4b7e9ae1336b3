"""Time series produced by a flow run, with a versioned CSV format.

The CSV starts with one comment line carrying the format version and the hash
of the configuration that produced it, followed by a header row and one row
per logged step.  All floats are written with 17 significant digits so a log
can be read back bit-for-bit.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import FormatError

FORMAT_VERSION = 1
MAGIC = "# netflow-trajectory"


def fmt(x: float) -> str:
    """Format a float with 17 significant digits."""
    return format(float(x), ".17g")


def config_hash(config: Any) -> str:
    """Short stable hash of a JSON-serializable configuration."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class Frame:
    """Full network samples at one logged time."""

    t: float
    samples: list[np.ndarray]


@dataclass
class TrajectoryLog:
    columns: list[str]
    rows: list[list[float]] = field(default_factory=list)
    config_hash: str = ""
    version: int = FORMAT_VERSION
    frames: list[Frame] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def append(self, row: Sequence[float]) -> None:
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} values, expected {len(self.columns)}")
        t = float(row[0])
        if self.rows and not t > self.rows[-1][0]:
            raise ValueError("time must be strictly increasing")
        self.rows.append([float(v) for v in row])

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.columns.index(name)
        except ValueError:
            raise KeyError(name) from None
        return np.array([r[j] for r in self.rows])

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float).reshape(len(self.rows), len(self.columns))

    # -- serialization -------------------------------------------------
    def to_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"{MAGIC} version={self.version} config_hash={self.config_hash}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([fmt(v) for v in r])
        return buf.getvalue()

    @classmethod
    def from_csv_text(cls, text: str) -> "TrajectoryLog":
        lines = text.splitlines()
        if not lines or not lines[0].startswith(MAGIC):
            raise FormatError("missing trajectory header line")
        fields = dict(tok.split("=", 1) for tok in lines[0][len(MAGIC) :].split() if "=" in tok)
        try:
            version = int(fields["version"])
        except (KeyError, ValueError):
            raise FormatError("trajectory header lacks a version") from None
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported trajectory version {version}")
        reader = csv.reader(lines[1:])
        try:
            columns = next(reader)
        except StopIteration:
            raise FormatError("trajectory has no column header") from None
        log = cls(columns=columns, config_hash=fields.get("config_hash", ""), version=version)
        for n, r in enumerate(reader):
            if len(r) != len(columns):
                raise FormatError(f"row {n} has {len(r)} fields, expected {len(columns)}")
            try:
                log.append([float(v) for v in r])
            except ValueError as exc:
                raise FormatError(f"row {n}: {exc}") from None
        return log

    def write_csv(self, path: str | Path) -> None:
        from .io import atomic_write_text

        atomic_write_text(path, self.to_csv_text())

    @classmethod
    def read_csv(cls, path: str | Path) -> "TrajectoryLog":
        return cls.from_csv_text(Path(path).read_text())
