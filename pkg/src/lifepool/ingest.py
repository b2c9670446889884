"""Dataset ingestion, run configuration and report serialization.

The canonical input is a UTF-8 CSV with a header row naming at least
``gender, percentile, age, q`` (remappable through DatasetConfig).  Rates are
converted to per-unit probabilities on load; per-1000 tables are accepted on
input only.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .calibrate import GENDERS, MortalityObservations

__all__ = [
    "DatasetConfig",
    "RunConfig",
    "LoadResult",
    "PoolingReport",
    "REPORT_COLUMNS",
    "load_mortality_csv",
    "write_report",
    "read_report",
]

RATE_SCALES = ("per-unit", "per-1000")


@dataclass(frozen=True)
class DatasetConfig:
    """Where the mortality table lives and how its columns are named."""

    path: str | Path
    rate_scale: str = "per-unit"
    gender_column: str = "gender"
    percentile_column: str = "percentile"
    age_column: str = "age"
    q_column: str = "q"
    fit_window: tuple[float, float] | None = None

    def __post_init__(self):
        if self.rate_scale not in RATE_SCALES:
            raise ValueError(
                f"rate_scale must be one of {RATE_SCALES} (got {self.rate_scale!r})"
            )
        if self.fit_window is not None:
            lo, hi = self.fit_window
            if hi <= lo:
                raise ValueError(f"empty fit window {self.fit_window}")


@dataclass(frozen=True)
class RunConfig:
    """Pipeline settings shared by the CLI and the report builder."""

    r: float = 0.03
    gamma: tuple[float, ...] = (3.0,)
    lam: float = 0.0
    group_percentile: int = 50
    output_format: str = "csv"

    def __post_init__(self):
        gammas = tuple(float(g) for g in (
            self.gamma if isinstance(self.gamma, (tuple, list)) else (self.gamma,)
        ))
        object.__setattr__(self, "gamma", gammas)
        if any(g <= 0 for g in self.gamma):
            raise ValueError(f"gamma values must be > 0 (got {self.gamma})")
        if not 1 <= self.group_percentile <= 100:
            raise ValueError(
                f"group_percentile must be in [1, 100] (got {self.group_percentile})"
            )
        if self.r < 0:
            raise ValueError(f"valuation rate must be >= 0 (got {self.r})")
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0 (got {self.lam})")
        if self.output_format not in ("csv", "json"):
            raise ValueError(f"output_format must be csv or json")

    @classmethod
    def from_json(cls, path: str | Path) -> "RunConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {"r", "gamma", "lam", "group_percentile", "output_format"}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)


@dataclass(frozen=True)
class LoadResult:
    """Validated cohorts plus the per-row rejection report."""

    cohorts: list[MortalityObservations]
    rejected: list[str] = field(default_factory=list)


def load_mortality_csv(config: DatasetConfig) -> LoadResult:
    """Load and validate a mortality table into per-cohort observations.

    Rows are grouped by (gender, percentile) with ages sorted and rates
    scaled to per-unit.  Structurally malformed rows and duplicate
    (gender, percentile, age) keys raise immediately with the line number;
    rows whose scaled rate falls outside [0, 1) are dropped and reported.
    """
    path = Path(config.path)
    if not path.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    scale = 1.0 if config.rate_scale == "per-unit" else 1e-3

    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file, expected a header row")
        needed = {config.gender_column, config.percentile_column,
                  config.age_column, config.q_column}
        missing = needed - set(reader.fieldnames)
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")

        grouped: dict[tuple[str, int], dict[float, float]] = {}
        rejected: list[str] = []
        for line_no, row in enumerate(reader, start=2):
            try:
                gender = (row[config.gender_column] or "").strip().lower()
                percentile = int(row[config.percentile_column])
                age = float(row[config.age_column])
                q = float(row[config.q_column]) * scale
            except (TypeError, ValueError, KeyError) as exc:
                raise ValueError(f"{path}:{line_no}: malformed row ({exc})") from None
            if gender not in GENDERS:
                raise ValueError(f"{path}:{line_no}: unknown gender {gender!r}")
            if not 1 <= percentile <= 100:
                raise ValueError(f"{path}:{line_no}: percentile {percentile} out of range")
            if not math.isfinite(age) or age < 0:
                raise ValueError(f"{path}:{line_no}: invalid age {age}")
            if not 0.0 <= q < 1.0:
                rejected.append(
                    f"{path}:{line_no}: rate {q:g} at (gender={gender}, "
                    f"percentile={percentile}, age={age:g}) outside [0, 1) "
                    "after scaling; row dropped"
                )
                continue
            key = (gender, percentile)
            ages = grouped.setdefault(key, {})
            if age in ages:
                raise ValueError(
                    f"{path}:{line_no}: duplicate entry for "
                    f"(gender={gender}, percentile={percentile}, age={age:g})"
                )
            ages[age] = q

    cohorts = []
    for (gender, percentile), rows in sorted(grouped.items()):
        ages = np.array(sorted(rows))
        q = np.array([rows[a] for a in ages])
        cohorts.append(MortalityObservations(gender, percentile, ages, q))
    return LoadResult(cohorts=cohorts, rejected=rejected)


@dataclass(frozen=True)
class PoolingReport:
    """One cohort's row of the full pipeline output."""

    percentile: int
    gender: str
    h65: float
    g: float
    m: float
    b: float
    e_t65: float
    sd_t65: float
    covol: float
    annuity_factor: float
    delta_individual: float
    delta_group: float
    wtp_individual: float
    wtp_group: float


REPORT_COLUMNS = (
    "percentile", "gender", "h65", "g", "m", "b", "e_t65", "sd_t65", "covol",
    "annuity_factor", "delta_individual", "delta_group",
    "wtp_individual", "wtp_group",
)


def _sig6(value: float) -> float:
    return float(f"{value:.6g}")


def write_report(rows: Sequence[PoolingReport], format: str = "csv",
                 path: str | Path | None = None) -> str:
    """Serialize report rows with a stable column order and 6 significant digits.

    Returns the document as a string; also writes it to ``path`` when given.
    """
    if not rows:
        raise ValueError("report has no rows")
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for row in rows:
            writer.writerow(
                [row.percentile, row.gender]
                + [f"{getattr(row, col):.6g}" for col in REPORT_COLUMNS[2:]]
            )
        document = buf.getvalue()
    elif format == "json":
        payload = [
            {
                "percentile": row.percentile,
                "gender": row.gender,
                **{col: _sig6(getattr(row, col)) for col in REPORT_COLUMNS[2:]},
            }
            for row in rows
        ]
        document = json.dumps(payload, indent=2) + "\n"
    else:
        raise ValueError(f"format must be csv or json (got {format!r})")

    if path is not None:
        try:
            Path(path).write_text(document, encoding="utf-8")
        except OSError as exc:
            raise OSError(f"could not write report to {path}: {exc}") from exc
    return document


def read_report(document: str, format: str = "csv") -> list[PoolingReport]:
    """Parse a document produced by write_report back into rows."""
    rows: list[PoolingReport] = []
    if format == "csv":
        reader = csv.DictReader(io.StringIO(document))
        records = list(reader)
    elif format == "json":
        records = json.loads(document)
    else:
        raise ValueError(f"format must be csv or json (got {format!r})")
    for record in records:
        rows.append(
            PoolingReport(
                percentile=int(record["percentile"]),
                gender=str(record["gender"]),
                **{col: float(record[col]) for col in REPORT_COLUMNS[2:]},
            )
        )
    if not rows:
        raise ValueError("document contains no report rows")
    return rows
