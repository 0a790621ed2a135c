"""Delimited output: result rows, parameter round-trips, run manifests.

All files use comma separators, ``.`` decimal points, LF line endings, and
6-significant-digit floats, so identical runs are byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .blockworld import COLORS, SHAPES, Color, Shape, color_from_label, shape_from_label
from .calculi import BayesParams, CfParams, DsParams
from .experts import ElicitationReport

# Result rows share one long-format header across comparators.  shape_or_size
# holds a shape label (reversal/guessing) or a bag size (bags); conflicts
# counts replications degraded to a fallback ranking; status is "ok" or
# "error:<Type>" for cells whose engine raised.
RESULT_COLUMNS = (
    "comparator",
    "calculus",
    "expert_model",
    "shape_or_size",
    "metric",
    "value",
    "std",
    "replications",
    "seed",
    "conflicts",
    "status",
    "config_checksum",
)

PARAMS_COLUMNS = ("calculus", "color", "shape", "v1", "v2", "checkpoint")


def format_number(value) -> str:
    """Render a number for CSV: ints verbatim, floats to 6 significant digits."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:#.6g}"


@dataclass(frozen=True)
class ResultRow:
    comparator: str
    calculus: str
    expert_model: str
    shape_or_size: str
    metric: str
    value: float | int | None
    std: float | None = None
    replications: int | None = None
    seed: int = 0
    conflicts: int = 0
    status: str = "ok"
    config_checksum: str = ""

    def as_record(self) -> list[str]:
        return [
            self.comparator,
            self.calculus,
            self.expert_model,
            self.shape_or_size,
            self.metric,
            format_number(self.value),
            format_number(self.std),
            format_number(self.replications),
            str(self.seed),
            str(self.conflicts),
            self.status,
            self.config_checksum,
        ]


def write_results(path, rows: list[ResultRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow(row.as_record())


def read_results(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# Parameter serialization
# ---------------------------------------------------------------------------

def params_rows(report: ElicitationReport) -> list[list[str]]:
    """Flatten one elicitation to rows of the parameter layout.

    Layout: one row per (calculus, color, shape) with ``v1``/``v2`` holding
    the calculus-specific values (Bayes likelihood, certainty factor, or
    interval bounds); the Bayes prior rides in three ``bayes-prior`` rows
    with an empty shape column.
    """
    ck = str(report.checkpoint)
    rows = []
    for color in COLORS:
        rows.append([
            "bayes-prior", color.label, "",
            format_number(float(report.bayes.prior[color])), "", ck,
        ])
    for color in COLORS:
        for shape in SHAPES:
            rows.append([
                "bayes", color.label, shape.label,
                format_number(float(report.bayes.likelihood[color][shape])), "", ck,
            ])
    for color in COLORS:
        for shape in SHAPES:
            rows.append([
                "cf", color.label, shape.label,
                format_number(float(report.cf.values[color][shape])), "", ck,
            ])
    for color in COLORS:
        for shape in SHAPES:
            rows.append([
                "ds", color.label, shape.label,
                format_number(float(report.ds.lower[color][shape])),
                format_number(float(report.ds.upper[color][shape])), ck,
            ])
    return rows


def write_params(path, reports: list[ElicitationReport]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PARAMS_COLUMNS)
        for report in reports:
            writer.writerows(params_rows(report))


class ParamsFormatError(ValueError):
    """Parameter CSV failed validation."""


def read_params(path) -> list[ElicitationReport]:
    """Rebuild elicitation reports from the parameter layout.

    Values pass through 6-significant-digit text, so round-trips agree to
    about 1e-6 relative precision, not exactly.
    """
    priors: dict[int, np.ndarray] = {}
    liks: dict[int, np.ndarray] = {}
    cfs: dict[int, np.ndarray] = {}
    lowers: dict[int, np.ndarray] = {}
    uppers: dict[int, np.ndarray] = {}

    def slot(store: dict[int, np.ndarray], ck: int) -> np.ndarray:
        if ck not in store:
            store[ck] = np.full((3, 3), np.nan)
        return store[ck]

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != PARAMS_COLUMNS:
            raise ParamsFormatError(
                f"expected header {','.join(PARAMS_COLUMNS)!r}"
            )
        for line_no, row in enumerate(reader, start=2):
            try:
                ck = int(row["checkpoint"] or 0)
                calculus = row["calculus"]
                color = color_from_label(row["color"])
                if calculus == "bayes-prior":
                    if ck not in priors:
                        priors[ck] = np.full(3, np.nan)
                    priors[ck][color] = float(row["v1"])
                    continue
                shape = shape_from_label(row["shape"])
                if calculus == "bayes":
                    slot(liks, ck)[color][shape] = float(row["v1"])
                elif calculus == "cf":
                    slot(cfs, ck)[color][shape] = float(row["v1"])
                elif calculus == "ds":
                    slot(lowers, ck)[color][shape] = float(row["v1"])
                    slot(uppers, ck)[color][shape] = float(row["v2"])
                else:
                    raise ValueError(f"unknown calculus {calculus!r}")
            except (ValueError, KeyError) as exc:
                raise ParamsFormatError(f"line {line_no}: {exc}") from None
    checkpoints = sorted(priors)
    if checkpoints != sorted(liks) or checkpoints != sorted(cfs) or checkpoints != sorted(lowers):
        raise ParamsFormatError("incomplete parameter file: calculi disagree on checkpoints")
    reports = []
    for ck in checkpoints:
        blocks = [priors[ck], liks[ck], cfs[ck], lowers[ck], uppers[ck]]
        if any(np.isnan(block).any() for block in blocks):
            raise ParamsFormatError(f"checkpoint {ck}: missing cells")
        reports.append(ElicitationReport(
            checkpoint=ck,
            bayes=BayesParams(prior=priors[ck], likelihood=liks[ck]),
            cf=CfParams(values=cfs[ck]),
            ds=DsParams(lower=lowers[ck], upper=uppers[ck]),
        ))
    return reports


# ---------------------------------------------------------------------------
# Run manifest
# ---------------------------------------------------------------------------

def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    """What a command produced, with enough detail to verify a re-run."""

    command: str
    base_seed: int
    config_checksum: str
    config_text: str
    outputs: dict[str, str] = field(default_factory=dict)  # name -> sha256
    observations: list[str] = field(default_factory=list)
    duration_seconds: float = 0.0

    def record_output(self, out_dir, name: str) -> None:
        self.outputs[name] = sha256_file(os.path.join(out_dir, name))

    def write(self, out_dir, name: str = "manifest.json") -> str:
        payload = {
            "command": self.command,
            "base_seed": self.base_seed,
            "config_checksum": self.config_checksum,
            "config": self.config_text.rstrip("\n").split("\n"),
            "outputs": dict(sorted(self.outputs.items())),
            "observations": self.observations,
            "duration_seconds": round(self.duration_seconds, 3),
        }
        path = os.path.join(out_dir, name)
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path
