"""The colored-block domain: a 3x3 shape/color census and its samplers.

Blocks have a shape (square, circle, triangle) and a color (green, red,
gold).  A :class:`ContingencyTable` holds the joint census counts; all
probabilities in the package are ratios of these integer counts.  The default
census is chosen so that each shape carries a different amount of information
about color: squares rule a color out entirely, circles favor one strongly,
and triangles say nothing at all.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from functools import cached_property

import numpy as np


class Shape(IntEnum):
    SQUARE = 0
    CIRCLE = 1
    TRIANGLE = 2

    @property
    def label(self) -> str:
        return self.name.lower()


class Color(IntEnum):
    GREEN = 0
    RED = 1
    GOLD = 2

    @property
    def label(self) -> str:
        return self.name.lower()


# Fixed orders used for iteration and for deterministic tie-breaking.
SHAPES: tuple[Shape, ...] = tuple(Shape)
COLORS: tuple[Color, ...] = tuple(Color)


def shape_from_label(label: str) -> Shape:
    try:
        return Shape[label.strip().upper()]
    except KeyError:
        raise ValueError(f"unknown shape {label!r}") from None


def color_from_label(label: str) -> Color:
    try:
        return Color[label.strip().upper()]
    except KeyError:
        raise ValueError(f"unknown color {label!r}") from None


class PriorMode(Enum):
    """How the true color of a bag is drawn."""

    MARGINAL = "marginal"
    UNIFORM = "uniform"


class DegenerateEvidenceError(ValueError):
    """A shape with zero census count cannot condition anything."""


class DegenerateHypothesisError(ValueError):
    """A color with zero census count has no shape distribution."""


class TableFormatError(ValueError):
    """A census CSV failed validation; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class ContingencyTable:
    """Immutable joint census: ``counts[shape][color]`` block tallies.

    Row/column/grand totals are computed once at construction.  Counts must be
    non-negative integers with a positive grand total.
    """

    counts: tuple[tuple[int, int, int], ...]
    row_total: tuple[int, int, int] = field(init=False)
    col_total: tuple[int, int, int] = field(init=False)
    grand_total: int = field(init=False)

    def __post_init__(self):
        if len(self.counts) != 3 or any(len(row) != 3 for row in self.counts):
            raise ValueError("counts must be 3 rows (shapes) x 3 columns (colors)")
        flat = [c for row in self.counts for c in row]
        if any(not isinstance(c, int) or isinstance(c, bool) for c in flat):
            raise ValueError("counts must be plain integers")
        if any(c < 0 for c in flat):
            raise ValueError("counts must be non-negative")
        rows = tuple(sum(row) for row in self.counts)
        cols = tuple(sum(col) for col in zip(*self.counts))
        grand = sum(rows)
        if grand <= 0:
            raise ValueError("census must contain at least one block")
        object.__setattr__(self, "counts", tuple(tuple(row) for row in self.counts))
        object.__setattr__(self, "row_total", rows)
        object.__setattr__(self, "col_total", cols)
        object.__setattr__(self, "grand_total", grand)

    def count(self, shape: Shape, color: Color) -> int:
        return self.counts[shape][color]

    def as_array(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64)

    # Cumulative joint distribution over the 9 cells, row-major; used by the
    # samplers so each block costs one uniform draw.
    @cached_property
    def _joint_cumulative(self) -> np.ndarray:
        joint = self.as_array().ravel() / self.grand_total
        return np.cumsum(joint)

    @cached_property
    def _color_cumulative(self) -> np.ndarray:
        return np.cumsum(np.asarray(self.col_total) / self.grand_total)

    @cached_property
    def _shape_given_color_cumulative(self) -> np.ndarray:
        # Zero-count colors get a NaN row; sample_bag refuses them up front.
        rows = np.full((3, 3), np.nan)
        for color in COLORS:
            if self.col_total[color] > 0:
                rows[color] = np.cumsum(shape_given_color(self, color))
        return rows


def default_table() -> ContingencyTable:
    """The built-in 324-block census (rows square/circle/triangle, columns
    green/red/gold)."""
    return ContingencyTable((
        (0, 48, 24),
        (96, 16, 32),
        (36, 36, 36),
    ))


_CSV_HEADER = ["shape", "green", "red", "gold"]


def load_table(path) -> ContingencyTable:
    """Load a census from a CSV file of 3 integer rows.

    Expected layout::

        shape,green,red,gold
        square,0,48,24
        circle,96,16,32
        triangle,36,36,36

    Rows may appear in any order but each shape must appear exactly once.
    Raises :class:`TableFormatError` with a line number on malformed input.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TableFormatError("empty file", line=1) from None
        if [h.strip().lower() for h in header] != _CSV_HEADER:
            raise TableFormatError(
                f"expected header {','.join(_CSV_HEADER)!r}, got {','.join(header)!r}",
                line=1,
            )
        rows: dict[Shape, tuple[int, int, int]] = {}
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 4:
                raise TableFormatError(
                    f"expected 4 fields, got {len(row)}", line=line_no
                )
            try:
                shape = shape_from_label(row[0])
            except ValueError as exc:
                raise TableFormatError(str(exc), line=line_no) from None
            if shape in rows:
                raise TableFormatError(
                    f"duplicate row for shape {shape.label!r}", line=line_no
                )
            cells = []
            for cell in row[1:]:
                text = cell.strip()
                if not text.lstrip("+").isdigit():
                    raise TableFormatError(
                        f"count {cell!r} is not a non-negative integer", line=line_no
                    )
                cells.append(int(text))
            rows[shape] = tuple(cells)
        missing = [s.label for s in SHAPES if s not in rows]
        if missing:
            raise TableFormatError(f"missing rows for shapes: {', '.join(missing)}")
    try:
        return ContingencyTable(tuple(rows[s] for s in SHAPES))
    except ValueError as exc:
        raise TableFormatError(str(exc)) from None


def color_given_shape(table: ContingencyTable, shape: Shape) -> np.ndarray:
    """P(color | shape) as a length-3 array indexed by :class:`Color`."""
    total = table.row_total[shape]
    if total == 0:
        raise DegenerateEvidenceError(
            f"shape {shape.label!r} has zero census count"
        )
    return np.array([table.counts[shape][c] / total for c in COLORS])


def shape_given_color(table: ContingencyTable, color: Color) -> np.ndarray:
    """P(shape | color) as a length-3 array indexed by :class:`Shape`."""
    total = table.col_total[color]
    if total == 0:
        raise DegenerateHypothesisError(
            f"color {color.label!r} has zero census count"
        )
    return np.array([table.counts[s][color] / total for s in SHAPES])


def color_prior(table: ContingencyTable) -> np.ndarray:
    """Marginal P(color) as a length-3 array indexed by :class:`Color`."""
    return np.array([table.col_total[c] / table.grand_total for c in COLORS])


@dataclass(frozen=True)
class TrialRecord:
    """One training draw: the block shown and its revealed color."""

    index: int  # 1-based position in the training sequence
    shape: Shape
    color: Color


@dataclass(frozen=True)
class BagScenario:
    """A diagnosis task: every block in the bag has the same (hidden) color."""

    true_color: Color
    shapes: tuple[Shape, ...]


def sample_block(table: ContingencyTable, rng: np.random.Generator) -> tuple[Shape, Color]:
    """Draw one block from the joint census distribution.

    Consumes exactly one uniform variate, so batched and one-at-a-time
    sampling walk the stream identically.
    """
    cell = int(np.searchsorted(table._joint_cumulative, rng.random(), side="right"))
    cell = min(cell, 8)
    return Shape(cell // 3), Color(cell % 3)


def sample_blocks(table: ContingencyTable, n: int, rng: np.random.Generator) -> list[TrialRecord]:
    """Draw ``n`` independent blocks; records are numbered from 1."""
    if n < 0:
        raise ValueError("n must be non-negative")
    cells = np.searchsorted(table._joint_cumulative, rng.random(n), side="right")
    cells = np.minimum(cells, 8)
    return [
        TrialRecord(i + 1, Shape(int(c) // 3), Color(int(c) % 3))
        for i, c in enumerate(cells)
    ]


def sample_bag(
    table: ContingencyTable,
    size: int,
    prior_mode: PriorMode,
    rng: np.random.Generator,
) -> BagScenario:
    """Draw a bag: one true color, then ``size`` i.i.d. shapes given it.

    ``PriorMode.MARGINAL`` draws the color from the census marginal;
    ``PriorMode.UNIFORM`` gives each color probability 1/3 (and requires every
    color to have a positive census count so its shape distribution exists).
    """
    if size < 1:
        raise ValueError("bag size must be at least 1")
    if prior_mode is PriorMode.UNIFORM:
        cum = np.array([1 / 3, 2 / 3, 1.0])
    else:
        cum = table._color_cumulative
    color = Color(min(int(np.searchsorted(cum, rng.random(), side="right")), 2))
    if table.col_total[color] == 0:
        raise DegenerateHypothesisError(
            f"color {color.label!r} has zero census count"
        )
    shape_cum = table._shape_given_color_cumulative[color]
    draws = np.searchsorted(shape_cum, rng.random(size), side="right")
    shapes = tuple(Shape(int(s)) for s in np.minimum(draws, 2))
    return BagScenario(true_color=color, shapes=shapes)
