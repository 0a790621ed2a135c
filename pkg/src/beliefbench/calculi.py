"""Three evidence-aggregation calculi over the three-color hypothesis frame.

Each calculus turns elicited parameters plus a sequence of observed shapes
into a ranking of the three colors:

* classical Bayes: a prior over colors and per-color shape likelihoods,
  combined under conditional independence;
* certainty factors: one belief change in [-1, +1] per (color, shape),
  merged with the parallel-combination rule;
* Dempster-Shafer: lower/upper probability bounds per (color, shape) turned
  into mass functions over the 8 subsets of the frame and fused with
  Dempster's rule.

Subsets of the color frame are represented as 3-bit masks: bit ``c`` is set
when color ``c`` (by its :class:`~beliefbench.blockworld.Color` value) is in
the subset.  Mask 0 is the empty set, mask 7 the whole frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .blockworld import COLORS, SHAPES, Color, Shape

FULL_MASK = 0b111
_N_SUBSETS = 8

# _INTERSECT[i*8+j] is the mask of subset_i & subset_j; for bitmask-coded
# subsets the set intersection is the bitwise AND.
_INTERSECT = (np.arange(8)[:, None] & np.arange(8)[None, :]).ravel()


class ImpossibleEvidenceError(ValueError):
    """Every color has zero posterior weight; carries the prior fallback."""

    def __init__(self, message: str, prior: np.ndarray):
        super().__init__(message)
        self.prior = np.array(prior, dtype=float)


class ContradictionError(ValueError):
    """Certain belief met certain disbelief (+1 combined with -1)."""


class UndefinedCfError(ValueError):
    """No certainty factor maps this prior/posterior pair."""


class InvalidElicitationError(ValueError):
    """Interval bounds rejected; names the offending color when one exists."""

    def __init__(self, message: str, color: Color | None = None):
        super().__init__(message)
        self.color = color


class TotalConflictError(ValueError):
    """Dempster combination with (numerically) nothing left to renormalize."""

    def __init__(self, conflict: float):
        super().__init__(f"total conflict: K = {conflict!r}")
        self.conflict = conflict


def subset_mask(colors: Iterable[Color] | int) -> int:
    """Coerce a color collection (or an existing mask) to a subset mask."""
    if isinstance(colors, int):
        mask = colors
    else:
        mask = 0
        for c in colors:
            mask |= 1 << Color(c).value
    if not 0 <= mask <= FULL_MASK:
        raise ValueError(f"subset mask out of range: {mask}")
    return mask


def subset_colors(mask: int) -> frozenset[Color]:
    return frozenset(c for c in COLORS if mask & (1 << c.value))


def _frozen_array(values, shape) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"expected array of shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("parameters must be finite")
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Bayes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BayesParams:
    """Prior over colors plus likelihood matrix ``likelihood[color][shape]``.

    Inputs are renormalized on construction (prior to total 1, each
    likelihood row to total 1), so slightly off estimates are repaired
    rather than rejected.  Negative entries and all-zero rows are errors.
    """

    prior: np.ndarray
    likelihood: np.ndarray

    def __post_init__(self):
        prior = np.array(self.prior, dtype=float)
        lik = np.array(self.likelihood, dtype=float)
        if prior.shape != (3,) or lik.shape != (3, 3):
            raise ValueError("prior must be length 3 and likelihood 3x3")
        if np.any(prior < 0) or np.any(lik < 0):
            raise ValueError("probabilities must be non-negative")
        if prior.sum() <= 0:
            raise ValueError("prior has no mass")
        if np.any(lik.sum(axis=1) <= 0):
            raise ValueError("each color needs a positive likelihood row")
        prior = prior / prior.sum()
        lik = lik / lik.sum(axis=1, keepdims=True)
        prior.setflags(write=False)
        lik.setflags(write=False)
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "likelihood", lik)

    @cached_property
    def _log_prior(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.prior)

    @cached_property
    def _log_likelihood(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.likelihood)


def bayes_posterior(params: BayesParams, evidence: Sequence[Shape]) -> np.ndarray:
    """Posterior over colors given conditionally independent shape draws.

    Computed in log space so long evidence lists cannot underflow.  Empty
    evidence returns the prior unchanged.  If every color ends up with zero
    weight (each had a hard-zero likelihood somewhere in the evidence) the
    evidence is impossible under the model and
    :class:`ImpossibleEvidenceError` is raised with the prior attached.
    """
    if len(evidence) == 0:
        return params.prior.copy()
    idx = np.asarray(evidence, dtype=np.intp)
    if idx.ndim != 1 or np.any(idx < 0) or np.any(idx > 2):
        raise ValueError("evidence must be a sequence of shapes")
    log_post = params._log_prior + params._log_likelihood[:, idx].sum(axis=1)
    peak = log_post.max()
    if peak == -np.inf:
        raise ImpossibleEvidenceError(
            "evidence has zero likelihood under every color", params.prior
        )
    weights = np.exp(log_post - peak)
    return weights / weights.sum()


# ---------------------------------------------------------------------------
# Certainty factors
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CfParams:
    """Certainty factor per (color, shape): ``values[color][shape]``."""

    values: np.ndarray

    def __post_init__(self):
        values = _frozen_array(self.values, (3, 3))
        if np.any(values < -1.0) or np.any(values > 1.0):
            raise ValueError("certainty factors must lie in [-1, 1]")
        object.__setattr__(self, "values", values)


def cf_from_probabilities(prior: float, posterior: float) -> float:
    """Certainty factor equivalent to moving belief from prior to posterior.

    Increased belief maps to (post - prior) / (1 - prior), decreased belief
    to (post - prior) / prior; no change is 0.  The endpoints where the
    denominator vanishes (certain prior pushed further) admit no finite
    factor and raise :class:`UndefinedCfError`.
    """
    for name, p in (("prior", prior), ("posterior", posterior)):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{name} must be a probability, got {p!r}")
    if posterior == prior:
        return 0.0
    if posterior > prior:
        if prior >= 1.0:
            raise UndefinedCfError("belief above a certain prior is undefined")
        return (posterior - prior) / (1.0 - prior)
    if prior <= 0.0:
        raise UndefinedCfError("belief below an impossible prior is undefined")
    return (posterior - prior) / prior


def cf_combine(x: float, y: float) -> float:
    """Parallel combination of two certainty factors.

    Both non-negative: ``x + y - xy``; both non-positive: ``x + y + xy``;
    mixed signs: ``(x + y) / (1 - min(|x|, |y|))``.  Combining +1 with -1 is
    a :class:`ContradictionError`.  The rule is commutative and associative,
    0 is its identity, and +1/-1 absorb anything of matching sign.
    """
    for v in (x, y):
        if not -1.0 <= v <= 1.0:
            raise ValueError(f"certainty factor out of range: {v!r}")
    if (x == 1.0 and y == -1.0) or (x == -1.0 and y == 1.0):
        raise ContradictionError("cannot combine certainty +1 with certainty -1")
    if x >= 0.0 and y >= 0.0:
        result = x + y - x * y
    elif x <= 0.0 and y <= 0.0:
        result = x + y + x * y
    else:
        result = (x + y) / (1.0 - min(abs(x), abs(y)))
    # Guard against the last bit of rounding drifting outside the range.
    return min(1.0, max(-1.0, result))


def cf_aggregate(params: CfParams, evidence: Sequence[Shape]) -> np.ndarray:
    """Fold :func:`cf_combine` over the evidence, separately per color.

    Empty evidence leaves every color at 0 (no belief change).
    """
    totals = np.zeros(3)
    values = params.values
    for color in COLORS:
        acc = 0.0
        row = values[color]
        for shape in evidence:
            acc = cf_combine(acc, float(row[shape]))
        totals[color] = acc
    return totals


# ---------------------------------------------------------------------------
# Dempster-Shafer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BeliefInterval:
    """Lower and upper probability bounds for a single color."""

    lower: float
    upper: float

    def __post_init__(self):
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)):
            raise ValueError("interval bounds must be finite")
        if not 0.0 <= self.lower <= 1.0 or not 0.0 <= self.upper <= 1.0:
            raise ValueError(
                f"interval bounds must lie in [0, 1], got [{self.lower}, {self.upper}]"
            )

    @property
    def width(self) -> float:
        return self.upper - self.lower


class IntervalMode(Enum):
    """How :func:`mass_from_intervals` treats inconsistent bounds."""

    STRICT = "strict"
    REPAIR = "repair"


@dataclass(frozen=True, eq=False)
class MassFunction:
    """Basic probability assignment over the 8 subsets of the color frame.

    ``masses[mask]`` is the mass on the subset coded by ``mask``.  The empty
    set carries none, every entry is non-negative, and the stored total is 1
    to well within 1e-12: rounding-level drift (at most 1e-9, as accumulates
    over long combination folds) is renormalized away, anything larger
    raises.  Inputs already within an ulp of 1 are stored untouched, so
    combining with the vacuous function reproduces a mass function bit for
    bit.
    """

    masses: np.ndarray

    def __post_init__(self):
        arr = np.array(self.masses, dtype=float)
        if arr.shape != (_N_SUBSETS,):
            raise ValueError("a mass function assigns to exactly 8 subsets")
        if not np.all(np.isfinite(arr)):
            raise ValueError("masses must be finite")
        if np.any(arr < -1e-12):
            raise ValueError("masses must be non-negative")
        np.clip(arr, 0.0, None, out=arr)
        if arr[0] > 1e-12:
            raise ValueError(f"the empty set cannot carry mass, got {arr[0]!r}")
        arr[0] = 0.0
        total = arr.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"masses must total 1, got {total!r}")
        if abs(total - 1.0) > 1e-15:
            arr /= total
        arr.setflags(write=False)
        object.__setattr__(self, "masses", arr)

    @classmethod
    def vacuous(cls) -> "MassFunction":
        """Total ignorance: all mass on the full frame."""
        arr = np.zeros(_N_SUBSETS)
        arr[FULL_MASK] = 1.0
        return cls(arr)

    @classmethod
    def from_subsets(cls, assignment: dict) -> "MassFunction":
        """Build from ``{colors-or-mask: mass}``; unlisted subsets get 0."""
        arr = np.zeros(_N_SUBSETS)
        for subset, mass in assignment.items():
            arr[subset_mask(subset)] += mass
        return cls(arr)

    def mass(self, subset: Iterable[Color] | int) -> float:
        return float(self.masses[subset_mask(subset)])

    def belief(self, subset: Iterable[Color] | int) -> float:
        """Total mass committed to subsets contained in ``subset``."""
        mask = subset_mask(subset)
        return float(
            sum(self.masses[b] for b in range(1, _N_SUBSETS) if b & mask == b)
        )

    def plausibility(self, subset: Iterable[Color] | int) -> float:
        """Total mass not committed against ``subset``."""
        mask = subset_mask(subset)
        return float(
            sum(self.masses[b] for b in range(1, _N_SUBSETS) if b & mask)
        )


def mass_from_intervals(
    intervals: Sequence[BeliefInterval],
    mode: IntervalMode = IntervalMode.STRICT,
) -> MassFunction:
    """Turn per-color probability intervals into a mass function.

    Each lower bound becomes the mass of its singleton; the slack
    ``1 - sum(lower)`` goes to the full frame (two-color subsets get
    nothing).  In STRICT mode lower bounds that exceed their upper bound or
    total more than 1 raise :class:`InvalidElicitationError`; REPAIR mode
    swaps crossed bounds and rescales an over-committed lower row to total 1.
    """
    if len(intervals) != 3:
        raise ValueError("need one interval per color")
    lowers = np.zeros(3)
    for color in COLORS:
        iv = intervals[color]
        if iv.upper < iv.lower:
            if mode is IntervalMode.STRICT:
                raise InvalidElicitationError(
                    f"{color.label}: upper bound {iv.upper!r} below lower "
                    f"bound {iv.lower!r}",
                    color=color,
                )
            lowers[color] = iv.upper  # repaired: treat the crossed pair as swapped
        else:
            lowers[color] = iv.lower
    slack = 1.0 - lowers.sum()
    if slack < 0.0:
        if slack < -1e-9 and mode is IntervalMode.STRICT:
            raise InvalidElicitationError(
                f"lower bounds total {lowers.sum()!r} > 1"
            )
        # Rounding-level overshoot (any mode) or repair: rescale to total 1.
        lowers = lowers / lowers.sum()
        slack = 0.0
    arr = np.zeros(_N_SUBSETS)
    arr[0b001], arr[0b010], arr[0b100] = lowers
    arr[FULL_MASK] = slack
    return MassFunction(arr)


def dempster_combine(m1: MassFunction, m2: MassFunction) -> MassFunction:
    """Dempster's rule: intersect focal elements, renormalize away conflict.

    The unnormalized combination puts ``m1(B) * m2(C)`` on ``B & C`` for all
    64 subset pairs; the weight K landing on the empty set is the conflict,
    and the rest is divided by ``1 - K``.  K within 1e-12 of 1 raises
    :class:`TotalConflictError`.  The vacuous mass function is the identity.
    """
    products = np.outer(m1.masses, m2.masses).ravel()
    combined = np.bincount(_INTERSECT, weights=products, minlength=_N_SUBSETS)
    conflict = float(combined[0])
    if conflict >= 1.0 - 1e-12:
        raise TotalConflictError(conflict)
    combined[0] = 0.0
    if conflict > 0.0:
        # Normalize by the surviving mass rather than 1 - K: the bins are
        # sums of non-negative products, so this stays accurate even when K
        # is close to 1, where the subtraction would cancel catastrophically.
        combined /= combined.sum()
    return MassFunction(combined)


@dataclass(frozen=True, eq=False)
class DsParams:
    """Belief intervals per (color, shape): ``lower/upper[color][shape]``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = _frozen_array(self.lower, (3, 3))
        upper = _frozen_array(self.upper, (3, 3))
        if np.any(lower < 0) or np.any(upper > 1) or np.any(upper < lower):
            raise ValueError("need 0 <= lower <= upper <= 1 for every cell")
        if np.any(lower.sum(axis=0) > 1.0 + 1e-9):
            raise ValueError("lower bounds for a shape must total at most 1")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    def interval(self, color: Color, shape: Shape) -> BeliefInterval:
        return BeliefInterval(float(self.lower[color][shape]), float(self.upper[color][shape]))

    def intervals_for_shape(self, shape: Shape) -> tuple[BeliefInterval, ...]:
        return tuple(self.interval(color, shape) for color in COLORS)

    @cached_property
    def _shape_masses(self) -> tuple[MassFunction, ...]:
        return tuple(
            mass_from_intervals(self.intervals_for_shape(shape)) for shape in SHAPES
        )


def ds_aggregate(params: DsParams, evidence: Sequence[Shape]) -> MassFunction:
    """Fuse one mass function per observed shape under Dempster's rule.

    Empty evidence yields the vacuous mass function.
    """
    result = MassFunction.vacuous()
    for shape in evidence:
        result = dempster_combine(result, params._shape_masses[Shape(shape)])
    return result


# ---------------------------------------------------------------------------
# Rankings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ranking:
    """Colors ordered best-guess first, with the scores that produced it.

    ``scores`` is indexed by :class:`Color` value, not by rank.  Exact score
    ties fall back to the fixed color order green < red < gold.  ``fallback``
    names the degradation applied when the calculus could not score the
    evidence (``"impossible-evidence"`` or ``"total-conflict"``), else None.
    """

    order: tuple[Color, Color, Color]
    scores: tuple[float, float, float]
    fallback: str | None = None

    def __post_init__(self):
        if sorted(self.order) != list(COLORS):
            raise ValueError("order must be a permutation of the three colors")

    def position(self, color: Color) -> int:
        """1-based guessing position of ``color``."""
        return self.order.index(color) + 1


def _ranked(scores: np.ndarray, tiebreak: np.ndarray | None = None,
            fallback: str | None = None) -> Ranking:
    if tiebreak is None:
        key = lambda c: (-scores[c], c.value)
    else:
        key = lambda c: (-scores[c], -tiebreak[c], c.value)
    order = tuple(sorted(COLORS, key=key))
    return Ranking(order=order, scores=tuple(float(s) for s in scores),
                   fallback=fallback)


def rank_bayes(posterior: np.ndarray, fallback: str | None = None) -> Ranking:
    """Rank colors by posterior probability."""
    posterior = np.asarray(posterior, dtype=float)
    if posterior.shape != (3,):
        raise ValueError("posterior must have one entry per color")
    return _ranked(posterior, fallback=fallback)


def rank_cf(cfs: np.ndarray) -> Ranking:
    """Rank colors by aggregated certainty factor."""
    cfs = np.asarray(cfs, dtype=float)
    if cfs.shape != (3,):
        raise ValueError("need one certainty factor per color")
    return _ranked(cfs)


def rank_ds(mass: MassFunction, fallback: str | None = None) -> Ranking:
    """Rank colors by singleton belief, breaking ties by plausibility.

    Recorded scores are the singleton beliefs.
    """
    beliefs = np.array([mass.belief({c}) for c in COLORS])
    plaus = np.array([mass.plausibility({c}) for c in COLORS])
    return _ranked(beliefs, tiebreak=plaus, fallback=fallback)
