"""Comparators that score expert systems on the block domain.

Three tasks, mirroring three views of aggregation quality:

* reversal test: pairwise "which color is more likely given this shape"
  questions, scored against the census truth;
* guessing task: guess colors for a single block until correct, scored by
  expected number of guesses (analytic or Monte Carlo);
* bag experiment: all blocks in a bag share one hidden color; the system
  aggregates the whole sample of shapes and guesses the color, at a range
  of bag sizes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

import numpy as np

from .blockworld import (
    COLORS,
    SHAPES,
    Color,
    ContingencyTable,
    PriorMode,
    Shape,
    color_given_shape,
    sample_bag,
    sample_blocks,
)
from .calculi import (
    BayesParams,
    CfParams,
    DsParams,
    ImpossibleEvidenceError,
    MassFunction,
    Ranking,
    TotalConflictError,
    bayes_posterior,
    cf_aggregate,
    ds_aggregate,
    rank_bayes,
    rank_cf,
    rank_ds,
)
from .experts import ElicitationReport

TRUTH_TIE_EPS = 1e-9  # census conditionals closer than this count as a tie


class Calculus(Enum):
    BAYES = "bayes"
    CF = "cf"
    DS = "ds"


_PARAMS_FOR = {Calculus.BAYES: BayesParams, Calculus.CF: CfParams, Calculus.DS: DsParams}


@dataclass(frozen=True)
class ExpertSystem:
    """One calculus engine loaded with one expert's parameters."""

    calculus: Calculus
    params: Union[BayesParams, CfParams, DsParams]

    def __post_init__(self):
        expected = _PARAMS_FOR[self.calculus]
        if not isinstance(self.params, expected):
            raise TypeError(
                f"{self.calculus.value} system needs {expected.__name__}, "
                f"got {type(self.params).__name__}"
            )


def systems_from_report(
    report: ElicitationReport,
    calculi: Sequence[Calculus] = tuple(Calculus),
) -> list[ExpertSystem]:
    """Build one system per requested calculus from a single elicitation."""
    params = {Calculus.BAYES: report.bayes, Calculus.CF: report.cf, Calculus.DS: report.ds}
    return [ExpertSystem(c, params[c]) for c in calculi]


def system_ranking(system: ExpertSystem, evidence: Sequence[Shape]) -> Ranking:
    """Aggregate ``evidence`` with the system's calculus and rank the colors.

    Bayes evidence that is impossible under the model degrades to a ranking
    of the prior alone, marked ``fallback="impossible-evidence"``.  Total
    conflict under Dempster-Shafer propagates; callers that must survive it
    (the bag experiment) substitute the vacuous ranking themselves.
    """
    if system.calculus is Calculus.BAYES:
        try:
            return rank_bayes(bayes_posterior(system.params, evidence))
        except ImpossibleEvidenceError as exc:
            return rank_bayes(exc.prior, fallback="impossible-evidence")
    if system.calculus is Calculus.CF:
        return rank_cf(cf_aggregate(system.params, evidence))
    return rank_ds(ds_aggregate(system.params, evidence))


# ---------------------------------------------------------------------------
# Reversal test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReversalScore:
    """Pairwise-question results.

    ``asked`` counts the questions whose true conditionals differ by more
    than ``TRUTH_TIE_EPS``; ``fraction`` is ``correct / asked`` (NaN if
    nothing was asked).  ``fraction_with_ties`` scores all 9 questions,
    crediting 0.5 for each truth-tied pair regardless of the answer.
    """

    asked: int
    correct: int
    fraction: float
    fraction_with_ties: float


def reversal_test(system: ExpertSystem, table: ContingencyTable) -> ReversalScore:
    """Ask every (shape, color-pair) question and score against the census.

    For each shape the system ranks the colors from that single piece of
    evidence; its answer to "is x more likely than y" is read off the
    ranking, so exact score ties answer in the fixed color order.
    """
    asked = 0
    correct = 0
    tied = 0
    for shape in SHAPES:
        truth = color_given_shape(table, shape)
        ranking = system_ranking(system, (shape,))
        for i, x in enumerate(COLORS):
            for y in COLORS[i + 1:]:
                if abs(truth[x] - truth[y]) <= TRUTH_TIE_EPS:
                    tied += 1
                    continue
                asked += 1
                says_x = ranking.position(x) < ranking.position(y)
                if says_x == (truth[x] > truth[y]):
                    correct += 1
    fraction = correct / asked if asked else float("nan")
    return ReversalScore(
        asked=asked,
        correct=correct,
        fraction=fraction,
        fraction_with_ties=(correct + 0.5 * tied) / 9.0,
    )


# ---------------------------------------------------------------------------
# Guessing task
# ---------------------------------------------------------------------------

def expected_guesses(ranking: Ranking, truth: np.ndarray) -> float:
    """Mean guesses until correct when colors are tried in ranking order."""
    truth = np.asarray(truth, dtype=float)
    return float(sum(truth[c] * ranking.position(c) for c in COLORS))


def _analytic_std(ranking: Ranking, truth: np.ndarray) -> float:
    mean = expected_guesses(ranking, truth)
    second = sum(float(truth[c]) * ranking.position(c) ** 2 for c in COLORS)
    return float(np.sqrt(max(second - mean * mean, 0.0)))


@dataclass(frozen=True)
class GuessingReport:
    """Per-shape guessing cost; indexes follow :class:`Shape`.

    ``replications`` is None for analytic expectations, where ``std`` is the
    per-trial standard deviation of the guess count; Monte Carlo reports the
    sample mean and (ddof=1) sample deviation instead.
    """

    mean: tuple[float, float, float]
    std: tuple[float, float, float]
    replications: int | None = None


def optimal_guessing(table: ContingencyTable) -> GuessingReport:
    """Cost of guessing straight down the true conditional ordering."""
    means = []
    stds = []
    for shape in SHAPES:
        truth = color_given_shape(table, shape)
        ranking = rank_bayes(truth)
        means.append(expected_guesses(ranking, truth))
        stds.append(_analytic_std(ranking, truth))
    return GuessingReport(mean=tuple(means), std=tuple(stds), replications=None)


def guessing_task(
    system: ExpertSystem,
    table: ContingencyTable,
    replications: int | None = None,
    rng: np.random.Generator | None = None,
) -> GuessingReport:
    """Score ``system`` on single-block guessing, per shape.

    With ``replications=None`` the expectation is computed analytically from
    the census conditionals.  Otherwise that many blocks are drawn from the
    joint census distribution and guessed; the per-shape ranking is fixed by
    the system so only the draws are random.
    """
    rankings = {shape: system_ranking(system, (shape,)) for shape in SHAPES}
    if replications is None:
        means = []
        stds = []
        for shape in SHAPES:
            truth = color_given_shape(table, shape)
            means.append(expected_guesses(rankings[shape], truth))
            stds.append(_analytic_std(rankings[shape], truth))
        return GuessingReport(mean=tuple(means), std=tuple(stds), replications=None)
    if replications < 1:
        raise ValueError("replications must be positive")
    if rng is None:
        raise ValueError("Monte Carlo guessing needs a random stream")
    positions = np.array(
        [[rankings[s].position(c) for c in COLORS] for s in SHAPES]
    )
    trials = sample_blocks(table, replications, rng)
    guesses = np.array([positions[t.shape][t.color] for t in trials])
    shapes = np.array([t.shape for t in trials])
    means = []
    stds = []
    for shape in SHAPES:
        mask = shapes == shape
        if not mask.any():
            means.append(float("nan"))
            stds.append(float("nan"))
            continue
        sample = guesses[mask]
        means.append(float(sample.mean()))
        stds.append(float(sample.std(ddof=1)) if sample.size > 1 else 0.0)
    return GuessingReport(mean=tuple(means), std=tuple(stds), replications=replications)


def chance_baseline() -> float:
    """Expected guesses for a uniformly random order: (1 + 2 + 3) / 3."""
    return 2.0


# ---------------------------------------------------------------------------
# Bag experiment
# ---------------------------------------------------------------------------

DEFAULT_BAG_SIZES = (2, 3, 4, 5, 7, 10, 20, 40, 80)


@dataclass(frozen=True)
class BagCurvePoint:
    """Guessing cost at one bag size.

    ``degraded`` counts replications where the calculus could not score the
    bag and a fallback ranking was used (total conflict under
    Dempster-Shafer, impossible evidence under Bayes).
    """

    sample_size: int
    mean_guesses: float
    std_guesses: float
    replications: int
    degraded: int


def _vacuous_ranking() -> Ranking:
    return rank_ds(MassFunction.vacuous(), fallback="total-conflict")


def bag_experiment(
    system: ExpertSystem,
    table: ContingencyTable,
    sizes: Sequence[int] = DEFAULT_BAG_SIZES,
    replications: int = 10_000,
    prior_mode: PriorMode = PriorMode.MARGINAL,
    rng: np.random.Generator | None = None,
) -> list[BagCurvePoint]:
    """Diagnose bags of each size ``replications`` times.

    Each bag is drawn fresh, aggregated in draw order, ranked, and scored by
    the position of the true color.  Only the sampling consumes randomness,
    so passing identically derived streams to different systems scores them
    on identical bag sequences.
    """
    if rng is None:
        raise ValueError("the bag experiment needs a random stream")
    if replications < 1:
        raise ValueError("replications must be positive")
    sizes = tuple(int(s) for s in sizes)
    if not sizes:
        raise ValueError("need at least one bag size")
    if any(s < 1 for s in sizes):
        raise ValueError("bag sizes must be at least 1")
    points = []
    for size in sizes:
        guesses = np.empty(replications)
        degraded = 0
        for r in range(replications):
            bag = sample_bag(table, size, prior_mode, rng)
            try:
                ranking = system_ranking(system, bag.shapes)
            except TotalConflictError:
                ranking = _vacuous_ranking()
            if ranking.fallback is not None:
                degraded += 1
            guesses[r] = ranking.position(bag.true_color)
        points.append(BagCurvePoint(
            sample_size=size,
            mean_guesses=float(guesses.mean()),
            std_guesses=float(guesses.std(ddof=1)) if replications > 1 else 0.0,
            replications=replications,
            degraded=degraded,
        ))
    return points
