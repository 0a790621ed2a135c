"""Simulated subjects that supply parameters to the three calculi.

Every expert answers the same three questionnaires about the block
population: a prior over colors, per-color shape frequencies, and per-shape
color frequencies (as probability intervals for the Dempster-Shafer form).
The oracle reads the census exactly; the distorted variants model typical
human departures (noise, conservatism); the frequency learner knows only the
trials it has watched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .blockworld import (
    COLORS,
    SHAPES,
    Color,
    ContingencyTable,
    Shape,
    TrialRecord,
    color_given_shape,
    color_prior,
    sample_blocks,
    shape_given_color,
)
from .calculi import BayesParams, CfParams, DsParams, cf_from_probabilities

_LOGIT_CLAMP = 1e-6


@dataclass(frozen=True)
class OracleExpert:
    """Reports exact census probabilities."""


@dataclass(frozen=True)
class NoisyExpert:
    """Perturbs every reported probability by Gaussian noise in logit space.

    Structural zeros are exempt (a subject who has never seen a green square
    will not invent one); the remaining entries of each distribution are
    renormalized after perturbation.  ``sigma = 0`` reproduces the oracle's
    values bit-for-bit.
    """

    sigma: float

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise ValueError(f"sigma must be a non-negative real, got {self.sigma!r}")


@dataclass(frozen=True)
class ConservativeExpert:
    """Under-updates: shrinks every conditional toward the uniform 1/3.

    Each conditional probability p is reported as ``lam * p + (1 - lam) / 3``;
    the prior is reported exactly.  ``lam = 1`` is the oracle, ``lam = 0``
    reports pure ignorance about the conditionals.
    """

    lam: float

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lam must lie in [0, 1], got {self.lam!r}")


@dataclass(frozen=True)
class FrequencyLearnerExpert:
    """Knows only observed trials; reports empirical frequencies.

    Point estimates are raw counts ``k / n``.  Interval estimates widen the
    counts by the prior strength ``s``: ``[k / (n + s), (k + s) / (n + s)]``,
    so a shape observed n times gets intervals of width ``s / (n + s)``,
    shrinking as experience accumulates.
    """

    strength: float
    observed: tuple[TrialRecord, ...]

    def __post_init__(self):
        if not np.isfinite(self.strength) or self.strength <= 0:
            raise ValueError(f"strength must be positive, got {self.strength!r}")
        object.__setattr__(self, "observed", tuple(self.observed))


ExpertModel = Union[OracleExpert, NoisyExpert, ConservativeExpert, FrequencyLearnerExpert]


@dataclass(frozen=True)
class ElicitationReport:
    """One expert's answers converted to all three parameter formats.

    ``checkpoint`` is the number of training trials the expert had seen
    (0 for the census-based experts, which never watch trials).
    """

    checkpoint: int
    bayes: BayesParams
    cf: CfParams
    ds: DsParams


def expert_label(expert: ExpertModel) -> str:
    """Stable identifier used in report rows and file names."""
    if isinstance(expert, OracleExpert):
        return "oracle"
    if isinstance(expert, NoisyExpert):
        return f"noisy(sigma={expert.sigma:g})"
    if isinstance(expert, ConservativeExpert):
        return f"conservative(lambda={expert.lam:g})"
    if isinstance(expert, FrequencyLearnerExpert):
        return f"learner(s={expert.strength:g},n={len(expert.observed)})"
    raise TypeError(f"unknown expert model: {expert!r}")


# ---------------------------------------------------------------------------
# Underlying estimates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Estimates:
    prior: np.ndarray             # P(color)
    shape_given_color: np.ndarray  # [color][shape]
    color_given_shape: np.ndarray  # [shape][color]


def _oracle_estimates(table: ContingencyTable) -> _Estimates:
    return _Estimates(
        prior=color_prior(table),
        shape_given_color=np.array([shape_given_color(table, c) for c in COLORS]),
        color_given_shape=np.array([color_given_shape(table, s) for s in SHAPES]),
    )


def _perturb_distribution(p: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Logit-space Gaussian noise on the positive entries, then renormalize."""
    noise = rng.normal(0.0, sigma, size=p.shape)  # drawn even for zero cells
    out = np.zeros_like(p)
    positive = p > 0
    clamped = np.clip(p[positive], _LOGIT_CLAMP, 1.0 - _LOGIT_CLAMP)
    z = np.log(clamped / (1.0 - clamped)) + noise[positive]
    out[positive] = 1.0 / (1.0 + np.exp(-z))
    return out / out.sum()


def _noisy_estimates(table: ContingencyTable, sigma: float,
                     rng: np.random.Generator) -> _Estimates:
    exact = _oracle_estimates(table)
    if sigma == 0.0:
        # Zero noise short-circuits: even a no-op renormalization could move
        # the last bit, and sigma=0 promises exact reproduction.
        return exact
    prior = _perturb_distribution(exact.prior, sigma, rng)
    sgc = np.array([
        _perturb_distribution(exact.shape_given_color[c], sigma, rng) for c in COLORS
    ])
    cgs = np.array([
        _perturb_distribution(exact.color_given_shape[s], sigma, rng) for s in SHAPES
    ])
    return _Estimates(prior=prior, shape_given_color=sgc, color_given_shape=cgs)


def _conservative_estimates(table: ContingencyTable, lam: float) -> _Estimates:
    exact = _oracle_estimates(table)
    shrink = lambda p: lam * p + (1.0 - lam) / 3.0
    return _Estimates(
        prior=exact.prior,
        shape_given_color=shrink(exact.shape_given_color),
        color_given_shape=shrink(exact.color_given_shape),
    )


def _learner_counts(observed: Sequence[TrialRecord]) -> np.ndarray:
    cells = np.fromiter(
        (trial.shape * 3 + trial.color for trial in observed),
        dtype=np.intp,
        count=len(observed),
    )
    return np.bincount(cells, minlength=9).reshape(3, 3)  # [shape][color]


def _learner_estimates(counts: np.ndarray) -> _Estimates:
    n = counts.sum()
    n_shape = counts.sum(axis=1)
    n_color = counts.sum(axis=0)
    prior = n_color / n
    # Unseen color: no shape data, fall back to uniform over shapes.
    sgc = np.full((3, 3), 1.0 / 3.0)
    for c in COLORS:
        if n_color[c] > 0:
            sgc[c] = counts[:, c] / n_color[c]
    # Unseen shape: report no belief change, i.e. the prior itself.
    cgs = np.empty((3, 3))
    for s in SHAPES:
        cgs[s] = counts[s] / n_shape[s] if n_shape[s] > 0 else prior
    return _Estimates(prior=prior, shape_given_color=sgc, color_given_shape=cgs)


# ---------------------------------------------------------------------------
# Format conversion
# ---------------------------------------------------------------------------

def _report_from_estimates(est: _Estimates, checkpoint: int,
                           ds_lower: np.ndarray | None = None,
                           ds_upper: np.ndarray | None = None) -> ElicitationReport:
    cf_values = np.empty((3, 3))
    for c in COLORS:
        for s in SHAPES:
            cf_values[c][s] = cf_from_probabilities(
                float(est.prior[c]), float(est.color_given_shape[s][c])
            )
    if ds_lower is None:
        ds_lower = est.color_given_shape.T  # degenerate intervals [p, p]
        ds_upper = est.color_given_shape.T
    return ElicitationReport(
        checkpoint=checkpoint,
        bayes=BayesParams(prior=est.prior, likelihood=est.shape_given_color),
        cf=CfParams(values=cf_values),
        ds=DsParams(lower=ds_lower, upper=ds_upper),
    )


def elicit(expert: ExpertModel, table: ContingencyTable,
           rng: np.random.Generator | None = None) -> ElicitationReport:
    """Ask ``expert`` the three questionnaires about ``table``.

    Only :class:`NoisyExpert` consumes randomness; passing ``rng`` for other
    experts is harmless.  The frequency learner ignores the table entirely
    and must hold at least one observed trial.
    """
    if isinstance(expert, OracleExpert):
        return _report_from_estimates(_oracle_estimates(table), checkpoint=0)
    if isinstance(expert, NoisyExpert):
        if expert.sigma > 0 and rng is None:
            raise ValueError("a noisy expert needs a random stream")
        return _report_from_estimates(
            _noisy_estimates(table, expert.sigma, rng), checkpoint=0
        )
    if isinstance(expert, ConservativeExpert):
        return _report_from_estimates(
            _conservative_estimates(table, expert.lam), checkpoint=0
        )
    if isinstance(expert, FrequencyLearnerExpert):
        if not expert.observed:
            raise ValueError("a frequency learner needs at least one observed trial")
        counts = _learner_counts(expert.observed)
        est = _learner_estimates(counts)
        n_shape = counts.sum(axis=1)
        s = expert.strength
        lower = np.empty((3, 3))
        upper = np.empty((3, 3))
        for c in COLORS:
            for sh in SHAPES:
                denom = n_shape[sh] + s
                lower[c][sh] = counts[sh][c] / denom
                upper[c][sh] = (counts[sh][c] + s) / denom
        return _report_from_estimates(
            est, checkpoint=len(expert.observed), ds_lower=lower, ds_upper=upper
        )
    raise TypeError(f"unknown expert model: {expert!r}")


# ---------------------------------------------------------------------------
# Training protocol
# ---------------------------------------------------------------------------

DEFAULT_CHECKPOINTS = (81, 162, 243, 324)


def train_learner(
    table: ContingencyTable,
    n_trials: int,
    checkpoints: Sequence[int],
    rng: np.random.Generator,
    strength: float = 1.0,
) -> list[ElicitationReport]:
    """Show a frequency learner ``n_trials`` census draws, eliciting at each
    checkpoint.

    Checkpoints must be strictly increasing and within ``[1, n_trials]``.
    Returns one report per checkpoint, in order.
    """
    checkpoints = tuple(int(c) for c in checkpoints)
    if not checkpoints:
        raise ValueError("need at least one checkpoint")
    if any(c < 1 or c > n_trials for c in checkpoints):
        raise ValueError(f"checkpoints must lie in [1, {n_trials}]")
    if any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
        raise ValueError("checkpoints must be strictly increasing")
    trials = sample_blocks(table, n_trials, rng)
    reports = []
    for ck in checkpoints:
        expert = FrequencyLearnerExpert(strength=strength, observed=tuple(trials[:ck]))
        reports.append(elicit(expert, table))
    return reports


@dataclass(frozen=True)
class TrainingPerformance:
    """Guess-until-correct results over the last ``window`` training trials.

    ``mean_guesses[shape]`` is NaN when the shape never appeared in the
    window.
    """

    mean_guesses: tuple[float, float, float]
    trials_per_shape: tuple[int, int, int]
    window: int


def simulate_training_performance(
    table: ContingencyTable,
    n_trials: int,
    rng: np.random.Generator,
    window: int = 81,
) -> TrainingPerformance:
    """Run the training protocol with a count-ranking learner as the guesser.

    On each trial the learner guesses colors for the shown shape in
    decreasing order of the counts observed so far (ties in the fixed color
    order), is told the true color, and updates.  Before any observation of
    a shape the ranking is the fixed color order, which for the default
    census costs 0*1 + 2/3*2 + 1/3*3 = 7/3 expected guesses on a square.
    """
    if n_trials < window:
        raise ValueError(f"need at least {window} trials")
    counts = np.zeros((3, 3), dtype=np.int64)
    guesses_taken = np.empty(n_trials, dtype=np.int64)
    trial_shapes = np.empty(n_trials, dtype=np.int64)
    for trial in sample_blocks(table, n_trials, rng):
        row = counts[trial.shape]
        order = sorted(COLORS, key=lambda c: (-row[c], c.value))
        i = trial.index - 1
        guesses_taken[i] = order.index(trial.color) + 1
        trial_shapes[i] = trial.shape
        counts[trial.shape][trial.color] += 1
    last_g = guesses_taken[n_trials - window:]
    last_s = trial_shapes[n_trials - window:]
    means = []
    tallies = []
    for shape in SHAPES:
        mask = last_s == shape
        tallies.append(int(mask.sum()))
        means.append(float(last_g[mask].mean()) if mask.any() else float("nan"))
    return TrainingPerformance(
        mean_guesses=tuple(means),
        trials_per_shape=tuple(tallies),
        window=window,
    )
