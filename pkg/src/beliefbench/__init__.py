"""Evidence-aggregation calculi compared on a colored-block guessing domain."""

from .blockworld import (
    BagScenario,
    Color,
    ContingencyTable,
    PriorMode,
    Shape,
    TrialRecord,
    color_given_shape,
    color_prior,
    default_table,
    load_table,
    sample_bag,
    sample_block,
    shape_given_color,
)
from .calculi import (
    BayesParams,
    BeliefInterval,
    CfParams,
    ContradictionError,
    DsParams,
    ImpossibleEvidenceError,
    IntervalMode,
    InvalidElicitationError,
    MassFunction,
    Ranking,
    TotalConflictError,
    UndefinedCfError,
    bayes_posterior,
    cf_aggregate,
    cf_combine,
    cf_from_probabilities,
    dempster_combine,
    ds_aggregate,
    mass_from_intervals,
    rank_bayes,
    rank_cf,
    rank_ds,
)
from .evaluation import (
    BagCurvePoint,
    Calculus,
    ExpertSystem,
    GuessingReport,
    ReversalScore,
    bag_experiment,
    chance_baseline,
    expected_guesses,
    guessing_task,
    optimal_guessing,
    reversal_test,
    system_ranking,
    systems_from_report,
)
from .experts import (
    ConservativeExpert,
    ElicitationReport,
    FrequencyLearnerExpert,
    NoisyExpert,
    OracleExpert,
    elicit,
    simulate_training_performance,
    train_learner,
)
from .rng import substream

__version__ = "0.1.0"
