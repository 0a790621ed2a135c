"""Aggregation engines: Bayes, certainty factors, Dempster-Shafer, rankings."""

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from beliefbench.blockworld import COLORS, Color, Shape
from beliefbench.calculi import (
    FULL_MASK,
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
    subset_colors,
    subset_mask,
)

G, R, D = Color.GREEN, Color.RED, Color.GOLD
SQ, CI, TR = Shape.SQUARE, Shape.CIRCLE, Shape.TRIANGLE


def reference_dempster(m1: MassFunction, m2: MassFunction):
    """Independent textbook formulation: frozensets and division by 1 - K."""
    subsets = [subset_colors(mask) for mask in range(8)]
    acc = {fs: 0.0 for fs in subsets}
    for a in range(8):
        for b in range(8):
            acc[subsets[a] & subsets[b]] += float(m1.masses[a]) * float(m2.masses[b])
    conflict = acc[frozenset()]
    if conflict >= 1.0 - 1e-12:
        return None
    out = np.zeros(8)
    for mask in range(1, 8):
        out[mask] = acc[subsets[mask]] / (1.0 - conflict)
    return out


unit = st.floats(0.0, 1.0, allow_nan=False)
cf_values = st.floats(-1.0, 1.0, allow_nan=False)


@st.composite
def mass_functions(draw):
    weights = np.array(draw(st.tuples(*[unit] * 7)))
    assume(weights.sum() > 1e-6)
    arr = np.zeros(8)
    arr[1:] = weights / weights.sum()
    return MassFunction(arr)


@st.composite
def strictly_positive_dists(draw):
    raw = np.array(draw(st.tuples(*[st.floats(0.05, 1.0, allow_nan=False)] * 3)))
    return raw / raw.sum()


# ---------------------------------------------------------------------------
# Subset masks
# ---------------------------------------------------------------------------

class TestSubsets:
    def test_round_trip(self):
        for mask in range(8):
            assert subset_mask(subset_colors(mask)) == mask

    def test_accepts_masks_and_colors(self):
        assert subset_mask(0b101) == 0b101
        assert subset_mask((G, D)) == 0b101
        assert subset_mask([R]) == 0b010
        assert subset_mask(()) == 0

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            subset_mask(8)
        with pytest.raises(ValueError):
            subset_mask(-1)


# ---------------------------------------------------------------------------
# Bayes
# ---------------------------------------------------------------------------

class TestBayes:
    def test_params_normalize(self):
        params = BayesParams(prior=[2, 1, 1], likelihood=[[1, 1, 0], [0, 2, 2], [1, 0, 1]])
        np.testing.assert_allclose(params.prior, [0.5, 0.25, 0.25])
        np.testing.assert_allclose(params.likelihood.sum(axis=1), [1, 1, 1])

    def test_params_validation(self):
        with pytest.raises(ValueError, match="length 3"):
            BayesParams(prior=[1, 1], likelihood=np.eye(3))
        with pytest.raises(ValueError, match="non-negative"):
            BayesParams(prior=[1, -1, 1], likelihood=np.eye(3))
        with pytest.raises(ValueError, match="no mass"):
            BayesParams(prior=[0, 0, 0], likelihood=np.eye(3))
        with pytest.raises(ValueError, match="likelihood row"):
            BayesParams(prior=[1, 1, 1], likelihood=[[1, 0, 0], [0, 0, 0], [0, 0, 1]])

    def test_empty_evidence_returns_prior(self, oracle_report):
        out = bayes_posterior(oracle_report.bayes, ())
        np.testing.assert_array_equal(out, oracle_report.bayes.prior)

    def test_circle_posterior(self, oracle_report):
        out = bayes_posterior(oracle_report.bayes, (CI,))
        np.testing.assert_allclose(out, [2 / 3, 1 / 9, 2 / 9], atol=1e-12)

    def test_two_squares_posterior(self, oracle_report):
        out = bayes_posterior(oracle_report.bayes, (SQ, SQ))
        np.testing.assert_allclose(out, [0.0, 92 / 117, 25 / 117], atol=1e-12)

    def test_impossible_evidence(self):
        params = BayesParams(
            prior=[0.5, 0.5, 0.0],
            likelihood=[[0, 1, 0], [0, 0.5, 0.5], [0, 0, 1]],
        )
        with pytest.raises(ImpossibleEvidenceError) as err:
            bayes_posterior(params, (SQ,))
        np.testing.assert_array_equal(err.value.prior, [0.5, 0.5, 0.0])

    def test_long_evidence_does_not_underflow(self, oracle_report):
        out = bayes_posterior(oracle_report.bayes, (CI,) * 2000)
        assert np.isfinite(out).all()
        np.testing.assert_allclose(out, [1.0, 0.0, 0.0], atol=1e-12)

    def test_order_invariance(self, oracle_report):
        a = bayes_posterior(oracle_report.bayes, (SQ, CI, TR, CI))
        b = bayes_posterior(oracle_report.bayes, (CI, TR, CI, SQ))
        np.testing.assert_allclose(a, b, atol=1e-14)

    def test_bad_evidence_rejected(self, oracle_report):
        with pytest.raises(ValueError):
            bayes_posterior(oracle_report.bayes, (7,))


# ---------------------------------------------------------------------------
# Certainty factors
# ---------------------------------------------------------------------------

class TestCfFromProbabilities:
    def test_spec_values(self):
        assert cf_from_probabilities(132 / 324, 0.0) == -1.0
        assert cf_from_probabilities(0.37, 0.37) == 0.0
        assert cf_from_probabilities(100 / 324, 2 / 3) == pytest.approx(29 / 56, abs=1e-15)

    def test_certain_edges_with_no_change(self):
        # The degenerate endpoints are fine while belief does not move; a
        # decrease from a certain prior is also well-defined.
        assert cf_from_probabilities(1.0, 1.0) == 0.0
        assert cf_from_probabilities(0.0, 0.0) == 0.0
        assert cf_from_probabilities(1.0, 0.25) == -0.75

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            cf_from_probabilities(-0.1, 0.5)
        with pytest.raises(ValueError):
            cf_from_probabilities(0.5, 1.5)

    @given(st.floats(0.0, 1.0, exclude_max=True), unit)
    def test_range_and_sign(self, prior, post):
        if post < prior and prior == 0.0:
            return
        cf = cf_from_probabilities(prior, post)
        assert -1.0 <= cf <= 1.0
        if post > prior:
            assert cf > 0
        elif post < prior:
            assert cf < 0
        else:
            assert cf == 0


class TestCfCombine:
    def test_spec_values(self):
        assert cf_combine(0.6, 0.4) == pytest.approx(0.76, abs=1e-15)
        assert cf_combine(0.8, -0.5) == pytest.approx(0.6, abs=1e-15)
        assert cf_combine(-0.6, -0.4) == pytest.approx(-0.76, abs=1e-15)

    def test_oracle_two_squares(self):
        assert cf_combine(29 / 56, 29 / 56) == pytest.approx(2407 / 3136, abs=1e-15)

    def test_contradiction(self):
        with pytest.raises(ContradictionError):
            cf_combine(1.0, -1.0)
        with pytest.raises(ContradictionError):
            cf_combine(-1.0, 1.0)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            cf_combine(1.1, 0.0)

    @given(cf_values, cf_values)
    def test_commutative_exact(self, x, y):
        assume(not (abs(x) == 1.0 and abs(y) == 1.0 and x != y))
        assert cf_combine(x, y) == cf_combine(y, x)

    @given(cf_values)
    def test_zero_identity(self, x):
        assert cf_combine(x, 0.0) == x
        assert cf_combine(0.0, x) == x

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_plus_one_absorbs_non_negative(self, x, y):
        # (1 + x) - 1*x can land one ulp under 1, so absorption is approximate
        assert cf_combine(1.0, x) == pytest.approx(1.0, abs=1e-12)
        assert cf_combine(cf_combine(1.0, x), y) == pytest.approx(1.0, abs=1e-12)

    @given(cf_values, cf_values, cf_values)
    def test_associative(self, x, y, z):
        try:
            left = cf_combine(cf_combine(x, y), z)
            right = cf_combine(x, cf_combine(y, z))
        except ContradictionError:
            assume(False)
        assert abs(left - right) <= 1e-12
        assert -1.0 <= left <= 1.0


class TestCfAggregate:
    def test_empty_is_zero(self, oracle_report):
        np.testing.assert_array_equal(
            cf_aggregate(oracle_report.cf, ()), [0.0, 0.0, 0.0]
        )

    def test_two_squares_red(self, oracle_report):
        # two combines of 29/56 with itself: 29/56 + 29/56 - (29/56)^2
        out = cf_aggregate(oracle_report.cf, (SQ, SQ))
        assert out[R] == pytest.approx(2407 / 3136, abs=1e-12)

    def test_order_invariance(self, oracle_report):
        a = cf_aggregate(oracle_report.cf, (SQ, CI, TR, TR, CI))
        b = cf_aggregate(oracle_report.cf, (TR, CI, SQ, CI, TR))
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_params_validation(self):
        with pytest.raises(ValueError, match=r"\[-1, 1\]"):
            CfParams(values=np.full((3, 3), 1.5))
        with pytest.raises(ValueError, match="shape"):
            CfParams(values=np.zeros((2, 3)))


# ---------------------------------------------------------------------------
# Mass functions and Dempster's rule
# ---------------------------------------------------------------------------

class TestMassFunction:
    def test_vacuous(self):
        m = MassFunction.vacuous()
        assert m.mass(FULL_MASK) == 1.0
        assert sum(m.masses) == 1.0

    def test_from_subsets_accumulates(self):
        m = MassFunction.from_subsets({(R,): 0.25, 0b010: 0.25, FULL_MASK: 0.5})
        assert m.mass((R,)) == 0.5
        assert m.mass(FULL_MASK) == 0.5

    def test_validation(self):
        with pytest.raises(ValueError, match="8 subsets"):
            MassFunction(np.ones(4))
        with pytest.raises(ValueError, match="non-negative"):
            MassFunction([0, -0.5, 1.5, 0, 0, 0, 0, 0])
        with pytest.raises(ValueError, match="empty set"):
            MassFunction([0.5, 0.5, 0, 0, 0, 0, 0, 0])
        with pytest.raises(ValueError, match="total 1"):
            MassFunction([0, 0.5, 0, 0, 0, 0, 0, 0])
        with pytest.raises(ValueError, match="finite"):
            MassFunction([0, np.nan, 1, 0, 0, 0, 0, 0])

    def test_rounding_level_drift_renormalized(self):
        arr = np.zeros(8)
        arr[1:] = (1.0 + 5e-10) / 7
        m = MassFunction(arr)
        assert m.masses.sum() == pytest.approx(1.0, abs=1e-15)

    def test_immutable(self):
        m = MassFunction.vacuous()
        with pytest.raises(ValueError):
            m.masses[3] = 0.5

    def test_belief_plausibility_vacuous(self):
        m = MassFunction.vacuous()
        for c in COLORS:
            assert m.belief((c,)) == 0.0
            assert m.plausibility((c,)) == 1.0
        assert m.belief(FULL_MASK) == 1.0

    def test_bayesian_mass_belief_equals_plausibility(self):
        m = MassFunction.from_subsets({(G,): 0.2, (R,): 0.5, (D,): 0.3})
        for mask in range(1, 8):
            assert m.belief(mask) == pytest.approx(m.plausibility(mask), abs=1e-15)

    @given(mass_functions())
    def test_belief_bounds(self, m):
        for mask in range(1, 8):
            bel = m.belief(mask)
            pl = m.plausibility(mask)
            assert 0.0 <= bel <= pl <= 1.0 + 1e-12
        assert m.belief(FULL_MASK) == pytest.approx(1.0, abs=1e-12)

    @given(mass_functions())
    def test_plausibility_is_complement_identity(self, m):
        for mask in range(1, 8):
            complement = FULL_MASK & ~mask
            assert m.plausibility(mask) == pytest.approx(
                1.0 - m.belief(complement), abs=1e-12
            )


class TestMassFromIntervals:
    def test_spec_example(self):
        m = mass_from_intervals((
            BeliefInterval(0.2, 0.9),
            BeliefInterval(0.5, 0.8),
            BeliefInterval(0.1, 0.4),
        ))
        assert m.mass((G,)) == pytest.approx(0.2)
        assert m.mass((R,)) == pytest.approx(0.5)
        assert m.mass((D,)) == pytest.approx(0.1)
        assert m.mass(FULL_MASK) == pytest.approx(0.2)
        assert m.mass((G, R)) == 0.0

    def test_all_zero_lowers_is_vacuous(self):
        m = mass_from_intervals(tuple(BeliefInterval(0.0, 1.0) for _ in COLORS))
        np.testing.assert_array_equal(m.masses, MassFunction.vacuous().masses)

    def test_degenerate_intervals_are_bayesian(self):
        p = (0.25, 0.4, 0.35)
        m = mass_from_intervals(tuple(BeliefInterval(v, v) for v in p))
        assert m.mass(FULL_MASK) == 0.0
        for c, v in zip(COLORS, p):
            assert m.mass((c,)) == pytest.approx(v, abs=1e-15)

    @staticmethod
    def _crossed_interval(lower, upper):
        # BeliefInterval validates itself, so an inconsistent pair (as a
        # distorted expert might emit) has to be assembled behind its back.
        iv = object.__new__(BeliefInterval)
        object.__setattr__(iv, "lower", lower)
        object.__setattr__(iv, "upper", upper)
        return iv

    def test_strict_rejects_crossed_bounds(self):
        bad = (
            BeliefInterval(0.2, 0.9),
            self._crossed_interval(0.8, 0.3),
            BeliefInterval(0.1, 0.4),
        )
        with pytest.raises(InvalidElicitationError) as err:
            mass_from_intervals(bad, IntervalMode.STRICT)
        assert err.value.color is R
        assert "red" in str(err.value)

    def test_repair_swaps_crossed_bounds(self):
        bad = (
            BeliefInterval(0.2, 0.9),
            self._crossed_interval(0.8, 0.3),
            BeliefInterval(0.1, 0.4),
        )
        m = mass_from_intervals(bad, IntervalMode.REPAIR)
        assert m.mass((R,)) == pytest.approx(0.3)

    def test_strict_rejects_overcommitted_lowers(self):
        intervals = tuple(BeliefInterval(0.5, 1.0) for _ in COLORS)
        with pytest.raises(InvalidElicitationError, match="> 1"):
            mass_from_intervals(intervals, IntervalMode.STRICT)

    def test_repair_rescales_overcommitted_lowers(self):
        intervals = (
            BeliefInterval(0.8, 1.0),
            BeliefInterval(0.6, 1.0),
            BeliefInterval(0.2, 1.0),
        )
        m = mass_from_intervals(intervals, IntervalMode.REPAIR)
        np.testing.assert_allclose(
            [m.mass((c,)) for c in COLORS], [0.5, 0.375, 0.125], atol=1e-15
        )
        assert m.mass(FULL_MASK) == 0.0

    def test_strict_tolerates_rounding_overshoot(self):
        eps = 5e-10
        intervals = (
            BeliefInterval(0.5, 1.0),
            BeliefInterval(0.3, 1.0),
            BeliefInterval(0.2 + eps, 1.0),
        )
        m = mass_from_intervals(intervals, IntervalMode.STRICT)
        assert m.masses.sum() == pytest.approx(1.0, abs=1e-12)

    def test_interval_validation(self):
        with pytest.raises(ValueError):
            BeliefInterval(-0.1, 0.5)
        with pytest.raises(ValueError):
            BeliefInterval(0.5, 1.2)
        assert BeliefInterval(0.25, 0.75).width == 0.5

    def test_needs_three_intervals(self):
        with pytest.raises(ValueError, match="one interval per color"):
            mass_from_intervals((BeliefInterval(0, 1),))


class TestDempsterCombine:
    def test_worked_example(self):
        m1 = MassFunction.from_subsets({(R,): 0.5, FULL_MASK: 0.5})
        m2 = MassFunction.from_subsets({(R,): 0.4, (G,): 0.3, FULL_MASK: 0.3})
        out = dempster_combine(m1, m2)
        assert out.mass((R,)) == pytest.approx(11 / 17, abs=1e-12)
        assert out.mass((G,)) == pytest.approx(3 / 17, abs=1e-12)
        assert out.mass(FULL_MASK) == pytest.approx(3 / 17, abs=1e-12)
        assert out.belief((R,)) == pytest.approx(11 / 17, abs=1e-12)
        assert out.plausibility((R,)) == pytest.approx(14 / 17, abs=1e-12)

    def test_vacuous_identity_is_bitwise(self):
        m = MassFunction.from_subsets({(G,): 0.125, (R, D): 0.375, FULL_MASK: 0.5})
        for out in (dempster_combine(m, MassFunction.vacuous()),
                    dempster_combine(MassFunction.vacuous(), m)):
            assert np.array_equal(out.masses, m.masses)

    def test_total_conflict_raises(self):
        green = MassFunction.from_subsets({(G,): 1.0})
        red = MassFunction.from_subsets({(R,): 1.0})
        with pytest.raises(TotalConflictError) as err:
            dempster_combine(green, red)
        assert err.value.conflict == pytest.approx(1.0, abs=1e-12)

    def test_near_total_conflict_raises(self):
        eps = 1e-13
        m1 = MassFunction.from_subsets({(G,): 1.0 - eps, (R,): eps})
        m2 = MassFunction.from_subsets({(R,): 1.0})
        with pytest.raises(TotalConflictError):
            dempster_combine(m1, m2)

    def test_extreme_conflict_stays_normalized(self):
        # K close to 1 but above the cutoff: division by 1 - K would amplify
        # rounding; the result must still be a clean mass function.
        eps = 1e-9
        m1 = MassFunction.from_subsets({(G,): 1.0 - eps, (R,): eps})
        m2 = MassFunction.from_subsets({(R,): 1.0 - eps, (G,): eps})
        out = dempster_combine(m1, m2)
        assert out.masses.sum() == pytest.approx(1.0, abs=1e-12)
        assert out.mass((G,)) == pytest.approx(0.5, abs=1e-6)

    @given(mass_functions(), mass_functions())
    def test_matches_reference(self, m1, m2):
        expected = reference_dempster(m1, m2)
        if expected is None:
            with pytest.raises(TotalConflictError):
                dempster_combine(m1, m2)
            return
        out = dempster_combine(m1, m2)
        np.testing.assert_allclose(out.masses, expected, atol=1e-12)

    @given(mass_functions(), mass_functions())
    def test_commutative(self, m1, m2):
        try:
            a = dempster_combine(m1, m2)
        except TotalConflictError:
            assume(False)
        b = dempster_combine(m2, m1)
        np.testing.assert_allclose(a.masses, b.masses, atol=1e-12)

    @given(mass_functions(), mass_functions(), mass_functions())
    def test_associative(self, m1, m2, m3):
        try:
            left = dempster_combine(dempster_combine(m1, m2), m3)
            right = dempster_combine(m1, dempster_combine(m2, m3))
        except TotalConflictError:
            assume(False)
        np.testing.assert_allclose(left.masses, right.masses, atol=1e-12)

    @given(strictly_positive_dists(), strictly_positive_dists())
    def test_degenerate_intervals_fuse_like_uniform_prior_bayes(self, p, q):
        mp = mass_from_intervals(tuple(BeliefInterval(v, v) for v in p))
        mq = mass_from_intervals(tuple(BeliefInterval(v, v) for v in q))
        fused = dempster_combine(mp, mq)
        product = p * q
        expected = product / product.sum()
        got = np.array([fused.mass((c,)) for c in COLORS])
        np.testing.assert_allclose(got, expected, atol=1e-9)


class TestDsParams:
    def test_validation(self):
        good = np.full((3, 3), 0.2)
        with pytest.raises(ValueError, match="lower <= upper"):
            DsParams(lower=np.full((3, 3), 0.5), upper=np.full((3, 3), 0.4))
        with pytest.raises(ValueError, match="total at most 1"):
            DsParams(lower=np.full((3, 3), 0.4), upper=np.full((3, 3), 0.9))
        params = DsParams(lower=good, upper=np.full((3, 3), 0.8))
        iv = params.interval(R, SQ)
        assert (iv.lower, iv.upper) == (0.2, 0.8)
        assert len(params.intervals_for_shape(CI)) == 3

    def test_aggregate_empty_is_vacuous(self, oracle_report):
        out = ds_aggregate(oracle_report.ds, ())
        np.testing.assert_array_equal(out.masses, MassFunction.vacuous().masses)

    def test_aggregate_single_square(self, oracle_report):
        out = ds_aggregate(oracle_report.ds, (SQ,))
        beliefs = [out.belief((c,)) for c in COLORS]
        np.testing.assert_allclose(beliefs, [0.0, 2 / 3, 1 / 3], atol=1e-12)

    def test_aggregate_order_invariance(self, oracle_report):
        a = ds_aggregate(oracle_report.ds, (SQ, CI, TR, CI))
        b = ds_aggregate(oracle_report.ds, (CI, CI, TR, SQ))
        np.testing.assert_allclose(a.masses, b.masses, atol=1e-12)


# ---------------------------------------------------------------------------
# Rankings
# ---------------------------------------------------------------------------

class TestRankings:
    def test_rank_bayes_circle(self):
        ranking = rank_bayes(np.array([2 / 3, 1 / 9, 2 / 9]))
        assert ranking.order == (G, D, R)
        assert ranking.position(G) == 1
        assert ranking.position(R) == 3
        assert ranking.scores == (2 / 3, 1 / 9, 2 / 9)

    def test_rank_cf_all_zero_falls_back_to_color_order(self):
        assert rank_cf(np.zeros(3)).order == (G, R, D)

    def test_rank_ds_vacuous_falls_back_to_color_order(self):
        ranking = rank_ds(MassFunction.vacuous())
        assert ranking.order == (G, R, D)
        assert ranking.scores == (0.0, 0.0, 0.0)

    def test_rank_ds_plausibility_tiebreak(self):
        m = MassFunction.from_subsets({(R, D): 0.6, FULL_MASK: 0.4})
        # beliefs all 0; plausibilities (0.4, 1.0, 1.0) decide, then color.
        assert rank_ds(m).order == (R, D, G)

    def test_partial_tie_uses_color_order(self):
        assert rank_bayes(np.array([0.25, 0.5, 0.25])).order == (R, G, D)

    def test_fallback_flag(self):
        ranking = rank_bayes(np.ones(3) / 3, fallback="impossible-evidence")
        assert ranking.fallback == "impossible-evidence"
        assert rank_cf(np.zeros(3)).fallback is None

    def test_ranking_validation(self):
        with pytest.raises(ValueError, match="permutation"):
            Ranking(order=(G, G, D), scores=(0.0, 0.0, 0.0))
        with pytest.raises(ValueError):
            rank_bayes(np.zeros(4))
        with pytest.raises(ValueError):
            rank_cf(np.zeros((3, 1)))

    @given(st.tuples(*[st.floats(0.001, 1.0, allow_nan=False)] * 3),
           st.floats(0.001, 1000.0, allow_nan=False))
    def test_positive_scaling_preserves_order(self, scores, scale):
        base = rank_bayes(np.array(scores))
        scaled = rank_bayes(np.array(scores) * scale)
        assert base.order == scaled.order
