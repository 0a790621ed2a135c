"""Built-in oracle checks for the numerical core.

Each check recomputes a result by an independent route (brute-force subset
enumeration, exact rational arithmetic, algebraic identities) and compares.
They run against the default census plus randomized sweeps from a fixed
internal seed, so a pass/fail outcome is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .blockworld import COLORS, SHAPES, ContingencyTable, color_given_shape, default_table
from .calculi import (
    BayesParams,
    MassFunction,
    TotalConflictError,
    bayes_posterior,
    cf_combine,
    dempster_combine,
    subset_colors,
)
from .evaluation import optimal_guessing
from .experts import OracleExpert, elicit
from .rng import substream

_SELFTEST_SEED = 324_000  # fixed: selftest results never depend on run config


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_contingency_totals(table: ContingencyTable) -> CheckResult:
    """Stored row/column/grand totals must equal recomputed cell sums."""
    rows = tuple(sum(r) for r in table.counts)
    cols = tuple(sum(c) for c in zip(*table.counts))
    grand = sum(rows)
    problems = []
    if tuple(table.row_total) != rows:
        problems.append(f"row totals {table.row_total} != {rows}")
    if tuple(table.col_total) != cols:
        problems.append(f"column totals {table.col_total} != {cols}")
    if table.grand_total != grand:
        problems.append(f"grand total {table.grand_total} != {grand}")
    if grand <= 0:
        problems.append("census is empty")
    if problems:
        return CheckResult("contingency-totals", False, "; ".join(problems))
    return CheckResult(
        "contingency-totals", True,
        f"totals consistent (grand {grand})",
    )


def check_bayes_table_identity(table: ContingencyTable) -> CheckResult:
    """Oracle posterior from one shape must reproduce the census conditional.

    Also verifies, in exact rational arithmetic, that prior * likelihood
    equals cell / grand for every cell.
    """
    report = elicit(OracleExpert(), table)
    params: BayesParams = report.bayes
    max_dev = 0.0
    for shape in SHAPES:
        if table.row_total[shape] == 0:
            continue
        posterior = bayes_posterior(params, (shape,))
        truth = color_given_shape(table, shape)
        max_dev = max(max_dev, float(np.max(np.abs(posterior - truth))))
    for color in COLORS:
        for shape in SHAPES:
            if table.col_total[color] == 0:
                continue
            lhs = Fraction(table.col_total[color], table.grand_total) * Fraction(
                table.counts[shape][color], table.col_total[color]
            )
            rhs = Fraction(table.counts[shape][color], table.grand_total)
            if lhs != rhs:
                return CheckResult(
                    "bayes-table-identity", False,
                    f"rational identity broken at ({color.label}, {shape.label})",
                )
    passed = max_dev <= 1e-12
    return CheckResult(
        "bayes-table-identity", passed,
        f"max |posterior - conditional| = {max_dev:.3g}",
    )


def _reference_dempster(m1: MassFunction, m2: MassFunction):
    """Brute-force double loop over all 64 subset pairs, via frozensets."""
    subsets = [subset_colors(mask) for mask in range(8)]
    acc: dict[frozenset, float] = {fs: 0.0 for fs in subsets}
    for a, sa in enumerate(subsets):
        for b, sb in enumerate(subsets):
            acc[sa & sb] += float(m1.masses[a]) * float(m2.masses[b])
    conflict = acc[frozenset()]
    if conflict >= 1.0 - 1e-12:
        return None, conflict
    out = np.zeros(8)
    for mask, fs in enumerate(subsets):
        if mask:
            out[mask] = acc[fs] / (1.0 - conflict)
    return out, conflict


def _random_mass(rng: np.random.Generator) -> MassFunction:
    weights = rng.random(7) ** 2
    # Occasionally zero out subsets so sparse focal structures are covered.
    drop = rng.random(7) < 0.3
    if not drop.all():
        weights = np.where(drop, 0.0, weights)
    if weights.sum() == 0:
        weights = np.ones(7)
    arr = np.zeros(8)
    arr[1:] = weights / weights.sum()
    return MassFunction(arr)


def check_dempster_oracle(pairs: int = 1000) -> CheckResult:
    """Fast combination must match the brute-force reference within 1e-12."""
    rng = substream(_SELFTEST_SEED, "dempster")
    max_dev = 0.0
    for _ in range(pairs):
        m1 = _random_mass(rng)
        m2 = _random_mass(rng)
        expected, _ = _reference_dempster(m1, m2)
        try:
            got = dempster_combine(m1, m2)
        except TotalConflictError:
            if expected is not None:
                return CheckResult(
                    "dempster-oracle", False,
                    "combination raised total conflict where reference did not",
                )
            continue
        if expected is None:
            return CheckResult(
                "dempster-oracle", False,
                "reference found total conflict where combination did not",
            )
        max_dev = max(max_dev, float(np.max(np.abs(got.masses - expected))))
    # Identity: combining with total ignorance must change nothing at all.
    probe = _random_mass(rng)
    identity = dempster_combine(probe, MassFunction.vacuous())
    identity_exact = np.array_equal(identity.masses, probe.masses)
    # Certainty on disjoint singletons must raise, not renormalize.
    green = MassFunction.from_subsets({(COLORS[0],): 1.0})
    red = MassFunction.from_subsets({(COLORS[1],): 1.0})
    try:
        dempster_combine(green, red)
        conflict_ok = False
    except TotalConflictError:
        conflict_ok = True
    passed = max_dev <= 1e-12 and identity_exact and conflict_ok
    return CheckResult(
        "dempster-oracle", passed,
        f"max deviation vs brute force = {max_dev:.3g} over {pairs} pairs; "
        f"identity {'exact' if identity_exact else 'BROKEN'}; "
        f"total conflict {'raised' if conflict_ok else 'MISSED'}",
    )


def check_cf_algebra(triples: int = 10_000) -> CheckResult:
    """Commutativity (exact), associativity (1e-12), identity, range."""
    rng = substream(_SELFTEST_SEED, "cf")
    signs = [(sx, sy, sz) for sx in (1, -1) for sy in (1, -1) for sz in (1, -1)]
    max_assoc = 0.0
    for i in range(triples):
        mags = rng.random(3)
        sx, sy, sz = signs[i % len(signs)]
        x, y, z = sx * mags[0], sy * mags[1], sz * mags[2]
        if cf_combine(x, y) != cf_combine(y, x):
            return CheckResult("cf-algebra", False, f"not commutative at {(x, y)}")
        left = cf_combine(cf_combine(x, y), z)
        right = cf_combine(x, cf_combine(y, z))
        max_assoc = max(max_assoc, abs(left - right))
        if cf_combine(x, 0.0) != x:
            return CheckResult("cf-algebra", False, f"0 is not an identity at {x}")
        if not -1.0 <= left <= 1.0:
            return CheckResult("cf-algebra", False, f"range escaped at {(x, y, z)}")
    passed = max_assoc <= 1e-12
    return CheckResult(
        "cf-algebra", passed,
        f"max associativity deviation = {max_assoc:.3g} over {triples} triples",
    )


def check_optimal_column(tol_exact: float = 1e-9) -> CheckResult:
    """Default-census optimal guessing must equal 4/3, 13/9, 2."""
    report = optimal_guessing(default_table())
    expected = (4.0 / 3.0, 13.0 / 9.0, 2.0)
    printed = (1.33, 1.44, 2.00)
    max_dev = max(abs(m - e) for m, e in zip(report.mean, expected))
    rounded_ok = all(abs(m - p) <= 0.005 for m, p in zip(report.mean, printed))
    passed = max_dev <= tol_exact and rounded_ok
    return CheckResult(
        "optimal-column", passed,
        f"means {tuple(round(m, 4) for m in report.mean)}, "
        f"max deviation {max_dev:.3g}",
    )


def run_selfchecks(
    table: ContingencyTable | None = None,
    pairs: int = 1000,
    triples: int = 10_000,
) -> list[CheckResult]:
    """Run every check; the census-dependent ones use ``table`` (default census
    when None)."""
    table = table if table is not None else default_table()
    return [
        check_contingency_totals(table),
        check_bayes_table_identity(table),
        check_dempster_oracle(pairs),
        check_cf_algebra(triples),
        check_optimal_column(),
    ]


def format_results(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [
        f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}"
        for r in results
    ]
    return "\n".join(lines)
