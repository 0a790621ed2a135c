"""Experiment configuration: a small INI dialect of ``key = value`` lines.

Example, with every key at its default::

    [experiment]
    base_seed = 324
    calculi = bayes, cf, ds

    [table]
    # path = blocks.csv          ; omit to use the built-in census

    [expert]
    kind = oracle                ; oracle | noisy | conservative | learner
    sigma = 1.0                  ; noisy only
    lambda = 0.5                 ; conservative only
    strength = 1.0               ; learner only
    trials = 324                 ; learner training length
    checkpoints = 81, 162, 243, 324

    [guessing]
    mode = analytic              ; analytic | montecarlo
    replications = 10000

    [bags]
    sizes = 2, 3, 4, 5, 7, 10, 20, 40, 80
    replications = 10000
    prior = marginal             ; marginal | uniform

    [output]
    dir = out
    plot = true

Unknown sections or keys are rejected so typos cannot silently fall back to
defaults.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, replace

from .blockworld import PriorMode
from .evaluation import DEFAULT_BAG_SIZES, Calculus
from .experts import DEFAULT_CHECKPOINTS


class ConfigError(ValueError):
    """Configuration file or value rejected."""


EXPERT_KINDS = ("oracle", "noisy", "conservative", "learner")
GUESSING_MODES = ("analytic", "montecarlo")


@dataclass(frozen=True)
class ExpertSpec:
    kind: str = "oracle"
    sigma: float = 1.0
    lam: float = 0.5
    strength: float = 1.0
    trials: int = 324
    checkpoints: tuple[int, ...] = DEFAULT_CHECKPOINTS


@dataclass(frozen=True)
class ExperimentConfig:
    base_seed: int = 324
    calculi: tuple[Calculus, ...] = tuple(Calculus)
    table_path: str | None = None
    expert: ExpertSpec = ExpertSpec()
    guessing_mode: str = "analytic"
    guessing_replications: int = 10_000
    bag_sizes: tuple[int, ...] = DEFAULT_BAG_SIZES
    bag_replications: int = 10_000
    prior_mode: PriorMode = PriorMode.MARGINAL
    out_dir: str = "out"
    plot: bool = True

    def canonical_text(self) -> str:
        """Stable one-line-per-key rendering of the effective configuration.

        Two runs with equal canonical text are promised to produce identical
        result files, so this text (not the file the user wrote) is what gets
        checksummed.
        """
        lines = [
            f"experiment.base_seed = {self.base_seed}",
            f"experiment.calculi = {','.join(c.value for c in self.calculi)}",
            f"table.path = {self.table_path or ''}",
            f"expert.kind = {self.expert.kind}",
            f"expert.sigma = {self.expert.sigma:g}",
            f"expert.lambda = {self.expert.lam:g}",
            f"expert.strength = {self.expert.strength:g}",
            f"expert.trials = {self.expert.trials}",
            f"expert.checkpoints = {','.join(str(c) for c in self.expert.checkpoints)}",
            f"guessing.mode = {self.guessing_mode}",
            f"guessing.replications = {self.guessing_replications}",
            f"bags.sizes = {','.join(str(s) for s in self.bag_sizes)}",
            f"bags.replications = {self.bag_replications}",
            f"bags.prior = {self.prior_mode.value}",
        ]
        return "\n".join(lines) + "\n"

    def checksum(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()[:16]


_KNOWN_KEYS = {
    "experiment": {"base_seed", "calculi"},
    "table": {"path"},
    "expert": {"kind", "sigma", "lambda", "strength", "trials", "checkpoints"},
    "guessing": {"mode", "replications"},
    "bags": {"sizes", "replications", "prior"},
    "output": {"dir", "plot"},
}


def _parse_int(section: str, key: str, raw: str, minimum: int | None = None) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} must be an integer, got {raw!r}") from None
    if minimum is not None and value < minimum:
        raise ConfigError(f"[{section}] {key} must be >= {minimum}, got {value}")
    return value


def _parse_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} must be a number, got {raw!r}") from None


def _parse_int_list(section: str, key: str, raw: str) -> tuple[int, ...]:
    items = [part.strip() for part in raw.split(",") if part.strip()]
    if not items:
        raise ConfigError(f"[{section}] {key} must list at least one integer")
    return tuple(_parse_int(section, key, item, minimum=1) for item in items)


def _parse_bool(section: str, key: str, raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"[{section}] {key} must be a boolean, got {raw!r}")


def load_config(
    path: str | None = None,
    seed_override: int | None = None,
    out_override: str | None = None,
    plot_override: bool | None = None,
) -> ExperimentConfig:
    """Read ``path`` (every key optional) and apply command-line overrides.

    ``path=None`` yields the all-defaults configuration.
    """
    cfg = ExperimentConfig()
    if path is not None:
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
        for section in parser.sections():
            if section not in _KNOWN_KEYS:
                raise ConfigError(f"unknown config section [{section}]")
            for key in parser[section]:
                if key not in _KNOWN_KEYS[section]:
                    raise ConfigError(f"unknown key {key!r} in section [{section}]")
        get = lambda sec, key: parser.get(sec, key, fallback=None)

        if (raw := get("experiment", "base_seed")) is not None:
            cfg = replace(cfg, base_seed=_parse_int("experiment", "base_seed", raw, minimum=0))
        if (raw := get("experiment", "calculi")) is not None:
            names = [part.strip().lower() for part in raw.split(",") if part.strip()]
            if not names:
                raise ConfigError("[experiment] calculi must list at least one calculus")
            try:
                calculi = tuple(Calculus(name) for name in names)
            except ValueError:
                raise ConfigError(
                    f"[experiment] calculi entries must be among "
                    f"{', '.join(c.value for c in Calculus)}; got {raw!r}"
                ) from None
            if len(set(calculi)) != len(calculi):
                raise ConfigError("[experiment] calculi must not repeat")
            cfg = replace(cfg, calculi=calculi)
        if (raw := get("table", "path")) is not None:
            cfg = replace(cfg, table_path=raw.strip() or None)

        expert = cfg.expert
        if (raw := get("expert", "kind")) is not None:
            kind = raw.strip().lower()
            if kind not in EXPERT_KINDS:
                raise ConfigError(
                    f"[expert] kind must be one of {', '.join(EXPERT_KINDS)}; got {raw!r}"
                )
            expert = replace(expert, kind=kind)
        if (raw := get("expert", "sigma")) is not None:
            sigma = _parse_float("expert", "sigma", raw)
            if sigma < 0:
                raise ConfigError(f"[expert] sigma must be >= 0, got {sigma}")
            expert = replace(expert, sigma=sigma)
        if (raw := get("expert", "lambda")) is not None:
            lam = _parse_float("expert", "lambda", raw)
            if not 0.0 <= lam <= 1.0:
                raise ConfigError(f"[expert] lambda must lie in [0, 1], got {lam}")
            expert = replace(expert, lam=lam)
        if (raw := get("expert", "strength")) is not None:
            strength = _parse_float("expert", "strength", raw)
            if strength <= 0:
                raise ConfigError(f"[expert] strength must be positive, got {strength}")
            expert = replace(expert, strength=strength)
        if (raw := get("expert", "trials")) is not None:
            expert = replace(expert, trials=_parse_int("expert", "trials", raw, minimum=1))
        if (raw := get("expert", "checkpoints")) is not None:
            expert = replace(expert, checkpoints=_parse_int_list("expert", "checkpoints", raw))
        cfg = replace(cfg, expert=expert)

        if (raw := get("guessing", "mode")) is not None:
            mode = raw.strip().lower()
            if mode not in GUESSING_MODES:
                raise ConfigError(
                    f"[guessing] mode must be one of {', '.join(GUESSING_MODES)}; got {raw!r}"
                )
            cfg = replace(cfg, guessing_mode=mode)
        if (raw := get("guessing", "replications")) is not None:
            cfg = replace(cfg, guessing_replications=_parse_int(
                "guessing", "replications", raw, minimum=1))

        if (raw := get("bags", "sizes")) is not None:
            cfg = replace(cfg, bag_sizes=_parse_int_list("bags", "sizes", raw))
        if (raw := get("bags", "replications")) is not None:
            cfg = replace(cfg, bag_replications=_parse_int(
                "bags", "replications", raw, minimum=1))
        if (raw := get("bags", "prior")) is not None:
            try:
                cfg = replace(cfg, prior_mode=PriorMode(raw.strip().lower()))
            except ValueError:
                raise ConfigError(
                    f"[bags] prior must be 'marginal' or 'uniform', got {raw!r}"
                ) from None

        if (raw := get("output", "dir")) is not None:
            cfg = replace(cfg, out_dir=raw.strip())
        if (raw := get("output", "plot")) is not None:
            cfg = replace(cfg, plot=_parse_bool("output", "plot", raw))

    if cfg.expert.kind == "learner":
        cks = cfg.expert.checkpoints
        if any(b <= a for a, b in zip(cks, cks[1:])):
            raise ConfigError("[expert] checkpoints must be strictly increasing")
        if cks[-1] > cfg.expert.trials:
            raise ConfigError(
                f"[expert] last checkpoint {cks[-1]} exceeds trials {cfg.expert.trials}"
            )

    if seed_override is not None:
        if seed_override < 0:
            raise ConfigError(f"seed must be non-negative, got {seed_override}")
        cfg = replace(cfg, base_seed=seed_override)
    if out_override is not None:
        cfg = replace(cfg, out_dir=out_override)
    if plot_override is not None:
        cfg = replace(cfg, plot=plot_override)
    return cfg
