"""Experiment configuration and report documents for the CLI harness.

A run is described by an :class:`ExperimentConfig`: a frozen bag of
parameters assembled from an optional JSON document plus command-line
overrides.  Validation happens at construction (field-by-field, with the
offending field named in the message) so the harness can map every bad
input to a clean "config error" exit instead of a traceback deep in a run.

Seeds are mandatory for every stochastic mode.  There is deliberately no
wall-clock fallback: an unseeded run would be unreproducible, and silent
irreproducibility is worse than a loud error.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rate_region import RateTuple

__all__ = [
    "MODES",
    "SCHEMA_VERSION",
    "STOCHASTIC_MODES",
    "ConfigError",
    "CoordinationReport",
    "ExperimentConfig",
    "load_config",
]

MODES = ("rates-sweep", "polar-construct", "codec-run", "sep-run", "validate")

# Every mode except the closed-form sweep consumes randomness.
STOCHASTIC_MODES = frozenset(m for m in MODES if m != "rates-sweep")

SCHEMA_VERSION = 1

_INT_FIELDS = frozenset({"seed", "n", "k", "n_seeds", "mc_samples"})
_FLOAT_FIELDS = frozenset(
    {"p", "p_o", "p1", "alpha", "beta", "delta", "grid_step", "rate_margin"}
)
_STR_FIELDS = frozenset({"mode", "sets_path", "out"})
_OPTIONAL_FIELDS = frozenset({"seed", "p1", "alpha", "beta", "sets_path", "out"})


class ConfigError(ValueError):
    """A configuration document or flag set that cannot describe a run."""


def _require(condition, message):
    if not condition:
        raise ConfigError(message)


@dataclass(frozen=True)
class ExperimentConfig:
    """One fully-specified experiment.

    ``p`` and ``p_o`` fix the target and link crossovers; ``p1``, ``alpha``
    and ``beta`` optionally override the worked-example design legs (the
    defaults reproduce the running example).  ``rate_margin`` positions the
    separate-scheme operating point, and ``sets_path`` short-circuits the
    Monte Carlo construction by loading a frozen partition document.
    """

    mode: str
    seed: int | None = None
    p: float = 0.4
    p_o: float = 0.1
    p1: float | None = None
    alpha: float | None = None
    beta: float | None = None
    n: int = 1024
    k: int = 8
    n_seeds: int = 10
    mc_samples: int = 100_000
    delta: float = 0.1
    grid_step: float = 1e-3
    rate_margin: float = 0.5
    sets_path: str | None = None
    out: str | None = None

    def __post_init__(self):
        _require(
            self.mode in MODES,
            f"mode: expected one of {', '.join(MODES)}, got {self.mode!r}",
        )
        if self.mode in STOCHASTIC_MODES:
            _require(
                self.seed is not None,
                f"seed: required for mode {self.mode!r} "
                "(stochastic runs take no wall-clock default)",
            )
        if self.seed is not None:
            _require(
                0 <= self.seed < 1 << 63,
                f"seed: must be a nonnegative 63-bit integer, got {self.seed}",
            )
        _require(
            self.n > 0 and self.n & (self.n - 1) == 0,
            f"n: blocklength must be a positive power of two, got {self.n}",
        )
        _require(self.k >= 1, f"k: at least one block is required, got {self.k}")
        _require(
            self.n_seeds >= 1, f"n_seeds: at least one seed is required, got {self.n_seeds}"
        )
        _require(
            self.mc_samples >= 1,
            f"mc_samples: sample count must be positive, got {self.mc_samples}",
        )
        _require(
            0.0 < self.delta < 0.5,
            f"delta: threshold must lie in (0, 0.5), got {self.delta}",
        )
        _require(
            0.0 < self.grid_step <= 0.25,
            f"grid_step: resolution must lie in (0, 0.25], got {self.grid_step}",
        )
        _require(
            0.0 < self.rate_margin <= 1.0,
            f"rate_margin: must lie in (0, 1], got {self.rate_margin}",
        )
        _require(
            0.0 < self.p <= 0.5,
            f"p: target crossover must lie in (0, 0.5], got {self.p}",
        )
        _require(
            0.0 <= self.p_o <= 0.5,
            f"p_o: link crossover must lie in [0, 0.5], got {self.p_o}",
        )
        for name in ("p1", "alpha", "beta"):
            value = getattr(self, name)
            if value is not None:
                _require(
                    0.0 <= value <= 1.0,
                    f"{name}: probability must lie in [0, 1], got {value}",
                )

    @classmethod
    def from_dict(cls, data) -> "ExperimentConfig":
        """Build a config from a plain mapping, naming any offending field."""
        names = {f.name for f in dataclasses.fields(cls)}
        clean = {}
        for key, value in dict(data).items():
            if key not in names:
                raise ConfigError(f"{key}: unknown field")
            if value is None:
                if key not in _OPTIONAL_FIELDS:
                    raise ConfigError(f"{key}: null is not a valid value")
                clean[key] = None
                continue
            if key in _INT_FIELDS:
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ConfigError(f"{key}: expected an integer, got {value!r}")
            elif key in _FLOAT_FIELDS:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ConfigError(f"{key}: expected a number, got {value!r}")
                value = float(value)
            elif key in _STR_FIELDS:
                if not isinstance(value, str):
                    raise ConfigError(f"{key}: expected a string, got {value!r}")
            clean[key] = value
        if "mode" not in clean:
            raise ConfigError("mode: required (set it in the config file or pass --mode)")
        return cls(**clean)


def load_config(path=None, overrides=None) -> ExperimentConfig:
    """Merge a JSON config document (if any) with flag overrides.

    Flags win over the file; override entries whose value is ``None`` are
    treated as "not given" so absent flags never mask file settings.
    """
    data: dict = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path} ({exc})") from exc
        try:
            document = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: {path} is not valid JSON ({exc})") from exc
        if not isinstance(document, dict):
            raise ConfigError("config: the document must be a JSON object")
        data.update(document)
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    return ExperimentConfig.from_dict(data)


@dataclass(frozen=True)
class CoordinationReport:
    """Measured outcome of a chained codec run, one batch row per seed.

    ``block_recovery`` holds the per-block exact-recovery flags for the
    common layer, row per seed.  ``runtime_seconds`` is wall-clock and is
    deliberately excluded from :meth:`to_json` so a fixed seed reproduces
    the serialized report byte for byte; the CLI logs it to stderr instead.
    """

    schema_version: int
    mode: str
    size: int
    n_blocks: int
    seeds: tuple
    rates: RateTuple
    per_letter_tv: tuple
    pairwise_tv: tuple
    pooled_tv: float
    block_recovery: tuple
    ledger_consumed: int
    ledger_expected: int
    m2_consumed: int
    sc_private_bits: tuple
    overhead_channel_uses: int
    runtime_seconds: float = 0.0

    def __post_init__(self):
        for name in ("per_letter_tv", "pairwise_tv"):
            values = getattr(self, name)
            if any(not 0.0 <= v <= 1.0 for v in values):
                raise ValueError(f"{name}: total variation must lie in [0, 1]")
        if not 0.0 <= self.pooled_tv <= 1.0:
            raise ValueError("pooled_tv: total variation must lie in [0, 1]")

    @property
    def ledger_balanced(self) -> bool:
        return self.ledger_consumed == self.ledger_expected

    def to_json(self) -> str:
        document = dataclasses.asdict(self)
        del document["runtime_seconds"]
        return json.dumps(document, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_chain_stats(cls, mode, stats, runtime_seconds=0.0) -> "CoordinationReport":
        """Freeze a codec ``ChainRunStats`` into a serializable report."""
        recovery = np.atleast_2d(stats.block_recovery)
        return cls(
            schema_version=SCHEMA_VERSION,
            mode=mode,
            size=int(stats.size),
            n_blocks=int(stats.n_blocks),
            seeds=tuple(int(s) for s in stats.seeds),
            rates=stats.rates,
            per_letter_tv=tuple(float(v) for v in np.atleast_1d(stats.per_letter_tv)),
            pairwise_tv=tuple(float(v) for v in np.atleast_1d(stats.pairwise_tv)),
            pooled_tv=float(stats.pooled_tv),
            block_recovery=tuple(tuple(bool(b) for b in row) for row in recovery),
            ledger_consumed=int(stats.ledger_consumed),
            ledger_expected=int(stats.ledger_expected),
            m2_consumed=int(stats.m2_consumed),
            sc_private_bits=tuple(int(v) for v in np.atleast_1d(stats.sc_private_bits)),
            overhead_channel_uses=int(stats.overhead_channel_uses),
            runtime_seconds=float(runtime_seconds),
        )
