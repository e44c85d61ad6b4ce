"""Flat ``key = value`` run-configuration files.

UTF-8 text, one assignment per line, ``#`` starts a comment, blank lines
are ignored, nested blocks use dotted keys.  Unknown and duplicate keys
are rejected so typos fail loudly.  The default configuration:

    a = 0.2
    b = 0.5
    sigma = 1.2
    x = 2.0
    T = 5.0
    k_tilde = 5.0
    constraint.kind = all
    constraint.C_tilde = 0.0
    constraint.epsilon = 0.01
    constraint.nu = 0.1
    simulation.n_steps = 1000
    simulation.seeds = 2020,2015,1994,2
    simulation.mc_samples = 1000000
    output.dir = out

``constraint.kind`` is one of unconstrained, strict, var, es_p, es_q, or
``all`` to request every regime.  Serialization uses shortest round-trip
float representations, so parse -> serialize -> parse is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from .design import REGIMES, ConstraintSpec
from .errors import ConfigError
from .kernel import ModelParams

_KIND_CHOICES = REGIMES + ("all",)


def _parse_float(raw: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"expected a number, got {raw!r}") from exc


def _parse_int(raw: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"expected an integer, got {raw!r}") from exc


def _parse_seeds(raw: str) -> tuple[int, ...]:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ConfigError("simulation.seeds needs at least one integer")
    return tuple(_parse_int(p) for p in parts)


def _parse_kind(raw: str) -> str:
    if raw not in _KIND_CHOICES:
        raise ConfigError(
            f"constraint.kind must be one of {', '.join(_KIND_CHOICES)}, got {raw!r}"
        )
    return raw


@dataclass(frozen=True)
class RunConfig:
    """Model, constraint, simulation, and output settings for one run."""

    a: float
    b: float
    sigma: float
    x: float
    T: float
    k_tilde: float
    constraint_kind: str = "all"
    C_tilde: float | None = None
    epsilon: float | None = None
    nu: float | None = None
    n_steps: int = 1000
    seeds: tuple[int, ...] = (2020, 2015, 1994, 2)
    mc_samples: int = 1_000_000
    out_dir: str = "out"

    def regimes(self) -> tuple[str, ...]:
        if self.constraint_kind == "all":
            return REGIMES
        return (self.constraint_kind,)

    def constraint_for(self, regime: str) -> ConstraintSpec:
        """Build the regime's constraint, erroring on missing tolerances."""
        if regime not in REGIMES:
            raise ConfigError(f"unknown regime {regime!r}")
        if regime == "unconstrained":
            return ConstraintSpec("unconstrained")
        if self.C_tilde is None:
            raise ConfigError(f"constraint.C_tilde is required for regime {regime!r}")
        if regime == "strict":
            return ConstraintSpec("strict", C_tilde=self.C_tilde)
        if regime == "var":
            if self.epsilon is None:
                raise ConfigError("constraint.epsilon is required for regime 'var'")
            return ConstraintSpec("var", C_tilde=self.C_tilde, epsilon=self.epsilon)
        if self.nu is None:
            raise ConfigError(f"constraint.nu is required for regime {regime!r}")
        return ConstraintSpec(regime, C_tilde=self.C_tilde, nu=self.nu)

    def model_params(self) -> ModelParams:
        # only regimes with a floor see C_tilde; the params-level checks fire here
        needs_floor = self.constraint_kind != "unconstrained"
        return ModelParams(
            a=self.a, b=self.b, sigma=self.sigma, x=self.x, T=self.T,
            k_tilde=self.k_tilde,
            C_tilde=self.C_tilde if needs_floor else None,
        )

    def validate(self) -> None:
        """Re-run every module-level invariant on the loaded values."""
        if self.n_steps < 1:
            raise ConfigError(f"simulation.n_steps must be >= 1, got {self.n_steps}")
        if self.mc_samples < 1000:
            raise ConfigError(
                f"simulation.mc_samples must be >= 1000, got {self.mc_samples}"
            )
        if not self.seeds:
            raise ConfigError("simulation.seeds needs at least one integer")
        if not self.out_dir:
            raise ConfigError("output.dir must be non-empty")
        self.model_params()
        for regime in self.regimes():
            self.constraint_for(regime)

    def with_overrides(self, **kwargs) -> "RunConfig":
        return replace(self, **kwargs)


_FIELDS = {
    "a": ("a", _parse_float),
    "b": ("b", _parse_float),
    "sigma": ("sigma", _parse_float),
    "x": ("x", _parse_float),
    "T": ("T", _parse_float),
    "k_tilde": ("k_tilde", _parse_float),
    "constraint.kind": ("constraint_kind", _parse_kind),
    "constraint.C_tilde": ("C_tilde", _parse_float),
    "constraint.epsilon": ("epsilon", _parse_float),
    "constraint.nu": ("nu", _parse_float),
    "simulation.n_steps": ("n_steps", _parse_int),
    "simulation.seeds": ("seeds", _parse_seeds),
    "simulation.mc_samples": ("mc_samples", _parse_int),
    "output.dir": ("out_dir", str),
}

_REQUIRED = ("a", "b", "sigma", "x", "T", "k_tilde")


def parse_config(text: str) -> RunConfig:
    """Parse configuration text; unknown, duplicate, or malformed keys fail."""
    values: dict[str, object] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        key, _, raw_value = line.partition("=")
        key = key.strip()
        raw_value = raw_value.strip()
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        field, parser = _FIELDS[key]
        if field in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[field] = parser(raw_value)
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {key}: {exc}") from None
    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    return RunConfig(**values)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; floats use shortest round-trip representations."""
    lines = []
    for key, (field, _) in _FIELDS.items():
        value = getattr(cfg, field)
        if value is None:
            continue
        if field == "seeds":
            rendered = ",".join(str(s) for s in value)
        elif isinstance(value, float):
            rendered = repr(value)
        else:
            rendered = str(value)
        lines.append(f"{key} = {rendered}")
    return "\n".join(lines) + "\n"


def load_config(path: str | Path) -> RunConfig:
    """Read and parse a configuration file (UTF-8)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config(text)


def default_config() -> RunConfig:
    """The configuration the package ships with (all five regimes)."""
    return RunConfig(
        a=0.2, b=0.5, sigma=1.2, x=2.0, T=5.0, k_tilde=5.0,
        constraint_kind="all", C_tilde=0.0, epsilon=0.01, nu=0.1,
        n_steps=1000, seeds=(2020, 2015, 1994, 2), mc_samples=1_000_000,
        out_dir="out",
    )
