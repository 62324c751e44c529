"""Model parameters for the cognitive-relay network and their validation.

A configuration bundles the four link outage probabilities, the secondary
user's sensing quality, the relay buffer capacity and the two arrival rates.
All types are frozen dataclasses so they can be shared freely between worker
threads.
"""
from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path


class EqMode(str, enum.Enum):
    """Which reading of the idle-slot service rates to use.

    ``PAPER`` keeps the detection-probability factor on the relay and
    secondary service rates; ``PHYSICAL`` drops it, because the secondary
    user only transmits in slots where the primary user is idle and no
    detection event takes place.
    """

    PAPER = "paper"
    PHYSICAL = "physical"


class ConfigError(ValueError):
    """Raised when a configuration violates its parameter bounds."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class DegenerateConfigError(ConfigError):
    """Raised when 1 - p_pp * p_ps == 0 and phi cannot be formed."""


@dataclass(frozen=True)
class LinkOutages:
    p_pp: float = 0.0  # S_p -> D_p
    p_ps: float = 0.0  # S_p -> S_s
    p_sp: float = 0.0  # S_s -> D_p
    p_ss: float = 0.0  # S_s -> D_s


@dataclass(frozen=True)
class SensingProfile:
    p_d: float = 1.0
    p_f: float = 0.0


@dataclass(frozen=True)
class SystemConfig:
    outages: LinkOutages = field(default_factory=LinkOutages)
    sensing: SensingProfile = field(default_factory=SensingProfile)
    m: int = 1
    lambda_p: float = 0.0
    lambda_s: float = 0.0
    eq_mode: EqMode = EqMode.PAPER

    # flat accessors keep the formulas readable
    @property
    def p_pp(self) -> float:
        return self.outages.p_pp

    @property
    def p_ps(self) -> float:
        return self.outages.p_ps

    @property
    def p_sp(self) -> float:
        return self.outages.p_sp

    @property
    def p_ss(self) -> float:
        return self.outages.p_ss

    @property
    def p_d(self) -> float:
        return self.sensing.p_d

    @property
    def p_f(self) -> float:
        return self.sensing.p_f

    @classmethod
    def from_flat(cls, p_pp=0.0, p_ps=0.0, p_sp=0.0, p_ss=0.0, p_d=1.0,
                  p_f=0.0, m=1, lambda_p=0.0, lambda_s=0.0,
                  eq_mode="paper") -> "SystemConfig":
        """Build a config from the flat key set used by the JSON schema."""
        return cls(
            outages=LinkOutages(p_pp=p_pp, p_ps=p_ps, p_sp=p_sp, p_ss=p_ss),
            sensing=SensingProfile(p_d=p_d, p_f=p_f),
            m=m,
            lambda_p=lambda_p,
            lambda_s=lambda_s,
            eq_mode=EqMode(eq_mode),
        )

    def to_flat(self) -> dict:
        d = {**asdict(self.outages), **asdict(self.sensing)}
        d.update(m=self.m, lambda_p=self.lambda_p, lambda_s=self.lambda_s,
                 eq_mode=self.eq_mode.value)
        return {k: d[k] for k in CONFIG_KEYS}

    def with_(self, **changes) -> "SystemConfig":
        """Copy with flat-key overrides, e.g. ``cfg.with_(p_f=0.3, m=5)``."""
        flat = self.to_flat()
        unknown = set(changes) - set(CONFIG_KEYS)
        if unknown:
            raise KeyError(f"unknown config keys: {sorted(unknown)}")
        flat.update(changes)
        return SystemConfig.from_flat(**flat)

    def with_mode(self, mode) -> "SystemConfig":
        return replace(self, eq_mode=EqMode(mode))


CONFIG_KEYS = ("p_pp", "p_ps", "p_sp", "p_ss", "p_d", "p_f",
               "m", "lambda_p", "lambda_s", "eq_mode")


@dataclass(frozen=True)
class AuxiliaryParams:
    psi: float
    eta: float
    phi: float


def validate(config: SystemConfig) -> list[str]:
    """Return the list of bound violations; an empty list means valid."""
    violations = []
    probs = {
        "p_pp": config.p_pp, "p_ps": config.p_ps, "p_sp": config.p_sp,
        "p_ss": config.p_ss, "p_d": config.p_d, "p_f": config.p_f,
        "lambda_p": config.lambda_p, "lambda_s": config.lambda_s,
    }
    for name, value in probs.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            violations.append(f"{name}: must be a number, got {value!r}")
        elif not 0.0 <= value <= 1.0:
            violations.append(f"{name}: {value} outside [0, 1]")
    m = config.m
    if isinstance(m, bool) or not isinstance(m, int):
        violations.append(f"m: must be an integer, got {m!r}")
    elif m < 1:
        violations.append(f"m: {m} must be >= 1")
    if not isinstance(config.eq_mode, EqMode):
        violations.append(f"eq_mode: unknown mode {config.eq_mode!r}")
    if not violations and 1.0 - config.p_pp * config.p_ps <= 0.0:
        violations.append(PHI_UNDEFINED)
    return violations


PHI_UNDEFINED = "phi undefined (division by zero): 1 - p_pp*p_ps = 0"


def check(config: SystemConfig, allow_degenerate: bool = False) -> SystemConfig:
    """Raise :class:`ConfigError` unless ``config`` is valid.

    ``allow_degenerate`` tolerates an undefined phi, which only the analytic
    closed form needs; the slot-level models run fine without it.
    """
    violations = validate(config)
    if allow_degenerate:
        violations = [v for v in violations if v != PHI_UNDEFINED]
    if violations:
        raise ConfigError(violations)
    return config


def auxiliary(config: SystemConfig) -> AuxiliaryParams:
    """psi, eta and phi for ``config``.

    eta is exposed for completeness only; nothing downstream consumes it.
    """
    denom = 1.0 - config.p_pp * config.p_ps
    if denom <= 0.0:
        raise DegenerateConfigError(
            ["phi undefined (division by zero): 1 - p_pp*p_ps = 0"])
    return AuxiliaryParams(
        psi=(1.0 - config.p_f) * (1.0 - config.p_sp),
        eta=1.0 - config.p_pp * config.p_sp,
        phi=(1.0 - config.p_ps) * config.p_pp / denom,
    )


def load_config(path) -> SystemConfig:
    """Read a JSON config file with the flat key schema.

    Unknown keys raise ``ConfigError``; missing keys take defaults, except
    that ``eq_mode`` defaults to ``"paper"``.
    """
    raw = json.loads(Path(path).read_text())
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> SystemConfig:
    if not isinstance(raw, dict):
        raise ConfigError(["config: top-level JSON value must be an object"])
    unknown = sorted(set(raw) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError([f"{k}: unknown config key" for k in unknown])
    try:
        mode = EqMode(raw.get("eq_mode", "paper"))
    except ValueError:
        raise ConfigError(
            [f"eq_mode: {raw.get('eq_mode')!r} not one of 'paper', 'physical'"]
        ) from None
    kwargs = {k: v for k, v in raw.items() if k != "eq_mode"}
    return SystemConfig.from_flat(**kwargs, eq_mode=mode)
