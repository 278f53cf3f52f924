"""Scenario configuration: defaults, JSON file loading, validation.

Defaults::

    scheme            "a"       one of pv-bb84, i, ii, iii, iv, a, b
    d                 1.0       prover-verifier distance in light-seconds
    positions         null      explicit {"V0": x, "P": x, "V1": x}; overrides d
    rounds            1         successive rounds per trial (scheme I: rounds inside one run)
    trials            1         independent repetitions
    seed              0         master seed; per-trial seeds are derived from it
    adversary         "none"    strategy id, see pbqc.adversaries.STRATEGIES
    backend           "state"   "state" or "labels"
    timing_tolerance  1e-6      seconds
    expect            "auto"    "accept", "detect", "any"; auto = accept iff no adversary
    auth              {"enabled": false, "z_P": 4, "z_V": 5}
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Mapping, Optional

from .adversaries import STRATEGIES
from .protocols.base import SCHEMES
from .spacetime import DEFAULT_TOLERANCE, WorldLine

EXPECTATIONS = ("auto", "accept", "detect", "any")


class ConfigError(ValueError):
    pass


@dataclass
class AuthConfig:
    enabled: bool = False
    z_P: int = 4
    z_V: int = 5


@dataclass
class ScenarioConfig:
    scheme: str = "a"
    d: float = 1.0
    positions: Optional[dict] = None
    rounds: int = 1
    trials: int = 1
    seed: int = 0
    adversary: str = "none"
    backend: str = "state"
    timing_tolerance: float = DEFAULT_TOLERANCE
    expect: str = "auto"
    auth: AuthConfig = field(default_factory=AuthConfig)

    def validate(self) -> "ScenarioConfig":
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {', '.join(SCHEMES)}")
        if self.adversary not in STRATEGIES:
            raise ConfigError(f"unknown adversary {self.adversary!r}")
        if self.backend not in ("state", "labels"):
            raise ConfigError("backend must be 'state' or 'labels'")
        if self.expect not in EXPECTATIONS:
            raise ConfigError(f"expect must be one of {', '.join(EXPECTATIONS)}")
        if self.rounds < 1 or self.trials < 1:
            raise ConfigError("rounds and trials must be at least 1")
        if not self.d > 0:
            raise ConfigError("d must be positive")
        if not self.timing_tolerance >= 0:
            raise ConfigError("timing_tolerance must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")
        if self.auth.z_P < 1 or self.auth.z_V < 1:
            raise ConfigError("auth z values must be positive")
        if self.auth.enabled and self.scheme not in ("a", "b"):
            raise ConfigError("authentication needs keys from scheme a or b")
        if self.positions is not None:
            missing = {"V0", "P", "V1"} - set(self.positions)
            if missing:
                raise ConfigError(f"positions lack {sorted(missing)}")
            try:
                self.world().check_prover_between()
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        return self

    def world(self) -> WorldLine:
        if self.positions is not None:
            return WorldLine({k: float(v) for k, v in self.positions.items()})
        return WorldLine.canonical(self.d)

    def expectation(self) -> str:
        if self.expect != "auto":
            return self.expect
        return "accept" if self.adversary == "none" else "any"

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values = dict(data)
        if "auth" in values:
            auth = values["auth"]
            if not isinstance(auth, Mapping):
                raise ConfigError("auth must be an object")
            bad = set(auth) - {f.name for f in fields(AuthConfig)}
            if bad:
                raise ConfigError(f"unknown auth keys: {', '.join(sorted(bad))}")
            values["auth"] = AuthConfig(**auth)
        try:
            return cls(**values).validate()
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str) -> "ScenarioConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())
