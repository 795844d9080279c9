"""Machine-readable experiment reports.

A report is a config echo plus a flat list of named check records.  Given the
same config (seed included) the numeric fields are reproducible bit-for-bit;
``wall_clock`` and ``tool_version`` are bookkeeping and sit outside that
guarantee.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Mapping

SCHEMA_VERSION = "1"

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "ExperimentConfig",
    "CheckRecord",
    "Report",
]


class ConfigError(ValueError):
    """Rejected experiment configuration."""


def _canonical(obj: Any) -> Any:
    """Rewrite a parameter tree into plain JSON-able types with sorted keys."""
    if isinstance(obj, Mapping):
        return {str(k): _canonical(obj[k]) for k in sorted(obj, key=str)}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return obj
    if hasattr(obj, "item"):  # numpy scalar
        return _canonical(obj.item())
    raise ConfigError(f"parameter of type {type(obj).__name__} is not JSON-able")


# commands that always draw randomness; `risk` enforces its seed only when
# the Monte Carlo path is actually taken
_STOCHASTIC = frozenset({"verify"})


@dataclass(frozen=True)
class ExperimentConfig:
    """Echoable description of one CLI invocation.

    params holds everything needed to re-run the command: alphabet sizes,
    loss exponent, sample sizes or sweep ranges, seed, caps, paths.
    """

    command: str
    params: dict

    def __post_init__(self) -> None:
        if not self.command:
            raise ConfigError("empty command name")
        object.__setattr__(self, "params", _canonical(self.params))
        p = self.params.get("p")
        if p is not None and not p >= 2:
            raise ConfigError(f"loss exponent must satisfy p >= 2, got {p}")
        if self.command in _STOCHASTIC and self.params.get("seed") is None:
            raise ConfigError(f"command {self.command!r} is stochastic: a seed is required")
        for key in ("sizes", "n_values", "m_values", "x_values"):
            rng = self.params.get(key)
            if rng is not None and len(rng) == 0:
                raise ConfigError(f"sweep range {key!r} is empty")

    def config_hash(self) -> str:
        """First 12 hex digits of the sha256 of the canonical config JSON."""
        blob = json.dumps(
            {"command": self.command, "params": self.params},
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def to_dict(self) -> dict:
        return {"command": self.command, "params": self.params}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExperimentConfig":
        return cls(command=d["command"], params=dict(d["params"]))


@dataclass(frozen=True)
class CheckRecord:
    """One named pass/fail/skip line.

    invariant is a stable identifier (module slash check-name); tolerance is
    always spelled out so the record is reviewable without the source.
    """

    invariant: str
    status: str  # pass | fail | skip
    value: Any = None
    target: Any = None
    tolerance: Any = None
    detail: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.status not in ("pass", "fail", "skip"):
            raise ValueError(f"status must be pass/fail/skip, got {self.status!r}")
        if "/" not in self.invariant:
            raise ValueError(f"invariant id {self.invariant!r} must be module/name")

    def to_dict(self) -> dict:
        return {
            "invariant": self.invariant,
            "status": self.status,
            "value": _canonical(self.value),
            "target": _canonical(self.target),
            "tolerance": _canonical(self.tolerance),
            "detail": _canonical(self.detail),
        }


def _record_from_dict(d: Mapping) -> CheckRecord:
    return CheckRecord(
        invariant=d["invariant"],
        status=d["status"],
        value=d.get("value"),
        target=d.get("target"),
        tolerance=d.get("tolerance"),
        detail=dict(d.get("detail") or {}),
    )


@dataclass
class Report:
    """Config echo, result payloads, and pass/fail records for one run.

    results holds computed objects (estimates, brackets, risk values);
    records holds the named checks.  Both are canonical JSON trees.
    """

    config: ExperimentConfig
    records: list[CheckRecord] = field(default_factory=list)
    results: dict = field(default_factory=dict)
    tool_version: str = ""
    wall_clock: float = 0.0

    def add(self, record: CheckRecord) -> CheckRecord:
        self.records.append(record)
        return record

    @property
    def passed(self) -> bool:
        """True when no record failed.  Skips do not count against the run."""
        return all(r.status != "fail" for r in self.records)

    @property
    def counts(self) -> dict:
        out = {"pass": 0, "fail": 0, "skip": 0}
        for r in self.records:
            out[r.status] += 1
        return out

    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "config_hash": self.config.config_hash(),
            "records": [r.to_dict() for r in self.records],
            "results": _canonical(self.results),
            "counts": self.counts,
            "passed": self.passed,
            "tool_version": self.tool_version,
            "wall_clock": self.wall_clock,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Report":
        d = json.loads(text)
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(f"unsupported report schema {d.get('schema_version')!r}")
        return cls(
            config=ExperimentConfig.from_dict(d["config"]),
            records=[_record_from_dict(r) for r in d["records"]],
            results=dict(d.get("results") or {}),
            tool_version=d.get("tool_version", ""),
            wall_clock=d.get("wall_clock", 0.0),
        )
