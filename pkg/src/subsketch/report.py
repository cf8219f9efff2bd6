"""Machine-readable experiment reports.

Reports serialize to JSON (one object per line for multi-trial runs).  The
canonical form drops wall-clock time, the one field that legitimately varies
between identical runs; everything else is a pure function of the inputs.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

from .errors import ConfigurationError

_MODES = ("known", "adaptive", "deterministic")


@dataclass(frozen=True)
class ValidationBlock:
    """Comparison against the exact optimum, when it was computable."""

    exact_opt: float
    ratio: float
    envelope_low: float
    envelope_high: float
    envelope_ok: bool


@dataclass(frozen=True)
class ExperimentReport:
    mode: str
    m: int
    epsilon: float
    gamma0: float
    seed: int
    sketch_delta: float
    n: int
    estimate: float
    sketch_entries: int
    draws_used: int
    wall_time_ms: float
    validation: ValidationBlock | None = None
    expanded_makespan: float | None = None

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ConfigurationError(f"mode must be one of {_MODES}")
        if self.mode == "deterministic" and self.draws_used != 0:
            raise ConfigurationError("deterministic mode draws nothing")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def canonical_json(self) -> str:
        """Serialization with the volatile timing field removed.

        Two runs of the same (instance, mode, params, seed) produce
        byte-identical canonical forms.
        """
        payload = self.to_dict()
        del payload["wall_time_ms"]
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentReport":
        data = dict(payload)
        block = data.get("validation")
        if block is not None:
            data["validation"] = ValidationBlock(**block)
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        return cls.from_dict(json.loads(text))
