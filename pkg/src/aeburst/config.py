"""Pipeline configuration with a stable JSON round-trip."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .distributions import GammaParams
from .dppmm import Hyperparams
from .windowing import ThresholdPolicy, WindowSpec

__all__ = ["PipelineConfig"]


@dataclass(frozen=True)
class PipelineConfig:
    """Every knob of the detection/clustering/monitoring pipeline.

    Serialises to a flat JSON object; ``from_dict`` accepts any subset of
    keys on top of the defaults, so config files may be partial.
    """

    threshold_kind: str = "percentile"
    threshold_value: float = 99.0
    rectify: bool = True
    window_length: int = 1000
    overlap: float = 0.875
    prior_shape: float = 1.0
    prior_rate: float = 1.0
    alpha: float = 1.0
    sweeps: int = 100
    burn_in: int = 50
    keep_ratio: float = 0.1
    min_probability: float = 0.5
    min_event_length: int = 1
    flag_margin: float = 2.302585092994046  # log(10)
    step_factor: float = 10.0
    alarm_lag: int = 50
    alarm_min_history: int = 10
    survival_horizon: int = 20
    min_survivors: int = 2
    alarm_warmup: int = 50
    seed: int = 0

    def threshold_policy(self) -> ThresholdPolicy:
        return ThresholdPolicy(self.threshold_kind, self.threshold_value, self.rectify)

    def window_spec(self) -> WindowSpec:
        return WindowSpec(self.window_length, self.overlap)

    def prior(self) -> GammaParams:
        return GammaParams(self.prior_shape, self.prior_rate)

    def hyperparams(self) -> Hyperparams:
        return Hyperparams(self.alpha, self.prior())

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_json_file(cls, path: str | Path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"
