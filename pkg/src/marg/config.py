"""Run configuration: every knob of a CLI run, persisted next to its outputs."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .adapt import SweepSpec
from .grow import GrowConfig, ThresholdPair
from .merge import MergeConfig
from .mixgen import MixConfig
from .pipeline import VARIANTS, PipelineConfig


@dataclass(frozen=True)
class RunConfig:
    input: str | None = None
    mask: str | None = None
    regions: str | None = None
    out: str = "out"
    grow: GrowConfig = field(default_factory=GrowConfig)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    merge: MergeConfig = field(default_factory=MergeConfig)
    mix: MixConfig = field(default_factory=MixConfig)
    adaptive: bool = True
    merging: bool = True
    metric: str = "accuracy"
    mix_mode: str = "regionmix"
    variants: tuple = tuple(VARIANTS)
    visualize: bool = False
    threads: int = 1

    def pipeline(self) -> PipelineConfig:
        return PipelineConfig(self.grow, self.sweep, self.merge, self.adaptive, self.merging)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grow"]["topology"] = self.grow.topology.value
        d["sweep"]["tau_s_grid"] = list(self.sweep.tau_s_grid)
        d["sweep"]["tau_l_grid"] = list(self.sweep.tau_l_grid)
        d["variants"] = list(self.variants)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "grow" in d:
            g = dict(d["grow"])
            if "thresholds" in g:
                g["thresholds"] = ThresholdPair(**g["thresholds"])
            d["grow"] = GrowConfig(**g)
        if "sweep" in d:
            s = dict(d["sweep"])
            for k in ("tau_s_grid", "tau_l_grid"):
                if k in s:
                    s[k] = tuple(s[k])
            d["sweep"] = SweepSpec(**s)
        if "merge" in d:
            d["merge"] = MergeConfig(**d["merge"])
        if "mix" in d:
            d["mix"] = MixConfig(**d["mix"])
        if "variants" in d:
            d["variants"] = tuple(d["variants"])
        return cls(**d)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def updated(self, **changes) -> "RunConfig":
        return replace(self, **changes)
