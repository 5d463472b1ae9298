"""Seeded synthetic sensor runs shaped like a small turning-wear experiment.

Worn cuts run hotter (steeper temperature ramp plus an offset) and slightly
louder/rougher than unworn ones; spindle speed is assigned round-robin so it
carries no class information at all. The `overlap` knob pulls the worn signal
parameters back toward the unworn ones: 0 gives linearly separable classes,
1 makes the classes indistinguishable. All constants live in SynthConfig;
nothing here pretends to be measured data.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .dataio import ManifestEntry
from .rng import substream
from .signalprep import SensorRun


@dataclass(frozen=True)
class SynthConfig:
    run_count: int = 23
    samples_per_run: int = 140
    spindle_speeds: tuple[float, ...] = (700.0, 900.0, 1100.0)
    worn_fraction: float = 0.4
    sample_period: float = 0.038
    # class-conditional signal parameters (worn values before overlap pullback)
    temp_offset_unworn: float = 24.0
    temp_offset_worn: float = 31.0
    temp_ramp_unworn: float = 1.1     # degC per second
    temp_ramp_worn: float = 2.1
    temp_noise: float = 0.35
    acoustic_sigma_unworn: float = 1.0
    acoustic_sigma_worn: float = 1.9
    accel_sigma_unworn: float = 0.5
    accel_sigma_worn: float = 0.75
    overlap: float = 0.6
    seed: int = 2311

    def validate(self) -> None:
        if self.run_count < 2:
            raise ValueError("run_count must be >= 2")
        if self.samples_per_run < 14:
            raise ValueError("samples_per_run must be >= 14 "
                             "(7 windows of at least 2 samples)")
        if not self.spindle_speeds or any(s <= 0 for s in self.spindle_speeds):
            raise ValueError("spindle_speeds must be positive")
        if not 0.0 < self.worn_fraction < 1.0:
            raise ValueError("worn_fraction must lie strictly in (0, 1)")
        if self.sample_period <= 0:
            raise ValueError("sample_period must be > 0")
        for name in ("temp_noise", "acoustic_sigma_unworn",
                     "acoustic_sigma_worn", "accel_sigma_unworn",
                     "accel_sigma_worn"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if not 0.0 <= self.overlap <= 1.0:
            raise ValueError("overlap must lie in [0, 1]")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SynthConfig":
        data = json.loads(text)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "spindle_speeds" in data:
            data["spindle_speeds"] = tuple(data["spindle_speeds"])
        cfg = cls(**data)
        cfg.validate()
        return cfg


def default_paper_profile() -> SynthConfig:
    """The checked-in desk-scale profile: 23 runs over three spindle speeds,
    one first-worn incident per speed, classes separated mainly by the
    temperature integral. Used by the acceptance suite with fixed seeds."""
    return SynthConfig()


#: named profiles accepted by the CLI
PROFILES = {"paper": default_paper_profile, "default": default_paper_profile}


@dataclass
class _RunPlan:
    index: int
    speed: float
    worn: bool
    first_worn: bool


def _plan_runs(config: SynthConfig) -> list[_RunPlan]:
    """Round-robin speed assignment; within each speed group the trailing
    runs are worn and the first worn one is the transition incident."""
    speeds = config.spindle_speeds
    groups: dict[float, list[int]] = {s: [] for s in speeds}
    for i in range(config.run_count):
        groups[speeds[i % len(speeds)]].append(i)
    plans = [None] * config.run_count
    for speed, members in groups.items():
        size = len(members)
        worn_k = min(max(math.floor(config.worn_fraction * size + 0.5), 1),
                     size - 1) if size > 1 else 1
        first_worn_pos = size - worn_k
        for pos, idx in enumerate(members):
            worn = pos >= first_worn_pos
            plans[idx] = _RunPlan(index=idx, speed=speed, worn=worn,
                                  first_worn=worn and pos == first_worn_pos)
    return plans


def _pull_toward(unworn: float, worn: float, overlap: float) -> float:
    return unworn + (worn - unworn) * (1.0 - overlap)


def generate(config: SynthConfig) -> list[SensorRun]:
    """Generate the configured runs, deterministically under config.seed.

    Each run draws from the substream (seed, run_index), so per-run
    generation order never changes the output.
    """
    config.validate()
    runs = []
    for plan in _plan_runs(config):
        rng = np.random.default_rng(substream(config.seed, plan.index))
        n = config.samples_per_run
        # nominal grid with sub-period jitter; differences stay positive
        t = np.arange(n) * config.sample_period \
            + 0.1 * config.sample_period * rng.random(n)
        if plan.worn:
            offset = _pull_toward(config.temp_offset_unworn,
                                  config.temp_offset_worn, config.overlap)
            ramp = _pull_toward(config.temp_ramp_unworn,
                                config.temp_ramp_worn, config.overlap)
            acoustic = _pull_toward(config.acoustic_sigma_unworn,
                                    config.acoustic_sigma_worn,
                                    config.overlap)
            accel = _pull_toward(config.accel_sigma_unworn,
                                 config.accel_sigma_worn, config.overlap)
        else:
            offset = config.temp_offset_unworn
            ramp = config.temp_ramp_unworn
            acoustic = config.acoustic_sigma_unworn
            accel = config.accel_sigma_unworn
        theta = offset + ramp * t + config.temp_noise * rng.standard_normal(n)
        ax = accel * rng.standard_normal(n)
        ay = accel * rng.standard_normal(n)
        az = accel * rng.standard_normal(n)
        s1 = acoustic * rng.standard_normal(n)
        s2 = acoustic * rng.standard_normal(n)
        runs.append(SensorRun(
            run_id=f"run{plan.index:02d}", spindle_speed=plan.speed,
            t=t, ax=ax, ay=ay, az=az, s1=s1, s2=s2, theta=theta,
            label=int(plan.worn), first_worn_incident=plan.first_worn))
    return runs


def manifest_entries(runs, file_pattern: str = "{run_id}.csv"
                     ) -> list[ManifestEntry]:
    """Manifest rows for generated runs; file paths stay relative."""
    return [ManifestEntry(run_id=r.run_id,
                          file=file_pattern.format(run_id=r.run_id),
                          rpm=r.spindle_speed, label=r.label,
                          first_worn_incident=r.first_worn_incident)
            for r in runs]
