"""Pipeline configuration, presets and the activity catalog."""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .chanvese import ChanVeseConfig
from .corners import SiftConfig
from .echo import MotionProfile, MotionSegment, NoiseModel, RadarParams, WallModel
from .maps import EmdConfig, StftConfig

__all__ = [
    "MapperParams",
    "SplitSizes",
    "PipelineConfig",
    "load_activity_catalog",
    "activity_names",
    "sample_profile",
    "preset",
]


@dataclass(frozen=True)
class MapperParams:
    n_x: int = 100
    n_y: int = 100
    overlap_factor: float = 1.5

    def __post_init__(self):
        if self.n_x < 2 or self.n_y < 2:
            raise ValueError("n_x and n_y must be >= 2")
        if self.overlap_factor <= 1:
            raise ValueError("overlap_factor must exceed 1")


@dataclass(frozen=True)
class SplitSizes:
    """Samples per class for the template pool and the validation set."""

    templates_per_class: int = 5
    validation_per_class: int = 20

    def __post_init__(self):
        if self.templates_per_class < 1 or self.validation_per_class < 0:
            raise ValueError("split sizes must be positive")


_NESTED = {
    "radar": RadarParams,
    "wall": WallModel,
    "noise": NoiseModel,
    "emd": EmdConfig,
    "stft": StftConfig,
    "sift": SiftConfig,
    "chan_vese": ChanVeseConfig,
    "mapper": MapperParams,
    "split": SplitSizes,
}


@dataclass(frozen=True)
class PipelineConfig:
    """Everything that determines a run, apart from the seed.

    ``noise.variance`` is absolute; SNR sweeps scale it. ``classes`` lists
    the activity labels in play (1..12 by default) and ``activities`` may
    override entries of the packaged catalog.
    """

    radar: RadarParams = field(default_factory=RadarParams)
    wall: WallModel = field(default_factory=WallModel)
    noise: NoiseModel = field(default_factory=lambda: NoiseModel(variance=2e-8))
    emd: EmdConfig = field(default_factory=EmdConfig)
    stft: StftConfig = field(default_factory=StftConfig)
    sift: SiftConfig = field(default_factory=SiftConfig)
    chan_vese: ChanVeseConfig = field(default_factory=ChanVeseConfig)
    mapper: MapperParams = field(default_factory=MapperParams)
    split: SplitSizes = field(default_factory=SplitSizes)
    map_type: str = "rtm"
    image_size: tuple[int, int] = (128, 128)
    cut_threshold: float = 0.3
    classes: tuple[int, ...] = tuple(range(1, 13))
    activities: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.map_type not in ("rtm", "dtm"):
            raise ValueError("map_type must be 'rtm' or 'dtm'")
        if len(self.image_size) != 2 or min(self.image_size) < 16:
            raise ValueError("image_size must be two values >= 16")
        if not 0 < self.cut_threshold < 1:
            raise ValueError("cut_threshold must lie in (0, 1)")
        if len(self.classes) < 1 or len(set(self.classes)) != len(self.classes):
            raise ValueError("classes must be a non-empty list of distinct labels")
        catalog = self.catalog()
        missing = [c for c in self.classes if str(c) not in catalog["activities"]]
        if missing:
            raise ValueError(f"no activity definition for labels {missing}")
        # window and hop must fit the slow-time grid before any synthesis starts
        self.stft.samples(self.radar.pri_s)

    def catalog(self) -> dict:
        cat = load_activity_catalog()
        for key, value in self.activities.items():
            cat["activities"][str(key)] = value
        return cat

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            out[f.name] = dataclasses.asdict(value) if dataclasses.is_dataclass(value) else value
        out["image_size"] = list(self.image_size)
        out["classes"] = list(self.classes)
        return json.loads(json.dumps(out))

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        kwargs = {}
        for key, value in data.items():
            if key in _NESTED:
                sub = _NESTED[key]
                names = {f.name: f for f in dataclasses.fields(sub)}
                unknown = set(value) - set(names)
                if unknown:
                    raise ValueError(f"unknown keys in {key!r}: {sorted(unknown)}")
                kwargs[key] = sub(**{k: tuple(v) if isinstance(v, list) else v
                                     for k, v in value.items()})
            elif key in ("image_size", "classes"):
                kwargs[key] = tuple(value)
            elif key in ("map_type", "cut_threshold", "activities"):
                kwargs[key] = value
            else:
                raise ValueError(f"unknown config key {key!r}")
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text)
        return text

    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]

    def with_overrides(self, **changes) -> "PipelineConfig":
        """Copy with top-level fields or ``section__field`` entries replaced."""
        top, nested = {}, {}
        for key, value in changes.items():
            if "__" in key:
                section, name = key.split("__", 1)
                nested.setdefault(section, {})[name] = value
            else:
                top[key] = value
        for section, values in nested.items():
            top[section] = dataclasses.replace(getattr(self, section), **values)
        return dataclasses.replace(self, **top)


def load_activity_catalog() -> dict:
    text = resources.files("twrhar").joinpath("data/activities.json").read_text()
    return json.loads(text)


def activity_names(config: PipelineConfig | None = None) -> dict:
    cat = config.catalog() if config is not None else load_activity_catalog()
    return {int(k): v.get("name", f"S{k}") for k, v in cat["activities"].items()}


def sample_profile(label: int, rng: np.random.Generator, config: PipelineConfig):
    """Draw a jittered :class:`MotionProfile` for one activity (None for empty scenes)."""
    cat = config.catalog()
    entry = copy.deepcopy(cat["activities"][str(label)])
    jit = cat.get("jitter", {})
    # draw the full jitter vector for every label so streams stay aligned
    u = rng.uniform(-1.0, 1.0, size=4)
    r_lo, r_hi = jit.get("initial_range_m", [1.0, 1.6])
    r0 = rng.uniform(r_lo, r_hi)
    phase = rng.uniform(0, 2 * np.pi) if jit.get("gait_phase", False) else 0.0
    if entry.get("empty", False):
        return None
    segments = tuple(MotionSegment(*s) for s in entry.get("segments", []))
    return MotionProfile(
        activity_label=int(label),
        torso_speed_m_s=entry["torso_speed_m_s"] * (1 + jit.get("speed", 0) * u[0]),
        initial_range_m=entry.get("initial_range_m", r0),
        arm_amplitude_m=entry["arm_amplitude_m"] * (1 + jit.get("arm", 0) * u[1]),
        leg_amplitude_m=entry["leg_amplitude_m"] * (1 + jit.get("leg", 0) * u[2]),
        gait_freq_hz=entry["gait_freq_hz"] * (1 + jit.get("freq", 0) * u[3]),
        offsets_m=tuple(entry.get("offsets_m", (0.0, 0.1, 0.05))),
        rcs=tuple(entry.get("rcs", (0.5, 1.0, 0.3, 0.3, 0.2, 0.2))),
        duration_s=config.radar.duration_s,
        gait_phase_rad=phase,
        segments=segments,
    )


def preset(name: str = "desk") -> PipelineConfig:
    """``"desk"``: 128x128 maps for CI. ``"full"``: 1024x1024 echoes, 256x256 maps."""
    if name == "desk":
        return PipelineConfig()
    if name == "full":
        return PipelineConfig(
            radar=RadarParams(pulse_width_s=4.0 / 1024, pri_s=4.0 / 1024,
                              fast_sample_interval_s=3.125e-11, fast_samples=1024,
                              slow_samples=1024),
            chan_vese=ChanVeseConfig(seed_radii=(64.0, 64.0)),
            split=SplitSizes(templates_per_class=20, validation_per_class=60),
            image_size=(256, 256),
        )
    raise ValueError(f"unknown preset {name!r}")
