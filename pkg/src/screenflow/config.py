"""Engine configuration: every tunable threshold in one place.

`EngineConfig.default()` carries the documented defaults; `fixture()` is the
profile tuned for the bundled synthetic devices (tighter consensus gate,
smaller RANSAC budget). Configs load from and save to JSON.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .vision import MarkerConfig


@dataclass(frozen=True)
class VisionConfig:
    max_keypoints: int = 300
    ratio_threshold: float = 0.75
    ransac_reproj_px: float = 3.0
    ransac_max_iters: int = 2000
    ransac_confidence: float = 0.995


@dataclass(frozen=True)
class ScreenFilterConfig:
    relevant_labels: tuple[str, ...] = (
        "electronics", "machine", "monitor", "screen", "kiosk", "appliance")
    area_fraction_min: float = 0.10
    label_confidence_min: float = 0.55


@dataclass(frozen=True)
class BuilderConfig:
    fps: float = 10.0
    candidate_window_s: float = 1.0
    inlier_confident: float = 0.5
    inlier_margin: float = 0.1
    inlier_floor: float = 0.2
    min_good_matches: int = 15
    ocr_match_threshold: float = 0.8
    # Consecutive agreeing frames before a known-to-known transition commits.
    confirm_frames: int = 3
    # Text check also vetoes feature-confident matches when OCR is available.
    ocr_veto: bool = True

    def __post_init__(self):
        if not (0 < self.inlier_floor < self.inlier_confident <= 1):
            raise ValueError("need 0 < inlier_floor < inlier_confident <= 1")
        if self.candidate_window_s <= 0:
            raise ValueError("candidate_window_s must be > 0")


@dataclass(frozen=True)
class TrackerConfig:
    confirm_frames: int = 3
    inlier_confident: float = 0.5
    inlier_margin: float = 0.1
    inlier_floor: float = 0.2
    min_good_matches: int = 15
    predict_window_s: float = 0.5


@dataclass(frozen=True)
class GuidanceConfig:
    slow_factor: float = 1.5
    framing_margin_px: float = 5.0
    off_trace_recovery: bool = True


@dataclass(frozen=True)
class ProvidersConfig:
    mode: str = "synthetic"  # "synthetic" | "fixture" | "remote" | "none"
    fixture_path: str = ""
    detect_url: str = ""
    ocr_url: str = ""
    ocr_noise_rate: float = 0.0


@dataclass(frozen=True)
class EngineConfig:
    vision: VisionConfig = field(default_factory=VisionConfig)
    marker: MarkerConfig = field(default_factory=MarkerConfig)
    screen_filter: ScreenFilterConfig = field(default_factory=ScreenFilterConfig)
    builder: BuilderConfig = field(default_factory=BuilderConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)
    providers: ProvidersConfig = field(default_factory=ProvidersConfig)
    seed: int = 0

    @staticmethod
    def default() -> "EngineConfig":
        return EngineConfig()

    @staticmethod
    def fixture() -> "EngineConfig":
        """Profile tuned for the bundled synthetic devices."""
        return EngineConfig(
            vision=VisionConfig(max_keypoints=350, ransac_max_iters=256),
            builder=BuilderConfig(min_good_matches=25),
            tracker=TrackerConfig(min_good_matches=25, confirm_frames=2),
        )

    def to_json(self) -> dict:
        return asdict(self)

    def save(self, path: str | Path):
        Path(path).write_text(json.dumps(self.to_json(), indent=1, sort_keys=True),
                              encoding="utf-8")

    @staticmethod
    def load(path: str | Path) -> "EngineConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return EngineConfig.from_json(doc)

    @staticmethod
    def from_json(doc: dict) -> "EngineConfig":
        base = EngineConfig()

        def merge(cls, defaults, key):
            sub = doc.get(key, {})
            if key == "screen_filter" and "relevant_labels" in sub:
                sub = dict(sub, relevant_labels=tuple(sub["relevant_labels"]))
            return replace(defaults, **sub) if sub else defaults

        return EngineConfig(
            vision=merge(VisionConfig, base.vision, "vision"),
            marker=merge(MarkerConfig, base.marker, "marker"),
            screen_filter=merge(ScreenFilterConfig, base.screen_filter, "screen_filter"),
            builder=merge(BuilderConfig, base.builder, "builder"),
            tracker=merge(TrackerConfig, base.tracker, "tracker"),
            guidance=merge(GuidanceConfig, base.guidance, "guidance"),
            providers=merge(ProvidersConfig, base.providers, "providers"),
            seed=int(doc.get("seed", 0)),
        )
