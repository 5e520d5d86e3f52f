"""Offline ingestion: frame stream -> state diagram.

Per frame: screen filter -> features (+ OCR text) -> identification against
the registered states. Unmatched frames accumulate in a candidate pool; only
a pool spanning the time window registers a new state, whose reference image
is the last pool entry. Transitions between known states commit after a few
agreeing frames, and the triggering button is recovered from the touchpoint
in the last frame of the previous state.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from .config import EngineConfig
from .diagram import Element, State, StateDiagram
from .imageio import Image
from .providers import (
    OcrToken,
    ProviderUnavailable,
    Rect,
    ScreenFilterResult,
    normalize_text,
    screen_filter,
    text_similarity,
)
from .vision import (
    FeatureSet,
    MatchScore,
    detect_touchpoint,
    estimate_homography,
    extract_features,
    match_features,
    warp_point,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BuilderEvent:
    kind: str  # "matched" | "pooled" | "new_state" | "transition" | "discarded"
    frame_index: int
    state_id: Optional[str] = None
    from_state: Optional[str] = None
    to_state: Optional[str] = None
    buttons: frozenset[str] = frozenset()

    def to_json(self) -> dict:
        doc: dict = {"kind": self.kind, "frame_index": self.frame_index}
        if self.state_id is not None:
            doc["state"] = self.state_id
        if self.from_state is not None:
            doc["from"] = self.from_state
            doc["to"] = self.to_state
            doc["buttons"] = sorted(self.buttons)
        return doc


@dataclass(frozen=True)
class IdentifyResult:
    outcome: str  # "matched" | "ambiguous" | "no_match"
    state_id: Optional[str] = None
    score: Optional[MatchScore] = None
    evaluated: int = 0

    @property
    def matched(self) -> bool:
        return self.outcome == "matched"


def score_state(features: FeatureSet, state: State, config: EngineConfig,
                seed: int = 0) -> MatchScore:
    """Match frame features onto one state's reference features."""
    v = config.vision
    ms = match_features(features, state.features, v.ratio_threshold)
    return estimate_homography(
        ms, features, state.features,
        reproj_threshold_px=v.ransac_reproj_px,
        max_iters=v.ransac_max_iters,
        confidence=v.ransac_confidence,
        seed=seed,
    )


def identify_state(
    features: FeatureSet,
    ocr_text: Optional[str],
    candidates: list[str],
    diagram: StateDiagram,
    config: EngineConfig,
    seed: int = 0,
) -> IdentifyResult:
    """Lazy cascade identification over candidates in the given order.

    Feature stage: the scan early-exits at the first candidate whose inlier
    ratio reaches inlier_confident with enough good matches; when OCR text is
    available that exit is additionally confirmed against the candidate's
    stored text (a failed confirmation vetoes the candidate and the scan
    continues). If the scan completes, the distinctly-highest-ratio rule
    applies, then the text fallback for a best candidate above inlier_floor.
    Candidates below min_good_matches never rank: a four-match consensus is
    always unanimous and means nothing.
    """
    b = config.builder
    if not candidates:
        return IdentifyResult(outcome="no_match")
    scores: dict[str, MatchScore] = {}
    vetoed: set[str] = set()
    evaluated = 0
    for cid in candidates:
        sc = score_state(features, diagram.states[cid], config, seed=seed)
        scores[cid] = sc
        evaluated += 1
        rankable = sc.good_match_count >= b.min_good_matches and sc.homography is not None
        if rankable and sc.inlier_ratio >= b.inlier_confident:
            if ocr_text is not None and b.ocr_veto:
                if _text_match(ocr_text, diagram.states[cid].ocr_text, b.ocr_match_threshold):
                    return IdentifyResult("matched", cid, sc, evaluated)
                vetoed.add(cid)
                continue
            return IdentifyResult("matched", cid, sc, evaluated)

    eligible = [
        (cid, sc) for cid, sc in scores.items()
        if cid not in vetoed and sc.good_match_count >= b.min_good_matches
        and sc.homography is not None
    ]
    if not eligible:
        return IdentifyResult(outcome="no_match", evaluated=evaluated)
    eligible.sort(key=lambda kv: -kv[1].inlier_ratio)
    best_id, best = eligible[0]
    r2 = eligible[1][1].inlier_ratio if len(eligible) > 1 else 0.0
    if (best.inlier_ratio >= b.inlier_confident
            and best.inlier_ratio - r2 >= b.inlier_margin):
        if ocr_text is None or not b.ocr_veto or _text_match(
                ocr_text, diagram.states[best_id].ocr_text, b.ocr_match_threshold):
            return IdentifyResult("matched", best_id, best, evaluated)
        return IdentifyResult(outcome="no_match", evaluated=evaluated)
    if best.inlier_ratio >= b.inlier_floor:
        if ocr_text is not None:
            if _text_match(ocr_text, diagram.states[best_id].ocr_text,
                           b.ocr_match_threshold):
                return IdentifyResult("matched", best_id, best, evaluated)
            return IdentifyResult(outcome="no_match", evaluated=evaluated)
        return IdentifyResult("ambiguous", best_id, best, evaluated)
    return IdentifyResult(outcome="no_match", evaluated=evaluated)


def _text_match(a: str, b: str, threshold: float) -> bool:
    return text_similarity(normalize_text(a), normalize_text(b)) >= threshold


# --------------------------------------------------------------------------
# annotation


@dataclass(frozen=True)
class AnnotationTask:
    state_id: str
    reference_image: Image
    ocr_tokens: tuple[OcrToken, ...]
    screen_bbox: Optional[Rect]
    frame_index: int


@dataclass(frozen=True)
class AnnotationResult:
    quality: str  # "good" | "poor" | "unusable"
    interface_region: Optional[Rect]
    elements: tuple[Element, ...]
    description: str
    is_terminal: bool = False


class SyntheticAnnotationProvider:
    """Derives labels straight from simulator ground truth.

    Element boxes land in reference-image coordinates by subtracting the crop
    origin from the ground-truth frame boxes. An optional corrections map
    mimics crowd fixes of OCR text.
    """

    def __init__(self, device, ground_truth, corrections: Optional[dict[str, str]] = None):
        self.device = device
        self.ground_truth = ground_truth
        self.corrections = corrections or {}

    def annotate(self, task: AnnotationTask) -> Optional[AnnotationResult]:
        rec = self.ground_truth.record(task.frame_index)
        if rec is None:
            return None
        off_x = task.screen_bbox.x if task.screen_bbox else 0.0
        off_y = task.screen_bbox.y if task.screen_bbox else 0.0
        elements = []
        for eid, label, bbox, kind in rec.elements:
            label = self.corrections.get(label, label)
            elements.append(Element(
                id=eid, label=label, kind=kind,
                bbox=Rect(bbox[0] - off_x, bbox[1] - off_y, bbox[2], bbox[3]),
            ))
        spec = self.device.state(rec.state_id)
        return AnnotationResult(
            quality="good",
            interface_region=None,
            elements=tuple(elements),
            description=spec.description,
            is_terminal=spec.terminal,
        )


class FileAnnotationProvider:
    """Fixture-backed annotations keyed by state id.

    Entries without an element list fall back to the OCR-assisted path:
    elements seeded from the task's OCR tokens, with label corrections
    applied on top.
    """

    def __init__(self, path):
        import json

        self._records: dict[str, dict] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rec = json.loads(line)
                    self._records[rec["state_id"]] = rec

    def annotate(self, task: AnnotationTask) -> Optional[AnnotationResult]:
        rec = self._records.get(task.state_id)
        if rec is None:
            return None
        corrections = rec.get("corrections", {})
        if "elements" in rec:
            elements = tuple(
                Element(id=e["id"], label=corrections.get(e["label"], e["label"]),
                        bbox=Rect.from_list(e["bbox"]), kind=e.get("kind", "button"))
                for e in rec["elements"]
            )
        else:
            elements = tuple(
                Element(id=_token_element_id(t.text, i),
                        label=corrections.get(t.text, t.text), bbox=t.bbox)
                for i, t in enumerate(task.ocr_tokens)
            )
        region = Rect.from_list(rec["region"]) if rec.get("region") else None
        return AnnotationResult(
            quality=rec.get("quality", "good"),
            interface_region=region,
            elements=elements,
            description=rec.get("description", ""),
            is_terminal=bool(rec.get("is_terminal", False)),
        )


def _token_element_id(text: str, index: int) -> str:
    import re

    s = re.sub(r"[^a-z0-9]+", "_", text.lower()).strip("_")
    return f"b_{s}" if s else f"b_{index}"


def run_annotation(provider, task: AnnotationTask) -> Optional[AnnotationResult]:
    """Ask the provider to label a newly registered state; None keeps placeholders."""
    result = provider.annotate(task) if provider is not None else None
    if result is None:
        logger.warning("no annotation for state %s; keeping placeholders", task.state_id)
    return result


def apply_annotation(diagram: StateDiagram, state_id: str, result: AnnotationResult):
    state = diagram.states[state_id]
    state.elements = list(result.elements)
    state.description = result.description
    if result.is_terminal:
        diagram.set_terminal(state_id, True)
    if result.quality == "unusable":
        state.metadata["low_quality"] = "true"


# --------------------------------------------------------------------------
# the session


@dataclass
class _PoolEntry:
    image: Image
    features: FeatureSet
    ocr_text: Optional[str]
    ocr_tokens: tuple[OcrToken, ...]
    timestamp: float
    frame_index: int
    screen_bbox: Optional[Rect]


@dataclass
class _ConfirmedFrame:
    raw: Image
    crop_offset: tuple[float, float]
    score: MatchScore
    frame_index: int


class BuilderSession:
    """Single-stream diagram construction; state mutation is frame-ordered."""

    def __init__(
        self,
        config: Optional[EngineConfig] = None,
        detector=None,
        ocr=None,
        annotator=None,
        seed: int = 0,
        diagram: Optional[StateDiagram] = None,
    ):
        self.config = config or EngineConfig.default()
        self.detector = detector
        self.ocr = ocr
        self.annotator = annotator
        self.seed = seed
        self.diagram = diagram or StateDiagram()
        self.events: list[BuilderEvent] = []
        self.annotation_tasks: list[AnnotationTask] = []
        self.pool: list[_PoolEntry] = []
        self.current: Optional[str] = None
        self.pending: Optional[tuple[str, int]] = None
        self.last_confirmed: Optional[_ConfirmedFrame] = None
        self._prev_ts: Optional[float] = None
        self._frame_counter = 0

    # -- per-frame pipeline --------------------------------------------------

    def process_frame(self, frame: Image, timestamp: float,
                      frame_index: Optional[int] = None) -> BuilderEvent:
        if self._prev_ts is not None and timestamp < self._prev_ts:
            raise ValueError(
                f"timestamp regression: {timestamp} after {self._prev_ts}")
        self._prev_ts = timestamp
        if frame_index is None:
            frame_index = self._frame_counter
        self._frame_counter = frame_index + 1

        sf = self._screen_stage(frame, frame_index)
        if sf.verdict == "discarded":
            event = BuilderEvent(kind="discarded", frame_index=frame_index)
            self.events.append(event)
            return event
        image = sf.screen_image if sf.verdict == "cropped" else frame
        crop_offset = (sf.screen_bbox.x, sf.screen_bbox.y) if sf.screen_bbox else (0.0, 0.0)

        features = extract_features(image, self.config.vision.max_keypoints)
        ocr_text, ocr_tokens = self._ocr_stage(image, frame_index)

        result = identify_state(
            features, ocr_text, list(self.diagram.states), self.diagram,
            self.config, seed=self._frame_seed(frame_index),
        )
        if result.matched:
            event = self._on_matched(result, frame, crop_offset, frame_index)
        else:
            event = self._on_unmatched(
                image, features, ocr_text, ocr_tokens, timestamp, frame_index,
                sf.screen_bbox)
        self.events.append(event)
        return event

    def finish(self) -> StateDiagram:
        """Auto-mark states without outgoing transitions as terminals."""
        outgoing = {t.from_state for t in self.diagram.transitions}
        for sid in self.diagram.states:
            if sid not in outgoing:
                self.diagram.set_terminal(sid, True)
        self.diagram.validate()
        return self.diagram

    # -- stages ----------------------------------------------------------------

    def _screen_stage(self, frame: Image, frame_index: int) -> ScreenFilterResult:
        if self.detector is None:
            return ScreenFilterResult(verdict="retained")
        try:
            detections = self.detector.detect(frame, frame_index)
        except ProviderUnavailable as exc:
            logger.warning("screen detector unavailable (%s); retaining frame", exc)
            return ScreenFilterResult(verdict="retained")
        sf_cfg = self.config.screen_filter
        return screen_filter(
            frame, detections,
            relevant_labels=frozenset(sf_cfg.relevant_labels),
            area_fraction_min=sf_cfg.area_fraction_min,
            label_confidence_min=sf_cfg.label_confidence_min,
        )

    def _ocr_stage(self, image: Image, frame_index: int):
        if self.ocr is None:
            return None, ()
        try:
            result = self.ocr.extract(image, frame_index)
        except ProviderUnavailable as exc:
            logger.warning("ocr unavailable (%s); feature-only identification", exc)
            return None, ()
        return result.full_text, tuple(result.tokens)

    def _frame_seed(self, frame_index: int) -> int:
        return (self.seed * 1_000_003 + frame_index) & 0x7FFFFFFF

    # -- matched path ----------------------------------------------------------

    def _on_matched(self, result: IdentifyResult, frame: Image,
                    crop_offset: tuple[float, float], frame_index: int) -> BuilderEvent:
        self.pool.clear()
        sid = result.state_id
        rec = _ConfirmedFrame(raw=frame, crop_offset=crop_offset,
                              score=result.score, frame_index=frame_index)
        if self.current is None:
            self.current = sid
            self.last_confirmed = rec
            self.pending = None
        elif sid == self.current:
            self.last_confirmed = rec
            self.pending = None
        else:
            if self.pending and self.pending[0] == sid:
                self.pending = (sid, self.pending[1] + 1)
            else:
                self.pending = (sid, 1)
            if self.pending[1] >= self.config.builder.confirm_frames:
                self._commit_transition(sid, frame_index)
                self.last_confirmed = rec
        return BuilderEvent(kind="matched", frame_index=frame_index, state_id=sid)

    def _commit_transition(self, to_state: str, frame_index: int):
        buttons = self.recognize_interaction(self.current, self.last_confirmed)
        self.diagram.upsert_transition(self.current, to_state, buttons)
        self.events.append(BuilderEvent(
            kind="transition", frame_index=frame_index,
            from_state=self.current, to_state=to_state, buttons=frozenset(buttons)))
        self.current = to_state
        self.pending = None

    def recognize_interaction(self, state_id: Optional[str],
                              confirmed: Optional[_ConfirmedFrame]) -> set[str]:
        """Touchpoint in the last frame of the previous state -> button id.

        An empty set is a valid fallback: the transition is still recorded
        without its trigger.
        """
        if state_id is None or confirmed is None:
            return set()
        tp = detect_touchpoint(confirmed.raw, self.config.marker)
        if tp is None or confirmed.score.homography is None:
            return set()
        local = (tp.x - confirmed.crop_offset[0], tp.y - confirmed.crop_offset[1])
        try:
            rx, ry = warp_point(confirmed.score.homography, local)
        except ValueError:
            return set()
        state = self.diagram.states[state_id]
        for e in state.elements:
            if e.kind == "button" and e.bbox.contains(rx, ry):
                return {e.id}
        return set()

    # -- pool path ---------------------------------------------------------------

    def _on_unmatched(self, image, features, ocr_text, ocr_tokens, timestamp,
                      frame_index, screen_bbox) -> BuilderEvent:
        self.pending = None
        entry = _PoolEntry(image=image, features=features, ocr_text=ocr_text,
                           ocr_tokens=ocr_tokens, timestamp=timestamp,
                           frame_index=frame_index, screen_bbox=screen_bbox)
        if self.pool and not self._same_as_representative(features, frame_index):
            self.pool.clear()
        self.pool.append(entry)
        if self._pool_span() >= self.config.builder.candidate_window_s:
            sid = self.register_new_state()
            return BuilderEvent(kind="new_state", frame_index=frame_index, state_id=sid)
        return BuilderEvent(kind="pooled", frame_index=frame_index)

    def _same_as_representative(self, features: FeatureSet, frame_index: int) -> bool:
        rep = self.pool[0]
        v, b = self.config.vision, self.config.builder
        ms = match_features(features, rep.features, v.ratio_threshold)
        sc = estimate_homography(ms, features, rep.features,
                                 reproj_threshold_px=v.ransac_reproj_px,
                                 max_iters=v.ransac_max_iters,
                                 confidence=v.ransac_confidence,
                                 seed=self._frame_seed(frame_index) ^ 0x9E3779B9)
        return (sc.good_match_count >= b.min_good_matches
                and sc.inlier_ratio >= b.inlier_confident)

    def _pool_span(self) -> float:
        if len(self.pool) < 2:
            return 1.0 / self.config.builder.fps if self.pool else 0.0
        return (self.pool[-1].timestamp - self.pool[0].timestamp
                + 1.0 / self.config.builder.fps)

    def register_new_state(self) -> str:
        """Create a state from the pool's last entry and annotate it."""
        last = self.pool[-1]
        sid = self._next_state_id()
        # For cropped references the interface fills the reference image;
        # without screen detection the region is unknown.
        region = (Rect(0.0, 0.0, float(last.image.width), float(last.image.height))
                  if last.screen_bbox is not None else None)
        state = State(
            id=sid,
            reference_image=last.image,
            features=last.features,
            ocr_text=normalize_text(last.ocr_text) if last.ocr_text else "",
            elements=[],
            description="",
            screen_bbox=region,
            metadata={"registered_frame_index": str(last.frame_index)},
        )
        self.diagram.add_state(state)
        task = AnnotationTask(
            state_id=sid, reference_image=last.image,
            ocr_tokens=last.ocr_tokens, screen_bbox=last.screen_bbox,
            frame_index=last.frame_index,
        )
        self.annotation_tasks.append(task)
        result = run_annotation(self.annotator, task)
        if result is not None:
            apply_annotation(self.diagram, sid, result)
        if self.current is not None:
            self._commit_transition(sid, last.frame_index)
        self.current = sid
        self.last_confirmed = None
        self.pending = None
        self.pool.clear()
        return sid

    def _next_state_id(self) -> str:
        n = len(self.diagram.states)
        while f"V{n}" in self.diagram.states:
            n += 1
        return f"V{n}"


def write_event_log(events: list[BuilderEvent], path) -> None:
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for e in events:
            fh.write(json.dumps(e.to_json(), sort_keys=True) + "\n")
