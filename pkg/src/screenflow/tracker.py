"""Real-time state identification over a frozen diagram.

The search order is graph-guided: predicted state (from the last touchpoint),
then the current state, its neighbors, then rings of increasing undirected
distance. Evaluation is lazy with an early exit at the first confident
candidate, so the per-frame cost stays near one candidate while locked on.
State changes commit only after M consecutive agreeing frames.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

from .builder import score_state
from .config import EngineConfig
from .diagram import StateDiagram
from .guidance import FramingStatus
from .imageio import Image
from .vision import Homography, MatchScore, TouchPoint, detect_touchpoint, extract_features, warp_point


@dataclass(frozen=True)
class TrackEvent:
    frame_index: int
    state: Optional[str]
    transitioned: bool
    touchpoint: Optional[TouchPoint]  # reference-image coordinates
    homography: Optional[Homography]
    framing: FramingStatus
    candidates_evaluated: int
    elapsed_ms: float
    frame_state: Optional[str] = None  # pre-smoothing identification

    def to_json(self) -> dict:
        return {
            "frame_index": self.frame_index,
            "state": self.state,
            "transitioned": self.transitioned,
            "touchpoint": [self.touchpoint.x, self.touchpoint.y] if self.touchpoint else None,
            "framing_ok": self.framing.all_corners_visible,
            "candidates_evaluated": self.candidates_evaluated,
            "elapsed_ms": round(self.elapsed_ms, 3),
        }


def search_order(diagram: StateDiagram, current: Optional[str],
                 predicted: Optional[str]) -> list[str]:
    """Permutation of all states: predicted, current, neighbors, then rings.

    Rings are grouped by ascending undirected hop distance from the current
    state with lexicographic ties; unreachable states come last. Without a
    current state the order is plain lexicographic.
    """
    all_ids = sorted(diagram.states)
    if current is None:
        if predicted is None:
            return all_ids
        return [predicted] + [s for s in all_ids if s != predicted]
    out: list[str] = []
    if predicted is not None and predicted in diagram.states:
        out.append(predicted)
    if current not in out:
        out.append(current)
    for n in diagram.neighbors(current):
        if n not in out:
            out.append(n)
    dist = diagram.bfs_distances(current)
    rest = [s for s in all_ids if s not in out]
    rest.sort(key=lambda s: (dist.get(s, len(all_ids) + 1), s))
    out.extend(rest)
    return out


class TrackerSession:
    """Single-stream tracking; sessions over one frozen diagram are independent."""

    def __init__(self, diagram: StateDiagram, config: Optional[EngineConfig] = None,
                 seed: int = 0, baseline: bool = False):
        if not diagram.frozen:
            raise ValueError("tracker requires a frozen diagram")
        if not diagram.states:
            raise ValueError("tracker requires a nonempty diagram")
        self.diagram = diagram
        self.config = config or EngineConfig.default()
        self.seed = seed
        self.baseline = baseline
        self.current: Optional[str] = None
        self.pending: Optional[tuple[str, int]] = None
        self._frame_counter = 0
        # (state id, element id, frame index) of the last touch seen on a button
        self._last_touch: Optional[tuple[str, str, int]] = None

    # -- prediction ---------------------------------------------------------

    def _predicted(self, frame_index: int) -> Optional[str]:
        """Transition target inferred from the touched element, when unique.

        Consulted only while a state change is pending, using touches seen in
        the last predict_window_s of frames.
        """
        if self.pending is None or self._last_touch is None:
            return None
        t_cfg = self.config.tracker
        state_id, element_id, touch_frame = self._last_touch
        window = max(1, int(round(t_cfg.predict_window_s * self.config.builder.fps)))
        if frame_index - touch_frame > window:
            return None
        targets = {
            t.to_state for t in self.diagram.transitions
            if t.from_state == state_id and element_id in t.buttons
        }
        if len(targets) != 1:
            return None
        return next(iter(targets))

    # -- per-frame ----------------------------------------------------------

    def track_frame(self, frame: Image, frame_index: Optional[int] = None) -> TrackEvent:
        t0 = time.perf_counter()
        if frame_index is None:
            frame_index = self._frame_counter
        self._frame_counter = frame_index + 1
        t_cfg = self.config.tracker
        v_cfg = self.config.vision

        features = extract_features(frame, v_cfg.max_keypoints)
        seed = (self.seed * 1_000_003 + frame_index) & 0x7FFFFFFF

        if self.baseline:
            order = sorted(self.diagram.states)
        else:
            order = search_order(self.diagram, self.current, self._predicted(frame_index))

        frame_state: Optional[str] = None
        frame_score: Optional[MatchScore] = None
        best_id: Optional[str] = None
        best: Optional[MatchScore] = None
        second_ratio = 0.0
        evaluated = 0
        for cid in order:
            sc = score_state(features, self.diagram.states[cid], self.config, seed=seed)
            evaluated += 1
            if sc.good_match_count < t_cfg.min_good_matches or sc.homography is None:
                continue
            if best is None or sc.inlier_ratio > best.inlier_ratio:
                if best is not None:
                    second_ratio = max(second_ratio, best.inlier_ratio)
                best_id, best = cid, sc
            else:
                second_ratio = max(second_ratio, sc.inlier_ratio)
            if not self.baseline and sc.inlier_ratio >= t_cfg.inlier_confident:
                frame_state, frame_score = cid, sc
                break
        if frame_state is None and best is not None:
            if self.baseline:
                if (best.inlier_ratio >= t_cfg.inlier_confident
                        and best.inlier_ratio - second_ratio >= t_cfg.inlier_margin):
                    frame_state, frame_score = best_id, best
                elif best.inlier_ratio >= t_cfg.inlier_floor:
                    frame_state, frame_score = best_id, best
            elif best.inlier_ratio >= t_cfg.inlier_floor:
                # tentative: best above the floor when nothing was confident
                frame_state, frame_score = best_id, best

        transitioned = self._smooth(frame_state)

        # A touchpoint in reference coordinates is only meaningful once the
        # smoothed state agrees with this frame's identification; reporting it
        # during a pending change invites double presses on the next screen.
        touchpoint = None
        homography = frame_score.homography if frame_score else None
        raw_touch = None
        if frame_state is not None and frame_state == self.current:
            raw_touch = detect_touchpoint(frame, self.config.marker)
        if raw_touch is not None and homography is not None:
            try:
                rx, ry = warp_point(homography, (raw_touch.x, raw_touch.y))
                touchpoint = TouchPoint(x=rx, y=ry, confidence=raw_touch.confidence,
                                        source=raw_touch.source)
            except ValueError:
                touchpoint = None
        if touchpoint is not None and frame_state is not None:
            elem = self.diagram.states[frame_state].element_at(touchpoint.x, touchpoint.y)
            if elem is not None and elem.kind == "button":
                self._last_touch = (frame_state, elem.id, frame_index)

        framing = self._framing(frame, homography, frame_state)
        elapsed_ms = (time.perf_counter() - t0) * 1000.0
        return TrackEvent(
            frame_index=frame_index,
            state=self.current if frame_state is not None else None,
            transitioned=transitioned,
            touchpoint=touchpoint,
            homography=homography,
            framing=framing,
            candidates_evaluated=evaluated,
            elapsed_ms=elapsed_ms,
            frame_state=frame_state,
        )

    def _smooth(self, frame_state: Optional[str]) -> bool:
        """M-frame hysteresis; returns True on the frame that commits a change."""
        if frame_state is None:
            self.pending = None
            return False
        if frame_state == self.current:
            self.pending = None
            return False
        if self.pending and self.pending[0] == frame_state:
            self.pending = (frame_state, self.pending[1] + 1)
        else:
            self.pending = (frame_state, 1)
        if self.pending[1] >= self.config.tracker.confirm_frames:
            self.current = frame_state
            self.pending = None
            return True
        return False

    def _framing(self, frame: Image, homography: Optional[Homography],
                 frame_state: Optional[str]) -> FramingStatus:
        """All four interface corners must sit inside the frame with margin.

        The interface region is the state's screen_bbox in reference
        coordinates; states without one cannot be assessed.
        """
        if homography is None or frame_state is None:
            return FramingStatus()
        region = self.diagram.states[frame_state].screen_bbox
        if region is None:
            return FramingStatus()
        x0, y0 = region.x, region.y
        x1, y1 = region.x + region.w, region.y + region.h
        inv = homography.inverse()
        margin = self.config.guidance.framing_margin_px
        worst = 0.0
        move: Optional[str] = None
        for cx, cy in [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]:
            try:
                fx, fy = warp_point(inv, (cx, cy))
            except ValueError:
                continue
            for violation, direction in (
                (margin - fx, "left"),
                (fx - (frame.width - margin), "right"),
                (margin - fy, "up"),
                (fy - (frame.height - margin), "down"),
            ):
                if violation > worst:
                    worst = violation
                    move = direction
        if move is None:
            return FramingStatus()
        return FramingStatus(all_corners_visible=False, suggested_move=move)


# --------------------------------------------------------------------------
# scaling probes


@dataclass(frozen=True)
class ProbeRow:
    n_states: int
    mode: str
    mean_ms: float
    p95_ms: float
    error_rate: float
    mean_candidates: float


def scaling_probe(
    diagram_subsets: list[StateDiagram],
    stream: list[tuple[Image, Optional[str]]],
    mode: str,
    config: Optional[EngineConfig] = None,
    seed: int = 0,
) -> list[ProbeRow]:
    """Replay one labeled stream against nested diagram subsets.

    Baseline mode scans every state per frame with no early exit; guided mode
    uses the graph-guided lazy order. A frame counts toward the error rate
    when its true state exists in the subset and the reported state differs
    (absent counts as an error).
    """
    if mode not in ("guided", "baseline"):
        raise ValueError(f"unknown mode {mode!r}")
    rows = []
    for sub in diagram_subsets:
        session = TrackerSession(sub, config=config, seed=seed,
                                 baseline=(mode == "baseline"))
        times = []
        cands = []
        labeled = 0
        errors = 0
        for idx, (frame, truth) in enumerate(stream):
            ev = session.track_frame(frame, frame_index=idx)
            times.append(ev.elapsed_ms)
            cands.append(ev.candidates_evaluated)
            if truth is not None and truth in sub.states:
                labeled += 1
                if ev.state != truth:
                    errors += 1
        times.sort()
        n = len(times)
        p95 = times[min(n - 1, int(0.95 * n))] if n else 0.0
        rows.append(ProbeRow(
            n_states=len(sub.states),
            mode=mode,
            mean_ms=sum(times) / n if n else 0.0,
            p95_ms=p95,
            error_rate=errors / labeled if labeled else 0.0,
            mean_candidates=sum(cands) / n if n else 0.0,
        ))
    return rows


def restrict_diagram(diagram: StateDiagram, n: int) -> StateDiagram:
    """First n states by registration order plus their induced transitions."""
    keep = list(diagram.states)[:n]
    sub = StateDiagram()
    for sid in keep:
        sub.add_state(diagram.states[sid])
    sub.start = keep[0] if keep else None
    sub.terminals = {t for t in diagram.terminals if t in keep}
    for t in diagram.transitions:
        if t.from_state in keep and t.to_state in keep:
            sub.upsert_transition(t.from_state, t.to_state, set(t.buttons))
            sub.transitions[-1].observation_count = t.observation_count
    return sub.freeze()
