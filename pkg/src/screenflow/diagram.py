"""State diagram data model: states, transitions, traces, graph queries, serialization.

A diagram is the directed graph of interface screens. States carry a reference
image with precomputed features and OCR text; transitions record which buttons
of the source state were observed to trigger them. After freeze() the diagram
is immutable and can be shared across any number of tracker sessions.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .imageio import Image, load_image, save_image
from .providers import Rect
from .vision import FeatureSet

SCHEMA_VERSION = "1"


class DiagramError(ValueError):
    """Structural problem in a diagram or its serialized form."""


@dataclass(frozen=True)
class Element:
    id: str
    label: str
    bbox: Rect
    kind: str = "button"  # "button" | "other"


@dataclass
class State:
    id: str
    reference_image: Image
    features: FeatureSet
    ocr_text: str = ""
    elements: list[Element] = field(default_factory=list)
    description: str = ""
    screen_bbox: Optional[Rect] = None
    is_terminal: bool = False
    metadata: dict[str, str] = field(default_factory=dict)

    def element(self, element_id: str) -> Element:
        for e in self.elements:
            if e.id == element_id:
                return e
        raise DiagramError(f"state {self.id} has no element {element_id!r}")

    def element_at(self, x: float, y: float) -> Optional[Element]:
        for e in self.elements:
            if e.bbox.contains(x, y):
                return e
        return None


@dataclass
class Transition:
    from_state: str
    to_state: str
    buttons: set[str] = field(default_factory=set)
    observation_count: int = 1


@dataclass(frozen=True)
class InteractionTrace:
    """Ordered (state id, element id) path from the start to a terminal."""

    steps: tuple[tuple[str, str], ...]
    terminal: str
    count: int = 1


class StateDiagram:
    def __init__(self):
        self.states: dict[str, State] = {}
        self.transitions: list[Transition] = []
        self.start: Optional[str] = None
        self.terminals: set[str] = set()
        self._frozen = False
        self._distance_cache: dict[str, dict[str, int]] = {}

    # -- mutation ----------------------------------------------------------

    def _check_mutable(self):
        if self._frozen:
            raise DiagramError("diagram is frozen")

    def add_state(self, state: State) -> str:
        self._check_mutable()
        if state.id in self.states:
            raise DiagramError(f"duplicate state id {state.id!r}")
        self.states[state.id] = state
        if self.start is None:
            self.start = state.id
        if state.is_terminal:
            self.terminals.add(state.id)
        return state.id

    def upsert_transition(self, from_state: str, to_state: str,
                          buttons: Iterable[str] = ()) -> Transition:
        """Insert a transition or merge into the existing (from, to) edge."""
        self._check_mutable()
        if from_state not in self.states:
            raise DiagramError(f"unknown from-state {from_state!r}")
        if to_state not in self.states:
            raise DiagramError(f"unknown to-state {to_state!r}")
        buttons = set(buttons)
        known = {e.id for e in self.states[from_state].elements}
        foreign = buttons - known
        if foreign:
            raise DiagramError(f"buttons {sorted(foreign)} not elements of {from_state!r}")
        for t in self.transitions:
            if t.from_state == from_state and t.to_state == to_state:
                t.buttons |= buttons
                t.observation_count += 1
                return t
        t = Transition(from_state=from_state, to_state=to_state, buttons=buttons)
        self.transitions.append(t)
        return t

    def set_terminal(self, state_id: str, terminal: bool = True):
        self._check_mutable()
        if state_id not in self.states:
            raise DiagramError(f"unknown state {state_id!r}")
        self.states[state_id].is_terminal = terminal
        if terminal:
            self.terminals.add(state_id)
        else:
            self.terminals.discard(state_id)

    def freeze(self) -> "StateDiagram":
        self.validate()
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    # -- queries -----------------------------------------------------------

    def validate(self):
        """Structural invariant sweep; raises DiagramError on violation."""
        if self.start is not None and self.start not in self.states:
            raise DiagramError(f"start state {self.start!r} missing")
        for t in self.terminals:
            if t not in self.states:
                raise DiagramError(f"terminal {t!r} missing")
        for t in self.transitions:
            if t.from_state not in self.states or t.to_state not in self.states:
                raise DiagramError(f"dangling transition {t.from_state}->{t.to_state}")
            known = {e.id for e in self.states[t.from_state].elements}
            if not t.buttons <= known:
                raise DiagramError(f"transition {t.from_state}->{t.to_state} has foreign buttons")
            if t.observation_count < 1:
                raise DiagramError("observation_count must be >= 1")
        seen = set()
        for t in self.transitions:
            key = (t.from_state, t.to_state)
            if key in seen:
                raise DiagramError(f"duplicate transition {key}")
            seen.add(key)
        for s in self.states.values():
            ids = [e.id for e in s.elements]
            if len(ids) != len(set(ids)):
                raise DiagramError(f"state {s.id} has duplicate element ids")

    def transition_between(self, from_state: str, to_state: str) -> Optional[Transition]:
        for t in self.transitions:
            if t.from_state == from_state and t.to_state == to_state:
                return t
        return None

    def successors(self, state_id: str) -> list[str]:
        return [t.to_state for t in self.transitions if t.from_state == state_id]

    def neighbors(self, state_id: str) -> list[str]:
        """Successors first (transition order) then new predecessors; self excluded."""
        if state_id not in self.states:
            raise DiagramError(f"unknown state {state_id!r}")
        out: list[str] = []
        for t in self.transitions:
            if t.from_state == state_id and t.to_state != state_id and t.to_state not in out:
                out.append(t.to_state)
        for t in self.transitions:
            if t.to_state == state_id and t.from_state != state_id and t.from_state not in out:
                out.append(t.from_state)
        return out

    def bfs_distances(self, from_state: str) -> dict[str, int]:
        """Undirected hop counts; unreachable states are absent from the map."""
        if from_state not in self.states:
            raise DiagramError(f"unknown state {from_state!r}")
        if self._frozen and from_state in self._distance_cache:
            return self._distance_cache[from_state]
        adj: dict[str, set[str]] = {s: set() for s in self.states}
        for t in self.transitions:
            adj[t.from_state].add(t.to_state)
            adj[t.to_state].add(t.from_state)
        dist = {from_state: 0}
        queue = deque([from_state])
        while queue:
            cur = queue.popleft()
            for nxt in sorted(adj[cur]):
                if nxt not in dist:
                    dist[nxt] = dist[cur] + 1
                    queue.append(nxt)
        if self._frozen:
            self._distance_cache[from_state] = dist
        return dist

    def enumerate_paths(self, max_len: int = 12) -> list[InteractionTrace]:
        """All simple start-to-terminal paths expanded per button choice.

        Paths may not repeat a state and are bounded by max_len transitions;
        a transition with an empty button set cannot be instructed, so it
        contributes no traces. Output order is lexicographic over the step
        sequences.
        """
        if max_len < 1:
            raise ValueError("max_len must be >= 1")
        if self.start is None or not self.terminals:
            return []
        traces: list[InteractionTrace] = []

        def walk(state_id: str, steps: list[tuple[str, str]], visited: set[str]):
            if state_id in self.terminals and steps:
                traces.append(InteractionTrace(steps=tuple(steps), terminal=state_id))
            if len(steps) >= max_len:
                return
            edges = [t for t in self.transitions if t.from_state == state_id and t.buttons]
            for t in sorted(edges, key=lambda t: t.to_state):
                if t.to_state in visited:
                    continue
                for button in sorted(t.buttons):
                    steps.append((state_id, button))
                    visited.add(t.to_state)
                    walk(t.to_state, steps, visited)
                    visited.discard(t.to_state)
                    steps.pop()

        walk(self.start, [], {self.start})
        traces.sort(key=lambda tr: tr.steps)
        return traces

    # -- trace helpers -------------------------------------------------------

    def validate_trace_steps(self, steps: Iterable[tuple[str, str]]) -> str:
        """Check steps form a (state, button) path; returns the final state."""
        steps = list(steps)
        if not steps:
            raise DiagramError("empty step list")
        cur = steps[0][0]
        if cur not in self.states:
            raise DiagramError(f"unknown state {cur!r}")
        for state_id, element_id in steps:
            if state_id != cur:
                raise DiagramError(f"step starts at {state_id!r} but path is at {cur!r}")
            nxt = None
            for t in self.transitions:
                if t.from_state == state_id and element_id in t.buttons:
                    nxt = t.to_state
                    break
            if nxt is None:
                raise DiagramError(
                    f"no transition from {state_id!r} via element {element_id!r}")
            cur = nxt
        return cur


def aggregate_traces(observed: list[InteractionTrace]) -> list[InteractionTrace]:
    """Merge identical step sequences, rank by summed count then lexicographic."""
    merged: dict[tuple, InteractionTrace] = {}
    for tr in observed:
        key = tr.steps
        if key in merged:
            prev = merged[key]
            merged[key] = replace(prev, count=prev.count + tr.count)
        else:
            merged[key] = tr
    return sorted(merged.values(), key=lambda tr: (-tr.count, tr.steps))


# --------------------------------------------------------------------------
# serialization: manifest JSON + one PNG per state reference image


def serialize(diagram: StateDiagram, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    states_doc = []
    for sid in diagram.states:
        s = diagram.states[sid]
        png_name = f"{sid}.png"
        save_image(s.reference_image, out_dir / png_name)
        states_doc.append({
            "id": s.id,
            "image": png_name,
            "keypoints": [[float(v) for v in row] for row in s.features.keypoints],
            "descriptors": s.features.descriptors.tobytes().hex(),
            "source_size": list(s.features.source_size),
            "ocr_text": s.ocr_text,
            "description": s.description,
            "screen_bbox": s.screen_bbox.to_list() if s.screen_bbox else None,
            "is_terminal": s.is_terminal,
            "elements": [
                {"id": e.id, "label": e.label, "bbox": e.bbox.to_list(), "kind": e.kind}
                for e in s.elements
            ],
            "metadata": dict(sorted(s.metadata.items())),
        })
    doc = {
        "schema_version": SCHEMA_VERSION,
        "start": diagram.start,
        "terminals": sorted(diagram.terminals),
        "states": states_doc,
        "transitions": [
            {
                "from": t.from_state,
                "to": t.to_state,
                "buttons": sorted(t.buttons),
                "observation_count": t.observation_count,
            }
            for t in diagram.transitions
        ],
    }
    manifest = out_dir / "diagram.json"
    manifest.write_text(json.dumps(doc, indent=1, sort_keys=True), encoding="utf-8")
    return manifest


def deserialize(manifest_path: str | Path) -> StateDiagram:
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "diagram.json"
    try:
        doc = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DiagramError(f"cannot read diagram manifest {manifest_path}: {exc}") from exc
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise DiagramError(
            f"unsupported diagram schema version {version!r}, this build reads {SCHEMA_VERSION!r}")
    base = manifest_path.parent
    diagram = StateDiagram()
    for sd in doc["states"]:
        png_path = base / sd["image"]
        if not png_path.exists():
            raise DiagramError(f"state {sd['id']!r} references missing image {sd['image']!r}")
        image = load_image(png_path)
        kps = np.asarray(sd["keypoints"], dtype=np.float64).reshape(-1, 3)
        descs = np.frombuffer(bytes.fromhex(sd["descriptors"]), dtype=np.uint8)
        descs = descs.reshape(-1, 32).copy() if descs.size else np.zeros((0, 32), np.uint8)
        features = FeatureSet(
            keypoints=kps, descriptors=descs,
            source_size=tuple(sd["source_size"]),
        )
        state = State(
            id=sd["id"], reference_image=image, features=features,
            ocr_text=sd.get("ocr_text", ""),
            elements=[
                Element(id=e["id"], label=e["label"], bbox=Rect.from_list(e["bbox"]),
                        kind=e.get("kind", "button"))
                for e in sd.get("elements", [])
            ],
            description=sd.get("description", ""),
            screen_bbox=Rect.from_list(sd["screen_bbox"]) if sd.get("screen_bbox") else None,
            is_terminal=bool(sd.get("is_terminal", False)),
            metadata={str(k): str(v) for k, v in sd.get("metadata", {}).items()},
        )
        diagram.add_state(state)
    diagram.start = doc.get("start")
    diagram.terminals = set(doc.get("terminals", []))
    for td in doc.get("transitions", []):
        if td["from"] not in diagram.states or td["to"] not in diagram.states:
            raise DiagramError(f"dangling transition {td['from']}->{td['to']}")
        t = Transition(from_state=td["from"], to_state=td["to"],
                       buttons=set(td.get("buttons", [])),
                       observation_count=int(td.get("observation_count", 1)))
        diagram.transitions.append(t)
    diagram.validate()
    return diagram


def diagrams_equal(a: StateDiagram, b: StateDiagram) -> bool:
    """Field-level equality over all serialized content."""
    if a.start != b.start or a.terminals != b.terminals:
        return False
    if list(a.states) != list(b.states):
        return False
    for sid in a.states:
        sa, sb = a.states[sid], b.states[sid]
        if (sa.reference_image != sb.reference_image or sa.features != sb.features
                or sa.ocr_text != sb.ocr_text or sa.elements != sb.elements
                or sa.description != sb.description or sa.screen_bbox != sb.screen_bbox
                or sa.is_terminal != sb.is_terminal or sa.metadata != sb.metadata):
            return False
    ta = [(t.from_state, t.to_state, frozenset(t.buttons), t.observation_count)
          for t in a.transitions]
    tb = [(t.from_state, t.to_state, frozenset(t.buttons), t.observation_count)
          for t in b.transitions]
    return ta == tb
