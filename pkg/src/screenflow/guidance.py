"""Turn-by-turn guidance: (plan cursor, track event) -> one structured message.

The decision ladder is total: every track event yields exactly one message.
Direction messages command finger motion toward the target in the user's
screen plane; framing messages command phone motion to bring the interface
fully into frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .config import GuidanceConfig
from .diagram import StateDiagram

_COMPASS = ["right", "down-right", "down", "down-left", "left", "up-left", "up", "up-right"]


@dataclass(frozen=True)
class FramingStatus:
    all_corners_visible: bool = True
    suggested_move: Optional[str] = None  # "left" | "right" | "up" | "down"

    def __post_init__(self):
        if self.all_corners_visible and self.suggested_move is not None:
            raise ValueError("no suggested move when all corners are visible")


@dataclass(frozen=True)
class GuidanceMessage:
    kind: str  # announce_state | direction | at_target | press_confirmed
    #           | framing | no_object | no_finger | off_trace
    text: str
    direction: Optional[str] = None  # 8-way compass, only for kind == "direction"
    slow: bool = False
    target_element: Optional[str] = None
    earcon: Optional[str] = None
    # template substitution values, kept for locale re-rendering
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if (self.direction is not None) != (self.kind == "direction"):
            raise ValueError("direction present iff kind == 'direction'")
        if not self.text:
            raise ValueError("message text must be nonempty")

    def to_json(self) -> dict:
        doc: dict = {"kind": self.kind, "text": self.text, "slow": self.slow}
        if self.direction:
            doc["direction"] = self.direction
        if self.target_element:
            doc["target_element"] = self.target_element
        if self.earcon:
            doc["earcon"] = self.earcon
        return doc


DEFAULT_TEMPLATES: dict[str, str] = {
    "announce_state": "state: {description}; target: {label}",
    "announce_done": "state: {description}; task complete",
    "direction": "move {direction}",
    "direction_slow": "move {direction} slowly",
    "at_target": "at {label}, press it",
    "press_confirmed": "pressed {label}, task complete",
    "framing": "move phone to {move}",
    "no_object": "no object",
    "no_finger": "no finger",
    "off_trace": "off route, press {label} to head back to {description}",
    "off_trace_plain": "off route, go back to {description}",
}


@dataclass
class GuidancePlan:
    """A validated trace with a cursor; advancing requires tracker confirmation."""

    diagram: StateDiagram
    steps: list[tuple[str, str]]
    cursor: int = 0
    done: bool = False
    terminal: str = ""

    @property
    def current_step(self) -> Optional[tuple[str, str]]:
        if self.done or self.cursor >= len(self.steps):
            return None
        return self.steps[self.cursor]

    def expected_state(self) -> str:
        if self.done:
            return self.terminal
        return self.steps[self.cursor][0]

    def successor_of_current(self) -> str:
        state_id, element_id = self.steps[self.cursor]
        for t in self.diagram.transitions:
            if t.from_state == state_id and element_id in t.buttons:
                return t.to_state
        raise RuntimeError("validated plan lost its transition")


def plan_trace(diagram: StateDiagram, steps: list[tuple[str, str]]) -> GuidancePlan:
    """Validate steps against the diagram and return a plan with cursor 0."""
    try:
        terminal = diagram.validate_trace_steps(steps)
    except Exception as exc:
        raise ValueError(f"invalid trace: {exc}") from exc
    return GuidancePlan(diagram=diagram, steps=list(steps), terminal=terminal)


def _msg(tpl: dict[str, str], kind: str, template_key: str, *,
         direction: Optional[str] = None, slow: bool = False,
         target_element: Optional[str] = None, earcon: Optional[str] = None,
         **subs) -> GuidanceMessage:
    if direction is not None:
        subs["direction"] = direction
    return GuidanceMessage(
        kind=kind,
        text=tpl[template_key].format(**subs),
        direction=direction,
        slow=bool(slow),
        target_element=target_element,
        earcon=earcon,
        params=dict(subs, template=template_key),
    )


def guidance_step(plan: GuidancePlan, event, config: Optional[GuidanceConfig] = None,
                  templates: Optional[dict[str, str]] = None) -> GuidanceMessage:
    """One message per track event, by a fixed decision ladder.

    1. no state            -> no_object
    2. framing incomplete  -> framing
    3. unexpected state    -> advance (successor) or off_trace
    4. no touchpoint       -> no_finger
    5. touch inside target -> at_target
    6. otherwise           -> 8-way direction toward the target
    """
    cfg = config or GuidanceConfig()
    tpl = templates or DEFAULT_TEMPLATES

    state_id = getattr(event, "state", None)
    if state_id is None:
        return _msg(tpl, "no_object", "no_object", earcon="earcon:lost")

    framing = getattr(event, "framing", None)
    if framing is not None and not framing.all_corners_visible:
        return _msg(tpl, "framing", "framing", move=framing.suggested_move)

    if plan.done:
        desc = plan.diagram.states[plan.terminal].description or plan.terminal
        return _msg(tpl, "announce_state", "announce_done", description=desc)

    expected = plan.expected_state()
    if state_id != expected:
        if state_id == plan.successor_of_current():
            pressed = plan.steps[plan.cursor][1]
            pressed_label = _label_of(plan.diagram, expected, pressed)
            plan.cursor += 1
            if plan.cursor >= len(plan.steps):
                plan.done = True
                return _msg(tpl, "press_confirmed", "press_confirmed",
                            label=pressed_label, target_element=pressed)
            return _announce(plan, tpl)
        return _off_trace(plan, state_id, expected, cfg, tpl)

    touch = getattr(event, "touchpoint", None)
    if touch is None:
        return _msg(tpl, "no_finger", "no_finger", earcon="earcon:nofinger")

    state_id, element_id = plan.steps[plan.cursor]
    element = plan.diagram.states[state_id].element(element_id)
    label = element.label.lower()
    tx, ty = element.bbox.center()
    px, py = touch.x, touch.y
    if element.bbox.contains(px, py):
        return _msg(tpl, "at_target", "at_target", label=label, target_element=element_id)

    dx, dy = tx - px, ty - py
    homography = getattr(event, "homography", None)
    if homography is not None:
        # Express the motion in the user's frame plane: undo the frame->ref
        # rotation so "left" stays left under mild camera roll.
        m = homography.h
        theta = math.atan2(m[1, 0], m[0, 0])
        cos_t, sin_t = math.cos(-theta), math.sin(-theta)
        dx, dy = dx * cos_t - dy * sin_t, dx * sin_t + dy * cos_t
    direction = _COMPASS[int((math.atan2(dy, dx) + 2 * math.pi + math.pi / 8) // (math.pi / 4)) % 8]
    cheb = max(abs(tx - px), abs(ty - py))
    slow = cheb <= cfg.slow_factor * max(element.bbox.w, element.bbox.h)
    key = "direction_slow" if slow else "direction"
    return _msg(tpl, "direction", key, direction=direction, slow=slow,
                target_element=element_id)


def _announce(plan: GuidancePlan, tpl: dict[str, str]) -> GuidanceMessage:
    state_id, element_id = plan.steps[plan.cursor]
    desc = plan.diagram.states[state_id].description or state_id
    label = _label_of(plan.diagram, state_id, element_id)
    return _msg(tpl, "announce_state", "announce_state",
                description=desc, label=label, target_element=element_id)


def _off_trace(plan: GuidancePlan, actual: str, expected: str,
               cfg: GuidanceConfig, tpl: dict[str, str]) -> GuidanceMessage:
    """Recovery message; names the first hop of the shortest path back."""
    desc = plan.diagram.states[expected].description or expected
    if not cfg.off_trace_recovery or actual not in plan.diagram.states:
        return _msg(tpl, "off_trace", "off_trace_plain", description=desc)
    dist = plan.diagram.bfs_distances(expected)
    best: Optional[tuple[int, str, str]] = None  # (distance, label, element_id)
    for t in plan.diagram.transitions:
        if t.from_state == actual and t.buttons and t.to_state in dist:
            hop = dist[t.to_state]
            for b in sorted(t.buttons):
                label = _label_of(plan.diagram, actual, b)
                if best is None or hop < best[0]:
                    best = (hop, label, b)
    if best is None:
        return _msg(tpl, "off_trace", "off_trace_plain", description=desc)
    return _msg(tpl, "off_trace", "off_trace", label=best[1], description=desc,
                target_element=best[2])


def _label_of(diagram: StateDiagram, state_id: str, element_id: str) -> str:
    try:
        return diagram.states[state_id].element(element_id).label.lower()
    except Exception:
        return element_id


def initial_announcement(plan: GuidancePlan,
                         templates: Optional[dict[str, str]] = None) -> GuidanceMessage:
    """The opening state/target announcement before any tracking events."""
    return _announce(plan, templates or DEFAULT_TEMPLATES)


def render_text(message: GuidanceMessage, locale_table: dict[str, str]) -> str:
    """Re-render a message through a locale template table.

    The table must provide the template key the message was built from;
    missing templates raise KeyError. Earcon ids ride along on the message.
    """
    key = message.params.get("template", message.kind)
    if key not in locale_table:
        raise KeyError(f"locale table missing template {key!r}")
    values = {k: v for k, v in message.params.items() if k != "template"}
    if message.direction is not None:
        values["direction"] = message.direction
    return locale_table[key].format(**values)
