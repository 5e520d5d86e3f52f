"""Closed-loop pointer controller: obeys guidance messages in the simulator.

This is the automated stand-in for a user steering by audio feedback. Each
direction message moves the pointer a fixed step along the commanded compass
heading; at_target triggers an activation; anything else just lets another
frame through so the tracker can settle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .config import EngineConfig
from .diagram import StateDiagram
from .guidance import GuidanceMessage, GuidancePlan, guidance_step, plan_trace
from .simulator import CameraProfile, DeviceSpec, PROFILES, SimSession
from .tracker import TrackerSession

_HEADING = {
    "right": (1.0, 0.0), "left": (-1.0, 0.0), "down": (0.0, 1.0), "up": (0.0, -1.0),
    "down-right": (math.sqrt(0.5), math.sqrt(0.5)),
    "down-left": (-math.sqrt(0.5), math.sqrt(0.5)),
    "up-right": (math.sqrt(0.5), -math.sqrt(0.5)),
    "up-left": (-math.sqrt(0.5), -math.sqrt(0.5)),
}


@dataclass
class PilotResult:
    messages: list[GuidanceMessage]
    plan: GuidancePlan
    completed: bool
    final_state: str

    @property
    def message_kinds(self) -> list[str]:
        return [m.kind for m in self.messages]


def run_closed_loop(
    device: DeviceSpec,
    diagram: StateDiagram,
    steps: list[tuple[str, str]],
    config: Optional[EngineConfig] = None,
    seed: int = 0,
    profile: Optional[CameraProfile] = None,
    step_px: float = 10.0,
    max_messages: int = 400,
    start_pointer: tuple[float, float] = (8.0, 8.0),
    prime_tracker: bool = False,
) -> PilotResult:
    """Drive the pointer along a plan until it completes or the budget runs out.

    prime_tracker seeds the tracker's current state with the plan's first
    state, modeling a session that already locked on before guidance began;
    without graph context, visually aliased screens (the kiosk's text pages)
    cannot be told apart from a cold start.
    """
    cfg = config or EngineConfig.fixture()
    profile = profile or PROFILES["stationary"]
    plan = plan_trace(diagram, steps)
    sim = SimSession(device, profile, seed, start_state=steps[0][0])
    tracker = TrackerSession(diagram, config=cfg, seed=seed)
    if prime_tracker:
        tracker.current = steps[0][0]
    pos = start_pointer
    img, _, _ = sim.step({"kind": "move", "x": pos[0], "y": pos[1]})
    messages: list[GuidanceMessage] = []

    for _ in range(max_messages):
        event = tracker.track_frame(img)
        msg = guidance_step(plan, event, cfg.guidance)
        messages.append(msg)
        if plan.done:
            break
        if msg.kind == "direction":
            hx, hy = _HEADING[msg.direction]
            pos = (pos[0] + hx * step_px, pos[1] + hy * step_px)
            img, _, _ = sim.step({"kind": "move", "x": pos[0], "y": pos[1]})
            w, h = device.screen_size
            pos = (min(max(pos[0], 0.0), float(w)), min(max(pos[1], 0.0), float(h)))
        elif msg.kind == "at_target":
            img, _, _ = sim.step({"kind": "activate"})
        else:
            # announce / off_trace / no_object / no_finger: idle one frame
            img, _, _ = sim.step({"kind": "move", "x": pos[0], "y": pos[1]})
    return PilotResult(messages=messages, plan=plan,
                       completed=plan.done, final_state=sim.state_id)


def messages_to_target(
    device: DeviceSpec,
    diagram: StateDiagram,
    state_id: str,
    element_id: str,
    config: Optional[EngineConfig] = None,
    seed: int = 0,
    max_messages: int = 60,
) -> Optional[int]:
    """Message count until at_target for one (state, element); None if not reached.

    The tracker is primed at the probed state: these probes model guidance in
    progress, where the session has already locked on.
    """
    result = run_closed_loop(
        device, diagram, [(state_id, element_id)], config=config, seed=seed,
        max_messages=max_messages, prime_tracker=True,
    )
    for i, m in enumerate(result.messages):
        if m.kind == "at_target":
            return i + 1
    return None
