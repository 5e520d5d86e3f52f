"""HTTP + websocket service exposing interactive guidance sessions.

One session = simulated device + frozen diagram + dialog agent + tracker.
Chat arms a guidance plan; the stream loop is exactly the in-process pipeline
(pointer event -> simulator frame -> tracker -> guidance), so replaying a
recorded pointer log through the service yields the same messages as running
it locally.
"""

from __future__ import annotations

import base64
import itertools
import json
from dataclasses import dataclass
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from .agent import AgentSpec, DialogSession, generate_agent, new_session
from .config import EngineConfig
from .devices import DEVICES, device_diagram, get_device
from .diagram import StateDiagram, aggregate_traces
from .guidance import GuidancePlan, guidance_step, initial_announcement, plan_trace
from .imageio import png_bytes
from .simulator import PROFILES, SimSession
from .tracker import TrackerSession

_session_ids = itertools.count(1)


@dataclass
class Session:
    id: str
    device_name: str
    device: object
    diagram: StateDiagram
    agent: AgentSpec
    dialog: DialogSession
    sim: SimSession
    tracker: TrackerSession
    seed: int
    plan: Optional[GuidancePlan] = None
    seq: int = 0
    stream_open: bool = False

    def next_seq(self) -> int:
        self.seq += 1
        return self.seq


def _diagram_doc(diagram: StateDiagram) -> dict:
    states = []
    for sid, s in diagram.states.items():
        states.append({
            "id": sid,
            "description": s.description,
            "is_terminal": s.is_terminal,
            "ocr_text": s.ocr_text,
            "screen_bbox": s.screen_bbox.to_list() if s.screen_bbox else None,
            "elements": [
                {"id": e.id, "label": e.label, "bbox": e.bbox.to_list(), "kind": e.kind}
                for e in s.elements
            ],
            "image_png_b64": base64.b64encode(png_bytes(s.reference_image)).decode("ascii"),
        })
    return {
        "schema_version": "1",
        "start": diagram.start,
        "terminals": sorted(diagram.terminals),
        "states": states,
        "transitions": [
            {"from": t.from_state, "to": t.to_state, "buttons": sorted(t.buttons),
             "observation_count": t.observation_count}
            for t in diagram.transitions
        ],
    }


def create_app(config: Optional[EngineConfig] = None, seed: int = 0) -> FastAPI:
    cfg = config or EngineConfig.fixture()
    app = FastAPI(title="screenflow session service")
    sessions: dict[str, Session] = {}
    diagrams: dict[str, StateDiagram] = {}
    agents: dict[str, AgentSpec] = {}

    def _artifacts(device_name: str):
        if device_name not in diagrams:
            device = get_device(device_name)
            diagram = device_diagram(device, cfg).freeze()
            traces = aggregate_traces(diagram.enumerate_paths())
            diagrams[device_name] = diagram
            agents[device_name] = generate_agent(diagram, traces)
        return get_device(device_name), diagrams[device_name], agents[device_name]

    @app.get("/devices")
    def devices():
        return {"devices": sorted(DEVICES)}

    @app.post("/sessions")
    def create_session(body: dict):
        device_name = body.get("device", "")
        if device_name not in DEVICES:
            return JSONResponse(status_code=404,
                                content={"error": "not_found",
                                         "detail": f"unknown device {device_name!r}"})
        profile_name = body.get("profile", "stationary")
        if profile_name not in PROFILES:
            return JSONResponse(status_code=400,
                                content={"error": "bad_request",
                                         "detail": f"unknown profile {profile_name!r}"})
        session_seed = int(body.get("seed", seed))
        device, diagram, agent = _artifacts(device_name)
        sid = f"s{next(_session_ids)}"
        session = Session(
            id=sid,
            device_name=device_name,
            device=device,
            diagram=diagram,
            agent=agent,
            dialog=new_session(agent, diagram),
            sim=SimSession(device, PROFILES[profile_name], session_seed),
            tracker=TrackerSession(diagram, config=cfg, seed=session_seed),
            seed=session_seed,
        )
        sessions[sid] = session
        return {"session_id": sid, "welcome": session.dialog.welcome().prompt}

    @app.get("/sessions/{sid}/diagram")
    def get_diagram(sid: str):
        session = sessions.get(sid)
        if session is None:
            return JSONResponse(status_code=404,
                                content={"error": "not_found", "detail": f"no session {sid}"})
        return _diagram_doc(session.diagram)

    @app.post("/sessions/{sid}/chat")
    def chat(sid: str, body: dict):
        session = sessions.get(sid)
        if session is None:
            return JSONResponse(status_code=404,
                                content={"error": "not_found", "detail": f"no session {sid}"})
        if session.plan is not None:
            return {"prompt": "plan already armed", "phase": "done",
                    "armed": True, "steps": len(session.plan.steps)}
        text = str(body.get("text", ""))
        resp = session.dialog.handle_utterance(text)
        out = {"prompt": resp.prompt, "phase": resp.phase, "armed": False}
        if resp.done and resp.trace is not None:
            session.plan = plan_trace(session.diagram, list(resp.trace.steps))
            out["armed"] = True
            out["steps"] = len(resp.trace.steps)
            out["trace"] = [list(s) for s in resp.trace.steps]
            out["announce"] = initial_announcement(session.plan).to_json()
        return out

    @app.websocket("/sessions/{sid}/stream")
    async def stream(ws: WebSocket, sid: str):
        session = sessions.get(sid)
        if session is None:
            await ws.close(code=4404)
            return
        if session.stream_open:
            await ws.close(code=4409)
            return
        session.stream_open = True
        await ws.accept()
        try:
            while True:
                try:
                    raw = await ws.receive_text()
                except WebSocketDisconnect:
                    break
                try:
                    event = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_text(json.dumps(
                        {"type": "error", "seq": session.next_seq(),
                         "detail": "bad json"}))
                    continue
                if event.get("kind") not in ("move", "activate", "release"):
                    await ws.send_text(json.dumps(
                        {"type": "error", "seq": session.next_seq(),
                         "detail": f"unknown event kind {event.get('kind')!r}"}))
                    continue
                frame, rec, sim_event = session.sim.step(event)
                track = session.tracker.track_frame(frame)
                if session.plan is not None:
                    guidance = guidance_step(session.plan, track, cfg.guidance).to_json()
                    guidance["plan_cursor"] = session.plan.cursor
                    guidance["plan_len"] = len(session.plan.steps)
                    guidance["plan_done"] = session.plan.done
                else:
                    guidance = _exploration_echo(session, track)
                await ws.send_text(json.dumps({
                    "type": "frame", "seq": session.next_seq(),
                    "png_b64": base64.b64encode(png_bytes(frame)).decode("ascii"),
                    "sim": {"state": sim_event.state_id, "kind": sim_event.kind,
                            "transitioned": sim_event.transitioned,
                            "pressed": sim_event.pressed_element},
                }))
                await ws.send_text(json.dumps({
                    "type": "track", "seq": session.next_seq(), **track.to_json()}))
                await ws.send_text(json.dumps({
                    "type": "guidance", "seq": session.next_seq(), **guidance}))
        finally:
            session.stream_open = False

    return app


def _exploration_echo(session: Session, track) -> dict:
    """Pre-plan screen-reader echo: name whatever sits under the pointer."""
    state_id = track.state
    if state_id is None:
        return {"kind": "echo", "text": "no object"}
    state = session.diagram.states[state_id]
    if track.touchpoint is not None:
        element = state.element_at(track.touchpoint.x, track.touchpoint.y)
        if element is not None:
            return {"kind": "echo", "text": element.label.lower(),
                    "target_element": element.id}
    return {"kind": "echo", "text": state.description or state_id}
