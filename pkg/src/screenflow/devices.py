"""Bundled fixture devices: a graphical coffee machine, a text-heavy check-in
kiosk whose pages differ only in a small text strip, and a linear room
reservation panel. Each ships with a tour script that visits every state.
"""

from __future__ import annotations

import re
from typing import Optional

from .config import EngineConfig
from .diagram import Element, State, StateDiagram
from .providers import Rect, normalize_text
from .simulator import (
    PROFILES,
    CameraProfile,
    DeviceSpec,
    Dwell,
    ElementSpec,
    Press,
    StateSpec,
    UsageScript,
    render_frame,
)
from .vision import extract_features

SCREEN_W, SCREEN_H = 256, 192


def slug(label: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", label.lower()).strip("_")


def _button_grid(labels: list[str], state_index: int) -> list[ElementSpec]:
    """Two-column button grid with per-button positional jitter.

    The jitter is seeded by (state, slot) so no two states share a rigid
    layout offset; repeated chrome across distinct screens then cannot agree
    on a single homography.
    """
    x0 = 14 + 8 * (state_index % 2)
    y0 = 28 + 8 * (state_index % 3)
    out = []
    for i, label in enumerate(labels):
        col, row = i % 2, i // 2
        jx = (state_index * 31 + i * 17) % 11 - 5
        jy = (state_index * 13 + i * 29) % 11 - 5
        bbox = Rect(x0 + col * 120 + jx, y0 + row * 44 + jy, 104, 30)
        out.append(ElementSpec(id=f"b_{slug(label)}", label=label, bbox=bbox))
    return out


def _status_strip(label: str, state_index: int) -> ElementSpec:
    jx = (state_index * 41) % 13 - 6
    jy = (state_index * 23) % 9 - 4
    return ElementSpec(id="t_status", label=label,
                       bbox=Rect(24 + jx, 152 + jy, 190 + (state_index * 7) % 17, 16),
                       kind="other")


def _coffee_state(idx: int, desc: str, buttons: list[str],
                  terminal: bool = False, strip: str | None = None) -> StateSpec:
    elements = _button_grid(buttons, idx)
    if strip:
        elements.append(_status_strip(strip, idx))
    return StateSpec(
        id=f"V{idx}",
        description=desc,
        elements=tuple(elements),
        background_seed=0xC0FFEE + idx * 7919,
        terminal=terminal,
    )


def coffee_machine() -> DeviceSpec:
    """14-state graphical coffee machine with three drink categories."""
    states = (
        _coffee_state(0, "main menu, select category",
                      ["Coffee Drinks", "Gourmet Drinks", "Hot Beverages"]),
        _coffee_state(1, "coffee drinks, select type",
                      ["House Blend", "Dark Roast", "Decaf", "Back"]),
        _coffee_state(2, "coffee drinks, select strength",
                      ["Regular", "50-50", "Strong", "Back"]),
        _coffee_state(3, "coffee drinks, select size",
                      ["Large", "Medium", "Small", "Back"]),
        _coffee_state(4, "gourmet drinks, select type",
                      ["Cafe Latte", "Cappuccino", "Mocha", "Back"]),
        _coffee_state(5, "gourmet drinks, select strength",
                      ["Mild", "Strong", "Back"]),
        _coffee_state(6, "gourmet drinks, select bean",
                      ["Default Bean", "Back"]),
        _coffee_state(7, "hot beverages, select type",
                      ["Hot Tea", "Hot Chocolate", "Back"]),
        _coffee_state(8, "hot beverages, select strength",
                      ["Regular", "Strong", "Back"]),
        _coffee_state(9, "hot beverages, select size",
                      ["Large", "Small", "Back"]),
        _coffee_state(10, "confirm order, select action",
                      ["Confirm", "Cancel"]),
        _coffee_state(11, "payment, select method",
                      ["Pay Card", "Pay Cash"]),
        _coffee_state(12, "preparing your drink, please wait", [],
                      terminal=True, strip="Preparing Drink"),
        _coffee_state(13, "order cancelled, please start over", [],
                      terminal=True, strip="Order Cancelled"),
    )
    transitions = (
        ("V0", "b_coffee_drinks", "V1"),
        ("V0", "b_gourmet_drinks", "V4"),
        ("V0", "b_hot_beverages", "V7"),
        ("V1", "b_house_blend", "V2"),
        ("V1", "b_dark_roast", "V2"),
        ("V1", "b_decaf", "V2"),
        ("V1", "b_back", "V0"),
        ("V2", "b_regular", "V3"),
        ("V2", "b_50_50", "V3"),
        ("V2", "b_strong", "V3"),
        ("V2", "b_back", "V1"),
        ("V3", "b_large", "V10"),
        ("V3", "b_medium", "V10"),
        ("V3", "b_small", "V10"),
        ("V3", "b_back", "V2"),
        ("V4", "b_cafe_latte", "V5"),
        ("V4", "b_cappuccino", "V5"),
        ("V4", "b_mocha", "V5"),
        ("V4", "b_back", "V0"),
        ("V5", "b_mild", "V6"),
        ("V5", "b_strong", "V6"),
        ("V5", "b_back", "V4"),
        ("V6", "b_default_bean", "V10"),
        ("V6", "b_back", "V5"),
        ("V7", "b_hot_tea", "V8"),
        ("V7", "b_hot_chocolate", "V8"),
        ("V7", "b_back", "V0"),
        ("V8", "b_regular", "V9"),
        ("V8", "b_strong", "V9"),
        ("V8", "b_back", "V7"),
        ("V9", "b_large", "V10"),
        ("V9", "b_small", "V10"),
        ("V9", "b_back", "V8"),
        ("V10", "b_confirm", "V11"),
        ("V10", "b_cancel", "V13"),
        ("V11", "b_pay_card", "V12"),
        ("V11", "b_pay_cash", "V12"),
    )
    return DeviceSpec(
        name="coffee", screen_size=(SCREEN_W, SCREEN_H), states=states,
        transitions=transitions, start="V0", terminals=frozenset({"V12", "V13"}),
    )


_KIOSK_BODIES = [
    "enter your date of birth using the keypad below to begin",
    "verify your home address and update any outdated details",
    "review your insurance provider and confirm coverage status",
    "select the clinic department you are scheduled to visit",
    "confirm your appointment time with the attending physician",
    "read the privacy notice and acknowledge the consent form",
    "indicate any accessibility assistance you may require today",
    "collect your printed visitor badge from the tray below",
]

_KIOSK_SHARED_BG = 0x510C4


def kiosk() -> DeviceSpec:
    """10-state check-in kiosk: eight pages share every pixel but a text strip.

    The near-identical pages make feature matching confidently wrong across
    pages, which is exactly the situation the text-similarity stage resolves.
    """
    continue_btn = ElementSpec(id="b_continue", label="Continue",
                               bbox=Rect(140, 150, 96, 30))
    back_btn = ElementSpec(id="b_back", label="Back", bbox=Rect(20, 150, 96, 30))
    states = [
        StateSpec(
            id="K0",
            description="check in station, select service",
            elements=(
                ElementSpec(id="b_begin_check_in", label="Begin Check In",
                            bbox=Rect(70, 76, 116, 36)),
                ElementSpec(id="t_body",
                            label="welcome to the clinic check in station touch begin to start",
                            bbox=Rect(20, 28, 216, 14), kind="other"),
            ),
            background_seed=0xAB5,
        )
    ]
    for i, body in enumerate(_KIOSK_BODIES, start=1):
        states.append(StateSpec(
            id=f"T{i}",
            description=f"check in step {i}, continue when done",
            elements=(
                ElementSpec(id="t_body", label=body, bbox=Rect(20, 28, 216, 14),
                            kind="other"),
                continue_btn,
                back_btn,
            ),
            background_seed=_KIOSK_SHARED_BG,
        ))
    states.append(StateSpec(
        id="K9",
        description="check in complete, thank you",
        elements=(
            ElementSpec(id="t_body",
                        label="you are checked in please take a seat until called",
                        bbox=Rect(20, 28, 216, 14), kind="other"),
        ),
        background_seed=0x93E,
        terminal=True,
    ))
    transitions = [("K0", "b_begin_check_in", "T1")]
    for i in range(1, 9):
        nxt = f"T{i + 1}" if i < 8 else "K9"
        transitions.append((f"T{i}", "b_continue", nxt))
        prev = f"T{i - 1}" if i > 1 else "K0"
        transitions.append((f"T{i}", "b_back", prev))
    return DeviceSpec(
        name="kiosk", screen_size=(SCREEN_W, SCREEN_H), states=tuple(states),
        transitions=tuple(transitions), start="K0", terminals=frozenset({"K9"}),
        glyph_scope="device",
    )


def reservation_panel() -> DeviceSpec:
    """7-state linear room reservation panel."""

    def st(idx, desc, buttons, terminal=False, strip=None):
        elements = _button_grid(buttons, idx)
        if strip:
            elements.append(_status_strip(strip, idx))
        return StateSpec(id=f"R{idx}", description=desc, elements=tuple(elements),
                         background_seed=0x700 + idx * 104729, terminal=terminal)

    states = (
        st(0, "meeting room panel, select action", ["Book Room", "Help"]),
        st(1, "room booking, select room", ["Room Alpha", "Room Beta", "Back"]),
        st(2, "booking time, select slot", ["Morning", "Afternoon", "Evening", "Back"]),
        st(3, "booking length, select duration", ["30 Minutes", "60 Minutes", "Back"]),
        st(4, "confirm booking, select action", ["Confirm", "Cancel"]),
        st(5, "room reserved, have a good meeting", [], terminal=True, strip="Room Reserved"),
        st(6, "help desk, call extension 4242", [], terminal=True, strip="Help Desk"),
    )
    transitions = (
        ("R0", "b_book_room", "R1"),
        ("R0", "b_help", "R6"),
        ("R1", "b_room_alpha", "R2"),
        ("R1", "b_room_beta", "R2"),
        ("R1", "b_back", "R0"),
        ("R2", "b_morning", "R3"),
        ("R2", "b_afternoon", "R3"),
        ("R2", "b_evening", "R3"),
        ("R2", "b_back", "R1"),
        ("R3", "b_30_minutes", "R4"),
        ("R3", "b_60_minutes", "R4"),
        ("R3", "b_back", "R2"),
        ("R4", "b_confirm", "R5"),
        ("R4", "b_cancel", "R0"),
    )
    return DeviceSpec(
        name="panel", screen_size=(SCREEN_W, SCREEN_H), states=states,
        transitions=transitions, start="R0", terminals=frozenset({"R5", "R6"}),
    )


DEVICES = {
    "coffee": coffee_machine,
    "kiosk": kiosk,
    "panel": reservation_panel,
}


def get_device(name: str) -> DeviceSpec:
    if name not in DEVICES:
        raise KeyError(f"unknown device {name!r}; available: {sorted(DEVICES)}")
    return DEVICES[name]()


def device_diagram(
    device: DeviceSpec,
    config: Optional[EngineConfig] = None,
    profile: Optional[CameraProfile] = None,
    seed: int = 0,
) -> StateDiagram:
    """Ground-truth diagram for a device: clean reference renders per state.

    Element boxes live in the reference frame's coordinates, so tracker
    homographies map touches straight onto them. Interactive sessions use
    this instead of running the builder.
    """
    cfg = config or EngineConfig.fixture()
    profile = profile or PROFILES["stationary"]
    diagram = StateDiagram()
    for spec in device.states:
        img, rec = render_frame(device, spec.id, None, profile, 0, seed)
        features = extract_features(img, cfg.vision.max_keypoints)
        elements = [
            Element(id=eid, label=label, bbox=Rect.from_list(list(bbox)), kind=kind)
            for eid, label, bbox, kind in rec.elements
        ]
        tokens = sorted(rec.elements, key=lambda e: (e[2][1], e[2][0]))
        quad = rec.screen_quad
        xs = [p[0] for p in quad]
        ys = [p[1] for p in quad]
        diagram.add_state(State(
            id=spec.id,
            reference_image=img,
            features=features,
            ocr_text=normalize_text(" ".join(t[1] for t in tokens)),
            elements=elements,
            description=spec.description,
            screen_bbox=Rect(min(xs), min(ys), max(xs) - min(xs), max(ys) - min(ys)),
            is_terminal=spec.terminal,
        ))
    diagram.start = device.start
    for frm, elem, to in device.transitions:
        diagram.upsert_transition(frm, to, {elem})
    for t in diagram.transitions:
        t.observation_count = 1
    for term in device.terminals:
        diagram.set_terminal(term, True)
    return diagram


def tour_script(name: str) -> UsageScript:
    """The canonical builder stream for each fixture: visits every state."""
    if name == "coffee":
        return UsageScript(actions=(
            Dwell("V0", 1.6), Press("b_coffee_drinks"),
            Dwell("V1", 1.4), Press("b_house_blend"),
            Dwell("V2", 1.4), Press("b_50_50"),
            Dwell("V3", 1.4), Press("b_large"),
            Dwell("V10", 1.4), Press("b_confirm"),
            Dwell("V11", 1.4), Press("b_pay_card"),
            Dwell("V12", 1.8),
            Dwell("V0", 1.4), Press("b_gourmet_drinks"),
            Dwell("V4", 1.4), Press("b_cafe_latte"),
            Dwell("V5", 1.4), Press("b_mild"),
            Dwell("V6", 1.4), Press("b_default_bean"),
            Dwell("V10", 1.3), Press("b_confirm"),
            Dwell("V11", 1.3), Press("b_pay_cash"),
            Dwell("V12", 1.5),
            Dwell("V0", 1.4), Press("b_hot_beverages"),
            Dwell("V7", 1.4), Press("b_hot_tea"),
            Dwell("V8", 1.4), Press("b_regular"),
            Dwell("V9", 1.4), Press("b_small"),
            Dwell("V10", 1.3), Press("b_cancel"),
            Dwell("V13", 1.8),
        ))
    if name == "kiosk":
        actions: list = [Dwell("K0", 1.6), Press("b_begin_check_in")]
        for i in range(1, 9):
            actions.append(Dwell(f"T{i}", 1.5))
            actions.append(Press("b_continue"))
        actions.append(Dwell("K9", 1.8))
        return UsageScript(actions=tuple(actions))
    if name == "panel":
        return UsageScript(actions=(
            Dwell("R0", 1.6), Press("b_book_room"),
            Dwell("R1", 1.4), Press("b_room_alpha"),
            Dwell("R2", 1.4), Press("b_morning"),
            Dwell("R3", 1.4), Press("b_30_minutes"),
            Dwell("R4", 1.4), Press("b_confirm"),
            Dwell("R5", 1.8),
            Dwell("R0", 1.4), Press("b_help"),
            Dwell("R6", 1.8),
        ))
    raise KeyError(f"no tour script for device {name!r}")
