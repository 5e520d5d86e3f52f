"""Scriptable synthetic touchscreen devices with full ground truth.

States are rasterized to deterministic pixels (procedural glyph textures stand
in for fonts), a camera model warps the screen plane into the frame with
optional seeded jitter, blur and noise, and every emitted frame carries an
exact ground-truth record. Scripted runs produce the builder's input contract
(frames + manifest + ground truth); interactive sessions expose the
explore-vs-activate pointer mode.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

import numpy as np
from scipy import ndimage

from .imageio import Image, save_image
from .providers import Rect
from .vision import Homography, _adjugate_3x3, warp_point

FRAME_W, FRAME_H = 320, 240
_Q = 1 << 20  # fixed-point grid for homography entries


# --------------------------------------------------------------------------
# device description


@dataclass(frozen=True)
class ElementSpec:
    id: str
    label: str
    bbox: Rect
    kind: str = "button"


@dataclass(frozen=True)
class StateSpec:
    id: str
    description: str
    elements: tuple[ElementSpec, ...]
    background_seed: int
    terminal: bool = False

    def element(self, element_id: str) -> ElementSpec:
        for e in self.elements:
            if e.id == element_id:
                return e
        raise KeyError(f"state {self.id} has no element {element_id!r}")


@dataclass(frozen=True)
class DeviceSpec:
    name: str
    screen_size: tuple[int, int]
    states: tuple[StateSpec, ...]
    transitions: tuple[tuple[str, str, str], ...]  # (from_state, element_id, to_state)
    start: str
    terminals: frozenset[str]
    # "state": same label renders differently on each screen (distinct skins);
    # "device": same label renders identically everywhere (shared chrome).
    glyph_scope: str = "state"

    def __post_init__(self):
        ids = [s.id for s in self.states]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate state ids in device spec")
        by_id = {s.id: s for s in self.states}
        if self.start not in by_id:
            raise ValueError(f"start state {self.start!r} missing")
        for frm, elem, to in self.transitions:
            if frm not in by_id or to not in by_id:
                raise ValueError(f"transition {frm}->{to} references unknown state")
            by_id[frm].element(elem)
        for s in self.states:
            labels = [e.label for e in s.elements]
            if len(labels) != len(set(labels)):
                raise ValueError(f"state {s.id} repeats an element label")

    def state(self, state_id: str) -> StateSpec:
        for s in self.states:
            if s.id == state_id:
                return s
        raise KeyError(f"unknown state {state_id!r}")

    def target_of(self, state_id: str, element_id: str) -> Optional[str]:
        for frm, elem, to in self.transitions:
            if frm == state_id and elem == element_id:
                return to
        return None

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "screen_size": list(self.screen_size),
            "start": self.start,
            "terminals": sorted(self.terminals),
            "glyph_scope": self.glyph_scope,
            "states": [
                {
                    "id": s.id,
                    "description": s.description,
                    "background_seed": s.background_seed,
                    "terminal": s.terminal,
                    "elements": [
                        {"id": e.id, "label": e.label, "bbox": e.bbox.to_list(), "kind": e.kind}
                        for e in s.elements
                    ],
                }
                for s in self.states
            ],
            "transitions": [
                {"from": f, "element": e, "to": t} for f, e, t in self.transitions
            ],
        }

    @staticmethod
    def from_json(doc: dict) -> "DeviceSpec":
        states = tuple(
            StateSpec(
                id=s["id"],
                description=s["description"],
                background_seed=int(s["background_seed"]),
                terminal=bool(s.get("terminal", False)),
                elements=tuple(
                    ElementSpec(id=e["id"], label=e["label"],
                                bbox=Rect.from_list(e["bbox"]), kind=e.get("kind", "button"))
                    for e in s.get("elements", [])
                ),
            )
            for s in doc["states"]
        )
        return DeviceSpec(
            name=doc["name"],
            screen_size=tuple(doc["screen_size"]),
            states=states,
            transitions=tuple((t["from"], t["element"], t["to"]) for t in doc["transitions"]),
            start=doc["start"],
            terminals=frozenset(doc.get("terminals", [])),
            glyph_scope=doc.get("glyph_scope", "state"),
        )


def save_device(spec: DeviceSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(spec.to_json(), indent=1, sort_keys=True), encoding="utf-8")


def load_device(path: str | Path) -> DeviceSpec:
    return DeviceSpec.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


# --------------------------------------------------------------------------
# camera model


@dataclass(frozen=True)
class CameraProfile:
    kind: str  # "stationary" | "handheld" | "web"
    base_quad: tuple[tuple[float, float], ...]  # frame positions of the screen corners
    jitter_translation: float = 0.0  # sigma, px
    jitter_rotation_deg: float = 0.0  # sigma, degrees (kept well under 5)
    jitter_scale: float = 0.0  # sigma, relative
    noise_sigma: float = 0.0  # additive gaussian per channel
    blur_px: int = 0
    clutter: bool = False
    fps: int = 10

    def __post_init__(self):
        if self.kind == "stationary":
            if self.jitter_translation or self.jitter_rotation_deg or self.jitter_scale:
                raise ValueError("stationary profiles must have zero jitter")


def _quantize(m: np.ndarray) -> np.ndarray:
    return np.round(m * _Q) / _Q


def _homography_from_quad(screen_w: int, screen_h: int, quad) -> np.ndarray:
    """Exact screen->frame homography through four corner correspondences."""
    src = np.array([(0, 0), (screen_w, 0), (screen_w, screen_h), (0, screen_h)], dtype=np.float64)
    dst = np.asarray(quad, dtype=np.float64)
    rows = []
    for (x, y), (xp, yp) in zip(src, dst):
        rows.append([-x, -y, -1, 0, 0, 0, x * xp, y * xp, xp])
        rows.append([0, 0, 0, -x, -y, -1, x * yp, y * yp, yp])
    A = np.asarray(rows)
    _, _, vt = np.linalg.svd(A)
    h = vt[-1].reshape(3, 3)
    h = h / h[2, 2]
    return _quantize(h)


def _profile_homography(profile: CameraProfile, screen_size, frame_index: int,
                        seed: int) -> np.ndarray:
    base = _homography_from_quad(screen_size[0], screen_size[1], profile.base_quad)
    if profile.jitter_translation == 0 and profile.jitter_rotation_deg == 0 \
            and profile.jitter_scale == 0:
        return base
    rng = np.random.Generator(np.random.PCG64([seed & 0xFFFFFFFF, frame_index, 0x1177]))
    # Quantize each jitter draw to 1/64 so the composed matrix is grid-exact.
    dx = round(rng.normal(0.0, profile.jitter_translation) * 64) / 64
    dy = round(rng.normal(0.0, profile.jitter_translation) * 64) / 64
    theta = round(rng.normal(0.0, math.radians(profile.jitter_rotation_deg)) * 4096) / 4096
    scale = 1.0 + round(rng.normal(0.0, profile.jitter_scale) * 4096) / 4096
    quad = np.asarray(profile.base_quad, dtype=np.float64)
    cx, cy = quad[:, 0].mean(), quad[:, 1].mean()
    cos_t, sin_t = math.cos(theta) * scale, math.sin(theta) * scale
    jitter = np.array(
        [
            [cos_t, -sin_t, cx + dx - cos_t * cx + sin_t * cy],
            [sin_t, cos_t, cy + dy - sin_t * cx - cos_t * cy],
            [0.0, 0.0, 1.0],
        ]
    )
    return _quantize(jitter @ base)


STATIONARY_QUAD = ((34.0, 26.0), (286.0, 23.0), (289.0, 215.0), (31.0, 212.0))
HANDHELD_QUAD = ((38.0, 30.0), (283.0, 26.0), (287.0, 211.0), (35.0, 209.0))
WEB_QUAD = ((18.0, 14.0), (302.0, 14.0), (302.0, 226.0), (18.0, 226.0))

PROFILES: dict[str, CameraProfile] = {
    "stationary": CameraProfile(kind="stationary", base_quad=STATIONARY_QUAD, fps=10),
    "handheld": CameraProfile(
        kind="handheld", base_quad=HANDHELD_QUAD,
        jitter_translation=6.0, jitter_rotation_deg=2.5, jitter_scale=0.03,
        noise_sigma=18.0, blur_px=5, clutter=True, fps=10,
    ),
    "web": CameraProfile(kind="web", base_quad=WEB_QUAD, noise_sigma=3.0, fps=10),
}


# --------------------------------------------------------------------------
# ground truth


@dataclass(frozen=True)
class GroundTruthRecord:
    frame_index: int
    state_id: str
    screen_quad: tuple[tuple[float, float], ...]
    homography: tuple  # screen -> frame, 3x3 nested tuples
    elements: tuple[tuple[str, str, tuple[float, float, float, float], str], ...]
    marker_frame: Optional[tuple[float, float]] = None
    marker_screen: Optional[tuple[float, float]] = None
    pressed: Optional[str] = None

    @property
    def visible_labels(self) -> list[tuple[str, list[float]]]:
        return [(label, list(bbox)) for _, label, bbox, _ in self.elements]


class GroundTruth:
    """Per-frame truth records; evaluation must read these, never pixels."""

    def __init__(self, records: Optional[list[GroundTruthRecord]] = None):
        self.records: list[GroundTruthRecord] = records or []

    def append(self, rec: GroundTruthRecord):
        self.records.append(rec)

    def record(self, frame_index: int) -> Optional[GroundTruthRecord]:
        if 0 <= frame_index < len(self.records):
            rec = self.records[frame_index]
            if rec.frame_index == frame_index:
                return rec
        for rec in self.records:
            if rec.frame_index == frame_index:
                return rec
        return None

    def state_of(self, frame_index: int) -> Optional[str]:
        rec = self.record(frame_index)
        return rec.state_id if rec else None

    def states_present(self) -> list[str]:
        seen: list[str] = []
        for rec in self.records:
            if rec.state_id not in seen:
                seen.append(rec.state_id)
        return seen

    def save(self, path: str | Path):
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.records:
                fh.write(json.dumps({
                    "frame_index": rec.frame_index,
                    "state": rec.state_id,
                    "screen_quad": [list(p) for p in rec.screen_quad],
                    "homography": [list(row) for row in rec.homography],
                    "elements": [
                        {"id": i, "label": l, "bbox": list(b), "kind": k}
                        for i, l, b, k in rec.elements
                    ],
                    "marker_frame": list(rec.marker_frame) if rec.marker_frame else None,
                    "marker_screen": list(rec.marker_screen) if rec.marker_screen else None,
                    "pressed": rec.pressed,
                }, sort_keys=True) + "\n")

    @staticmethod
    def load(path: str | Path) -> "GroundTruth":
        records = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                d = json.loads(line)
                records.append(GroundTruthRecord(
                    frame_index=int(d["frame_index"]),
                    state_id=d["state"],
                    screen_quad=tuple(tuple(p) for p in d["screen_quad"]),
                    homography=tuple(tuple(row) for row in d["homography"]),
                    elements=tuple(
                        (e["id"], e["label"], tuple(e["bbox"]), e.get("kind", "button"))
                        for e in d["elements"]
                    ),
                    marker_frame=tuple(d["marker_frame"]) if d.get("marker_frame") else None,
                    marker_screen=tuple(d["marker_screen"]) if d.get("marker_screen") else None,
                    pressed=d.get("pressed"),
                ))
        return GroundTruth(records)


# --------------------------------------------------------------------------
# rasterization

_MARKER_RGB = (0, 230, 40)  # saturated green, hue ~130
_MARKER_RADIUS = 6


def _label_seed(text: str) -> int:
    return int.from_bytes(hashlib.blake2s(text.encode("utf-8"), digest_size=4).digest(), "big")


def _glyph_pattern(label: str, w: int, h: int) -> np.ndarray:
    """High-frequency deterministic texture standing in for rendered text."""
    cell = 2
    gw, gh = max(1, w // cell), max(1, h // cell)
    rng = np.random.Generator(np.random.PCG64(_label_seed(label)))
    grid = rng.random((gh, gw)) < 0.45
    up = np.kron(grid, np.ones((cell, cell), dtype=bool))
    return up[:h, :w]


_PALETTE = [
    (188, 142, 96), (106, 128, 180), (196, 180, 120), (150, 112, 168),
    (204, 124, 110), (120, 156, 196), (180, 150, 140), (140, 140, 170),
]


def render_state_screen(device: DeviceSpec, state_id: str,
                        _cache: dict = {}) -> np.ndarray:  # noqa: B006 - shared cache on purpose
    """Rasterize one state to screen-space pixels (cached per device/state)."""
    key = (device.name, state_id, device.screen_size)
    if key in _cache:
        return _cache[key]
    w, h = device.screen_size
    spec = device.state(state_id)
    rng = np.random.Generator(np.random.PCG64(spec.background_seed))
    cell = 6
    base = np.array([96, 100, 108], dtype=np.int32)
    blocks = rng.integers(-26, 27, size=((h + cell - 1) // cell, (w + cell - 1) // cell, 1))
    texture = np.kron(blocks, np.ones((cell, cell, 1), dtype=np.int64))[:h, :w]
    canvas = np.clip(base[None, None, :] + texture, 0, 255).astype(np.uint8)
    border = np.array([
        14 + (spec.background_seed >> 2) % 40,
        14 + (spec.background_seed >> 7) % 40,
        18 + (spec.background_seed >> 12) % 40,
    ], dtype=np.uint8)

    for e in spec.elements:
        x, y, bw, bh = (int(e.bbox.x), int(e.bbox.y), int(e.bbox.w), int(e.bbox.h))
        if e.kind == "button":
            fill = np.array(_PALETTE[_label_seed(e.label) % len(_PALETTE)], dtype=np.int32)
            if device.glyph_scope == "state":
                # Tint fills per state so repeated labels diverge visually.
                tint = np.array([
                    (spec.background_seed >> s) % 31 - 15 for s in (0, 5, 10)
                ], dtype=np.int32)
                fill = np.clip(fill + tint, 0, 255)
            canvas[y : y + bh, x : x + bw] = fill
            canvas[y : y + 2, x : x + bw] = border
            canvas[y + bh - 2 : y + bh, x : x + bw] = border
            canvas[y : y + bh, x : x + 2] = border
            canvas[y : y + bh, x + bw - 2 : x + bw] = border
            pad = 5
            gx, gy = x + pad, y + pad
            gw, gh = max(1, bw - 2 * pad), max(1, bh - 2 * pad)
        else:
            canvas[y : y + bh, x : x + bw] = (226, 226, 220)
            gx, gy, gw, gh = x + 1, y + 1, max(1, bw - 2), max(1, bh - 2)
        if device.glyph_scope == "device":
            texture_key = f"{device.name}|{e.label}"
        else:
            texture_key = f"{device.name}|{spec.id}|{e.label}"
        glyph = _glyph_pattern(texture_key, gw, gh)
        region = canvas[gy : gy + glyph.shape[0], gx : gx + glyph.shape[1]]
        region[glyph] = (24, 22, 26)
    _cache[key] = canvas
    return canvas


def _draw_marker(screen: np.ndarray, pos: tuple[float, float]) -> np.ndarray:
    out = screen.copy()
    h, w = out.shape[:2]
    x0, y0 = pos
    ys, xs = np.ogrid[:h, :w]
    disk = (xs - x0) ** 2 + (ys - y0) ** 2 <= _MARKER_RADIUS**2
    out[disk] = _MARKER_RGB
    return out


def _background(profile: CameraProfile, seed: int) -> np.ndarray:
    if not profile.clutter:
        return np.full((FRAME_H, FRAME_W, 3), 52, dtype=np.uint8)
    rng = np.random.Generator(np.random.PCG64([seed & 0xFFFFFFFF, 0xB6]))
    cell = 16
    blocks = rng.integers(28, 96, size=(FRAME_H // cell + 1, FRAME_W // cell + 1, 3))
    big = np.kron(blocks, np.ones((cell, cell, 1), dtype=np.int64))
    return big[:FRAME_H, :FRAME_W].astype(np.uint8)


def _warp_screen_into_frame(screen: np.ndarray, h_mat: np.ndarray,
                            background: np.ndarray) -> np.ndarray:
    """Inverse-map bilinear warp of the screen plane onto the frame canvas."""
    sh, sw = screen.shape[:2]
    inv = _adjugate_3x3(h_mat)
    xs, ys = np.meshgrid(np.arange(FRAME_W, dtype=np.float64),
                         np.arange(FRAME_H, dtype=np.float64))
    denom = inv[2, 0] * xs + inv[2, 1] * ys + inv[2, 2]
    denom = np.where(np.abs(denom) < 1e-12, 1e-12, denom)
    sx = (inv[0, 0] * xs + inv[0, 1] * ys + inv[0, 2]) / denom
    sy = (inv[1, 0] * xs + inv[1, 1] * ys + inv[1, 2]) / denom
    valid = (sx >= 0) & (sx <= sw - 1) & (sy >= 0) & (sy <= sh - 1)
    sxc = np.clip(sx, 0, sw - 1)
    syc = np.clip(sy, 0, sh - 1)
    x0 = np.floor(sxc).astype(np.int64)
    y0 = np.floor(syc).astype(np.int64)
    x1 = np.minimum(x0 + 1, sw - 1)
    y1 = np.minimum(y0 + 1, sh - 1)
    fx = (sxc - x0)[..., None]
    fy = (syc - y0)[..., None]
    img = screen.astype(np.float64)
    interp = (
        img[y0, x0] * (1 - fx) * (1 - fy)
        + img[y0, x1] * fx * (1 - fy)
        + img[y1, x0] * (1 - fx) * fy
        + img[y1, x1] * fx * fy
    )
    out = background.copy()
    out[valid] = np.floor(interp[valid] + 0.5).astype(np.uint8)
    return out


def render_frame(
    device: DeviceSpec,
    state_id: str,
    marker: Optional[tuple[float, float]],
    profile: CameraProfile,
    frame_index: int,
    seed: int,
    pressed: Optional[str] = None,
) -> tuple[Image, GroundTruthRecord]:
    """Rasterize, warp, degrade and emit one frame plus its truth record."""
    w, h = device.screen_size
    if marker is not None and not (0 <= marker[0] <= w and 0 <= marker[1] <= h):
        raise ValueError(f"marker {marker} outside screen {w}x{h}")
    screen = render_state_screen(device, state_id)
    if marker is not None:
        screen = _draw_marker(screen, marker)
    h_mat = _profile_homography(profile, device.screen_size, frame_index, seed)
    frame = _warp_screen_into_frame(screen, h_mat, _background(profile, seed))

    if profile.blur_px and profile.blur_px > 1:
        frame = ndimage.uniform_filter(
            frame.astype(np.float64), size=(profile.blur_px, profile.blur_px, 1))
        frame = np.floor(frame + 0.5).astype(np.uint8)
    if profile.noise_sigma > 0:
        rng = np.random.Generator(np.random.PCG64([seed & 0xFFFFFFFF, frame_index, 0xA0]))
        noise = rng.normal(0.0, profile.noise_sigma, size=frame.shape)
        frame = np.clip(frame.astype(np.float64) + noise, 0, 255)
        frame = np.floor(frame + 0.5).astype(np.uint8)

    hom = Homography(h_mat)
    quad = tuple(warp_point(hom, (px, py))
                 for px, py in [(0, 0), (w, 0), (w, h), (0, h)])
    spec = device.state(state_id)
    elements = []
    for e in spec.elements:
        tl = warp_point(hom, (e.bbox.x, e.bbox.y))
        tr = warp_point(hom, (e.bbox.x + e.bbox.w, e.bbox.y))
        br = warp_point(hom, (e.bbox.x + e.bbox.w, e.bbox.y + e.bbox.h))
        bl = warp_point(hom, (e.bbox.x, e.bbox.y + e.bbox.h))
        # Inscribed axis-aligned box of the warped quad: containment in frame
        # coordinates then implies containment on the physical screen.
        x0, x1 = max(tl[0], bl[0]), min(tr[0], br[0])
        y0, y1 = max(tl[1], tr[1]), min(bl[1], br[1])
        elements.append((e.id, e.label, (x0, y0, max(0.0, x1 - x0), max(0.0, y1 - y0)),
                         e.kind))
    marker_frame = warp_point(hom, marker) if marker is not None else None
    rec = GroundTruthRecord(
        frame_index=frame_index,
        state_id=state_id,
        screen_quad=quad,
        homography=tuple(tuple(float(v) for v in row) for row in h_mat),
        elements=tuple(elements),
        marker_frame=marker_frame,
        marker_screen=tuple(marker) if marker is not None else None,
        pressed=pressed,
    )
    return Image(frame), rec


# --------------------------------------------------------------------------
# scripted usage


@dataclass(frozen=True)
class Dwell:
    state_id: str
    seconds: float


@dataclass(frozen=True)
class Press:
    element_id: str
    waypoints: Optional[tuple[tuple[float, float], ...]] = None


@dataclass(frozen=True)
class UsageScript:
    actions: tuple  # Dwell | Press

    def to_json(self) -> dict:
        out = []
        for a in self.actions:
            if isinstance(a, Dwell):
                out.append({"dwell": [a.state_id, a.seconds]})
            else:
                entry: dict = {"press": a.element_id}
                if a.waypoints:
                    entry["waypoints"] = [list(p) for p in a.waypoints]
                out.append(entry)
        return {"actions": out}

    @staticmethod
    def from_json(doc: dict) -> "UsageScript":
        actions = []
        for a in doc["actions"]:
            if "dwell" in a:
                actions.append(Dwell(state_id=a["dwell"][0], seconds=float(a["dwell"][1])))
            else:
                wp = tuple(tuple(p) for p in a["waypoints"]) if a.get("waypoints") else None
                actions.append(Press(element_id=a["press"], waypoints=wp))
        return UsageScript(actions=tuple(actions))


def save_script(script: UsageScript, path: str | Path):
    Path(path).write_text(json.dumps(script.to_json(), indent=1), encoding="utf-8")


def load_script(path: str | Path) -> UsageScript:
    return UsageScript.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


_APPROACH_STEP = 24.0
_HOLD_FRAMES = 3


def _auto_waypoints(start: tuple[float, float], end: tuple[float, float]) -> list:
    dist = math.hypot(end[0] - start[0], end[1] - start[1])
    n = max(1, int(math.ceil(dist / _APPROACH_STEP)))
    pts = [
        (start[0] + (end[0] - start[0]) * k / n, start[1] + (end[1] - start[1]) * k / n)
        for k in range(1, n + 1)
    ]
    pts.extend([end] * _HOLD_FRAMES)
    return pts


def validate_script(device: DeviceSpec, script: UsageScript) -> None:
    """Fail before emitting any frame: presses must follow existing transitions."""
    current: Optional[str] = None
    for a in script.actions:
        if isinstance(a, Dwell):
            device.state(a.state_id)
            current = a.state_id
        else:
            if current is None:
                raise ValueError("script presses before any dwell establishes a state")
            target = device.target_of(current, a.element_id)
            if target is None:
                raise ValueError(
                    f"no transition from {current!r} via element {a.element_id!r}")
            current = target


def run_script(
    device: DeviceSpec,
    script: UsageScript,
    profile: CameraProfile,
    seed: int,
) -> Iterator[tuple[Image, GroundTruthRecord]]:
    """Emit (frame, truth) pairs: dwells hold a state, presses animate the marker.

    The state flips exactly on the press frame: approach frames belong to the
    old state with the marker moving, then one frame shows the new state with
    the marker still at the press position.
    """
    validate_script(device, script)
    frame_index = 0
    current: Optional[str] = None
    marker: Optional[tuple[float, float]] = None
    w, h = device.screen_size
    for a in script.actions:
        if isinstance(a, Dwell):
            current = a.state_id
            marker = None
            n = int(round(profile.fps * a.seconds))
            for _ in range(n):
                yield render_frame(device, current, None, profile, frame_index, seed)
                frame_index += 1
        else:
            spec = device.state(current)
            elem = spec.element(a.element_id)
            target = device.target_of(current, a.element_id)
            end = elem.bbox.center()
            start = marker if marker is not None else (w / 2.0, h / 2.0)
            waypoints = list(a.waypoints) if a.waypoints else _auto_waypoints(start, end)
            for p in waypoints:
                yield render_frame(device, current, p, profile, frame_index, seed)
                frame_index += 1
            press_pos = waypoints[-1]
            yield render_frame(device, target, press_pos, profile, frame_index, seed,
                               pressed=a.element_id)
            frame_index += 1
            current = target
            marker = press_pos


def write_stream(
    device: DeviceSpec,
    script: UsageScript,
    profile_name: str,
    seed: int,
    out_dir: str | Path,
    profile: Optional[CameraProfile] = None,
) -> tuple[Path, int]:
    """Materialize a scripted run as numbered PNGs + manifest + ground truth."""
    profile = profile or PROFILES[profile_name]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    truth = GroundTruth()
    count = 0
    for img, rec in run_script(device, script, profile, seed):
        save_image(img, out_dir / f"frame_{rec.frame_index:06d}.png")
        truth.append(rec)
        count += 1
    truth.save(out_dir / "ground_truth.jsonl")
    manifest = {
        "device": device.name,
        "profile": profile_name,
        "fps": profile.fps,
        "seed": seed,
        "frame_count": count,
    }
    (out_dir / "stream.json").write_text(json.dumps(manifest, indent=1, sort_keys=True),
                                         encoding="utf-8")
    return out_dir, count


# --------------------------------------------------------------------------
# interactive sessions


@dataclass(frozen=True)
class SimEvent:
    kind: str  # "moved" | "activated" | "noop" | "released"
    state_id: str
    transitioned: bool = False
    pressed_element: Optional[str] = None


class SimSession:
    """One live simulated device: move explores risk-free, activate presses."""

    def __init__(self, device: DeviceSpec, profile: CameraProfile, seed: int,
                 start_state: Optional[str] = None):
        self.device = device
        self.profile = profile
        self.seed = seed
        self.state_id = start_state or device.start
        device.state(self.state_id)
        w, h = device.screen_size
        self.marker: tuple[float, float] = (w / 2.0, h / 2.0)
        self.frame_index = 0

    def _emit(self, pressed: Optional[str] = None) -> tuple[Image, GroundTruthRecord]:
        img, rec = render_frame(self.device, self.state_id, self.marker, self.profile,
                                self.frame_index, self.seed, pressed=pressed)
        self.frame_index += 1
        return img, rec

    def step(self, event: dict) -> tuple[Image, GroundTruthRecord, SimEvent]:
        kind = event.get("kind")
        if kind == "move":
            w, h = self.device.screen_size
            x = min(max(float(event["x"]), 0.0), float(w))
            y = min(max(float(event["y"]), 0.0), float(h))
            self.marker = (x, y)
            img, rec = self._emit()
            return img, rec, SimEvent(kind="moved", state_id=self.state_id)
        if kind == "activate":
            spec = self.device.state(self.state_id)
            hit = None
            for e in spec.elements:
                if e.kind == "button" and e.bbox.contains(*self.marker):
                    hit = e
                    break
            target = self.device.target_of(self.state_id, hit.id) if hit else None
            if target is None:
                img, rec = self._emit()
                return img, rec, SimEvent(kind="noop", state_id=self.state_id)
            pressed = hit.id
            self.state_id = target
            img, rec = self._emit(pressed=pressed)
            return img, rec, SimEvent(kind="activated", state_id=self.state_id,
                                      transitioned=True, pressed_element=pressed)
        if kind == "release":
            img, rec = self._emit()
            return img, rec, SimEvent(kind="released", state_id=self.state_id)
        raise ValueError(f"unknown pointer event kind {kind!r}")
