"""Tracker: search order permutations, hysteresis arithmetic, lazy-vs-baseline
candidate counts, alignment with the builder's matched sequence."""

import numpy as np
import pytest

from screenflow.config import EngineConfig
from screenflow.devices import device_diagram, tour_script
from screenflow.diagram import Element, State, StateDiagram
from screenflow.imageio import Image
from screenflow.providers import Rect
from screenflow.simulator import PROFILES, render_frame
from screenflow.tracker import TrackerSession, restrict_diagram, scaling_probe, search_order
from screenflow.vision import extract_features

from conftest import build_from_stream


def tiny_state(sid, buttons=()):
    rng = np.random.default_rng(abs(hash(sid)) % (2**32))
    img = Image(rng.integers(0, 256, size=(40, 40, 3)).astype(np.uint8))
    return State(id=sid, reference_image=img, features=extract_features(img, 10),
                 elements=[Element(id=b, label=b, bbox=Rect(2 + 9 * i, 2, 8, 6))
                           for i, b in enumerate(buttons)])


# -- search_order --------------------------------------------------------------


def test_search_order_coffee_example(coffee_ref_diagram):
    # current V4, predicted V5 (via pressed cafe latte)
    order = search_order(coffee_ref_diagram, "V4", "V5")
    assert order[0] == "V5"
    assert order[1] == "V4"
    neigh = coffee_ref_diagram.neighbors("V4")
    assert order[2 : 2 + len([n for n in neigh if n not in order[:2]])] == [
        n for n in neigh if n not in order[:2]]


def test_search_order_no_current_is_lexicographic(coffee_ref_diagram):
    order = search_order(coffee_ref_diagram, None, None)
    assert order == sorted(coffee_ref_diagram.states)


def test_search_order_predicted_equals_current_dedup(coffee_ref_diagram):
    order = search_order(coffee_ref_diagram, "V4", "V4")
    assert order[0] == "V4"
    assert order.count("V4") == 1


def test_search_order_is_permutation_on_random_diagrams():
    rng = np.random.default_rng(5)
    for trial in range(15):
        n = int(rng.integers(2, 11))
        d = StateDiagram()
        ids = [f"S{i}" for i in range(n)]
        for sid in ids:
            d.add_state(tiny_state(sid))
        for _ in range(int(rng.integers(0, 2 * n))):
            a, b = rng.choice(ids, 2, replace=False)
            d.upsert_transition(str(a), str(b), set())
        d.freeze()
        current = str(rng.choice(ids)) if rng.random() < 0.8 else None
        predicted = str(rng.choice(ids)) if (current and rng.random() < 0.5) else None
        order = search_order(d, current, predicted)
        assert sorted(order) == sorted(ids)
        assert len(set(order)) == len(ids)
        if predicted:
            assert order[0] == predicted


def test_rings_sorted_by_distance(coffee_ref_diagram):
    order = search_order(coffee_ref_diagram, "V0", None)
    dist = coffee_ref_diagram.bfs_distances("V0")
    neigh = set(coffee_ref_diagram.neighbors("V0"))
    tail = [s for s in order if s != "V0" and s not in neigh]
    dists = [dist.get(s, 10**6) for s in tail]
    assert dists == sorted(dists)


# -- smoothing arithmetic ----------------------------------------------------------


class _SmoothProbe(TrackerSession):
    """Tracker with injected per-frame identifications (no vision)."""

    def __init__(self, diagram, config, script):
        super().__init__(diagram, config=config)
        self.script = list(script)

    def run(self):
        out = []
        for frame_state in self.script:
            transitioned = self._smooth(frame_state)
            out.append((self.current if frame_state is not None else None, transitioned))
        return out


@pytest.fixture(scope="module")
def tiny_frozen():
    d = StateDiagram()
    for sid in ("A", "B", "C"):
        d.add_state(tiny_state(sid))
    d.upsert_transition("A", "B", set())
    d.upsert_transition("B", "C", set())
    return d.freeze()


def cfg_with_m(m):
    from dataclasses import replace

    cfg = EngineConfig.fixture()
    return replace(cfg, tracker=replace(cfg.tracker, confirm_frames=m))


def test_cut_transition_confirms_on_mth_frame(tiny_frozen):
    # frames 0-29 A, 30-89 B, M=3 -> transitioned at frame 32
    script = ["A"] * 30 + ["B"] * 60
    probe = _SmoothProbe(tiny_frozen, cfg_with_m(3), script)
    out = probe.run()
    flips = [i for i, (_, t) in enumerate(out) if t]
    assert flips == [2, 32]  # initial lock at frame 2, transition at 32
    assert out[31][0] == "A"
    assert out[32][0] == "B"


def test_single_frame_glitch_filtered(tiny_frozen):
    script = ["A"] * 10 + ["C"] + ["A"] * 10
    probe = _SmoothProbe(tiny_frozen, cfg_with_m(3), script)
    out = probe.run()
    assert all(state == "A" for state, _ in out[3:])


def test_alternating_stream_never_commits(tiny_frozen):
    script = ["A"] * 5 + ["B", "C"] * 30
    probe = _SmoothProbe(tiny_frozen, cfg_with_m(3), script)
    out = probe.run()
    assert all(state == "A" for state, _ in out[5:])


def test_m1_commits_immediately(tiny_frozen):
    script = ["A", "B", "C", "B"]
    probe = _SmoothProbe(tiny_frozen, cfg_with_m(1), script)
    out = probe.run()
    assert [s for s, _ in out] == script


def test_absent_frames_reset_pending(tiny_frozen):
    script = ["A"] * 5 + ["B", "B", None, "B", "B", "B"]
    probe = _SmoothProbe(tiny_frozen, cfg_with_m(3), script)
    out = probe.run()
    assert out[7] == (None, False)  # absent frame reports nothing
    assert out[-1][0] == "B"


# -- live tracking -------------------------------------------------------------------


@pytest.fixture(scope="module")
def panel_tracker_setup(panel_device, fixture_config):
    diagram = device_diagram(panel_device, fixture_config).freeze()
    frames = []
    for sid, count in (("R0", 12), ("R1", 12)):
        img, _ = render_frame(panel_device, sid, None, PROFILES["stationary"], 0, 7)
        frames.extend([img] * count)
    return diagram, frames


def test_locked_tracking_evaluates_one_candidate(panel_tracker_setup, fixture_config):
    diagram, frames = panel_tracker_setup
    session = TrackerSession(diagram, config=fixture_config, seed=1)
    counts = []
    for i, f in enumerate(frames[:12]):
        ev = session.track_frame(f, frame_index=i)
        counts.append(ev.candidates_evaluated)
    # after the initial lock the current state matches first every frame
    assert all(c == 1 for c in counts[2:])
    assert session.current == "R0"


def test_transition_detected_with_smoothing(panel_tracker_setup, fixture_config):
    diagram, frames = panel_tracker_setup
    session = TrackerSession(diagram, config=fixture_config, seed=1)
    events = [session.track_frame(f, frame_index=i) for i, f in enumerate(frames)]
    flips = [e.frame_index for e in events if e.transitioned]
    # M=2 (fixture config): lock at frame 1, boundary at 12 -> commit at 13
    assert flips == [1, 13]
    assert events[12].state == "R0"
    assert events[13].state == "R1"


def test_tracker_requires_frozen_nonempty(panel_device, fixture_config):
    d = device_diagram(panel_device, fixture_config)
    with pytest.raises(ValueError, match="frozen"):
        TrackerSession(d, config=fixture_config)
    empty = StateDiagram()
    empty._frozen = True
    with pytest.raises(ValueError, match="nonempty"):
        TrackerSession(empty, config=fixture_config)


def test_m1_tracker_equals_builder_sequence(panel_device, fixture_config):
    """With M=1 on a noiseless stream the tracker reproduces the builder's
    matched-state sequence."""
    from conftest import render_stream

    frames, truth = render_stream(panel_device, tour_script("panel"), "stationary", 5)
    session = build_from_stream(panel_device, frames, truth, fixture_config, 5)
    diagram = session.finish()
    builder_seq = {}
    for e in session.events:
        if e.kind in ("matched", "new_state"):
            builder_seq[e.frame_index] = e.state_id
    tracker = TrackerSession(diagram.freeze(), config=cfg_with_m(1), seed=5)
    mismatches = 0
    for i, f in enumerate(frames):
        ev = tracker.track_frame(f, frame_index=i)
        want = builder_seq.get(i)
        if want is not None and ev.frame_state != want:
            mismatches += 1
    assert mismatches == 0


def test_guided_candidates_never_exceed_baseline(panel_tracker_setup, fixture_config):
    diagram, frames = panel_tracker_setup
    guided = TrackerSession(diagram, config=fixture_config, seed=2)
    baseline = TrackerSession(diagram, config=fixture_config, seed=2, baseline=True)
    for i, f in enumerate(frames):
        g = guided.track_frame(f, frame_index=i)
        b = baseline.track_frame(f, frame_index=i)
        assert g.candidates_evaluated <= b.candidates_evaluated
        assert b.candidates_evaluated == len(diagram.states)


def test_touchpoint_reported_in_reference_coords(panel_device, fixture_config):
    diagram = device_diagram(panel_device, fixture_config).freeze()
    spec = panel_device.state("R0").element("b_book_room")
    cx, cy = spec.bbox.center()
    img, rec = render_frame(panel_device, "R0", (cx, cy), PROFILES["stationary"], 0, 7)
    session = TrackerSession(diagram, config=fixture_config, seed=1)
    ev = None
    for i in range(4):
        ev = session.track_frame(img, frame_index=i)
    assert ev.state == "R0"
    assert ev.touchpoint is not None
    ref_elem = diagram.states["R0"].element("b_book_room")
    assert ref_elem.bbox.contains(ev.touchpoint.x, ev.touchpoint.y)


def test_framing_flags_offscreen_interface(panel_device, fixture_config):
    from screenflow.simulator import CameraProfile

    shifted = CameraProfile(kind="web", base_quad=(
        (-30.0, 26.0), (222.0, 23.0), (225.0, 215.0), (-33.0, 212.0)))
    diagram = device_diagram(panel_device, fixture_config).freeze()
    img, _ = render_frame(panel_device, "R0", None, shifted, 0, 7)
    session = TrackerSession(diagram, config=fixture_config, seed=1)
    ev = None
    for i in range(4):
        ev = session.track_frame(img, frame_index=i)
    assert ev.state == "R0"
    assert not ev.framing.all_corners_visible
    assert ev.framing.suggested_move == "left"


# -- scaling probe and subsets ---------------------------------------------------


def test_restrict_diagram_prefix(coffee_built):
    _, diagram, _ = coffee_built
    sub = restrict_diagram(diagram, 4)
    assert list(sub.states) == list(diagram.states)[:4]
    for t in sub.transitions:
        assert t.from_state in sub.states and t.to_state in sub.states
    assert sub.frozen


def test_scaling_probe_modes(panel_tracker_setup, fixture_config):
    diagram, frames = panel_tracker_setup
    stream = [(f, "R0" if i < 12 else "R1") for i, f in enumerate(frames)]
    subs = [restrict_diagram(diagram, len(diagram.states))]
    guided = scaling_probe(subs, stream, "guided", fixture_config, seed=1)[0]
    baseline = scaling_probe(subs, stream, "baseline", fixture_config, seed=1)[0]
    assert guided.mean_candidates <= baseline.mean_candidates
    assert guided.error_rate <= baseline.error_rate + 1e-9
    with pytest.raises(ValueError):
        scaling_probe(subs, stream, "warp", fixture_config)
