"""Shared fixtures: rendered streams and built diagrams are expensive, so the
suite renders each one once per session."""

from __future__ import annotations

import pytest

from screenflow.builder import BuilderSession, SyntheticAnnotationProvider
from screenflow.config import EngineConfig
from screenflow.devices import (
    coffee_machine,
    device_diagram,
    kiosk,
    reservation_panel,
    tour_script,
)
from screenflow.providers import SyntheticObjectDetector, SyntheticTextExtractor
from screenflow.simulator import PROFILES, GroundTruth, run_script


@pytest.fixture(scope="session")
def fixture_config() -> EngineConfig:
    return EngineConfig.fixture()


@pytest.fixture(scope="session")
def coffee_device():
    return coffee_machine()


@pytest.fixture(scope="session")
def kiosk_device():
    return kiosk()


@pytest.fixture(scope="session")
def panel_device():
    return reservation_panel()


def render_stream(device, script, profile_name: str, seed: int):
    frames, truth = [], GroundTruth()
    for img, rec in run_script(device, script, PROFILES[profile_name], seed):
        frames.append(img)
        truth.append(rec)
    return frames, truth


def build_from_stream(device, frames, truth, config, seed, *, use_ocr=True,
                      use_detector=True):
    session = BuilderSession(
        config=config,
        detector=SyntheticObjectDetector(truth) if use_detector else None,
        ocr=SyntheticTextExtractor(truth) if use_ocr else None,
        annotator=SyntheticAnnotationProvider(device, truth),
        seed=seed,
    )
    for i, frame in enumerate(frames):
        session.process_frame(frame, timestamp=i / config.builder.fps, frame_index=i)
    return session


@pytest.fixture(scope="session")
def coffee_stream(coffee_device):
    return render_stream(coffee_device, tour_script("coffee"), "stationary", 7)


@pytest.fixture(scope="session")
def coffee_built(coffee_device, coffee_stream, fixture_config):
    frames, truth = coffee_stream
    session = build_from_stream(coffee_device, frames, truth, fixture_config, seed=7)
    diagram = session.finish()
    return session, diagram, truth


@pytest.fixture(scope="session")
def coffee_ref_diagram(coffee_device, fixture_config):
    return device_diagram(coffee_device, fixture_config).freeze()


@pytest.fixture(scope="session")
def panel_ref_diagram(panel_device, fixture_config):
    return device_diagram(panel_device, fixture_config).freeze()


@pytest.fixture(scope="session")
def kiosk_ref_diagram(kiosk_device, fixture_config):
    return device_diagram(kiosk_device, fixture_config).freeze()
