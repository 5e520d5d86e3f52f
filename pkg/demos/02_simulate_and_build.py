# Render a scripted tour of the coffee machine, reverse engineer its state
# diagram from the frames alone, and score the result against ground truth.
#
# Run from the repo root:  python3 demos/02_simulate_and_build.py

from screenflow import EngineConfig, eval_states
from screenflow.builder import BuilderSession, SyntheticAnnotationProvider
from screenflow.devices import coffee_machine, tour_script
from screenflow.providers import SyntheticObjectDetector, SyntheticTextExtractor
from screenflow.simulator import PROFILES, GroundTruth, run_script

device = coffee_machine()
script = tour_script("coffee")
config = EngineConfig.fixture()

print("rendering the tour (three drink orders, every screen visited)...")
frames, truth = [], GroundTruth()
for img, rec in run_script(device, script, PROFILES["stationary"], seed=7):
    frames.append(img)
    truth.append(rec)
print(f"  {len(frames)} frames at {PROFILES['stationary'].fps} fps")

print("\nbuilding the diagram from pixels...")
session = BuilderSession(
    config=config,
    detector=SyntheticObjectDetector(truth),
    ocr=SyntheticTextExtractor(truth),
    annotator=SyntheticAnnotationProvider(device, truth),
    seed=7,
)
for i, frame in enumerate(frames):
    session.process_frame(frame, timestamp=i / config.builder.fps, frame_index=i)
diagram = session.finish()

print(f"  states: {len(diagram.states)}, transitions: {len(diagram.transitions)}")
for t in diagram.transitions:
    buttons = ", ".join(sorted(t.buttons)) or "(unknown trigger)"
    print(f"  {t.from_state} -> {t.to_state}  via {buttons}  x{t.observation_count}")

report = eval_states(diagram, truth)
print(f"\nprecision={report.precision:.2f} recall={report.recall:.2f} "
      f"f1={report.f1:.2f}")
print("extracted -> true screen:", dict(sorted(report.assignment.items())))
