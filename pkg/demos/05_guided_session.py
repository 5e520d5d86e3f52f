# Full closed loop: a simulated pointer obeys each guidance message until the
# whole plan (five presses) completes, exactly as a user following audio cues.
#
# Run from the repo root:  python3 demos/05_guided_session.py

from screenflow import EngineConfig
from screenflow.devices import coffee_machine, device_diagram
from screenflow.pilot import run_closed_loop

device = coffee_machine()
config = EngineConfig.fixture()
diagram = device_diagram(device, config).freeze()

steps = [
    ("V0", "b_hot_beverages"),
    ("V7", "b_hot_tea"),
    ("V8", "b_regular"),
    ("V9", "b_large"),
    ("V10", "b_confirm"),
]

result = run_closed_loop(device, diagram, steps, config, seed=3)
for i, message in enumerate(result.messages):
    print(f"{i:3d}  {message.kind:15s} {message.text}")

print(f"\ncompleted={result.completed} after {len(result.messages)} messages; "
      f"device ended at {result.final_state} "
      f"({device.state(result.final_state).description})")
