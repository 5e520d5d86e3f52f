# Compile the coffee machine's diagram into a conversational agent and hold
# the kind of exchange a user would: category, slots, confirmation.
#
# Run from the repo root:  python3 demos/04_dialog_agent.py

from screenflow import EngineConfig, aggregate_traces, generate_agent
from screenflow.agent import new_session
from screenflow.devices import coffee_machine, device_diagram

device = coffee_machine()
diagram = device_diagram(device, EngineConfig.fixture()).freeze()
traces = aggregate_traces(diagram.enumerate_paths())
agent = generate_agent(diagram, traces)

print(f"{len(traces)} interaction traces compiled into "
      f"{len(agent.intents)} intents\n")
for intent in agent.intents:
    entities = ", ".join(f"{e.name}({'/'.join(e.values)})" for e in intent.entities)
    print(f"  {intent.name}: {entities or 'no choices'}")

print("\n--- a conversation ---")
session = new_session(agent, diagram)
print(f"agent: {session.welcome().prompt}")
for utterance in ["tell me a summary",
                  "I want a large coffee 50-50",
                  "house blend",
                  "confirm",
                  "pay card",
                  "yes"]:
    response = session.handle_utterance(utterance)
    print(f"user:  {utterance}")
    print(f"agent: {response.prompt}")

print("\narmed trace:")
for state_id, element_id in session.trace.steps:
    label = diagram.states[state_id].element(element_id).label
    print(f"  at {state_id} ({diagram.states[state_id].description}): press {label}")
