"""Compile a state diagram into a slot-filling conversational agent.

Traces group into intents by their first button (the device's top-level
categories); states offering more than one onward choice inside a group
become required entities whose values are the sibling button labels. The
matcher is deterministic keyword/whole-phrase lookup over those labels, which
is all a small fixed vocabulary needs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .diagram import InteractionTrace, StateDiagram


def _norm(text: str) -> str:
    return " ".join(re.sub(r"[^a-z0-9\-]+", " ", text.lower()).split())


_AFFIRMATIVE = {"yes", "yeah", "yep", "confirm", "sure", "correct", "ok", "okay"}
_SELECT_VERBS = ("select ", "choose ", "pick ")


@dataclass(frozen=True)
class Entity:
    name: str
    state_id: str
    values: tuple[str, ...]  # sibling button labels, lowercased
    prompt: str

    def __post_init__(self):
        if len(self.values) < 2:
            raise ValueError("entities need at least two values; single choices auto-fill")


@dataclass(frozen=True)
class Intent:
    name: str
    category: str  # first-step button label, lowercased
    entities: tuple[Entity, ...]
    confirmation_prompt: str
    training_sentences: tuple[str, ...]
    traces: tuple[InteractionTrace, ...]

    def keywords(self) -> set[str]:
        return set(self.category.split())


@dataclass(frozen=True)
class AgentSpec:
    welcome_prompt: str
    intents: tuple[Intent, ...]
    summary: str

    def to_text(self) -> str:
        """Inspectable agent document (also consumed by the console's hints)."""
        lines = [f"welcome: {self.welcome_prompt}", ""]
        for it in self.intents:
            lines.append(f"intent {it.name}")
            lines.append(f"  category: {it.category}")
            for e in it.entities:
                lines.append(f"  entity {e.name}: {'/'.join(e.values)}")
            lines.append(f"  confirmation: {it.confirmation_prompt}")
            for s in it.training_sentences:
                lines.append(f"  training: {s}")
            lines.append(f"  traces: {len(it.traces)}")
            lines.append("")
        lines.append(f"summary: {self.summary}")
        return "\n".join(lines)


def _entity_name(description: str, state_id: str) -> str:
    """Trailing clause after the last comma, minus the selection verb."""
    if "," in description:
        clause = description.rsplit(",", 1)[1].strip().lower()
        for verb in _SELECT_VERBS:
            if clause.startswith(verb):
                clause = clause[len(verb):]
        clause = clause.strip()
        if clause:
            return re.sub(r"[^a-z0-9]+", "_", clause).strip("_")
    return f"choice_{state_id}"


def _label(diagram: StateDiagram, state_id: str, element_id: str) -> str:
    return diagram.states[state_id].element(element_id).label


def generate_agent(diagram: StateDiagram, traces: list[InteractionTrace]) -> AgentSpec:
    """Deterministic agent compilation from ranked traces."""
    if not diagram.terminals:
        raise ValueError("diagram has no terminal states; nothing to converse about")
    if not traces:
        traces = diagram.enumerate_paths()
    groups: dict[str, list[InteractionTrace]] = {}
    for tr in traces:
        first_state, first_elem = tr.steps[0]
        category = _label(diagram, first_state, first_elem).lower()
        groups.setdefault(category, []).append(tr)

    intents = []
    for category in sorted(groups):
        grp = groups[category]
        # Ordered union of branching states across the group's traces.
        state_order: list[str] = []
        values_at: dict[str, list[str]] = {}
        for tr in grp:
            for state_id, element_id in tr.steps:
                if state_id not in state_order:
                    state_order.append(state_id)
                    values_at[state_id] = []
                lab = _label(diagram, state_id, element_id).lower()
                if lab not in values_at[state_id]:
                    values_at[state_id].append(lab)
        entities = []
        for sid in state_order:
            vals = values_at[sid]
            if len(vals) < 2:
                continue  # single-choice steps auto-fill
            name = _entity_name(diagram.states[sid].description, sid)
            entities.append(Entity(
                name=name, state_id=sid, values=tuple(vals),
                prompt=f"which {name}? options: {', '.join(vals)}",
            ))
        training = [f"to make {category}", f"i want {category}"]
        for e in entities:
            training.extend(f"Select {v}" for v in e.values)
        intents.append(Intent(
            name=f"make_{re.sub(r'[^a-z0-9]+', '_', category).strip('_')}",
            category=category,
            entities=tuple(entities),
            confirmation_prompt="say yes to begin guidance",
            training_sentences=tuple(training),
            traces=tuple(grp),
        ))
    welcome = diagram.states[diagram.start].description or diagram.start
    return AgentSpec(
        welcome_prompt=welcome,
        intents=tuple(intents),
        summary=generate_summary(diagram, traces),
    )


def generate_summary(diagram: StateDiagram, traces: list[InteractionTrace],
                     top_k: int = 3) -> str:
    """Template summary of the most frequent traces: "I want ..." sentences."""
    if not traces:
        start_desc = diagram.states[diagram.start].description or diagram.start
        return f"this device starts at: {start_desc}."
    parts = []
    for tr in traces[:top_k]:
        labels = [_label(diagram, s, e).lower() for s, e in tr.steps]
        terminal_desc = diagram.states[tr.terminal].description or tr.terminal
        parts.append(f"I want {', '.join(labels)} - {terminal_desc}.")
    return " ".join(parts)


# --------------------------------------------------------------------------
# dialog sessions


@dataclass(frozen=True)
class DialogResponse:
    prompt: str
    phase: str
    asked_entity: Optional[str] = None
    done: bool = False
    trace: Optional[InteractionTrace] = None


class DialogSession:
    """One conversation: intent selection, slot filling, confirmation."""

    def __init__(self, agent: AgentSpec):
        self.agent = agent
        self.phase = "welcome"
        self.intent: Optional[Intent] = None
        self.filled: dict[str, str] = {}  # entity name -> value
        self.trace: Optional[InteractionTrace] = None

    def welcome(self) -> DialogResponse:
        cats = ", ".join(it.category for it in self.agent.intents)
        return DialogResponse(
            prompt=f"{self.agent.welcome_prompt}. options: {cats}",
            phase=self.phase)

    # -- helpers -------------------------------------------------------------

    def _candidates(self) -> list[InteractionTrace]:
        assert self.intent is not None
        by_state = {e.name: e.state_id for e in self.intent.entities}
        out = []
        for tr in self.intent.traces:
            ok = True
            for name, value in self.filled.items():
                sid = by_state[name]
                step_label = None
                for s, e in tr.steps:
                    if s == sid:
                        step_label = _label(self._diagram, s, e).lower()
                        break
                if step_label != value:
                    ok = False
                    break
            if ok:
                out.append(tr)
        return out

    def bind_diagram(self, diagram: StateDiagram) -> "DialogSession":
        self._diagram = diagram
        return self

    def _next_entity(self) -> Optional[Entity]:
        cands = self._candidates()
        for e in self.intent.entities:
            if e.name in self.filled:
                continue
            labels = set()
            for tr in cands:
                for s, el in tr.steps:
                    if s == e.state_id:
                        labels.add(_label(self._diagram, s, el).lower())
            if len(labels) >= 2:
                return e
            if len(labels) == 1:
                self.filled[e.name] = next(iter(labels))  # auto-fill forced choice
        return None

    def _extract_slots(self, text: str) -> int:
        """Fill every unfilled entity whose value appears as a whole phrase."""
        filled = 0
        padded = f" {text} "
        for e in self.intent.entities:
            if e.name in self.filled:
                continue
            for v in e.values:
                if f" {v} " in padded:
                    self.filled[e.name] = v
                    filled += 1
                    break
        return filled

    def _ask_or_confirm(self) -> DialogResponse:
        nxt = self._next_entity()
        if nxt is not None:
            self.phase = "slot_filling"
            return DialogResponse(prompt=nxt.prompt, phase=self.phase,
                                  asked_entity=nxt.name)
        cands = self._candidates()
        self.phase = "confirm"
        choice = ", ".join(self.filled[e.name] for e in self.intent.entities
                           if e.name in self.filled)
        head = f"you chose {self.intent.category}"
        if choice:
            head += f": {choice}"
        return DialogResponse(prompt=f"{head}. {self.intent.confirmation_prompt}",
                              phase=self.phase)

    # -- the single entry point ------------------------------------------------

    def handle_utterance(self, text: str) -> DialogResponse:
        if self.phase == "done":
            raise RuntimeError("session is done; start a new one")
        norm = _norm(text)
        words = set(norm.split())

        if "summary" in words:
            return DialogResponse(prompt=self.agent.summary, phase=self.phase)

        if self.phase in ("welcome", "intent_select"):
            best, best_score = None, 0
            for it in self.agent.intents:
                score = len(words & it.keywords())
                if score > best_score:
                    best, best_score = it, score
            if best is None:
                self.phase = "intent_select"
                return self.welcome()
            self.intent = best
            self._extract_slots(norm)
            return self._ask_or_confirm()

        if self.phase == "slot_filling":
            if self._extract_slots(norm) == 0:
                nxt = self._next_entity()
                if nxt is not None:
                    return DialogResponse(prompt=nxt.prompt, phase=self.phase,
                                          asked_entity=nxt.name)
            return self._ask_or_confirm()

        if self.phase == "confirm":
            if words & _AFFIRMATIVE:
                cands = self._candidates()
                self.trace = cands[0]
                self.phase = "done"
                return DialogResponse(
                    prompt=f"starting guidance: {len(self.trace.steps)} steps",
                    phase=self.phase, done=True, trace=self.trace)
            return self._ask_or_confirm()

        raise RuntimeError(f"unknown phase {self.phase!r}")


def new_session(agent: AgentSpec, diagram: StateDiagram) -> DialogSession:
    return DialogSession(agent).bind_diagram(diagram)


def transcript_for_trace(agent: AgentSpec, diagram: StateDiagram,
                         trace: InteractionTrace) -> list[str]:
    """Utterances that steer a fresh session to exactly this trace."""
    first_state, first_elem = trace.steps[0]
    category = _label(diagram, first_state, first_elem).lower()
    labels_by_state = {s: _label(diagram, s, e).lower() for s, e in trace.steps}
    session = new_session(agent, diagram)
    utterances = [f"to make {category}"]
    resp = session.handle_utterance(utterances[0])
    guard = 0
    while not resp.done:
        guard += 1
        if guard > 40:
            raise RuntimeError("transcript generation did not converge")
        if resp.phase == "confirm":
            utterances.append("yes")
        elif resp.asked_entity is not None:
            entity = next(e for e in session.intent.entities
                          if e.name == resp.asked_entity)
            utterances.append(labels_by_state[entity.state_id])
        else:
            raise RuntimeError(f"unexpected dialog response {resp}")
        resp = session.handle_utterance(utterances[-1])
    return utterances


def replay_transcript(agent: AgentSpec, diagram: StateDiagram,
                      utterances: list[str]) -> tuple[list[DialogResponse], Optional[InteractionTrace]]:
    session = new_session(agent, diagram)
    responses = [session.handle_utterance(u) for u in utterances]
    return responses, session.trace
