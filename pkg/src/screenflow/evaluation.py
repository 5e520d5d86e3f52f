"""Extraction quality scoring and latency/error scaling reports.

An extracted state is assigned to the ground-truth screen shown at its
registration frame. Screens with at least one assigned state are correct,
surplus assignments are redundant, screens never assigned are missing;
precision, recall and F1 follow from those counts.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional

from .config import EngineConfig
from .diagram import StateDiagram
from .imageio import Image
from .simulator import GroundTruth
from .tracker import ProbeRow, restrict_diagram, scaling_probe


class EvalError(ValueError):
    """Evaluation asked for ground truth that does not exist."""


@dataclass(frozen=True)
class StateEvalReport:
    n_correct: int
    n_missing: int
    n_redundant: int
    precision: float
    recall: float
    f1: float
    assignment: dict[str, str]  # extracted state id -> ground-truth screen id

    def to_json(self) -> dict:
        return {
            "n_correct": self.n_correct,
            "n_missing": self.n_missing,
            "n_redundant": self.n_redundant,
            "precision": round(self.precision, 6),
            "recall": round(self.recall, 6),
            "f1": round(self.f1, 6),
            "assignment": dict(sorted(self.assignment.items())),
        }


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def eval_states(extracted: StateDiagram, truth: GroundTruth) -> StateEvalReport:
    """Score extracted states against the stream's ground truth."""
    if not truth.records:
        raise EvalError("no ground truth available; evaluation needs a simulator stream")
    assignment: dict[str, str] = {}
    per_screen: dict[str, int] = {}
    for sid, state in extracted.states.items():
        reg = state.metadata.get("registered_frame_index")
        if reg is None:
            raise EvalError(f"state {sid!r} lacks a registration frame; "
                            "was this diagram built from a simulator stream?")
        screen = truth.state_of(int(reg))
        if screen is None:
            raise EvalError(f"registration frame {reg} of state {sid!r} has no truth record")
        assignment[sid] = screen
        per_screen[screen] = per_screen.get(screen, 0) + 1

    present = truth.states_present()
    correct = sum(1 for s in present if per_screen.get(s, 0) >= 1)
    redundant = sum(max(0, c - 1) for c in per_screen.values())
    missing = sum(1 for s in present if per_screen.get(s, 0) == 0)
    precision = correct / (correct + redundant) if (correct + redundant) else 0.0
    recall = correct / (correct + missing) if (correct + missing) else 0.0
    return StateEvalReport(
        n_correct=correct, n_missing=missing, n_redundant=redundant,
        precision=precision, recall=recall, f1=f1_score(precision, recall),
        assignment=assignment,
    )


@dataclass(frozen=True)
class ScalingReport:
    rows: tuple[ProbeRow, ...]

    def __post_init__(self):
        by_n: dict[int, set[str]] = {}
        for r in self.rows:
            by_n.setdefault(r.n_states, set()).add(r.mode)
        for n, modes in by_n.items():
            if modes != {"guided", "baseline"}:
                raise ValueError(f"scaling report misses a mode at n={n}: {modes}")

    def row(self, n: int, mode: str) -> ProbeRow:
        for r in self.rows:
            if r.n_states == n and r.mode == mode:
                return r
        raise KeyError(f"no row for n={n} mode={mode}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["n_states", "mode", "mean_ms", "p95_ms", "error_rate", "mean_candidates"])
        for r in sorted(self.rows, key=lambda r: (r.n_states, r.mode)):
            w.writerow([r.n_states, r.mode, f"{r.mean_ms:.3f}", f"{r.p95_ms:.3f}",
                        f"{r.error_rate:.4f}", f"{r.mean_candidates:.2f}"])
        return buf.getvalue()


def run_scaling(
    diagram: StateDiagram,
    stream: list[tuple[Image, Optional[str]]],
    n_list: list[int],
    config: Optional[EngineConfig] = None,
    seed: int = 0,
) -> ScalingReport:
    """Replay the stream over nested diagram prefixes in both search modes."""
    if max(n_list) > len(diagram.states):
        raise EvalError(
            f"n up to {max(n_list)} requested but diagram has {len(diagram.states)} states")
    subsets = [restrict_diagram(diagram, n) for n in sorted(set(n_list))]
    rows: list[ProbeRow] = []
    for mode in ("guided", "baseline"):
        rows.extend(scaling_probe(subsets, stream, mode, config=config, seed=seed))
    return ScalingReport(rows=tuple(rows))


def extracted_state_labels(extracted: StateDiagram, truth: GroundTruth) -> list[Optional[str]]:
    """Per-frame expected extracted-state label, via the eval assignment."""
    report = eval_states(extracted, truth)
    screen_to_extracted: dict[str, str] = {}
    for sid, screen in report.assignment.items():
        screen_to_extracted.setdefault(screen, sid)
    labels: list[Optional[str]] = []
    for rec in truth.records:
        labels.append(screen_to_extracted.get(rec.state_id))
    return labels
