"""Report formulas against hand-computed tables; renaming invariance."""

import numpy as np
import pytest

from screenflow.diagram import State, StateDiagram
from screenflow.evaluation import EvalError, ScalingReport, eval_states, f1_score
from screenflow.imageio import Image
from screenflow.simulator import GroundTruth, GroundTruthRecord
from screenflow.tracker import ProbeRow
from screenflow.vision import extract_features


def gt_record(i, state):
    return GroundTruthRecord(frame_index=i, state_id=state, screen_quad=((0, 0),) * 4,
                             homography=((1, 0, 0), (0, 1, 0), (0, 0, 1)), elements=())


def truth_for(dwells):
    """dwells: list of (state, n_frames)."""
    gt = GroundTruth()
    i = 0
    for state, n in dwells:
        for _ in range(n):
            gt.append(gt_record(i, state))
            i += 1
    return gt


def extracted(assignments):
    """assignments: list of (state_id, registration_frame)."""
    d = StateDiagram()
    img = Image(np.full((20, 20, 3), 50, np.uint8))
    feats = extract_features(img, 5)
    for sid, frame in assignments:
        d.add_state(State(id=sid, reference_image=img, features=feats,
                          metadata={"registered_frame_index": str(frame)}))
    return d


# hand-computed tables for five assignment patterns
CASES = [
    # (dwells, registrations, correct, missing, redundant, precision, recall)
    ([("A", 10), ("B", 10)], [("V0", 2), ("V1", 12)], 2, 0, 0, 1.0, 1.0),
    ([("A", 10), ("B", 10)], [("V0", 2)], 1, 1, 0, 1.0, 0.5),
    ([("A", 10), ("B", 10)], [("V0", 2), ("V1", 4), ("V2", 12)], 2, 0, 1, 2 / 3, 1.0),
    ([("A", 10), ("B", 10), ("C", 5)], [("V0", 2), ("V1", 3), ("V2", 12)],
     2, 1, 1, 2 / 3, 2 / 3),
    ([("A", 5)], [], 0, 1, 0, 0.0, 0.0),
]


@pytest.mark.parametrize("dwells,regs,c,m,r,p,rec", CASES)
def test_eval_states_formulas(dwells, regs, c, m, r, p, rec):
    report = eval_states(extracted(regs), truth_for(dwells))
    assert report.n_correct == c
    assert report.n_missing == m
    assert report.n_redundant == r
    assert report.precision == pytest.approx(p)
    assert report.recall == pytest.approx(rec)
    assert report.f1 == pytest.approx(f1_score(p, rec))


def test_f1_zero_when_both_zero():
    assert f1_score(0.0, 0.0) == 0.0


def test_eval_invariant_to_renaming():
    dwells = [("A", 10), ("B", 10)]
    a = eval_states(extracted([("V0", 2), ("V1", 12)]), truth_for(dwells))
    b = eval_states(extracted([("X", 2), ("Y", 12)]), truth_for(dwells))
    assert (a.precision, a.recall, a.f1) == (b.precision, b.recall, b.f1)


def test_eval_requires_truth():
    with pytest.raises(EvalError):
        eval_states(extracted([("V0", 0)]), GroundTruth())


def test_eval_requires_registration_frames():
    d = extracted([])
    img = Image(np.full((20, 20, 3), 50, np.uint8))
    d.add_state(State(id="V0", reference_image=img,
                      features=extract_features(img, 5)))
    with pytest.raises(EvalError, match="registration frame"):
        eval_states(d, truth_for([("A", 3)]))


def test_paper_shape_example():
    # 13 correct + 2 duplicates of one screen over 14 screens
    dwells = [(chr(ord("A") + i), 10) for i in range(14)]
    regs = [(f"V{i}", i * 10 + 2) for i in range(13)]
    regs += [("V13", 3), ("V14", 5)]  # two extra states land on screen A
    report = eval_states(extracted(regs), truth_for(dwells))
    assert report.precision == pytest.approx(13 / 15)
    assert report.recall == pytest.approx(13 / 14)


def test_scaling_report_requires_both_modes():
    rows = (ProbeRow(4, "guided", 1.0, 1.5, 0.0, 1.0),)
    with pytest.raises(ValueError):
        ScalingReport(rows=rows)
    ok = ScalingReport(rows=(
        ProbeRow(4, "guided", 1.0, 1.5, 0.0, 1.0),
        ProbeRow(4, "baseline", 2.0, 2.5, 0.0, 4.0),
    ))
    assert ok.row(4, "guided").mean_ms == 1.0
    csv_text = ok.to_csv()
    assert csv_text.splitlines()[0].startswith("n_states,mode")
    assert len(csv_text.splitlines()) == 3
