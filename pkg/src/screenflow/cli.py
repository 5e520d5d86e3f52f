"""Command-line entry point tying the pipeline together.

Subcommands: simulate, build, track, eval, scaling, agent, guide, serve.
Exit codes: 0 success, 1 usage error, 2 data error, 3 acceptance-check failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from .agent import generate_agent, replay_transcript
from .builder import BuilderSession, SyntheticAnnotationProvider, write_event_log
from .config import EngineConfig
from .devices import DEVICES, device_diagram, get_device, tour_script
from .diagram import DiagramError, aggregate_traces, deserialize, serialize
from .evaluation import EvalError, eval_states, extracted_state_labels, run_scaling
from .imageio import load_image
from .pilot import run_closed_loop
from .providers import (
    FixtureObjectDetector,
    FixtureTextExtractor,
    RemoteObjectDetector,
    RemoteTextExtractor,
    SyntheticObjectDetector,
    SyntheticTextExtractor,
)
from .simulator import GroundTruth, PROFILES, load_device, load_script, write_stream
from .tracker import TrackerSession

USAGE_EXIT, DATA_EXIT, CHECK_EXIT = 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: A003 - argparse API
        raise _UsageError(message)


class DataError(RuntimeError):
    pass


def _load_config(path: Optional[str]) -> EngineConfig:
    if path is None:
        return EngineConfig.fixture()
    try:
        return EngineConfig.load(path)
    except Exception as exc:
        raise DataError(f"cannot load config {path}: {exc}") from exc


def _device_arg(value: str):
    if value in DEVICES:
        return get_device(value)
    p = Path(value)
    if not p.exists():
        raise DataError(f"unknown device {value!r} and no such file")
    try:
        return load_device(p)
    except Exception as exc:
        raise DataError(f"cannot load device spec {value}: {exc}") from exc


def _script_arg(value: Optional[str], device_name: str):
    if value is None or value == "tour":
        try:
            return tour_script(device_name)
        except KeyError as exc:
            raise DataError(str(exc)) from exc
    p = Path(value)
    if not p.exists():
        raise DataError(f"no such script file {value!r}")
    try:
        return load_script(p)
    except Exception as exc:
        raise DataError(f"cannot load script {value}: {exc}") from exc


def _load_stream(frames_dir: str):
    d = Path(frames_dir)
    manifest_path = d / "stream.json"
    if not manifest_path.exists():
        raise DataError(f"{frames_dir} has no stream.json manifest")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    frames = []
    for i in range(int(manifest["frame_count"])):
        p = d / f"frame_{i:06d}.png"
        if not p.exists():
            raise DataError(f"missing frame file {p}")
        frames.append(load_image(p))
    truth = None
    gt_path = d / "ground_truth.jsonl"
    if gt_path.exists():
        truth = GroundTruth.load(gt_path)
    return manifest, frames, truth


def _providers_for(config: EngineConfig, truth: Optional[GroundTruth],
                   features_only: bool):
    mode = config.providers.mode
    if features_only:
        detector = SyntheticObjectDetector(truth) if truth is not None else None
        return detector, None
    if mode == "none":
        return None, None
    if mode == "fixture":
        path = config.providers.fixture_path
        if not path:
            raise DataError("providers.mode=fixture needs providers.fixture_path")
        return (FixtureObjectDetector(path),
                FixtureTextExtractor(path, noise_rate=config.providers.ocr_noise_rate,
                                     seed=config.seed))
    if mode == "remote":
        return (RemoteObjectDetector(config.providers.detect_url),
                RemoteTextExtractor(config.providers.ocr_url))
    if truth is None:
        return None, None
    return SyntheticObjectDetector(truth), SyntheticTextExtractor(truth)


# -------------------------------------------------------------------------
# subcommands


def _cmd_simulate(args) -> int:
    device = _device_arg(args.device)
    script = _script_arg(args.script, device.name)
    if args.profile not in PROFILES:
        raise DataError(f"unknown profile {args.profile!r}; choices: {sorted(PROFILES)}")
    out, count = write_stream(device, script, args.profile, args.seed, args.out)
    print(f"wrote {count} frames to {out}")
    return 0


def _cmd_build(args) -> int:
    config = _load_config(args.config)
    manifest, frames, truth = _load_stream(args.frames)
    detector, ocr = _providers_for(config, truth, args.features_only)
    annotator = None
    if truth is not None and not args.no_annotations:
        device = _device_arg(manifest.get("device", "coffee"))
        annotator = SyntheticAnnotationProvider(device, truth)
    fps = manifest.get("fps", config.builder.fps)
    from dataclasses import replace
    config = replace(config, builder=replace(config.builder, fps=float(fps)))
    session = BuilderSession(config=config, detector=detector, ocr=ocr,
                             annotator=annotator, seed=args.seed)
    for i, frame in enumerate(frames):
        session.process_frame(frame, timestamp=i / float(fps), frame_index=i)
    diagram = session.finish()
    out = Path(args.out)
    serialize(diagram, out)
    write_event_log(session.events, out / "events.jsonl")
    print(f"built {len(diagram.states)} states, {len(diagram.transitions)} transitions -> {out}")
    return 0


def _cmd_track(args) -> int:
    config = _load_config(args.config)
    diagram = deserialize(args.diagram).freeze()
    _, frames, _ = _load_stream(args.frames)
    session = TrackerSession(diagram, config=config, seed=args.seed,
                             baseline=args.baseline)
    events = [session.track_frame(f, frame_index=i) for i, f in enumerate(frames)]
    with open(args.out, "w", encoding="utf-8") as fh:
        for e in events:
            fh.write(json.dumps(e.to_json(), sort_keys=True) + "\n")
    print(f"tracked {len(events)} frames -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    diagram = deserialize(args.diagram)
    gt_path = Path(args.truth)
    if gt_path.is_dir():
        gt_path = gt_path / "ground_truth.jsonl"
    if not gt_path.exists():
        raise DataError(f"no ground truth at {gt_path}")
    truth = GroundTruth.load(gt_path)
    report = eval_states(diagram, truth)
    print(json.dumps(report.to_json(), indent=1, sort_keys=True))
    if args.min_f1 is not None and report.f1 < args.min_f1:
        print(f"FAIL: f1 {report.f1:.3f} < {args.min_f1}", file=sys.stderr)
        return CHECK_EXIT
    if args.min_precision is not None and report.precision < args.min_precision:
        print(f"FAIL: precision {report.precision:.3f} < {args.min_precision}",
              file=sys.stderr)
        return CHECK_EXIT
    return 0


def _parse_n_list(spec: str) -> list[int]:
    out: list[int] = []
    for chunk in spec.split(","):
        chunk = chunk.strip()
        if ".." in chunk:
            lo, hi = chunk.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif chunk:
            out.append(int(chunk))
    if not out:
        raise DataError(f"empty n list {spec!r}")
    return out


def _cmd_scaling(args) -> int:
    config = _load_config(args.config)
    diagram = deserialize(args.diagram)
    _, frames, truth = _load_stream(args.frames)
    if truth is None:
        raise DataError("scaling needs a stream with ground truth")
    labels = extracted_state_labels(diagram, truth)
    stream = list(zip(frames, labels))
    if args.stride > 1:
        stream = stream[:: args.stride]
    report = run_scaling(diagram, stream, _parse_n_list(args.n), config=config,
                         seed=args.seed)
    csv_text = report.to_csv()
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
        print(f"wrote scaling table -> {args.out}")
    else:
        print(csv_text, end="")
    return 0


def _cmd_agent(args) -> int:
    diagram = deserialize(args.diagram).freeze()
    traces = aggregate_traces(diagram.enumerate_paths(args.max_len))
    if not traces:
        raise DataError("diagram yields no interaction traces")
    agent = generate_agent(diagram, traces)
    if args.transcript:
        # Transcript files may alternate "user:"/"agent:" lines; agent lines
        # are commentary and skipped, everything else is replayed as the user.
        lines = []
        for ln in Path(args.transcript).read_text(encoding="utf-8").splitlines():
            ln = ln.strip()
            if not ln or ln.lower().startswith("agent:"):
                continue
            if ln.lower().startswith("user:"):
                ln = ln[5:].strip()
            lines.append(ln)
        responses, trace = replay_transcript(agent, diagram, lines)
        for user, resp in zip(lines, responses):
            print(f"user: {user}")
            print(f"agent: {resp.prompt}")
        if trace is None:
            print("no trace armed", file=sys.stderr)
            return CHECK_EXIT
        print("trace:", json.dumps([list(s) for s in trace.steps]))
        return 0
    text = agent.to_text()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote agent spec -> {args.out}")
    else:
        print(text)
    return 0


def _cmd_guide(args) -> int:
    config = _load_config(args.config)
    steps = [tuple(s) for s in json.loads(Path(args.trace).read_text(encoding="utf-8"))]
    if args.closed_loop:
        # The pointer controller drives the simulator, so state ids must be
        # the device's own; the diagram is derived from the device spec.
        device = _device_arg(args.device)
        diagram = device_diagram(device, config).freeze()
        result = run_closed_loop(device, diagram, steps, config=config, seed=args.seed)
        for m in result.messages:
            print(json.dumps(m.to_json(), sort_keys=True))
        if not result.completed:
            print("plan did not complete", file=sys.stderr)
            return CHECK_EXIT
        return 0
    if args.diagram is None or args.frames is None:
        raise DataError("guide needs --diagram and --frames when not in --closed-loop mode")
    from .guidance import DEFAULT_TEMPLATES, guidance_step, plan_trace, render_text

    templates = None
    if args.locale:
        templates = dict(DEFAULT_TEMPLATES)
        templates.update(json.loads(Path(args.locale).read_text(encoding="utf-8")))
    diagram = deserialize(args.diagram).freeze()
    _, frames, _ = _load_stream(args.frames)
    plan = plan_trace(diagram, steps)
    tracker = TrackerSession(diagram, config=config, seed=args.seed)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for i, frame in enumerate(frames):
            event = tracker.track_frame(frame, frame_index=i)
            message = guidance_step(plan, event, config.guidance)
            doc = message.to_json()
            if templates is not None:
                doc["text"] = render_text(message, templates)
            out.write(json.dumps(doc, sort_keys=True) + "\n")
    finally:
        if args.out:
            out.close()
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = _load_config(args.config)
    app = create_app(config=config, seed=args.seed)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    p = _Parser(prog="screenflow", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", default=None, help="engine config json")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("simulate", help="render a scripted usage stream")
    common(sp)
    sp.add_argument("--device", required=True)
    sp.add_argument("--script", default="tour")
    sp.add_argument("--profile", default="stationary")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("build", help="frame stream -> state diagram")
    common(sp)
    sp.add_argument("--frames", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--features-only", action="store_true",
                    help="disable the text-extraction stage")
    sp.add_argument("--no-annotations", action="store_true")
    sp.set_defaults(func=_cmd_build)

    sp = sub.add_parser("track", help="replay a stream against a diagram")
    common(sp)
    sp.add_argument("--diagram", required=True)
    sp.add_argument("--frames", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--baseline", action="store_true")
    sp.set_defaults(func=_cmd_track)

    sp = sub.add_parser("eval", help="score extracted states against ground truth")
    common(sp)
    sp.add_argument("--diagram", required=True)
    sp.add_argument("--truth", required=True)
    sp.add_argument("--min-f1", type=float, default=None)
    sp.add_argument("--min-precision", type=float, default=None)
    sp.set_defaults(func=_cmd_eval)

    sp = sub.add_parser("scaling", help="latency/error curves vs diagram size")
    common(sp)
    sp.add_argument("--diagram", required=True)
    sp.add_argument("--frames", required=True)
    sp.add_argument("--n", required=True, help="e.g. 1..14 or 4,8,14")
    sp.add_argument("--stride", type=int, default=1)
    sp.add_argument("--format", choices=["csv"], default="csv")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_scaling)

    sp = sub.add_parser("agent", help="compile the conversational agent")
    common(sp)
    sp.add_argument("--diagram", required=True)
    sp.add_argument("--max-len", type=int, default=12)
    sp.add_argument("--transcript", default=None,
                    help="replay a dialog file (one user utterance per line)")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_agent)

    sp = sub.add_parser("guide", help="emit guidance messages for a trace")
    common(sp)
    sp.add_argument("--diagram", default=None)
    sp.add_argument("--trace", required=True, help="json file: [[state, element], ...]")
    sp.add_argument("--frames", default=None)
    sp.add_argument("--closed-loop", action="store_true")
    sp.add_argument("--device", default="coffee")
    sp.add_argument("--locale", default=None, help="template table json")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_guide)

    sp = sub.add_parser("serve", help="start the interactive session service")
    common(sp)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8787)
    sp.set_defaults(func=_cmd_serve)

    return p


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return USAGE_EXIT
    try:
        return args.func(args)
    except (DataError, DiagramError, EvalError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
