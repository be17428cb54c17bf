"""Command-line entry point: corpus generation, evaluation, sweeps, serving.

All experiment knobs are flags; the only environment variable honored is
GRASPWISE_LOG, which sets logging verbosity and nothing else, so a given
argv always produces byte-identical reports.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import dataset, session
from .config import ConfigError, load_config
from .evaluation import (
    DEFAULT_KS,
    EvalReport,
    UndefinedMetricError,
    evaluate_baseline,
    evaluate_corpus,
    sweep_intervention,
)
from .noise import NoiseConfig

REPORT_SCHEMA = "graspwise-report/1"
log = logging.getLogger("graspwise")


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("k list must contain positive integers")
    return values


def _parse_float_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}") from None
    if not values or any(not 0.0 <= v <= 1.0 for v in values):
        raise argparse.ArgumentTypeError("rates must lie in [0, 1]")
    return values


def _rate(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"rate must lie in [0, 1], got {v}")
    return v


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graspwise")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-scenes", help="generate a synthetic corpus")
    gen.add_argument("--n", type=int, required=True, help="number of scenes")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="corpus file to write")
    gen.add_argument("--min-obj", type=int, default=2)
    gen.add_argument("--max-obj", type=int, default=6)
    gen.add_argument("--require-stack", action="store_true", help="force at least one stacked pair per scene")

    ev = sub.add_parser("run-eval", help="evaluate one system on a corpus")
    ev.add_argument("--corpus", required=True)
    ev.add_argument("--baseline", choices=("end2end", "scenegraph", "scenetext"), default="scenetext")
    ev.add_argument("--eps", type=_rate, default=0.0, help="description corruption rate")
    ev.add_argument("--rho", type=_rate, default=0.0, help="human intervention rate")
    ev.add_argument("--ground-error", type=_rate, default=0.0)
    ev.add_argument("--surface-flip", type=_rate, default=0.0)
    ev.add_argument("--angle-noise", type=_rate, default=0.0)
    ev.add_argument("--flip-rate", type=_rate, default=0.1, help="scenegraph edge corruption rate")
    ev.add_argument("--k", type=_parse_int_list, default=tuple(DEFAULT_KS))
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--report", help="machine-readable report file to write")

    sweep = sub.add_parser("sweep-intervention", help="evaluate across intervention rates")
    sweep.add_argument("--corpus", required=True)
    sweep.add_argument("--eps", type=_rate, default=0.4)
    sweep.add_argument("--rho-grid", type=_parse_float_list, default=(0.0, 0.25, 0.5, 0.75, 1.0))
    sweep.add_argument("--k", type=_parse_int_list, default=tuple(DEFAULT_KS))
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--report", help="machine-readable report file to write")

    val = sub.add_parser("validate", help="check every record in a corpus")
    val.add_argument("--corpus", required=True)

    srv = sub.add_parser("serve", help="run the session HTTP service")
    srv.add_argument("--port", type=int, default=8000)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--corpus", help="corpus whose scenes are addressable by id")
    srv.add_argument("--log-dir", default="session-logs")
    srv.add_argument("--config", help="INI config file for planner and noise defaults")

    rep = sub.add_parser("replay", help="rebuild a session from its event log")
    rep.add_argument("--log", required=True)
    return parser


def _metrics_dict(report: EvalReport) -> dict:
    return {
        "config": report.config,
        "recall": {str(k): v for k, v in report.recall.items()},
        "precision": {str(k): v for k, v in report.precision.items()},
        "f1": report.f1,
        "accuracy": report.accuracy,
        "n_scenes": report.n_scenes,
        "intervention_rate": report.intervention_rate,
        "residual_error_rate": report.residual_error_rate,
    }


def _write_report(path: str, command: str, reports: Sequence[EvalReport]) -> None:
    doc = {
        "schema": REPORT_SCHEMA,
        "command": command,
        "rows": [_metrics_dict(r) for r in reports],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _format_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(row) for row in rows)
    return "\n".join(lines)


def _eval_table(reports: Sequence[EvalReport], ks: Sequence[int]) -> str:
    headers = ["system"]
    headers += [f"R@{k}" for k in ks] + [f"P@{k}" for k in ks] + ["Acc", "F1"]
    rows = []
    for r in reports:
        system = r.config.get("system", "?")
        cells = [system]
        cells += [f"{r.recall[k]:.4f}" for k in ks]
        cells += [f"{r.precision[k]:.4f}" for k in ks]
        cells.append(f"{r.accuracy:.4f}" if system == "scenetext" else "-")
        cells.append(f"{r.f1:.4f}")
        rows.append(cells)
    return _format_table(headers, rows)


def _sweep_table(reports: Sequence[EvalReport]) -> str:
    headers = ["rho", "Inter", "Resid", "R@1", "P@1", "F1", "Acc"]
    rows = []
    for r in reports:
        rows.append(
            [
                f"{r.config.get('rho', 0.0):.2f}",
                f"{r.intervention_rate:.4f}",
                f"{r.residual_error_rate:.4f}",
                f"{r.recall[1]:.4f}",
                f"{r.precision[1]:.4f}",
                f"{r.f1:.4f}",
                f"{r.accuracy:.4f}",
            ]
        )
    return _format_table(headers, rows)


def _load_scenes(path: str):
    records = dataset.load(path)
    return [rec.scene for rec in records]


def _cmd_gen_scenes(args) -> int:
    if args.n < 0:
        print("--n must be non-negative", file=sys.stderr)
        return 2
    corpus = dataset.gen_synthetic(
        args.n,
        args.seed,
        min_obj=args.min_obj,
        max_obj=args.max_obj,
        require_stack=args.require_stack,
    )
    dataset.save(corpus, args.out)
    print(f"wrote {len(corpus)} scenes to {args.out}")
    return 0


def _cmd_run_eval(args) -> int:
    scenes = _load_scenes(args.corpus)
    ks = tuple(args.k)
    if args.baseline == "scenetext":
        noise = NoiseConfig(
            describe_error_rate=args.eps,
            ground_error_rate=args.ground_error,
            surface_flip_rate=args.surface_flip,
            angle_noise_rate=args.angle_noise,
            seed=args.seed,
        )
        report = evaluate_corpus(scenes, noise, rho=args.rho, ks=ks)
    else:
        report = evaluate_baseline(scenes, args.baseline, args.seed, flip_rate=args.flip_rate, ks=ks)
    print(_eval_table([report], ks))
    if args.report:
        _write_report(args.report, "run-eval", [report])
        print(f"report written to {args.report}")
    return 0


def _cmd_sweep(args) -> int:
    scenes = _load_scenes(args.corpus)
    ks = tuple(args.k)
    reports = sweep_intervention(scenes, args.eps, list(args.rho_grid), args.seed, ks=ks)
    print(_sweep_table(reports))
    if args.report:
        _write_report(args.report, "sweep-intervention", reports)
        print(f"report written to {args.report}")
    return 0


def _cmd_validate(args) -> int:
    try:
        records = dataset.load(args.corpus)
    except dataset.CorpusValidationError as exc:
        for scene_id, message in exc.issues:
            print(f"{scene_id}: {message}")
        print(f"{len(exc.issues)} validation issue(s) found", file=sys.stderr)
        return 1
    print(f"{len(records)} records valid")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    noise = NoiseConfig()
    if args.config:
        _, noise = load_config(args.config)
    scenes = {}
    if args.corpus:
        scenes = {rec.scene.id: rec.scene for rec in dataset.load(args.corpus)}
    app = create_app(scenes=scenes, log_dir=Path(args.log_dir), default_config=noise)
    log.info("serving %d scenes on %s:%d", len(scenes), args.host, args.port)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_replay(args) -> int:
    sess = session.replay(args.log)
    print(sess.state_json())
    return 0


def run(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=os.environ.get("GRASPWISE_LOG", "WARNING"))
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "gen-scenes": _cmd_gen_scenes,
        "run-eval": _cmd_run_eval,
        "sweep-intervention": _cmd_sweep,
        "validate": _cmd_validate,
        "serve": _cmd_serve,
        "replay": _cmd_replay,
    }
    try:
        return handlers[args.command](args)
    except (
        dataset.CorpusFormatError,
        dataset.CorpusValidationError,
        dataset.GenerationError,
        session.ReplayError,
        UndefinedMetricError,
        ConfigError,
        FileNotFoundError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
