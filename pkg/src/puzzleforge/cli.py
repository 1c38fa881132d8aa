"""Batch command-line front end: scramble -> score -> solve -> evaluate ->
render.

Exit codes: 0 success, 2 usage error, 3 data error, 4 I/O error. All
randomness is controlled by --seed; PF_WORKERS sets the default worker
count for score computation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import cmx, compat, dataset, metrics, render
from .core import Arrangement, PuzzleBundle
from .postprocess import postprocess
from .solver import GaConfig, SolverTables, ablate, evolve, fitness

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_IO = 4


class DataError(Exception):
    pass


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("PF_WORKERS", "1")))
    except ValueError:
        return 1


def _load_bundle(path) -> PuzzleBundle:
    try:
        return dataset.load_bundle(path)
    except FileNotFoundError as exc:
        raise DataError(f"bundle not found: {exc}") from exc
    except (KeyError, json.JSONDecodeError) as exc:
        raise DataError(f"malformed bundle manifest: {exc}") from exc


def _write_json(payload: dict, path) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _load_arrangement(path) -> Arrangement:
    doc = json.loads(Path(path).read_text())
    cells = {
        int(pid): (r, c, (deg // 90) % 4)
        for pid, (r, c, deg) in doc["cells"].items()
    }
    return Arrangement(cells, doc["rows"], doc["cols"])


RELATION_NAMES = {
    "top": (0, 2),
    "right": (1, 3),
    "bottom": (2, 0),
    "left": (3, 1),
}
EDGE_NAMES = {"top": 0, "right": 1, "bottom": 2, "left": 3}


def _parse_relation(text: str):
    if text in RELATION_NAMES:
        return RELATION_NAMES[text]
    if ":" in text:
        a, c = text.split(":", 1)
        if a in EDGE_NAMES and c in EDGE_NAMES:
            return (EDGE_NAMES[a], EDGE_NAMES[c])
    raise DataError(f"unknown relation {text!r}")


def cmd_scramble(args) -> int:
    image = dataset.load_image(args.input)
    bundle = dataset.cut_and_scramble(image, args.piece_size, args.type, args.seed)
    if args.erode:
        bundle = dataset.erode(bundle, args.erode)
    dataset.save_bundle(bundle, args.out, seed=args.seed, source=str(args.input))
    return EXIT_OK


def cmd_shred(args) -> int:
    pages = [dataset.load_image(p) for p in args.input]
    bundle = dataset.shred(pages, args.strip_width, args.seed)
    dataset.save_bundle(bundle, args.out, seed=args.seed)
    return EXIT_OK


def cmd_compat(args) -> int:
    bundle = _load_bundle(args.bundle)
    skip = args.skip_eroded
    if skip is None:
        skip = bundle.erosion_width
    kind = compat.MeasureKind(args.measure)
    tensor = compat.full_tensor(kind, bundle, skip_eroded=skip, workers=args.workers)
    if not args.raw and not tensor.normalized:
        tensor = postprocess(tensor)
    cmx.write_cmx(tensor, args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    bundle = _load_bundle(args.bundle)
    tensor = cmx.read_cmx(args.scores)
    if tensor.n != bundle.n or tensor.puzzle_type != bundle.puzzle_type:
        raise DataError("score tensor does not match the bundle")
    if not (tensor.normalized and tensor.symmetric):
        tensor = postprocess(tensor)
    cfg = GaConfig(
        population=args.pop,
        stall_generations=args.stall,
        restarts=args.restarts,
        alpha0=args.alpha0,
        skip_phase1_prob=args.skip_p1,
        skip_phase23_prob=args.skip_p23,
        seed=args.seed,
        dims_mode=args.dims,
    )
    if args.disable_phases:
        cfg = ablate(cfg, [p.strip() for p in args.disable_phases.split(",") if p.strip()])
    report = evolve(bundle, tensor, cfg)
    _write_json(report.to_dict(), args.out)
    out = Path(args.out)
    render.save_trace_figure(
        report.fitness_traces, out.with_name(out.stem + "_trace.png")
    )
    if args.render:
        render.save_solution_image(report.best_arrangement, bundle, args.render)
    return EXIT_OK


def cmd_eval(args) -> int:
    bundle = _load_bundle(args.bundle)
    if bundle.ground_truth is None:
        raise DataError("bundle has no ground truth to evaluate against")
    arrangement = _load_arrangement(args.arrangement)
    tensor = None
    if args.scores:
        tensor = cmx.read_cmx(args.scores)
        if not (tensor.normalized and tensor.symmetric):
            tensor = postprocess(tensor)
    report = metrics.evaluate(
        arrangement,
        bundle.ground_truth,
        bundle.puzzle_type,
        tensor=tensor,
        i_max=args.imax,
    )
    out = Path(args.out)
    out.write_text(report.to_json())
    out.with_suffix(".txt").write_text(report.to_text())
    if report.local_fitness is not None:
        render.save_heatmap_figure(
            report.local_fitness,
            out.with_name(out.stem + "_local_fitness.png"),
            title="local fitness",
        )
    return EXIT_OK


def cmd_topk(args) -> int:
    bundle = _load_bundle(args.bundle)
    if bundle.ground_truth is None:
        raise DataError("bundle has no ground truth")
    tensor = cmx.read_cmx(args.scores)
    curve = metrics.top_i(tensor, bundle.ground_truth, args.imax)
    out = Path(args.out)
    lines = ["i,top_i"] + [f"{i},{v:.6f}" for i, v in enumerate(curve, start=1)]
    out.write_text("\n".join(lines) + "\n")
    render.save_topi_figure({"scores": curve}, out.with_suffix(".png"))
    return EXIT_OK


def cmd_heatmap(args) -> int:
    bundle = _load_bundle(args.bundle)
    tensor = cmx.read_cmx(args.scores)
    out = Path(args.out)
    if args.local_fitness:
        if not args.arrangement:
            raise DataError("--local-fitness requires --arrangement")
        if not (tensor.normalized and tensor.symmetric):
            tensor = postprocess(tensor)
        arrangement = _load_arrangement(args.arrangement)
        grid = metrics.local_fitness_grid(arrangement, tensor)
        matrix = np.round(
            255.0 * np.clip(grid, 0.0, 1.0)
        ).astype(np.uint8)
        metrics.write_pgm(matrix, out)
        render.save_heatmap_figure(grid, out.with_suffix(".png"), "local fitness")
    else:
        if bundle.ground_truth is None:
            raise DataError("score maps require ground truth ordering")
        relation = _parse_relation(args.relation)
        matrix = metrics.score_map(tensor, bundle.ground_truth, relation)
        metrics.write_pgm(matrix, out)
        render.save_heatmap_figure(
            matrix, out.with_suffix(".png"), f"score map ({args.relation})"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="puzzleforge",
        description="Square-piece puzzle reconstruction toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scramble", help="cut an image into a scrambled bundle")
    p.add_argument("--input", required=True)
    p.add_argument("--piece-size", type=int, required=True)
    p.add_argument("--type", type=int, choices=(1, 2), required=True)
    p.add_argument("--erode", type=int, default=0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scramble)

    p = sub.add_parser("shred", help="slice pages into scrambled strips")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--strip-width", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_shred)

    p = sub.add_parser("compat", help="compute a compatibility score tensor")
    p.add_argument("--bundle", required=True)
    p.add_argument(
        "--measure",
        choices=[k.value for k in compat.MeasureKind if k != compat.MeasureKind.EXTERNAL],
        required=True,
    )
    p.add_argument("--skip-eroded", type=int, default=None)
    p.add_argument("--raw", action="store_true", help="skip normalize+symmetrize")
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compat)

    p = sub.add_parser("solve", help="run the GA solver")
    p.add_argument("--bundle", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--dims", choices=("known", "unknown"), default="known")
    p.add_argument("--pop", type=int, default=100)
    p.add_argument("--stall", type=int, default=50)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--alpha0", type=float, default=0.8)
    p.add_argument("--skip-p1", type=float, default=0.10)
    p.add_argument("--skip-p23", type=float, default=0.20)
    p.add_argument("--disable-phases", default="")
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--render", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("eval", help="score an arrangement against ground truth")
    p.add_argument("--bundle", required=True)
    p.add_argument("--arrangement", required=True)
    p.add_argument("--scores", default=None)
    p.add_argument("--imax", type=int, default=8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("topk", help="export the Top-i curve as CSV + figure")
    p.add_argument("--scores", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--imax", type=int, default=32)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_topk)

    p = sub.add_parser("heatmap", help="score-map or local-fitness images")
    p.add_argument("--scores", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--relation", default="right")
    p.add_argument("--local-fitness", action="store_true")
    p.add_argument("--arrangement", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_heatmap)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (DataError, cmx.CmxError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
