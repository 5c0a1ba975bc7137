"""Command-line entry point: ``shadowtrack {track,synth,eval,mask}``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, evalkit, synth
from .corr_filter import FilterConfig
from .imaging import (BoundingBox, FrameIOError, frame_name, list_frames, load_frame, save_frame,
                      save_mask)
from .synth import PRESETS, preset
from .shadow_detect import ShadowDetectorConfig, clean_mask, detect_shadows
from .tracker import Mode, Tracker, TrackerConfig, TrackStep, config_to_dict

log = logging.getLogger("shadowtrack")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

# overlay colors, RGB
COLOR_BASELINE = (40, 90, 255)
COLOR_NORMAL = (255, 215, 0)
COLOR_FUSION = (255, 60, 30)
COLOR_SEARCH = (255, 255, 255)


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_box(text: str) -> BoundingBox:
    try:
        values = [float(v) for v in text.split(",")]
        if len(values) != 4:
            raise ValueError
        return BoundingBox(*values)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected cx,cy,w,h with w,h >= 1, got {text!r}")


def parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got {text!r}")
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError(f"size must be positive, got {text!r}")
    return w, h


def parse_window(text: str) -> tuple[int, int]:
    try:
        start, stop = (int(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected START:STOP, got {text!r}")
    if stop <= start:
        raise argparse.ArgumentTypeError(f"empty window {text!r}")
    return start, stop


def _add_detector_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window", type=int, default=16, help="side of the shadow-detection window (px)")
    p.add_argument("--threshold-factor", type=float, default=0.85,
                   help="pixel is shadow below this fraction of its window mean")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shadowtrack", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("track", help="track a shadow through a frame sequence")
    p.add_argument("--in", dest="input", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--init", required=True, type=parse_box, help="initial box cx,cy,w,h on frame 0")
    p.add_argument("--no-fusion", action="store_true", help="plain correlation tracking (baseline)")
    p.add_argument("--overlay", action="store_true", help="also write frames with the boxes drawn in")
    p.add_argument("--seed", type=int, default=0, help="seed for filter training augmentation")
    p.add_argument("--padding", type=float, default=2.0, help="search region size over box size")
    p.add_argument("--recover-band", type=float, default=2.5)
    p.add_argument("--learning-rate", type=float, default=0.125)
    p.add_argument("--sigma", type=float, default=2.0, help="desired response width (px)")
    _add_detector_args(p)

    p = sub.add_parser("synth", help="generate a synthetic sequence with ground truth")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help=f"one of: {', '.join(PRESETS)}")
    src.add_argument("--spec", type=Path, help="scenario JSON file (as written by synth)")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--frames", type=int)
    p.add_argument("--size", type=parse_size, help="WIDTHxHEIGHT")
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=("png", "pgm"), default="png")

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--pred", required=True, type=Path)
    p.add_argument("--gt", required=True, type=Path)
    p.add_argument("--out", type=Path, help="report directory (default: next to --pred)")
    p.add_argument("--window", type=parse_window, help="evaluate frames START:STOP only")
    p.add_argument("--lost-run", type=int, default=evalkit.DEFAULT_LOST_RUN,
                   help="consecutive zero-IoU frames that count as a lost track")
    p.add_argument("--iou-csv", type=Path, help="also write the per-frame IoU series here")
    p.add_argument("--meta", type=Path, help="run metadata holding the measured fps")

    p = sub.add_parser("mask", help="dump per-frame shadow masks as PGM")
    p.add_argument("--in", dest="input", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--raw", action="store_true", help="skip the morphological cleanup")
    _add_detector_args(p)
    return parser


def _detector(args) -> ShadowDetectorConfig:
    try:
        return ShadowDetectorConfig(args.window, args.threshold_factor)
    except ValueError as exc:
        raise UsageError(str(exc))


def _load_sequence(directory: Path):
    paths = list_frames(directory)
    if not paths:
        raise DataError(f"{directory}: no frame_NNNNNN.png/pgm files")
    return paths


def draw_rect(rgb: np.ndarray, box: BoundingBox, color, thickness: int = 1) -> None:
    H, W = rgb.shape[:2]
    x0, y0, w, h = box.pixel_origin()
    x1, y1 = x0 + w - 1, y0 + h - 1
    for t in range(thickness):
        for x in (x0 + t, x1 - t):
            if 0 <= x < W:
                rgb[max(y0, 0) : min(y1 + 1, H), x] = color
        for y in (y0 + t, y1 - t):
            if 0 <= y < H:
                rgb[y, max(x0, 0) : min(x1 + 1, W)] = color


def render_overlay(frame: np.ndarray, step: TrackStep, fusion_enabled: bool) -> np.ndarray:
    rgb = np.repeat(np.clip(np.rint(frame), 0, 255).astype(np.uint8)[..., None], 3, axis=2)
    if not fusion_enabled:
        draw_rect(rgb, step.bbox, COLOR_BASELINE, 2)
    elif step.mode is Mode.FUSION:
        if step.search is not None:
            draw_rect(rgb, step.search, COLOR_SEARCH, 1)
        draw_rect(rgb, step.bbox, COLOR_FUSION, 2)
    else:
        draw_rect(rgb, step.bbox, COLOR_NORMAL, 2)
    return rgb


def cmd_track(args) -> int:
    try:
        cfg = TrackerConfig(
            padding_factor=args.padding,
            recover_band=args.recover_band,
            fusion=not args.no_fusion,
            detector=_detector(args),
            filter=FilterConfig(sigma=args.sigma, learning_rate=args.learning_rate, seed=args.seed),
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    paths = _load_sequence(args.input)
    first = load_frame(paths[0])
    tracker = Tracker(cfg)
    try:
        state, step = tracker.init(first, args.init)
    except ValueError as exc:
        raise UsageError(f"--init: {exc}")
    args.out.mkdir(parents=True, exist_ok=True)
    overlay_dir = args.out / "overlay"
    if args.overlay:
        overlay_dir.mkdir(exist_ok=True)

    steps = [step]
    elapsed = 0.0
    for i, path in enumerate(paths):
        frame = first if i == 0 else load_frame(path)
        if i > 0:
            t0 = time.perf_counter()
            try:
                state, step = tracker.step(state, frame)
            except ValueError as exc:
                raise DataError(f"{path.name}: {exc}")
            elapsed += time.perf_counter() - t0
            steps.append(step)
            log.debug("frame %d %s (%.1f, %.1f)", i, step.mode.value, step.bbox.cx, step.bbox.cy)
        if args.overlay:
            save_frame(overlay_dir / frame_name(i), render_overlay(frame, step, cfg.fusion))

    evalkit.write_predictions(args.out / "predictions.csv", steps)
    fps = (len(steps) - 1) / elapsed if elapsed > 0 else None
    meta = {
        "version": __version__,
        "input": str(args.input),
        "frames": len(steps),
        "init": asdict(args.init),
        "config": config_to_dict(cfg),
        "fps": fps,
        "fusion_frames": sum(s.mode is Mode.FUSION for s in steps),
    }
    (args.out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    log.info("tracked %d frames at %.1f frames/s", len(steps), fps or 0.0)
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.preset is not None:
        kwargs = {}
        if args.size:
            kwargs["width"], kwargs["height"] = args.size
        if args.frames:
            kwargs["n_frames"] = args.frames
        if args.seed is not None:
            kwargs["seed"] = args.seed
        try:
            spec = preset(args.preset, **kwargs)
        except KeyError as exc:
            raise UsageError(exc.args[0])
    else:
        try:
            spec = synth.ScenarioSpec.from_dict(json.loads(args.spec.read_text()))
        except (OSError, ValueError, TypeError, KeyError) as exc:
            raise DataError(f"{args.spec}: invalid scenario ({exc})")
        if args.seed is not None:
            spec.seed = args.seed
        if args.frames:
            spec.n_frames = args.frames
        if args.size:
            raise UsageError("--size only applies to presets")
    try:
        frames, truth = synth.generate(spec)
    except ValueError as exc:
        raise DataError(str(exc))
    args.out.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        save_frame(args.out / frame_name(i, args.format), frame)
    evalkit.write_ground_truth(args.out / "gt.csv", truth)
    (args.out / "spec.json").write_text(json.dumps(spec.to_dict(), indent=2) + "\n")
    log.info("wrote %d frames to %s", len(frames), args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        pred = evalkit.read_predictions(args.pred)
        gt = evalkit.read_ground_truth(args.gt)
    except OSError as exc:
        raise DataError(str(exc))
    meta_path = args.meta or args.pred.parent / "meta.json"
    fps = None
    if meta_path.is_file():
        fps = json.loads(meta_path.read_text()).get("fps")
    report = evalkit.evaluate(pred, gt, args.lost_run, args.window, fps)
    out = args.out or args.pred.parent
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json() + "\n")
    (out / "report.txt").write_text(report.to_text())
    if args.iou_csv:
        evalkit.write_iou_csv(args.iou_csv, report)
    print(report.to_text().split("\n\n")[0])
    return EXIT_OK


def cmd_mask(args) -> int:
    cfg = _detector(args)
    paths = _load_sequence(args.input)
    args.out.mkdir(parents=True, exist_ok=True)
    for path in paths:
        index = path.stem.split("_")[1]
        raw = detect_shadows(load_frame(path), cfg)
        save_mask(args.out / f"raw_{index}.pgm", raw)
        if not args.raw:
            save_mask(args.out / f"mask_{index}.pgm", clean_mask(raw))
    log.info("wrote masks for %d frames to %s", len(paths), args.out)
    return EXIT_OK


COMMANDS = {"track": cmd_track, "synth": cmd_synth, "eval": cmd_eval, "mask": cmd_mask}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"shadowtrack {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, evalkit.EvalError, FrameIOError) as exc:
        print(f"shadowtrack {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
