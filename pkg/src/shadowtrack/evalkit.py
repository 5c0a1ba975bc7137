"""IoU evaluation of tracking runs against ground truth, plus the CSV formats."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

from .imaging import BoundingBox
from .synth import GroundTruth
from .tracker import Mode, TrackStep

GT_HEADER = ["frame", "cx", "cy", "w", "h"]
PRED_HEADER = ["frame", "cx", "cy", "w", "h", "mode", "peak", "area"]
DEFAULT_LOST_RUN = 10


class EvalError(ValueError):
    """Predictions and ground truth do not line up."""


@dataclass
class EvalReport:
    frames: list[int]
    ious: list[float]
    mean_iou: float
    lost: bool
    longest_zero_run: int
    lost_run: int = DEFAULT_LOST_RUN
    fps: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        lines = [
            f"frames evaluated : {len(self.frames)}",
            f"mean IoU         : {self.mean_iou:.4f}",
            f"longest zero run : {self.longest_zero_run}",
            f"lost (K={self.lost_run:<3d})    : {'yes' if self.lost else 'no'}",
        ]
        if self.fps is not None:
            lines.append(f"frames/s         : {self.fps:.1f}")
        lines.append("")
        lines.append(f"{'frame':>6}  {'iou':>6}")
        lines.extend(f"{f:>6d}  {v:>6.3f}" for f, v in zip(self.frames, self.ious))
        return "\n".join(lines) + "\n"


def iou(a: BoundingBox, b: BoundingBox) -> float:
    ax0, ay0, ax1, ay1 = a.extent
    bx0, by0, bx1, by1 = b.extent
    iw = max(0.0, min(ax1, bx1) - max(ax0, bx0))
    ih = max(0.0, min(ay1, by1) - max(ay0, by0))
    inter = iw * ih
    if inter == 0:
        return 0.0
    return min(1.0, inter / (a.area + b.area - inter))


def longest_zero_run(values) -> int:
    best = run = 0
    for v in values:
        run = run + 1 if v == 0 else 0
        best = max(best, run)
    return best


def evaluate(pred: dict[int, BoundingBox], gt: dict[int, BoundingBox], K: int = DEFAULT_LOST_RUN,
             window: tuple[int, int] | None = None, fps: float | None = None) -> EvalReport:
    """Per-frame IoU of ``pred`` against ``gt``, both keyed by frame index.

    ``window = (start, stop)`` restricts evaluation to frames in ``[start, stop)``.
    """
    if set(pred) != set(gt):
        only_pred = sorted(set(pred) - set(gt))[:5]
        only_gt = sorted(set(gt) - set(pred))[:5]
        raise EvalError(f"frame indices differ: only in predictions {only_pred}, only in ground truth {only_gt}")
    frames = sorted(gt)
    if window is not None:
        frames = [f for f in frames if window[0] <= f < window[1]]
    if not frames:
        raise EvalError("no frames to evaluate")
    ious = [iou(pred[f], gt[f]) for f in frames]
    zero_run = longest_zero_run(ious)
    return EvalReport(frames, ious, math.fsum(ious) / len(ious), zero_run >= K, zero_run, K, fps)


def evaluate_steps(steps: list[TrackStep], truth: GroundTruth, K: int = DEFAULT_LOST_RUN,
                   window: tuple[int, int] | None = None, fps: float | None = None) -> EvalReport:
    return evaluate(
        {s.frame_index: s.bbox for s in steps},
        dict(enumerate(truth.boxes)),
        K,
        window,
        fps,
    )


def _num(v: float) -> str:
    return "nan" if math.isnan(v) else f"{v:.10g}"


def write_ground_truth(path, truth: GroundTruth) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(GT_HEADER)
        for i, b in enumerate(truth.boxes):
            writer.writerow([i, _num(b.cx), _num(b.cy), _num(b.w), _num(b.h)])


def write_predictions(path, steps: list[TrackStep]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PRED_HEADER)
        for s in steps:
            b = s.bbox
            writer.writerow([s.frame_index, _num(b.cx), _num(b.cy), _num(b.w), _num(b.h),
                             s.mode.value, _num(s.peak), s.shadow_area])


def _read_rows(path, header: list[str]) -> list[dict]:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in header if c not in (reader.fieldnames or [])]
        if missing:
            raise EvalError(f"{path}: missing columns {missing}")
        return list(reader)


def _box(row: dict, path) -> tuple[int, BoundingBox]:
    try:
        return int(row["frame"]), BoundingBox(
            float(row["cx"]), float(row["cy"]), float(row["w"]), float(row["h"])
        )
    except ValueError as exc:
        raise EvalError(f"{path}: bad row {row}: {exc}") from exc


def _keyed(rows, path) -> dict[int, BoundingBox]:
    out = {}
    for row in rows:
        frame, box = _box(row, path)
        if frame in out:
            raise EvalError(f"{path}: duplicate frame {frame}")
        out[frame] = box
    return out


def read_ground_truth(path) -> dict[int, BoundingBox]:
    return _keyed(_read_rows(path, GT_HEADER), path)


def read_predictions(path) -> dict[int, BoundingBox]:
    return _keyed(_read_rows(path, PRED_HEADER), path)


def read_steps(path) -> list[TrackStep]:
    steps = []
    for row in _read_rows(path, PRED_HEADER):
        frame, box = _box(row, path)
        steps.append(TrackStep(frame, box, Mode(row["mode"]), float(row["peak"]), int(row["area"])))
    return steps


def write_iou_csv(path, report: EvalReport) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "iou"])
        for f, v in zip(report.frames, report.ious):
            writer.writerow([f, f"{v:.6f}"])
