"""
CSV artifacts: evolution trajectories, training reports and validation curves,
metric reports, lane points

Numbers are written with a fixed repr so repeated runs give identical bytes.
"""
import csv
import logging
import math
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

from ..common.errors import FormatError
from ..common.models import LanePoints, MetricResult, TrainReport, Trajectory

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

TRAJECTORY_HEADER = ["step", "energy", "components"]
LANE_POINTS_HEADER = ["lane_id", "row", "col"]
CURVES_HEADER = ["epoch", "val_loss", "val_pixel_accuracy", "val_pixel_f1"]


def format_number(value: Union[int, float]) -> str:
    """Shortest round-trip text; NaN written as 'nan'"""
    if isinstance(value, int):
        return str(value)
    if math.isnan(value):
        return "nan"
    return repr(float(value))


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Union[int, float, str]]]):
    """Write rows with LF line endings"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else format_number(v) for v in row])
    logger.debug("wrote %s", path)


def write_trajectory_csv(path: PathLike, trajectory: Trajectory):
    """step,energy,components for every recorded step (step 0 = initial state)"""
    rows = (
        (step, energy, components)
        for step, (energy, components) in enumerate(zip(trajectory.energies, trajectory.components))
    )
    write_csv(path, TRAJECTORY_HEADER, rows)


def train_report_header(classes: int) -> List[str]:
    return ["epoch", "total", "ce", "eie", "val_miou"] + [f"val_iou_class{c}" for c in range(classes)]


def write_train_report_csv(path: PathLike, report: TrainReport):
    """Per-epoch training curves"""
    rows = (
        [r.epoch, r.total, r.ce, r.eie, r.val_miou] + list(r.val_iou)
        for r in report.epochs
    )
    write_csv(path, train_report_header(report.classes), rows)


def curves_path(report_path: PathLike) -> Path:
    """Companion validation-curve file next to a training report"""
    report_path = Path(report_path)
    return report_path.with_name(f"{report_path.stem}_curves.csv")


def write_curves_csv(path: PathLike, report: TrainReport):
    """Per-epoch validation loss, pixel accuracy and thin-class pixel F1"""
    rows = (
        (r.epoch, r.val_loss, r.val_pixel_accuracy, r.val_pixel_f1)
        for r in report.epochs
    )
    write_csv(path, CURVES_HEADER, rows)


def write_train_reports(path: PathLike, report: TrainReport) -> List[Path]:
    """Training report plus its validation curves; returns both paths"""
    path = Path(path)
    write_train_report_csv(path, report)
    write_curves_csv(curves_path(path), report)
    return [path, curves_path(path)]


def write_metric_csv(path: PathLike, results: Sequence[MetricResult]):
    """metric,key,value rows: the primary value under key 'value', then scalar metadata"""
    rows = []
    for result in results:
        rows.append((result.name, "value", result.value))
        for key, value in sorted(result.metadata.items()):
            if isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    rows.append((result.name, f"{key}[{i}]", "nan" if item is None else item))
            elif isinstance(value, (int, float)) and not isinstance(value, bool):
                rows.append((result.name, key, value))
            else:
                rows.append((result.name, key, str(value)))
    write_csv(path, ["metric", "key", "value"], rows)


def write_lane_points_csv(path: PathLike, points: LanePoints):
    """lane_id,row,col with col = -1 for missing rows"""
    rows = (
        (lane_id, row, -1 if col is None else col)
        for lane_id, lane in enumerate(points.lanes)
        for row, col in zip(points.rows, lane)
    )
    write_csv(path, LANE_POINTS_HEADER, rows)


def read_lane_points_csv(path: PathLike) -> LanePoints:
    """
    Read lane_id,row,col rows back into LanePoints

    Raises:
        FormatError: Wrong header or non-integer fields
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != LANE_POINTS_HEADER:
            raise FormatError(f"expected header {','.join(LANE_POINTS_HEADER)}, got {header}", path=path)
        entries = []
        for line_no, row in enumerate(reader, start=2):
            try:
                lane_id, r, c = (int(v) for v in row)
            except ValueError as e:
                raise FormatError(f"line {line_no}: {e}", path=path) from e
            entries.append((lane_id, r, c))

    rows = sorted({r for _, r, _ in entries})
    lane_count = max((lane_id for lane_id, _, _ in entries), default=-1) + 1
    index = {r: i for i, r in enumerate(rows)}
    lanes: List[List[Optional[int]]] = [[None] * len(rows) for _ in range(lane_count)]
    for lane_id, r, c in entries:
        if lane_id < 0:
            raise FormatError(f"negative lane id {lane_id}", path=path)
        lanes[lane_id][index[r]] = None if c < 0 else c
    return LanePoints(rows=rows, lanes=lanes)
