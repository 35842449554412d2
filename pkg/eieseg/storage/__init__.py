"""Persistence: FLD tensors, PGM masks and CSV reports"""
from .tensor_files import (
    decode_tensor,
    encode_tensor,
    read_labels,
    read_logits,
    read_pgm,
    read_tensor,
    write_pgm,
    write_tensor,
)
from .reports import (
    curves_path,
    read_lane_points_csv,
    write_csv,
    write_curves_csv,
    write_lane_points_csv,
    write_metric_csv,
    write_train_report_csv,
    write_train_reports,
    write_trajectory_csv,
)

__all__ = [
    "decode_tensor",
    "encode_tensor",
    "read_labels",
    "read_logits",
    "read_pgm",
    "read_tensor",
    "write_pgm",
    "write_tensor",
    "curves_path",
    "read_lane_points_csv",
    "write_csv",
    "write_curves_csv",
    "write_lane_points_csv",
    "write_metric_csv",
    "write_train_report_csv",
    "write_train_reports",
    "write_trajectory_csv",
]
