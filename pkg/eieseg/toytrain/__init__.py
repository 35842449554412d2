"""Synthetic scenes, a per-pixel linear classifier and the CE vs CE+EIE trainer"""
from .model import apply_update, backward, features, forward, init_model
from .scenes import SCENE_CLASSES, THIN_CLASS, dump_scene, generate_scene
from .trainer import (
    CE_EIE,
    CE_ONLY,
    compare,
    config_from_settings,
    evaluate,
    make_scenes,
    sweep_seeds,
    thin_iou_gain,
    train,
)

__all__ = [
    "CE_EIE",
    "CE_ONLY",
    "SCENE_CLASSES",
    "THIN_CLASS",
    "apply_update",
    "backward",
    "compare",
    "config_from_settings",
    "dump_scene",
    "evaluate",
    "features",
    "forward",
    "generate_scene",
    "init_model",
    "make_scenes",
    "sweep_seeds",
    "thin_iou_gain",
    "train",
]
