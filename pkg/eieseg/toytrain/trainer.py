"""
Full-batch trainer for the per-pixel classifier

Each epoch averages the combined loss and its parameter gradients over the
training scenes, takes one gradient step, then scores the validation
scenes by argmax IoU, pixel accuracy and thin-class pixel F1. Two arms
share scenes and initial weights:

    ce-only   λ1 = 0
    ce+eie    λ1 as configured
"""
import logging
import math
import time
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..common.config import TrainSettings, get_config
from ..common.errors import DivergenceError
from ..common.models import (
    EieConfig,
    EpochRecord,
    ModelGradients,
    PixelClassifier,
    SyntheticScene,
    TrainConfig,
    TrainReport,
    ValidationScores,
)
from ..losses.combined import combined_loss, combined_loss_and_grad
from ..metrics.segmentation import confusion_counts, iou_from_counts, pixel_f1
from .model import apply_update, backward, features, forward, init_model
from .scenes import SCENE_CLASSES, THIN_CLASS, generate_scene

logger = logging.getLogger(__name__)

CE_ONLY = "ce-only"
CE_EIE = "ce+eie"


def config_from_settings(settings: Optional[TrainSettings] = None, **overrides) -> TrainConfig:
    """TrainConfig from TrainSettings, letting non-None overrides win"""
    settings = settings or get_config().train
    values = {
        "eie": EieConfig.from_settings(get_config().loss),
        "epochs": settings.epochs,
        "learning_rate": settings.learning_rate,
        "size": settings.size,
        "train_count": settings.train_count,
        "val_count": settings.val_count,
        "scene_kind": settings.scene_kind,
        "init_scale": settings.init_scale,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig(**values)


def arm_name(cfg: EieConfig) -> str:
    return CE_ONLY if cfg.lambda1 == 0 else CE_EIE


def make_scenes(config: TrainConfig) -> Tuple[List[SyntheticScene], List[SyntheticScene]]:
    """Train and validation scenes for a config (seeded, independent streams)"""
    size = config.size
    train = [
        generate_scene(config.scene_kind, size, size, config.seed, "train", i)
        for i in range(config.train_count)
    ]
    val = [
        generate_scene(config.scene_kind, size, size, config.seed, "val", i)
        for i in range(config.val_count)
    ]
    return train, val


def _epoch_step(
    model: PixelClassifier,
    batch: Sequence[Tuple[np.ndarray, SyntheticScene]],
    cfg: EieConfig
) -> Tuple[float, float, float, ModelGradients]:
    """Mean total/ce/eie and mean parameter gradients over the batch"""
    totals, ces, eies = [], [], []
    grad_w = np.zeros_like(model.weights)
    grad_b = np.zeros_like(model.bias)
    for feats, scene in batch:
        breakdown, grad_logits = combined_loss_and_grad(forward(model, feats), scene.labels, cfg)
        grads = backward(model, feats, grad_logits)
        grad_w += grads.weights
        grad_b += grads.bias
        totals.append(breakdown.total)
        ces.append(breakdown.ce)
        eies.append(breakdown.eie_total)
    n = len(batch)
    return (
        math.fsum(totals) / n,
        math.fsum(ces) / n,
        math.fsum(eies) / n,
        ModelGradients(weights=grad_w / n, bias=grad_b / n)
    )


def evaluate(
    model: PixelClassifier,
    batch: Sequence[Tuple[np.ndarray, SyntheticScene]],
    cfg: EieConfig
) -> ValidationScores:
    """
    Pooled validation scores

    IoU and the thin-class pixel F1 pool pixels across scenes, the loss is
    the mean per-scene combined loss.
    """
    counts = None
    losses = []
    thin_pred, thin_true = [], []
    for feats, scene in batch:
        logits = forward(model, feats)
        predicted = np.argmax(logits.values, axis=0)
        scene_counts = confusion_counts(predicted, scene.labels)
        counts = scene_counts if counts is None else counts.merge(scene_counts)
        losses.append(combined_loss(logits, scene.labels, cfg).total)
        valid = ~scene.labels.ignored
        thin_pred.append(predicted[valid] == THIN_CLASS)
        thin_true.append(scene.labels.class_map()[valid] == THIN_CLASS)
    report = iou_from_counts(counts)
    correct = sum(counts.tp)
    total = sum(scene.labels.valid_count for _, scene in batch)
    return ValidationScores(
        iou=[float("nan") if v is None else v for v in report.per_class],
        miou=report.miou,
        loss=math.fsum(losses) / len(losses),
        pixel_accuracy=correct / total,
        thin_f1=pixel_f1(np.concatenate(thin_pred), np.concatenate(thin_true))
    )


def train(
    config: TrainConfig,
    arm: Optional[str] = None,
    scenes: Optional[Tuple[List[SyntheticScene], List[SyntheticScene]]] = None
) -> TrainReport:
    """
    Train one arm

    Args:
        config: Run configuration (its EieConfig picks the loss weights)
        arm: Label for logs and errors (derived from λ1 when omitted)
        scenes: Pre-built (train, val) scenes; generated from the config otherwise

    Returns:
        TrainReport with one EpochRecord per epoch

    Raises:
        DivergenceError: If the loss or parameters become non-finite
    """
    arm = arm or arm_name(config.eie)
    train_scenes, val_scenes = scenes or make_scenes(config)
    train_batch = [(features(s.image), s) for s in train_scenes]
    val_batch = [(features(s.image), s) for s in val_scenes]
    classes = SCENE_CLASSES[config.scene_kind]

    model = init_model(classes, config.seed, config.init_scale)
    records: List[EpochRecord] = []
    started = time.perf_counter()
    logger.info(
        "training arm %s: %d epochs on %d %s scenes (lr %g)",
        arm, config.epochs, len(train_batch), config.scene_kind, config.learning_rate
    )

    for epoch in range(1, config.epochs + 1):
        try:
            total, ce, eie, grads = _epoch_step(model, train_batch, config.eie)
            model = apply_update(model, grads, config.learning_rate)
            scores = evaluate(model, val_batch, config.eie)
        except ValueError as e:
            # non-finite logits or losses fail model validation
            logger.error("arm %s diverged at epoch %d: %s", arm, epoch, e)
            raise DivergenceError(f"training diverged: {e}", epoch=epoch, arm=arm) from e

        records.append(EpochRecord(
            epoch=epoch,
            total=total,
            ce=ce,
            eie=eie,
            val_miou=scores.miou,
            val_iou=scores.iou,
            val_loss=scores.loss,
            val_pixel_accuracy=scores.pixel_accuracy,
            val_pixel_f1=scores.thin_f1
        ))
        logger.debug(
            "%s epoch %d: total %.6f ce %.6f eie %.6f val mIoU %.4f",
            arm, epoch, total, ce, eie, scores.miou
        )

    elapsed = time.perf_counter() - started
    logger.info("arm %s finished: val mIoU %.4f in %.2fs", arm, records[-1].val_miou, elapsed)
    return TrainReport(
        arm=arm,
        config=config,
        classes=classes,
        epochs=records,
        wall_clock_seconds=elapsed,
        model=model
    )


def compare(config: TrainConfig) -> Dict[str, TrainReport]:
    """
    Run the CE-only and CE+EIE arms on identical scenes and seeds

    Returns:
        {"ce-only": report, "ce+eie": report}
    """
    scenes = make_scenes(config)
    ce_cfg = EieConfig(alpha=config.eie.alpha, lambda1=0.0, lambda2=config.eie.lambda2)
    baseline = config.model_copy(update={"eie": ce_cfg})
    return {
        CE_ONLY: train(baseline, CE_ONLY, scenes),
        CE_EIE: train(config, CE_EIE, scenes),
    }


def sweep_seeds(config: TrainConfig, seeds: Sequence[int]) -> Dict[int, Dict[str, TrainReport]]:
    """compare() for every seed; records sensitivity to initialisation"""
    results = {}
    for seed in seeds:
        results[seed] = compare(config.model_copy(update={"seed": seed}))
    return results


def thin_iou_gain(reports: Dict[str, TrainReport], thin_class: int = 1) -> float:
    """Final validation IoU of the thin class, CE+EIE minus CE-only"""
    return reports[CE_EIE].final.val_iou[thin_class] - reports[CE_ONLY].final.val_iou[thin_class]
