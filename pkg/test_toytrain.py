"""
Synthetic scenes, classifier and trainer tests
"""
import numpy as np
import pytest
from pydantic import ValidationError
from scipy import ndimage

from eieseg.common.errors import DimensionError, DivergenceError
from eieseg.common.models import EieConfig, Field2D, LogitStack, PixelClassifier, TrainConfig
from eieseg.fields import connected_components, one_hot
from eieseg.losses import combined_loss, combined_loss_backward
from eieseg.losses.gradcheck import central_difference, relative_error
from eieseg.storage import curves_path, read_tensor, write_train_report_csv, write_train_reports
from eieseg.storage.reports import CURVES_HEADER, train_report_header
from eieseg.toytrain import (
    CE_EIE,
    CE_ONLY,
    SCENE_CLASSES,
    THIN_CLASS,
    backward,
    compare,
    dump_scene,
    features,
    forward,
    generate_scene,
    init_model,
    sweep_seeds,
    thin_iou_gain,
    train,
    trainer,
)
from eieseg.toytrain.model import FEATURE_COUNT
from eieseg.toytrain.scenes import BLOB_MAX, MIXED_IMBALANCE, _draw_lane, lane_bend


# === scenes ===

@pytest.mark.parametrize("kind", sorted(SCENE_CLASSES))
def test_scenes_are_deterministic(kind):
    a = generate_scene(kind, 32, 32, seed=4, split="train", index=1)
    b = generate_scene(kind, 32, 32, seed=4, split="train", index=1)
    assert np.array_equal(a.image.values, b.image.values)
    assert np.array_equal(a.labels.values, b.labels.values)
    assert a.occlusion_boxes == b.occlusion_boxes
    assert a.labels.classes == SCENE_CLASSES[kind]


def test_scene_streams_are_independent():
    a = generate_scene("mixed", 32, 32, seed=4, split="train", index=0)
    b = generate_scene("mixed", 32, 32, seed=4, split="val", index=0)
    assert not np.array_equal(a.image.values, b.image.values)


@pytest.mark.parametrize("seed", range(5))
def test_lanes_are_at_most_three_pixels_wide(seed):
    scene = generate_scene("lanes", 32, 32, seed)
    lanes = scene.labels.values[THIN_CLASS] > 0
    assert lanes.any()
    assert not ndimage.binary_erosion(lanes, structure=np.ones((4, 4))).any()
    assert not ndimage.binary_erosion(lanes, structure=np.ones((1, 4))).any()


@pytest.mark.parametrize("seed", range(5))
def test_lane_bend_curves_every_scene(seed):
    bend = lane_bend(np.random.default_rng(seed), 32)
    assert bend.shape == (32,)
    assert np.abs(bend).max() <= 1.5
    assert np.ptp(bend) > 0.2


def test_draw_lane_follows_bend():
    bend = np.zeros(8)
    bend[5] = 3.0
    lane = _draw_lane(8, 12, 4.0, 0.0, bend, 1, range(8))
    cols = [int(np.flatnonzero(row)[0]) for row in lane]
    assert cols == [4, 4, 4, 4, 4, 7, 4, 4]


@pytest.mark.parametrize("seed", range(5))
def test_occlusion_boxes_hide_lanes_but_keep_labels(seed):
    scene = generate_scene("lanes", 32, 32, seed)
    assert 1 <= len(scene.occlusion_boxes) <= 2
    for box in scene.occlusion_boxes:
        assert scene.image.values[box.slices].max() <= 0.35
        assert scene.labels.values[THIN_CLASS][box.slices].any()
        assert 4 <= box.bottom - box.top <= 7


@pytest.mark.parametrize("seed", range(5))
def test_blobs_are_small_and_separate(seed):
    scene = generate_scene("blobs", 32, 32, seed)
    count, labels = connected_components(scene.labels.layer(1))
    assert 3 <= count <= 8
    sizes = np.bincount(labels.ravel())[1:]
    assert sizes.max() <= BLOB_MAX


@pytest.mark.parametrize("seed", range(5))
def test_mixed_scenes_are_imbalanced(seed):
    scene = generate_scene("mixed", 32, 32, seed)
    class_map = scene.labels.class_map()
    thin = int(np.sum(class_map == THIN_CLASS))
    background = int(np.sum(class_map == 0))
    assert thin > 0
    assert background >= MIXED_IMBALANCE * thin
    assert np.sum(class_map == 2) > 0


def test_scenes_need_sixteen_pixels():
    with pytest.raises(DimensionError):
        generate_scene("lanes", 15, 32, 0)
    with pytest.raises(ValueError):
        generate_scene("stripes", 32, 32, 0)


def test_dump_scene(tmp_path):
    scene = generate_scene("mixed", 16, 16, 2)
    paths = dump_scene(scene, tmp_path, "s0")
    assert [p.name for p in paths] == ["s0_image.pgm", "s0_labels.fld", "s0_classes.pgm"]
    assert np.array_equal(read_tensor(paths[1]), scene.labels.values)


# === model ===

def test_features_of_constant_image():
    feats = features(Field2D(values=np.full((8, 10), 0.3)))
    assert feats.shape == (FEATURE_COUNT, 8, 10)
    assert np.allclose(feats[:3], 0.3, atol=1e-12)
    assert np.array_equal(feats[5], np.ones((8, 10)))
    assert feats[3, 0, 0] == 0.0 and feats[3, 0, -1] == 1.0
    assert feats[4, 0, 0] == 0.0 and feats[4, -1, 0] == 1.0


def test_blur_features_wrap_around():
    image = np.zeros((16, 16))
    image[0, 15] = 1.0
    feats = features(Field2D(values=image))
    for plane, size in ((1, 3), (2, 7)):
        half = size // 2
        expected = np.zeros_like(image)
        for dy in range(-half, half + 1):
            for dx in range(-half, half + 1):
                expected += np.roll(image, (dy, dx), axis=(0, 1))
        assert np.abs(feats[plane] - expected / size ** 2).max() <= 1e-14


def test_zero_model_gives_bias_logits():
    model = PixelClassifier(weights=np.zeros((3, FEATURE_COUNT)), bias=np.array([1.0, 2.0, 3.0]))
    logits = forward(model, features(Field2D.zeros(4, 4))).values
    assert np.array_equal(logits[2], np.full((4, 4), 3.0))

    grads = backward(model, features(Field2D.zeros(4, 4)), LogitStack(values=np.zeros((3, 4, 4))))
    assert not grads.weights.any() and not grads.bias.any()


def test_forward_rejects_wrong_features():
    model = init_model(2, seed=0)
    with pytest.raises(DimensionError):
        forward(model, np.zeros((4, 5, 5)))
    with pytest.raises(DimensionError):
        backward(model, features(Field2D.zeros(5, 5)), LogitStack(values=np.zeros((3, 5, 5))))


def _unpack(theta: np.ndarray, classes: int) -> PixelClassifier:
    weights = theta[: classes * FEATURE_COUNT].reshape(classes, FEATURE_COUNT)
    return PixelClassifier(weights=weights, bias=theta[classes * FEATURE_COUNT:])


def test_backward_against_central_difference(rng_for):
    rng = rng_for(21)
    feats = features(Field2D(values=rng.uniform(size=(7, 9))))
    upstream = rng.normal(size=(3, 7, 9))
    model = init_model(3, seed=21, scale=0.5)
    theta = np.concatenate([model.weights.ravel(), model.bias])

    numeric = central_difference(
        lambda t: float(np.sum(upstream * forward(_unpack(t, 3), feats).values)), theta, 1e-6
    )
    grads = backward(model, feats, LogitStack(values=upstream))
    analytic = np.concatenate([grads.weights.ravel(), grads.bias])
    assert relative_error(analytic, numeric) <= 1e-6


def test_end_to_end_parameter_gradient(rng_for):
    rng = rng_for(6)
    feats = features(Field2D(values=rng.uniform(size=(6, 6))))
    labels = one_hot(rng.integers(0, 3, size=(6, 6)), 3)
    cfg = EieConfig(alpha=1.0, lambda1=3.0, lambda2=1.0)
    model = init_model(3, seed=6, scale=1.0)
    theta = np.concatenate([model.weights.ravel(), model.bias])

    numeric = central_difference(
        lambda t: combined_loss(forward(_unpack(t, 3), feats), labels, cfg).total, theta, 1e-6
    )
    upstream = combined_loss_backward(forward(model, feats), labels, cfg)
    grads = backward(model, feats, upstream)
    analytic = np.concatenate([grads.weights.ravel(), grads.bias])
    assert relative_error(analytic, numeric) <= 1e-5


# === training ===

def _small_config(**overrides) -> TrainConfig:
    values = dict(
        epochs=6,
        seed=3,
        scene_kind="blobs",
        train_count=2,
        val_count=1,
        size=16,
        eie=EieConfig(lambda1=0.0, lambda2=1.0),
    )
    values.update(overrides)
    return TrainConfig(**values)


def test_cross_entropy_descends():
    report = train(_small_config())
    ces = [r.ce for r in report.epochs]
    assert [r.epoch for r in report.epochs] == list(range(1, 7))
    assert all(b < a for a, b in zip(ces, ces[1:]))
    assert report.arm == CE_ONLY


def test_training_is_deterministic(tmp_path):
    config = _small_config(scene_kind="mixed", eie=EieConfig(), epochs=3)
    write_train_report_csv(tmp_path / "a.csv", train(config))
    write_train_report_csv(tmp_path / "b.csv", train(config))
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_validation_curves_are_written_deterministically(tmp_path):
    config = _small_config(scene_kind="mixed", eie=EieConfig(), epochs=3)
    first = write_train_reports(tmp_path / "a" / "run.csv", train(config))
    second = write_train_reports(tmp_path / "b" / "run.csv", train(config))
    assert first[1] == curves_path(first[0]) == tmp_path / "a" / "run_curves.csv"
    assert first[1].read_bytes() == second[1].read_bytes()

    lines = first[1].read_text().splitlines()
    assert lines[0] == "epoch,val_loss,val_pixel_accuracy,val_pixel_f1"
    assert lines[0].split(",") == CURVES_HEADER
    assert [int(line.split(",")[0]) for line in lines[1:]] == [1, 2, 3]
    for line in lines[1:]:
        loss, accuracy, f1 = (float(v) for v in line.split(",")[1:])
        assert loss > 0.0
        assert 0.0 <= accuracy <= 1.0
        assert 0.0 <= f1 <= 1.0


def test_zero_epochs_rejected():
    with pytest.raises(ValidationError):
        _small_config(epochs=0)


def test_compare_runs_both_arms(tmp_path):
    reports = compare(_small_config(scene_kind="mixed", eie=EieConfig(), epochs=2))
    assert set(reports) == {CE_ONLY, CE_EIE}
    assert reports[CE_ONLY].config.eie.lambda1 == 0.0
    assert reports[CE_EIE].config.eie.lambda1 == 1.0
    # both arms start from identical weights on identical scenes
    assert reports[CE_ONLY].epochs[0].ce == pytest.approx(reports[CE_EIE].epochs[0].ce, rel=1e-14)

    write_train_report_csv(tmp_path / "ce.csv", reports[CE_ONLY])
    header = (tmp_path / "ce.csv").read_text().splitlines()[0]
    assert header == "epoch,total,ce,eie,val_miou,val_iou_class0,val_iou_class1,val_iou_class2"
    assert header.split(",") == train_report_header(3)
    assert np.isfinite(thin_iou_gain(reports))


def test_sweep_covers_every_seed():
    results = sweep_seeds(_small_config(epochs=1), [0, 1])
    assert sorted(results) == [0, 1]
    assert results[1][CE_EIE].config.seed == 1


def test_divergence_is_reported(monkeypatch):
    def blow_up(model, grads, learning_rate):
        return PixelClassifier(weights=model.weights * np.inf, bias=model.bias)

    monkeypatch.setattr(trainer, "apply_update", blow_up)
    with pytest.raises(DivergenceError) as info:
        train(_small_config(epochs=3))
    assert info.value.arm == CE_ONLY
    assert info.value.epoch is not None


@pytest.mark.acceptance
def test_eie_improves_thin_structures():
    config = TrainConfig(epochs=200, scene_kind="mixed", eie=EieConfig())
    gains = [thin_iou_gain(reports) for reports in sweep_seeds(config, [1, 2, 3]).values()]
    assert sum(g >= 0.05 for g in gains) >= 2
