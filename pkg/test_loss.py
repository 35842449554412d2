"""
Energy, softmax, cross-entropy and combined-loss tests
"""
import math

import numpy as np
import pytest

from eieseg.common.errors import DimensionError
from eieseg.common.models import EieConfig, Field2D, LabelStack, LogitStack
from eieseg.fields import one_hot
from eieseg.losses import (
    combined_field,
    combined_loss,
    combined_loss_and_grad,
    combined_loss_backward,
    cross_entropy,
    eie_energy,
    eie_gradient,
    energy_decompose,
    gradcheck_report,
    softmax,
)
from eieseg.losses.gradcheck import central_difference, relative_error


def _field(values) -> Field2D:
    return Field2D(values=values)


def _energy_of(x: np.ndarray) -> float:
    return eie_energy(_field(x))


# === energy ===

def test_energy_of_zero_and_constant_fields():
    assert eie_energy(Field2D.zeros(6, 6)) == 0.0
    assert eie_energy(_field(np.full((5, 7), 3.0))) == pytest.approx(0.0, abs=1e-24)


def test_energy_of_impulse(oracle):
    values = np.zeros((4, 4))
    values[1, 2] = 1.0
    # every coefficient has magnitude 1/16
    expected = oracle.radius(4, 4).sum() / 256
    assert eie_energy(_field(values)) == pytest.approx(expected, rel=1e-12)


def test_energy_of_single_pixel_grid():
    assert eie_energy(_field([[4.0]])) == 0.0


def test_energy_matches_direct_sum(oracle, rng_for):
    rng = rng_for(77)
    for _ in range(20):
        h, w = rng.integers(2, 13, size=2)
        values = rng.uniform(-1, 1, size=(h, w))
        assert eie_energy(_field(values)) == pytest.approx(oracle.energy(values), rel=1e-10)


def test_energy_properties(rng_for):
    rng = rng_for(101)
    for _ in range(50):
        h, w = rng.integers(2, 11, size=2)
        f = rng.uniform(-1, 1, size=(h, w))
        g = rng.uniform(-1, 1, size=(h, w))
        e = _energy_of(f)
        tol = 1e-10 * max(e, 1.0)

        assert e >= 0.0
        assert abs(_energy_of(f + 0.7) - e) <= tol
        assert abs(_energy_of(np.roll(f, (1, -2), axis=(0, 1))) - e) <= tol
        assert abs(_energy_of(f[::-1]) - e) <= tol
        assert abs(_energy_of(f[:, ::-1]) - e) <= tol
        if h == w:
            assert abs(_energy_of(np.rot90(f)) - e) <= tol
        assert _energy_of(2.5 * f) == pytest.approx(6.25 * e, rel=1e-10, abs=1e-14)

        parts = energy_decompose(_field(f), _field(g))
        assert parts.total == pytest.approx(_energy_of(f - g), rel=1e-10, abs=1e-14)
        assert parts.self_pred == pytest.approx(e, rel=1e-12, abs=1e-15)


# === gradient ===

def test_gradient_of_zero_is_zero():
    assert not eie_gradient(Field2D.zeros(5, 5)).values.any()


def test_gradient_is_linear(rng_for):
    rng = rng_for(12)
    f = rng.normal(size=(6, 7))
    g = rng.normal(size=(6, 7))
    lhs = eie_gradient(_field(2.0 * f - 3.0 * g)).values
    rhs = 2.0 * eie_gradient(_field(f)).values - 3.0 * eie_gradient(_field(g)).values
    assert np.abs(lhs - rhs).max() <= 1e-12


def test_gradient_is_blind_to_constants(rng_for):
    f = rng_for(14).normal(size=(5, 5))
    diff = eie_gradient(_field(f + 2.0)).values - eie_gradient(_field(f)).values
    assert np.abs(diff).max() <= 1e-13


def test_gradient_matches_finite_differences(oracle, rng_for):
    values = rng_for(5).uniform(-1, 1, size=(8, 8))
    numeric = oracle.gradient(_energy_of, values)
    assert oracle.rel(eie_gradient(_field(values)).values, numeric) <= 1e-6


@pytest.mark.parametrize("shape", [(4, 4), (5, 7), (8, 8)])
def test_gradient_matches_direct_energy(oracle, rng_for, shape):
    values = rng_for(sum(shape)).uniform(-1, 1, size=shape)
    numeric = oracle.gradient(oracle.energy, values)
    assert oracle.rel(eie_gradient(_field(values)).values, numeric) <= 1e-6


# === decomposition ===

def _shifted_pair(size, rows, cols, shift):
    g = np.zeros((size, size))
    g[rows, cols] = 1.0
    return np.roll(g, shift, axis=(0, 1)), g


OVERLAPPING_TRANSLATES = [
    ("vertical bar 2 wide", slice(2, 14), slice(4, 6), (0, 1)),
    ("vertical bar 3 wide", slice(2, 14), slice(4, 7), (0, 1)),
    ("vertical bar 4 wide", slice(3, 13), slice(4, 8), (0, 1)),
    ("horizontal bar 2 tall", slice(4, 6), slice(2, 14), (1, 0)),
    ("horizontal bar 3 tall", slice(4, 7), slice(3, 13), (1, 0)),
    ("2x2 block", slice(5, 7), slice(5, 7), (0, 1)),
    ("3x3 block right", slice(5, 8), slice(5, 8), (0, 1)),
    ("3x3 block down", slice(5, 8), slice(5, 8), (1, 0)),
    ("4x4 block right", slice(5, 9), slice(5, 9), (0, 1)),
    ("4x4 block down", slice(5, 9), slice(5, 9), (1, 0)),
    ("3x5 rectangle", slice(5, 8), slice(4, 9), (0, 1)),
    ("full-height bar shifted 2", slice(0, 16), slice(4, 7), (0, 2)),
]


@pytest.mark.parametrize(
    "rows,cols,shift", [c[1:] for c in OVERLAPPING_TRANSLATES], ids=[c[0] for c in OVERLAPPING_TRANSLATES]
)
def test_overlapping_translates_attract(rows, cols, shift):
    pred, gt = _shifted_pair(16, rows, cols, shift)
    parts = energy_decompose(_field(pred), _field(gt))
    assert parts.interaction < 0
    assert parts.self_pred == pytest.approx(parts.self_gt, rel=1e-12)


def test_identical_fields_cancel():
    _, gt = _shifted_pair(16, slice(2, 14), slice(4, 6), (0, 0))
    parts = energy_decompose(_field(gt), _field(gt))
    assert abs(parts.interaction + 2 * parts.self_gt) <= 1e-10
    assert abs(parts.total) <= 1e-10


def test_decompose_requires_matching_grids():
    with pytest.raises(DimensionError):
        energy_decompose(Field2D.zeros(4, 4), Field2D.zeros(4, 5))


# === softmax and cross-entropy ===

def _logits(values) -> LogitStack:
    return LogitStack(values=values)


def test_softmax_of_equal_logits():
    probs = softmax(_logits(np.zeros((4, 3, 3)))).values
    assert np.allclose(probs, 0.25)


def test_softmax_of_large_gap():
    values = np.zeros((2, 1, 1))
    values[0] = 20.0
    probs = softmax(_logits(values)).values
    assert probs[0, 0, 0] == pytest.approx(1 / (1 + math.exp(-20)), rel=1e-14)
    assert probs[1, 0, 0] == pytest.approx(math.exp(-20) / (1 + math.exp(-20)), rel=1e-12)


def test_softmax_is_shift_invariant(rng_for):
    values = rng_for(4).normal(size=(3, 4, 5))
    a = softmax(_logits(values)).values
    b = softmax(_logits(values + 100.0)).values
    assert np.abs(a - b).max() <= 1e-12


def _saturated(class_map: np.ndarray, classes: int, correct: bool = True) -> LogitStack:
    values = np.full((classes,) + class_map.shape, -50.0)
    target = class_map if correct else (class_map + 1) % classes
    for c in range(classes):
        values[c][target == c] = 50.0
    return _logits(values)


def test_cross_entropy_saturated():
    class_map = np.array([[0, 1], [1, 0]])
    labels = one_hot(class_map, 2)
    assert cross_entropy(_saturated(class_map, 2), labels) <= 1e-12
    assert cross_entropy(_saturated(class_map, 2, correct=False), labels) == pytest.approx(100.0)


def test_cross_entropy_of_uniform_logits():
    labels = one_hot(np.array([[0, 1, 2], [2, 1, 0]]), 3)
    assert cross_entropy(_logits(np.zeros((3, 2, 3))), labels) == pytest.approx(math.log(3))


def test_cross_entropy_by_hand():
    values = np.zeros((2, 1, 2))
    values[1, 0, 0] = math.log(3.0)
    labels = one_hot(np.array([[1, 0]]), 2)
    expected = (-math.log(0.75) + math.log(2.0)) / 2
    assert cross_entropy(_logits(values), labels) == pytest.approx(expected, rel=1e-12)


def test_cross_entropy_skips_ignored_pixels():
    values = np.zeros((2, 1, 2))
    values[1, 0, 0] = math.log(3.0)
    labels = one_hot(np.array([[1, 255]]), 2)
    assert cross_entropy(_logits(values), labels) == pytest.approx(-math.log(0.75), rel=1e-12)

    everything_ignored = one_hot(np.array([[255, 255]]), 2)
    assert cross_entropy(_logits(values), everything_ignored) == 0.0


# === combined loss ===

def _random_case(rng, classes=3, h=6, w=6):
    logits = _logits(rng.normal(0, 2, size=(classes, h, w)))
    labels = one_hot(rng.integers(0, classes, size=(h, w)), classes)
    return logits, labels


def test_combined_without_eie_is_cross_entropy(rng_for):
    logits, labels = _random_case(rng_for(1))
    cfg = EieConfig(lambda1=0.0, lambda2=0.5)
    breakdown = combined_loss(logits, labels, cfg)
    assert breakdown.total == pytest.approx(0.5 * cross_entropy(logits, labels), rel=1e-14)


def test_combined_saturated_is_zero():
    class_map = np.array([[0, 1, 2, 0], [1, 2, 0, 1], [2, 0, 1, 2], [0, 1, 2, 0]])
    breakdown = combined_loss(_saturated(class_map, 3), one_hot(class_map, 3), EieConfig())
    assert breakdown.total <= 1e-12
    assert all(e <= 1e-12 for e in breakdown.eie_per_class)


def test_combined_composition(rng_for):
    logits, labels = _random_case(rng_for(9), classes=4)
    cfg = EieConfig(alpha=1.5, lambda1=2.0, lambda2=0.25)
    breakdown = combined_loss(logits, labels, cfg)
    probs = softmax(logits)
    expected = [
        eie_energy(combined_field(probs.layer(i), labels.layer(i), cfg.alpha))
        for i in range(4)
    ]
    assert breakdown.eie_per_class == pytest.approx(expected, rel=1e-14)
    assert breakdown.eie_total == pytest.approx(math.fsum(expected), rel=1e-14)
    assert breakdown.ce == pytest.approx(cross_entropy(logits, labels), rel=1e-14)
    assert breakdown.total == pytest.approx(2.0 * breakdown.eie_total + 0.25 * breakdown.ce, rel=1e-14)


def test_combined_rejects_single_class():
    with pytest.raises(DimensionError):
        combined_loss(_logits(np.zeros((1, 3, 3))), one_hot(np.zeros((3, 3), dtype=int), 1), EieConfig())


def test_combined_rejects_mismatched_classes():
    with pytest.raises(DimensionError):
        combined_loss(_logits(np.zeros((3, 3, 3))), one_hot(np.zeros((3, 3), dtype=int), 2), EieConfig())


def test_combined_rejects_mismatched_grids():
    with pytest.raises(DimensionError):
        combined_loss(_logits(np.zeros((2, 3, 4))), one_hot(np.zeros((3, 3), dtype=int), 2), EieConfig())


# === backward ===

def test_backward_without_eie_is_cross_entropy_gradient(rng_for):
    logits, labels = _random_case(rng_for(2))
    grad = combined_loss_backward(logits, labels, EieConfig(lambda1=0.0, lambda2=1.0)).values
    expected = (softmax(logits).values - labels.values) / labels.valid_count
    assert np.abs(grad - expected).max() <= 1e-15


def test_backward_commutes_with_class_permutation(rng_for):
    logits, labels = _random_case(rng_for(3), classes=3)
    order = [2, 0, 1]
    cfg = EieConfig(alpha=1.2, lambda1=1.0, lambda2=1.0)
    grad = combined_loss_backward(logits, labels, cfg).values
    permuted = combined_loss_backward(
        _logits(logits.values[order]), LabelStack(values=labels.values[order]), cfg
    ).values
    assert np.abs(permuted - grad[order]).max() <= 1e-14


def test_backward_matches_finite_differences(rng_for):
    logits, labels = _random_case(rng_for(13), classes=3)
    cfg = EieConfig(alpha=1.5, lambda1=2.0, lambda2=0.5)
    numeric = central_difference(
        lambda x: combined_loss(_logits(x), labels, cfg).total, logits.values, 1e-6
    )
    analytic = combined_loss_backward(logits, labels, cfg).values
    assert relative_error(analytic, numeric) <= 1e-5


@pytest.mark.parametrize("size", [4, 6, 8])
@pytest.mark.parametrize("classes", [2, 3, 5])
def test_backward_across_sizes(rng_for, size, classes):
    cfg = EieConfig()
    for seed in range(10):
        rng = rng_for(1000 * classes + 100 * size + seed)
        logits, labels = _random_case(rng, classes=classes, h=size, w=size)
        numeric = central_difference(
            lambda x: combined_loss(_logits(x), labels, cfg).total, logits.values, 1e-6
        )
        analytic = combined_loss_backward(logits, labels, cfg).values
        assert relative_error(analytic, numeric) <= 1e-5, f"seed {seed}"


def test_backward_is_zero_at_ignored_pixels(rng_for):
    rng = rng_for(15)
    class_map = rng.integers(0, 3, size=(5, 5))
    class_map[2, 3] = 255
    labels = one_hot(class_map, 3)
    logits = _logits(rng.normal(size=(3, 5, 5)))
    grad = combined_loss_backward(logits, labels, EieConfig()).values
    assert not grad[:, 2, 3].any()


def test_loss_and_grad_agree_with_separate_calls(rng_for):
    logits, labels = _random_case(rng_for(16))
    cfg = EieConfig(alpha=0.8)
    breakdown, grad = combined_loss_and_grad(logits, labels, cfg)
    assert breakdown == combined_loss(logits, labels, cfg)
    assert np.array_equal(grad.values, combined_loss_backward(logits, labels, cfg).values)


def test_gradcheck_report_passes():
    report = gradcheck_report(8, 8, 3, 42)
    assert report.passed
    assert {r.check for r in report.results} == {"eie_gradient", "combined_loss_backward"}
    assert report.max_error <= 1e-5


def test_gradcheck_rejects_degenerate_inputs():
    with pytest.raises(ValueError):
        gradcheck_report(8, 8, 1, 0)
    with pytest.raises(ValueError):
        gradcheck_report(1, 8, 2, 0)
    with pytest.raises(ValueError):
        central_difference(lambda x: 0.0, np.zeros(2), 0.0)
