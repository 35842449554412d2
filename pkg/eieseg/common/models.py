"""
Data models for the segmentation-loss toolkit

Uses Pydantic for validation. Array-carrying models are frozen and hold
read-only float64 copies, so every instance is safe to share across threads.
"""
import math
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .config import LossSettings

ARRAY_MODEL = ConfigDict(arbitrary_types_allowed=True, frozen=True)

PROB_SUM_TOL = 1e-9
RANGE_TOL = 1e-12


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _real_array(value: Any, ndim: int, what: str) -> np.ndarray:
    array = np.array(value, dtype=np.float64)
    if array.ndim != ndim:
        raise ValueError(f"{what} must be {ndim}-dimensional, got shape {array.shape}")
    if any(n < 1 for n in array.shape):
        raise ValueError(f"{what} must have positive dimensions, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{what} contains non-finite values")
    return _readonly(array)


# === Fields and stacks ===

class Field2D(BaseModel):
    """Real-valued h×w scalar field (one class channel, a mask or a gradient map)"""
    model_config = ARRAY_MODEL

    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _check_values(cls, v: Any) -> np.ndarray:
        return _real_array(v, 2, "field")

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.height, self.width)

    @classmethod
    def zeros(cls, height: int, width: int) -> "Field2D":
        return cls(values=np.zeros((height, width)))


class CombinedField(Field2D):
    """D = α·σ(P)_i − Ĝ_i for one class"""
    alpha: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def _check_range(self) -> "CombinedField":
        low = float(self.values.min())
        high = float(self.values.max())
        if low < -1.0 - RANGE_TOL or high > self.alpha + RANGE_TOL:
            raise ValueError(
                f"combined field values must lie in [-1, {self.alpha}], got [{low}, {high}]"
            )
        return self


class _Stack(BaseModel):
    """N×h×w stack of class layers"""
    model_config = ARRAY_MODEL

    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _check_values(cls, v: Any) -> np.ndarray:
        return _real_array(v, 3, "stack")

    @property
    def classes(self) -> int:
        return int(self.values.shape[0])

    @property
    def height(self) -> int:
        return int(self.values.shape[1])

    @property
    def width(self) -> int:
        return int(self.values.shape[2])

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.height, self.width)

    def layer(self, index: int) -> Field2D:
        """Class layer as a Field2D"""
        return Field2D(values=self.values[index])

    @property
    def fields(self) -> List[Field2D]:
        return [self.layer(i) for i in range(self.classes)]


class LogitStack(_Stack):
    """Raw per-class scores P"""


class ProbStack(_Stack):
    """Softmax probabilities σ(P); every pixel sums to one"""

    @model_validator(mode="after")
    def _check_simplex(self) -> "ProbStack":
        if self.values.min() < -RANGE_TOL or self.values.max() > 1.0 + RANGE_TOL:
            raise ValueError("probabilities must lie in [0, 1]")
        deviation = np.abs(self.values.sum(axis=0) - 1.0).max()
        if deviation > PROB_SUM_TOL:
            raise ValueError(f"probabilities do not sum to 1 (max deviation {deviation:.3e})")
        return self


class LabelStack(_Stack):
    """One-hot ground truth Ĝ with an optional ignore mask (True = ignored)"""

    ignore_mask: Optional[np.ndarray] = None

    @field_validator("ignore_mask", mode="before")
    @classmethod
    def _check_ignore(cls, v: Any) -> Optional[np.ndarray]:
        if v is None:
            return None
        mask = np.array(v, dtype=bool)
        if mask.ndim != 2:
            raise ValueError(f"ignore mask must be 2-dimensional, got shape {mask.shape}")
        return _readonly(mask)

    @model_validator(mode="after")
    def _check_one_hot(self) -> "LabelStack":
        if not np.all((self.values == 0.0) | (self.values == 1.0)):
            raise ValueError("label layers must contain only 0 and 1")
        if self.ignore_mask is not None and self.ignore_mask.shape != self.shape:
            raise ValueError(
                f"ignore mask shape {self.ignore_mask.shape} does not match labels {self.shape}"
            )
        totals = self.values.sum(axis=0)
        ignored = self.ignored
        if np.any(totals[~ignored] != 1.0):
            raise ValueError("every non-ignored pixel needs exactly one active class")
        if np.any(totals[ignored] != 0.0):
            raise ValueError("ignored pixels must have all class layers at 0")
        return self

    @property
    def ignored(self) -> np.ndarray:
        """Boolean h×w mask of ignored pixels (all False when no mask is set)"""
        if self.ignore_mask is None:
            return np.zeros(self.shape, dtype=bool)
        return self.ignore_mask

    @property
    def valid_count(self) -> int:
        return int(self.height * self.width - self.ignored.sum())

    def class_map(self) -> np.ndarray:
        """Integer class per pixel, −1 at ignored pixels"""
        classes = np.argmax(self.values, axis=0).astype(np.int64)
        classes[self.ignored] = -1
        return classes


# === Spectral ===

class SpectralField(BaseModel):
    """Forward-normalised DFT coefficients d_mn"""
    model_config = ARRAY_MODEL

    coefficients: np.ndarray

    @field_validator("coefficients", mode="before")
    @classmethod
    def _check_coefficients(cls, v: Any) -> np.ndarray:
        array = np.array(v, dtype=np.complex128)
        if array.ndim != 2 or any(n < 1 for n in array.shape):
            raise ValueError(f"spectrum must be a non-empty 2D array, got shape {array.shape}")
        if not np.all(np.isfinite(array)):
            raise ValueError("spectrum contains non-finite coefficients")
        return _readonly(array)

    @property
    def height(self) -> int:
        return int(self.coefficients.shape[0])

    @property
    def width(self) -> int:
        return int(self.coefficients.shape[1])


class RadiusWeights(BaseModel):
    """sqrt(k_m² + k_n²) per frequency bin, signed integer frequencies"""
    model_config = ARRAY_MODEL

    weights: np.ndarray

    @field_validator("weights", mode="before")
    @classmethod
    def _check_weights(cls, v: Any) -> np.ndarray:
        array = _real_array(v, 2, "weights")
        if array.min() < 0 or array[0, 0] != 0.0:
            raise ValueError("weights must be non-negative with a zero DC bin")
        return array

    @property
    def height(self) -> int:
        return int(self.weights.shape[0])

    @property
    def width(self) -> int:
        return int(self.weights.shape[1])


# === Loss ===

class EieConfig(BaseModel):
    """Loss hyperparameters α, λ1, λ2"""
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(default=1.0, gt=0)
    lambda1: float = Field(default=1.0, ge=0)
    lambda2: float = Field(default=1.0, ge=0)
    frequency_convention: Literal["integer-cycles"] = "integer-cycles"

    @model_validator(mode="after")
    def _check_weights(self) -> "EieConfig":
        if self.lambda1 + self.lambda2 <= 0:
            raise ValueError("lambda1 + lambda2 must be positive")
        return self

    @classmethod
    def from_settings(cls, settings: Optional[LossSettings] = None, **overrides: Any) -> "EieConfig":
        """Build from LossSettings, letting non-None overrides win"""
        settings = settings or LossSettings()
        values = {"alpha": settings.alpha, "lambda1": settings.lambda1, "lambda2": settings.lambda2}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class LossBreakdown(BaseModel):
    """Per-class EIE energies, CE and the weighted total"""
    model_config = ConfigDict(frozen=True)

    eie_per_class: List[float]
    eie_total: float
    ce: float
    total: float

    @model_validator(mode="after")
    def _check_consistency(self) -> "LossBreakdown":
        numbers = list(self.eie_per_class) + [self.eie_total, self.ce, self.total]
        if not all(math.isfinite(x) for x in numbers):
            raise ValueError("loss components must be finite")
        if abs(self.eie_total - math.fsum(self.eie_per_class)) > 1e-12 * max(1.0, abs(self.eie_total)):
            raise ValueError("eie_total does not match the per-class sum")
        return self


class EnergyDecomposition(BaseModel):
    """Self energies of prediction and ground truth plus their interaction"""
    model_config = ConfigDict(frozen=True)

    self_pred: float
    self_gt: float
    interaction: float

    @property
    def total(self) -> float:
        return self.self_pred + self.self_gt + self.interaction


# === Evolution ===

class EvolveParams(BaseModel):
    """Step size and run length for the gradient-flow simulator"""
    model_config = ConfigDict(frozen=True)

    eta: float = Field(..., ge=0, description="Gradient step size")
    steps: int = Field(..., ge=1)
    alpha: float = Field(default=1.0, gt=0)
    snapshot_every: int = Field(default=50, ge=1)
    threshold: float = Field(default=0.5, gt=0, lt=1)


class EvolveState(BaseModel):
    """Current prediction probability field and its energy"""
    model_config = ConfigDict(frozen=True)

    step: int = Field(default=0, ge=0)
    sigma: Field2D
    energy: float = Field(..., ge=0)

    @model_validator(mode="after")
    def _check_sigma(self) -> "EvolveState":
        if self.sigma.values.min() < 0.0 or self.sigma.values.max() > 1.0:
            raise ValueError("sigma must stay within [0, 1]")
        if not math.isfinite(self.energy):
            raise ValueError("energy must be finite")
        return self


class Trajectory(BaseModel):
    """Recorded run of the simulator"""
    model_config = ConfigDict(frozen=True)

    energies: List[float]
    components: List[int]
    snapshots: List[Tuple[int, Field2D]]
    final: EvolveState
    unstable: bool = False

    @property
    def final_components(self) -> int:
        return self.components[-1]


# === Toy training ===

class Box(BaseModel):
    """Axis-aligned rectangle, half-open [top, bottom) × [left, right)"""
    model_config = ConfigDict(frozen=True)

    top: int = Field(..., ge=0)
    left: int = Field(..., ge=0)
    bottom: int
    right: int

    @model_validator(mode="after")
    def _check_extent(self) -> "Box":
        if self.bottom <= self.top or self.right <= self.left:
            raise ValueError("box must have positive extent")
        return self

    @property
    def slices(self) -> Tuple[slice, slice]:
        return (slice(self.top, self.bottom), slice(self.left, self.right))


class SyntheticScene(BaseModel):
    """Grayscale image with its one-hot labels and occlusion boxes"""
    model_config = ARRAY_MODEL

    kind: Literal["lanes", "blobs", "mixed"]
    image: Field2D
    labels: LabelStack
    occlusion_boxes: List[Box] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_scene(self) -> "SyntheticScene":
        if self.image.shape != self.labels.shape:
            raise ValueError("image and labels must share a grid")
        if self.image.values.min() < 0 or self.image.values.max() > 1:
            raise ValueError("image intensities must lie in [0, 1]")
        for box in self.occlusion_boxes:
            if box.bottom > self.image.height or box.right > self.image.width:
                raise ValueError(f"occlusion box {box} exceeds the image")
        return self


class PixelClassifier(BaseModel):
    """Linear per-pixel classifier: logits = weights · features + bias"""
    model_config = ARRAY_MODEL

    weights: np.ndarray
    bias: np.ndarray

    @field_validator("weights", mode="before")
    @classmethod
    def _check_weights(cls, v: Any) -> np.ndarray:
        return _real_array(v, 2, "weights")

    @field_validator("bias", mode="before")
    @classmethod
    def _check_bias(cls, v: Any) -> np.ndarray:
        return _real_array(v, 1, "bias")

    @model_validator(mode="after")
    def _check_shapes(self) -> "PixelClassifier":
        if self.bias.shape[0] != self.weights.shape[0]:
            raise ValueError("bias length must equal the class count")
        return self

    @property
    def classes(self) -> int:
        return int(self.weights.shape[0])

    @property
    def feature_count(self) -> int:
        return int(self.weights.shape[1])


class ModelGradients(BaseModel):
    """Parameter gradients of a PixelClassifier"""
    model_config = ARRAY_MODEL

    weights: np.ndarray
    bias: np.ndarray


class TrainConfig(BaseModel):
    """Toy training run configuration"""
    model_config = ConfigDict(frozen=True)

    epochs: int = Field(..., ge=1)
    seed: int = Field(default=0, ge=0)
    learning_rate: float = Field(default=0.5, gt=0)
    eie: EieConfig = Field(default_factory=EieConfig)
    scene_kind: Literal["lanes", "blobs", "mixed"] = "mixed"
    train_count: int = Field(default=6, ge=1)
    val_count: int = Field(default=4, ge=1)
    size: int = Field(default=32, ge=16)
    init_scale: float = Field(default=0.01, ge=0)


class ValidationScores(BaseModel):
    """Pooled scores of one model over the validation scenes"""
    model_config = ConfigDict(frozen=True)

    iou: List[float]  # NaN for classes absent from prediction and truth
    miou: float
    loss: float
    pixel_accuracy: float
    thin_f1: float


class EpochRecord(BaseModel):
    """Training curves for one epoch"""
    model_config = ConfigDict(frozen=True)

    epoch: int
    total: float
    ce: float
    eie: float
    val_miou: float
    val_iou: List[float]
    val_loss: float
    val_pixel_accuracy: float
    val_pixel_f1: float


class TrainReport(BaseModel):
    """Full record of a training arm"""
    model_config = ConfigDict(frozen=True)

    arm: str
    config: TrainConfig
    classes: int
    epochs: List[EpochRecord]
    wall_clock_seconds: float
    model: PixelClassifier

    @property
    def final(self) -> EpochRecord:
        return self.epochs[-1]


# === Metrics ===

class ConfusionCounts(BaseModel):
    """Per-class TP/FP/FN over non-ignored pixels"""
    model_config = ConfigDict(frozen=True)

    tp: List[int]
    fp: List[int]
    fn: List[int]

    @property
    def classes(self) -> int:
        return len(self.tp)

    def merge(self, other: "ConfusionCounts") -> "ConfusionCounts":
        """Element-wise sum, used to pool counts across images"""
        return ConfusionCounts(
            tp=[a + b for a, b in zip(self.tp, other.tp)],
            fp=[a + b for a, b in zip(self.fp, other.fp)],
            fn=[a + b for a, b in zip(self.fn, other.fn)]
        )


class IoUReport(BaseModel):
    """Per-class IoU (None for classes absent from both maps) and mIoU"""
    model_config = ConfigDict(frozen=True)

    per_class: List[Optional[float]]
    miou: float
    counts: ConfusionCounts


class LanePoints(BaseModel):
    """Lane coordinates: one column (or None when missing) per sampled row, per lane"""
    model_config = ConfigDict(frozen=True)

    rows: List[int]
    lanes: List[List[Optional[int]]]

    @model_validator(mode="after")
    def _check_rows(self) -> "LanePoints":
        if any(b <= a for a, b in zip(self.rows, self.rows[1:])):
            raise ValueError("rows must be strictly increasing")
        for i, lane in enumerate(self.lanes):
            if len(lane) != len(self.rows):
                raise ValueError(f"lane {i} has {len(lane)} entries for {len(self.rows)} rows")
        return self

    def lane_map(self, index: int) -> Dict[int, int]:
        """row -> column for the present points of one lane"""
        return {r: c for r, c in zip(self.rows, self.lanes[index]) if c is not None}

    @property
    def point_count(self) -> int:
        return sum(c is not None for lane in self.lanes for c in lane)


class MetricResult(BaseModel):
    """Result from a metric calculation"""
    name: str
    value: float
    metadata: Dict[str, Any] = Field(default_factory=dict)


# === Gradient checks ===

class GradcheckResult(BaseModel):
    """Worst finite-difference mismatch of one analytic gradient"""
    model_config = ConfigDict(frozen=True)

    check: str
    max_error: float
    tolerance: float = Field(..., gt=0)
    class_index: Optional[int] = None
    pixel: Tuple[int, int]

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance


class GradcheckReport(BaseModel):
    """All gradient checks of one randomized instance"""
    model_config = ConfigDict(frozen=True)

    height: int
    width: int
    classes: int
    seed: int
    eps: float
    results: List[GradcheckResult]

    @property
    def max_error(self) -> float:
        return max(r.max_error for r in self.results)

    @property
    def worst(self) -> GradcheckResult:
        return max(self.results, key=lambda r: r.max_error)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)
