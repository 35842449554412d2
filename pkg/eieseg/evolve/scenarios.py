"""
Bundled evolution scenarios

Constructed analogues of curve attraction and merging: a broken lane that
should heal into one component, a displaced disk pulled onto its target and
a wiggly curve that straightens. Step sizes are pinned per scenario because
the stable range shrinks as the grid grows (see stable_eta).
"""
from typing import Callable, Dict, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..common.models import EvolveParams, Field2D

Builder = Callable[[], Tuple[Field2D, Field2D]]


class Scenario(BaseModel):
    """Pinned parameters of one demo scenario"""
    model_config = ConfigDict(frozen=True)

    name: str
    height: int
    width: int
    eta: float = Field(..., gt=0)
    steps: int = Field(..., ge=1)
    alpha: float = 1.0
    snapshot_every: int = 50
    description: str

    def params(self) -> EvolveParams:
        return EvolveParams(
            eta=self.eta,
            steps=self.steps,
            alpha=self.alpha,
            snapshot_every=self.snapshot_every
        )

    def build(self) -> Tuple[Field2D, Field2D]:
        """(gt, init) fields"""
        return BUILDERS[self.name]()


def occluded_lane() -> Tuple[Field2D, Field2D]:
    """48×48 vertical 2-px bar; the prediction misses a 6-row stretch"""
    gt = np.zeros((48, 48))
    gt[4:44, 23:25] = 1.0
    init = gt.copy()
    init[21:27, :] = 0.0
    return Field2D(values=gt), Field2D(values=init)


def _disk(size: int, cy: float, cx: float, radius: float) -> np.ndarray:
    y, x = np.mgrid[0:size, 0:size]
    return ((y - cy) ** 2 + (x - cx) ** 2 <= radius * radius).astype(np.float64)


def disk_attraction() -> Tuple[Field2D, Field2D]:
    """32×32 radius-6 disk; the prediction sits 4 px to the right"""
    return Field2D(values=_disk(32, 16, 16, 6)), Field2D(values=_disk(32, 16, 20, 6))


def wiggly_curve() -> Tuple[Field2D, Field2D]:
    """32×32 straight 1-px line against a 4-connected sinusoidal curve"""
    gt = np.zeros((32, 32))
    gt[4:28, 16] = 1.0

    init = np.zeros((32, 32))
    previous = None
    for row in range(4, 28):
        col = 16 + int(np.rint(4.0 * np.sin(2.0 * np.pi * (row - 4) / 12.0)))
        if previous is None:
            init[row, col] = 1.0
        else:
            # bridge horizontally so consecutive rows share an edge
            low, high = sorted((previous, col))
            init[row, low:high + 1] = 1.0
        previous = col
    return Field2D(values=gt), Field2D(values=init)


BUILDERS: Dict[str, Builder] = {
    "occluded_lane": occluded_lane,
    "disk_attraction": disk_attraction,
    "wiggly_curve": wiggly_curve,
}

DEMO_MANIFEST: Dict[str, Scenario] = {
    "occluded_lane": Scenario(
        name="occluded_lane",
        height=48,
        width=48,
        eta=16.0,
        steps=500,
        description="broken 2-px lane heals into a single component"
    ),
    "disk_attraction": Scenario(
        name="disk_attraction",
        height=32,
        width=32,
        eta=10.0,
        steps=200,
        description="displaced disk is attracted onto the ground truth"
    ),
    "wiggly_curve": Scenario(
        name="wiggly_curve",
        height=32,
        width=32,
        eta=10.0,
        steps=400,
        description="wiggly curve straightens toward a line"
    ),
}


def get_scenario(name: str) -> Scenario:
    """
    Raises:
        KeyError: Unknown scenario name
    """
    try:
        return DEMO_MANIFEST[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(DEMO_MANIFEST)}") from None
