"""
Gradient-flow simulator

Evolves a prediction probability field σ directly under the EIE gradient,
with no network in between: projected gradient descent on
σ ↦ eie_energy(α·σ − gt) over the box [0, 1].
"""
import logging
import math
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from ..common.config import get_config
from ..common.errors import DivergenceError
from ..common.models import EvolveParams, EvolveState, Field2D, Trajectory
from ..fields.core import connected_components, require_same_shape
from ..losses.energy import eie_energy, eie_gradient
from ..spectral.transform import gradient_lipschitz
from ..storage.reports import write_trajectory_csv
from ..storage.tensor_files import write_pgm

logger = logging.getLogger(__name__)


def stable_eta(h: int, w: int, alpha: float = 1.0) -> float:
    """1/L for the σ-Lipschitz constant L; any eta ≤ 2/L never raises the energy"""
    return 1.0 / gradient_lipschitz(h, w, alpha)


def _energy(sigma: np.ndarray, gt: Field2D, alpha: float) -> float:
    return eie_energy(Field2D(values=alpha * sigma - gt.values))


def initial_state(init: Field2D, gt: Field2D, alpha: float = 1.0) -> EvolveState:
    """
    Step-0 state for an initial prediction

    Raises:
        DimensionError: If the grids differ
        ValueError: If init leaves [0, 1]
    """
    require_same_shape(init, gt, what="initial prediction and ground truth")
    if init.values.min() < 0.0 or init.values.max() > 1.0:
        raise ValueError("initial prediction must lie in [0, 1]")
    return EvolveState(step=0, sigma=init, energy=_energy(init.values, gt, alpha))


def evolve_step(state: EvolveState, gt: Field2D, params: EvolveParams) -> EvolveState:
    """
    One projected gradient step

        σ' = clamp(σ − eta·α·eie_gradient(α·σ − gt), 0, 1)

    Raises:
        DimensionError: If the grids differ
        DivergenceError: If the update is not finite
    """
    require_same_shape(state.sigma, gt, what="prediction and ground truth")
    alpha = params.alpha
    sigma = state.sigma.values
    grad = eie_gradient(Field2D(values=alpha * sigma - gt.values)).values

    with np.errstate(over="ignore", invalid="ignore"):
        updated = sigma - params.eta * alpha * grad
    if not np.all(np.isfinite(updated)):
        raise DivergenceError("evolution produced non-finite values", step=state.step + 1)
    updated = np.clip(updated, 0.0, 1.0)

    energy = _energy(updated, gt, alpha)
    if not math.isfinite(energy):
        raise DivergenceError("energy is not finite", step=state.step + 1)
    return EvolveState(step=state.step + 1, sigma=Field2D(values=updated), energy=energy)


class InstabilityMonitor:
    """
    Watches an energy sequence for runs of consecutive increases

    A run longer than `patience` marks the trajectory unstable and logs a
    single warning; the run keeps going.
    """

    def __init__(self, patience: int):
        self.patience = patience
        self.streak = 0
        self.unstable = False
        self._last: Optional[float] = None

    def update(self, step: int, energy: float) -> bool:
        """Feed the next energy; returns True the first time the run turns unstable"""
        if self._last is not None and energy > self._last:
            self.streak += 1
        else:
            self.streak = 0
        self._last = energy

        if self.streak > self.patience and not self.unstable:
            self.unstable = True
            logger.warning(
                "energy rose for %d consecutive steps (step %d); eta is likely too large",
                self.streak, step
            )
            return True
        return False


def run_evolution(
    gt: Field2D,
    init: Field2D,
    params: EvolveParams,
    out_dir: Optional[Union[str, Path]] = None,
    patience: Optional[int] = None
) -> Trajectory:
    """
    Iterate evolve_step and record the trajectory

    Energy and the 4-connected component count of {σ > threshold} are
    recorded for step 0 and after every step. Snapshots are kept at step 0,
    every snapshot_every steps and at the final step.

    Args:
        gt: Ground-truth mask
        init: Initial prediction in [0, 1]
        params: Step size, step count, α, snapshot cadence, threshold
        out_dir: When given, trajectory.csv and PGM snapshots are written there
        patience: Consecutive increases tolerated before the unstable warning
            (defaults to EvolveSettings.unstable_patience)

    Returns:
        Trajectory

    Raises:
        DimensionError: If the grids differ
        DivergenceError: If the energy becomes non-finite
    """
    if patience is None:
        patience = get_config().evolve.unstable_patience

    state = initial_state(init, gt, params.alpha)
    limit = 2.0 / gradient_lipschitz(gt.height, gt.width, params.alpha)
    if params.eta > limit:
        logger.warning(
            "eta %.4g exceeds the monotone-descent bound %.4g for a %dx%d grid",
            params.eta, limit, gt.height, gt.width
        )

    monitor = InstabilityMonitor(patience)
    monitor.update(0, state.energy)
    energies = [state.energy]
    components = [connected_components(state.sigma, params.threshold)[0]]
    snapshots: List[Tuple[int, Field2D]] = [(0, state.sigma)]

    for _ in range(params.steps):
        state = evolve_step(state, gt, params)
        energies.append(state.energy)
        components.append(connected_components(state.sigma, params.threshold)[0])
        monitor.update(state.step, state.energy)
        if state.step % params.snapshot_every == 0 or state.step == params.steps:
            snapshots.append((state.step, state.sigma))
        logger.debug("step %d: energy %.6e, %d components", state.step, state.energy, components[-1])

    trajectory = Trajectory(
        energies=energies,
        components=components,
        snapshots=snapshots,
        final=state,
        unstable=monitor.unstable
    )
    logger.info(
        "evolution finished after %d steps: energy %.6e -> %.6e, %d components",
        params.steps, energies[0], energies[-1], trajectory.final_components
    )
    if out_dir is not None:
        save_trajectory(out_dir, trajectory)
    return trajectory


def snapshot_name(step: int) -> str:
    return f"snapshot_{step:05d}.pgm"


def save_trajectory(out_dir: Union[str, Path], trajectory: Trajectory) -> Path:
    """Write trajectory.csv and one PGM per snapshot; returns the CSV path"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "trajectory.csv"
    write_trajectory_csv(csv_path, trajectory)
    for step, sigma in trajectory.snapshots:
        write_pgm(out_dir / snapshot_name(step), sigma)
    return csv_path
