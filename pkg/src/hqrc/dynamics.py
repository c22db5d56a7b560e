"""Ground-truth trajectories for the Lorenz63 and double-scroll benchmarks.

Fixed-step RK4 integration (optionally substepped below the sampling
interval) and max-abs normalization of the training range.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import ConfigError, NumericFault

LORENZ63_IC = (17.67715816276679, 12.931379185960404, 43.91404334248268)
DOUBLE_SCROLL_IC = (0.37926545, 0.058339, -0.08167691)

_SINH_GUARD = 700.0  # |arg| above this would overflow float64 sinh


def lorenz63_deriv(p) -> np.ndarray:
    """Convective flow (sigma=10, rho=28, b=8/3): uniform heating below,
    cooling above."""
    x, y, z = p
    return np.array([10.0 * (y - x), x * (28.0 - z) - y, x * y - 8.0 * z / 3.0])


def double_scroll_deriv(p, v1_sign: float = 1.0) -> np.ndarray:
    """Dimensionless double-scroll circuit (R1=1.2, R2=3.44, R4=0.193,
    beta=11.6, Ir=2.25e-5), state (V1, V2, I).

    ``v1_sign`` flips the V1/R1 self-term for comparison against other
    formulations of the circuit; +1 is the chaotic form used here.
    """
    V1, V2, I = p
    dv = V1 - V2
    arg = 11.6 * dv
    if abs(arg) > _SINH_GUARD:
        raise NumericFault(f"sinh argument {arg:.3g} exceeds the overflow guard")
    sh = 2.0 * 2.25e-5 * np.sinh(arg)
    return np.array(
        [v1_sign * V1 / 1.2 - dv / 3.44 - sh, dv / 3.44 + sh - I, V2 - 0.193 * I]
    )


@dataclass(frozen=True)
class OdeSystem:
    """A 3-dimensional autonomous flow sampled at fixed increments.

    ``substeps`` internal RK4 steps are taken per sampling interval ``dt``;
    the double-scroll needs this because plain RK4 at dt=0.25 is unstable
    against the stiff sinh term.
    """

    name: str
    deriv: Callable[[np.ndarray], np.ndarray]
    dt: float
    default_ic: tuple[float, ...]
    substeps: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.substeps < 1:
            raise ConfigError("substeps must be >= 1")


def lorenz63(dt: float = 0.01) -> OdeSystem:
    return OdeSystem("lorenz63", lorenz63_deriv, dt, LORENZ63_IC)


def double_scroll(dt: float = 0.25, substeps: int = 25, v1_sign: float = 1.0) -> OdeSystem:
    deriv = lambda p: double_scroll_deriv(p, v1_sign)
    return OdeSystem("double_scroll", deriv, dt, DOUBLE_SCROLL_IC, substeps=substeps)


SYSTEMS = {"lorenz63": lorenz63, "double_scroll": double_scroll}


@dataclass
class Trajectory:
    """Time-indexed states at a fixed sampling step dt."""

    dt: float
    points: np.ndarray  # (n_points, D)
    normalized: bool = False

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2:
            raise ConfigError("trajectory points must be a 2-d array")

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self))

    def slice(self, start: int, stop: int) -> "Trajectory":
        return Trajectory(self.dt, self.points[start:stop], self.normalized)


def integrate_rk4(system: OdeSystem, x0, steps: int) -> Trajectory:
    """Classical fixed-step RK4 from x0; returns steps+1 points including x0."""
    if steps < 1:
        raise ConfigError("steps must be >= 1")
    h = system.dt / system.substeps
    p = np.asarray(x0, dtype=float)
    out = np.empty((steps + 1, p.shape[0]))
    out[0] = p
    deriv = system.deriv
    for i in range(steps):
        for _ in range(system.substeps):
            k1 = deriv(p)
            k2 = deriv(p + 0.5 * h * k1)
            k3 = deriv(p + 0.5 * h * k2)
            k4 = deriv(p + h * k3)
            p = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(p)):
            raise NumericFault(f"integration diverged at step {i + 1}")
        out[i + 1] = p
    return Trajectory(system.dt, out)


@dataclass(frozen=True)
class Normalizer:
    """Scale = largest absolute component value over the fitted segment."""

    scale: float

    def apply(self, traj: Trajectory) -> Trajectory:
        return Trajectory(traj.dt, traj.points / self.scale, normalized=True)

    def invert(self, traj: Trajectory) -> Trajectory:
        return Trajectory(traj.dt, traj.points * self.scale, normalized=False)

    def apply_points(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) / self.scale

    def invert_points(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) * self.scale


def fit_normalizer(segment) -> Normalizer:
    """Fit the max-abs scale on a Trajectory or a point array."""
    pts = segment.points if isinstance(segment, Trajectory) else np.asarray(segment, dtype=float)
    if pts.size == 0:
        raise ConfigError("cannot fit a normalizer on an empty segment")
    scale = float(np.abs(pts).max())
    if scale == 0.0:
        raise ConfigError("cannot fit a normalizer on an all-zero segment")
    return Normalizer(scale)


def trajectory_to_csv(traj: Trajectory, path, labels=("x", "y", "z")) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", *labels])
        for t, p in zip(traj.times, traj.points):
            writer.writerow([f"{t:.10g}", *(repr(float(v)) for v in p)])


def trajectory_from_csv(path) -> Trajectory:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "t":
            raise ConfigError(f"{path}: expected a 't'-first CSV header, got {header}")
        rows = [[float(v) for v in row] for row in reader if row]
    if len(rows) < 2:
        raise ConfigError(f"{path}: need at least 2 rows to recover dt")
    arr = np.asarray(rows)
    dt = float(arr[1, 0] - arr[0, 0])
    return Trajectory(dt, arr[:, 1:])
