"""Forecast-quality measures.

Sigma-normalized RMSE, valid prediction time (first threshold breach),
the Poincare return map of consecutive local maxima, and an attractor
overlap report comparing a forecast against the truth's bounding box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory
from .errors import ConfigError, UsageError


@dataclass(frozen=True)
class VptConfig:
    """Threshold epsilon and per-component normalization sigma at step dt."""

    sigma: np.ndarray
    dt: float
    epsilon: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))
        if np.any(self.sigma <= 0):
            raise ConfigError("every sigma component must be strictly positive")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")


@dataclass(frozen=True)
class VptResult:
    time: float
    index: int
    censored: bool  # True when the threshold was never reached


def rmse_at(pred_t: np.ndarray, truth_t: np.ndarray, sigma: np.ndarray) -> float:
    """sqrt of the mean squared sigma-normalized component deviation."""
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ConfigError("every sigma component must be strictly positive")
    d = (np.asarray(pred_t, float) - np.asarray(truth_t, float)) / sigma
    return float(np.sqrt(np.mean(d**2)))


def rmse_series(pred: np.ndarray, truth: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    d = (np.asarray(pred, float) - np.asarray(truth, float)) / sigma
    return np.sqrt(np.mean(d**2, axis=1))


def _points(x) -> np.ndarray:
    return x.points if isinstance(x, Trajectory) else np.asarray(x, dtype=float)


def vpt(pred, truth, cfg: VptConfig) -> VptResult:
    """Time of the first step where the normalized RMSE reaches epsilon.

    Never-breached forecasts are right-censored at dt * length.
    """
    p = _points(pred)
    t = _points(truth)
    if p.shape != t.shape:
        raise UsageError(f"length mismatch: pred {p.shape} vs truth {t.shape}")
    if isinstance(pred, Trajectory) and isinstance(truth, Trajectory) and pred.dt != truth.dt:
        raise UsageError(f"dt mismatch: {pred.dt} vs {truth.dt}")
    err = rmse_series(p, t, cfg.sigma)
    breach = np.nonzero(err >= cfg.epsilon)[0]
    if breach.size == 0:
        return VptResult(time=cfg.dt * p.shape[0], index=p.shape[0], censored=True)
    k = int(breach[0])
    return VptResult(time=cfg.dt * k, index=k, censored=False)


def local_maxima(series: np.ndarray) -> np.ndarray:
    """Indices k with series[k-1] < series[k] >= series[k+1]; a plateau
    counts once, at its first index."""
    s = np.asarray(series, dtype=float)
    if s.shape[0] < 3:
        return np.empty(0, dtype=np.int64)
    k = np.arange(1, s.shape[0] - 1)
    mask = (s[k - 1] < s[k]) & (s[k] >= s[k + 1])
    return k[mask]


def poincare_return_map(series) -> np.ndarray:
    """Consecutive local maxima paired in temporal order, as an (m-1, 2) array."""
    s = np.asarray(series, dtype=float)
    if s.shape[0] < 3:
        return np.empty((0, 2))
    peaks = s[local_maxima(s)]
    if peaks.shape[0] < 2:
        return np.empty((0, 2))
    return np.column_stack([peaks[:-1], peaks[1:]])


@dataclass(frozen=True)
class OverlapReport:
    """Fraction of forecast points inside the truth's 10%-expanded bounding
    box, plus per-component moment comparison."""

    fraction: float
    box_lo: np.ndarray
    box_hi: np.ndarray
    pred_mean: np.ndarray
    pred_std: np.ndarray
    truth_mean: np.ndarray
    truth_std: np.ndarray


def expanded_box(points: np.ndarray, margin: float = 0.1):
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    pad = margin * (hi - lo)
    return lo - pad, hi + pad


def attractor_overlap(pred, truth) -> OverlapReport:
    p = _points(pred)
    t = _points(truth)
    if p.size == 0 or t.size == 0:
        raise UsageError("attractor overlap needs nonempty trajectories")
    lo, hi = expanded_box(t)
    inside = np.all((p >= lo) & (p <= hi), axis=1)
    return OverlapReport(
        fraction=float(inside.mean()),
        box_lo=lo,
        box_hi=hi,
        pred_mean=p.mean(axis=0),
        pred_std=p.std(axis=0),
        truth_mean=t.mean(axis=0),
        truth_std=t.std(axis=0),
    )
