"""Ridge-regression readout, the teacher-forced training loop, and the
autoregressive forecast loop.

The readout solves W_o = Y R^T (R R^T + beta I)^{-1} through a symmetric
positive-definite factorization.  Training drives the reservoir with truth
inputs (fresh |0...0> circuit each step), prunes the warm-up columns, and
regresses one-step-ahead targets; forecasting closes the loop by feeding
each prediction back as the next input.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from . import _kernels
from .ansatz import CircuitProgram, CircuitSpec, resolve_feedback
from .errors import ConfigError, NumericFault, UsageError
from .measurement import MeasurementScheme, measurement_context
from .reservoir import (
    ActivationSet,
    ReservoirState,
    WeightSet,
    assemble_learning_vector,
    update_hqrc,
)
from .statevector import ShotConfig, StateVector
from .dynamics import Trajectory


@dataclass(frozen=True)
class TrainingConfig:
    train_steps: int
    prune_steps: int = 100
    beta: float = 1e-8
    dt: float = 0.01

    def __post_init__(self):
        if self.train_steps < 1:
            raise ConfigError("train_steps must be positive")
        if not 0 <= self.prune_steps < self.train_steps:
            raise ConfigError("prune_steps must satisfy 0 <= prune < train")
        if self.beta < 0:
            raise ConfigError("beta must be nonnegative")


@dataclass
class ReadoutModel:
    W_o: np.ndarray  # (d_output, 1 + n_res + d_input)
    beta: float
    train_steps: int = 0
    prune_steps: int = 0
    scale: float | None = None  # normalizer scale used during training
    config_hash: str | None = None

    def predict(self, learning_vector: np.ndarray) -> np.ndarray:
        return self.W_o @ learning_vector

    def to_dict(self) -> dict:
        return {
            "W_o": self.W_o.tolist(),
            "beta": self.beta,
            "train_steps": self.train_steps,
            "prune_steps": self.prune_steps,
            "scale": self.scale,
            "config_hash": self.config_hash,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReadoutModel":
        return cls(
            W_o=np.asarray(d["W_o"], dtype=float),
            beta=float(d["beta"]),
            train_steps=int(d.get("train_steps", 0)),
            prune_steps=int(d.get("prune_steps", 0)),
            scale=d.get("scale"),
            config_hash=d.get("config_hash"),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "ReadoutModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def fit_ridge(R_matrix: np.ndarray, Y_matrix: np.ndarray, beta: float, **meta) -> ReadoutModel:
    """Closed-form ridge solution of min ||Y - W R||^2 + beta ||W||^2.

    R_matrix is (1+n_res+d_input) x n_samples, Y_matrix d_output x n_samples.
    beta = 0 is accepted only when R R^T is positive definite.
    """
    R = np.atleast_2d(np.asarray(R_matrix, dtype=float))
    Y = np.atleast_2d(np.asarray(Y_matrix, dtype=float))
    if R.shape[1] != Y.shape[1]:
        raise UsageError(f"sample mismatch: R has {R.shape[1]}, Y has {Y.shape[1]}")
    if beta < 0:
        raise ConfigError("beta must be nonnegative")
    G = R @ R.T + beta * np.eye(R.shape[0])
    if beta == 0.0 and (not np.all(np.isfinite(G)) or np.linalg.cond(G) > 1e12):
        raise NumericFault("R R^T is singular; beta = 0 needs a well-conditioned system")
    try:
        chol = cho_factor(G)
    except LinAlgError as exc:
        raise NumericFault(f"ridge system is singular (beta={beta})") from exc
    W_o = cho_solve(chol, R @ Y.T).T
    B = Y @ R.T
    resid = np.max(np.abs(W_o @ G - B))
    if resid > 1e-8 * (np.max(np.abs(B)) + 1.0):
        raise NumericFault(f"normal-equation residual {resid:.3g} too large")
    return ReadoutModel(W_o=W_o, beta=beta, **meta)


class HqrcStepper:
    """The per-time-step pipeline: build circuit on X_t from a fresh
    |0...0> state, measure, update the classical reservoir.

    Holds the recurrent quantities (reservoir state, last input, last
    measurement vector) so that forecasting can continue seamlessly after
    training.  Deterministic given the shot/noise rng.
    """

    def __init__(
        self,
        spec: CircuitSpec,
        scheme: MeasurementScheme,
        weights: WeightSet,
        acts: ActivationSet,
        shot_cfg: ShotConfig | None = None,
        rng: np.random.Generator | None = None,
    ):
        self.scheme = scheme
        self.ctx = measurement_context(spec.n_qubits, scheme)
        n_res = weights.W_r.shape[0]
        if spec.has_feedback:
            spec = resolve_feedback(spec, self.ctx.size, self.ctx.block_size, n_res)
        self.spec = spec
        self.program = CircuitProgram(spec, weights.W_in)
        self.weights = weights
        self.acts = acts
        self.shot_cfg = shot_cfg or ShotConfig()
        self.rng = rng if rng is not None else np.random.default_rng(self.shot_cfg.seed)
        self.state = ReservoirState(r=np.zeros(n_res), t=0)
        self.last_M: np.ndarray | None = None
        self.last_X: np.ndarray | None = None
        self._n_amps = 2**spec.n_qubits
        self._rot_mask = self.program.rotation_mask
        self._n_rot = int(self._rot_mask.sum())

    def drive(self, X_t: np.ndarray) -> np.ndarray:
        """Advance one step on input X_t; returns the measurement vector."""
        angles = self.program.angles(
            X_t, measurement_fb=self.last_M, reservoir_fb=self.state.r
        )
        if self.shot_cfg.coherent_sigma > 0:
            angles[self._rot_mask] += self.rng.normal(
                0.0, self.shot_cfg.coherent_sigma, self._n_rot
            )
        amps = np.zeros(self._n_amps, dtype=np.complex128)
        amps[0] = 1.0
        _kernels.run_gates(
            amps, self.program.kinds, self.program.targ_a, self.program.targ_b, angles
        )
        M = self.ctx.measure(StateVector(self.spec.n_qubits, amps), self.shot_cfg, self.rng)
        self.state = update_hqrc(self.state, M, X_t, self.acts, self.weights)
        self.last_M = M
        self.last_X = np.asarray(X_t, dtype=float)
        return M

    def learning_vector(self) -> np.ndarray:
        return assemble_learning_vector(self.state, self.last_X, self.acts)


def run_training(
    truth: Trajectory,
    spec: CircuitSpec,
    scheme: MeasurementScheme,
    weights: WeightSet,
    acts: ActivationSet,
    cfg: TrainingConfig,
    shot_cfg: ShotConfig | None = None,
    rng: np.random.Generator | None = None,
    config_hash: str | None = None,
    scale: float | None = None,
) -> tuple[ReadoutModel, HqrcStepper, np.ndarray]:
    """Drive the reservoir along the truth, fit the readout, and return
    (model, stepper positioned at the end of training, kept R columns).

    The trajectory must be normalized and at least train_steps+1 long;
    targets are one-step-ahead (y_t = X_{t+1}); the first prune_steps
    columns are excluded from the regression.
    """
    if len(truth) < cfg.train_steps + 1:
        raise UsageError(
            f"need at least {cfg.train_steps + 1} truth points, got {len(truth)}"
        )
    stepper = HqrcStepper(spec, scheme, weights, acts, shot_cfg, rng)
    cols, targets = [], []
    for t in range(cfg.train_steps):
        stepper.drive(truth.points[t])
        if t >= cfg.prune_steps:
            cols.append(stepper.learning_vector())
            targets.append(truth.points[t + 1])
    R = np.array(cols).T
    Y = np.array(targets).T
    model = fit_ridge(
        R,
        Y,
        cfg.beta,
        train_steps=cfg.train_steps,
        prune_steps=cfg.prune_steps,
        scale=scale,
        config_hash=config_hash,
    )
    return model, stepper, R


def forecast(model: ReadoutModel, stepper: HqrcStepper, steps: int) -> np.ndarray:
    """Autoregressive closed-loop forecast of ``steps`` points (normalized
    units).  The first prediction reads the stepper's end-of-training state;
    each prediction is then fed back as the next circuit input."""
    if steps < 0:
        raise UsageError("steps must be nonnegative")
    d = model.W_o.shape[0]
    out = np.empty((steps, d))
    if steps == 0:
        return out
    if stepper.last_X is None:
        raise UsageError("stepper has not been driven; train before forecasting")
    y = model.predict(stepper.learning_vector())
    if not np.all(np.isfinite(y)):
        raise NumericFault("forecast diverged at step 0")
    out[0] = y
    for k in range(1, steps):
        stepper.drive(y)
        y = model.predict(stepper.learning_vector())
        if not np.all(np.isfinite(y)):
            raise NumericFault(f"forecast diverged at step {k}")
        out[k] = y
    return out
