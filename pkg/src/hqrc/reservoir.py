"""Classical recurrent state machinery.

Weight generation with largest-singular-value normalization, the hybrid
reservoir update

    r_t = (1 - alpha) r_{t-1} + alpha * g(f_r(W_r r_{t-1})
                                          + f_M(W_M M_t) + f_X(W_X X_t)),

the leaky-ESN update r_t = (1-alpha) r_{t-1} + alpha f(W_r r_{t-1} + W_X X_t)
as baseline and classical limit, and learning-vector assembly
R_t = (1, f_R(r_t), h_X(X_t)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericFault

ACTIVATIONS = {
    "identity": lambda x: x,
    "tanh": np.tanh,
    "zero": lambda x: np.zeros_like(x),
}


def activation(name: str):
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ConfigError(
            f"unknown activation {name!r}; known: {sorted(ACTIVATIONS)}"
        ) from None


@dataclass(frozen=True)
class ActivationSet:
    """Named activations for the reservoir update and the learning vector.

    f_r, f_M, f_X act on the three weighted contributions, g wraps their sum;
    f_R and h_X transform r_t and X_t inside the learning vector.  alpha is
    the leak rate in [0, 1] (alpha = 0 is the degenerate memory-only update).
    """

    f_r: str = "identity"
    f_M: str = "identity"
    f_X: str = "identity"
    g: str = "identity"
    f_R: str = "tanh"
    h_X: str = "tanh"
    alpha: float = 0.7

    def __post_init__(self):
        for name in (self.f_r, self.f_M, self.f_X, self.g, self.f_R, self.h_X):
            activation(name)
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"leak rate must be in [0, 1], got {self.alpha}")


@dataclass
class ReservoirState:
    r: np.ndarray
    t: int = 0


@dataclass(frozen=True)
class WeightDims:
    """Dimension bundle tying the weight set to circuit and measurement sizes."""

    enc_dims: tuple[int, ...]   # angle count per data-encoding layer
    d_input: int
    n_meas: int
    n_res: int | None = None    # None: reservoir size = measurement size

    @property
    def reservoir_size(self) -> int:
        return self.n_meas if self.n_res is None else self.n_res


@dataclass
class WeightSet:
    W_in: list[np.ndarray]
    W_r: np.ndarray
    W_M: np.ndarray
    W_X: np.ndarray
    seed: int = 0
    dists: dict = field(default_factory=dict)


def largest_singular_value(W: np.ndarray, tol: float = 1e-10, max_iter: int = 10000) -> float:
    """sigma_max via power iteration on W^T W with a deterministic start."""
    W = np.asarray(W, dtype=float)
    n = W.shape[1]
    v = np.cos(np.arange(1, n + 1, dtype=float))
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = W.T @ (W @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new_est = float(v @ (W.T @ (W @ v)))
        if abs(new_est - est) <= tol * max(1.0, abs(new_est)):
            est = new_est
            break
        est = new_est
    return float(np.sqrt(est))


def spectral_normalize(W: np.ndarray) -> np.ndarray:
    """W divided by its largest singular value (operator norm becomes 1)."""
    W = np.asarray(W, dtype=float)
    if not np.any(W):
        raise ConfigError("cannot spectrally normalize a zero matrix")
    return W / largest_singular_value(W)


def _draw(rng: np.random.Generator, shape: tuple[int, int], dist: str) -> np.ndarray:
    if dist == "normal":
        return spectral_normalize(rng.standard_normal(shape))
    if dist == "uniform":
        return spectral_normalize(rng.uniform(-1.0, 1.0, size=shape))
    if dist == "identity":
        if shape[0] != shape[1]:
            raise ConfigError(f"identity weights need a square shape, got {shape}")
        return np.eye(shape[0])
    raise ConfigError(f"unknown weight distribution {dist!r}")


def generate_weights(
    dims: WeightDims,
    seed: int,
    w_in_dist: str = "normal",
    w_r_dist: str = "normal",
    w_m_dist: str = "identity",
    w_x_dist: str = "normal",
) -> WeightSet:
    """Draw and normalize the full weight set, deterministically in ``seed``.

    The draw order (W_in layers, then W_r, W_M, W_X) is fixed so identical
    seeds give identical weights.
    """
    rng = np.random.default_rng(seed)
    n_res = dims.reservoir_size
    W_in = [_draw(rng, (d, dims.d_input), w_in_dist) for d in dims.enc_dims]
    W_r = _draw(rng, (n_res, n_res), w_r_dist)
    W_M = _draw(rng, (n_res, dims.n_meas), w_m_dist)
    W_X = _draw(rng, (n_res, dims.d_input), w_x_dist)
    return WeightSet(
        W_in=W_in,
        W_r=W_r,
        W_M=W_M,
        W_X=W_X,
        seed=seed,
        dists={"W_in": w_in_dist, "W_r": w_r_dist, "W_M": w_m_dist, "W_X": w_x_dist},
    )


def _check_finite(name: str, arr: np.ndarray):
    if not np.all(np.isfinite(arr)):
        raise NumericFault(f"non-finite entries in {name}")


def update_hqrc(
    r_prev: ReservoirState,
    M_t,
    X_t: np.ndarray,
    acts: ActivationSet,
    weights: WeightSet,
) -> ReservoirState:
    """One hybrid reservoir step; M_t may be a MeasurementVector or an array."""
    M = np.asarray(getattr(M_t, "values", M_t), dtype=float)
    X = np.asarray(X_t, dtype=float)
    _check_finite("M_t", M)
    _check_finite("X_t", X)
    f_r = activation(acts.f_r)
    f_M = activation(acts.f_M)
    f_X = activation(acts.f_X)
    g = activation(acts.g)
    a = acts.alpha
    inner = f_r(weights.W_r @ r_prev.r) + f_M(weights.W_M @ M) + f_X(weights.W_X @ X)
    r_new = (1.0 - a) * r_prev.r + a * g(inner)
    return ReservoirState(r=r_new, t=r_prev.t + 1)


def update_classical(
    r_prev: ReservoirState,
    X_t: np.ndarray,
    alpha: float,
    f,
    W_r: np.ndarray,
    W_X: np.ndarray,
) -> ReservoirState:
    """One leaky-ESN step: r_t = (1-alpha) r_{t-1} + alpha f(W_r r + W_X X)."""
    X = np.asarray(X_t, dtype=float)
    _check_finite("X_t", X)
    if isinstance(f, str):
        f = activation(f)
    r_new = (1.0 - alpha) * r_prev.r + alpha * f(W_r @ r_prev.r + W_X @ X)
    return ReservoirState(r=r_new, t=r_prev.t + 1)


def assemble_learning_vector(r_t, X_t: np.ndarray, acts: ActivationSet) -> np.ndarray:
    """Regression row (1, f_R(r_t), h_X(X_t))."""
    r = np.asarray(getattr(r_t, "r", r_t), dtype=float)
    X = np.asarray(X_t, dtype=float)
    f_R = activation(acts.f_R)
    h_X = activation(acts.h_X)
    return np.concatenate(([1.0], f_R(r), h_X(X)))
