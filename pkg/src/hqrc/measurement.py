"""Observable sets and their evaluation into measurement vectors.

The observable set combines single-qubit expectations with same-axis k-body
correlators on a connectivity graph (order 2 uses the graph's edges, order 3
its triangles; all-to-all connectivity yields every pair and triple).  The
canonical ordering is axis-major (X block, then Y, then Z); inside a block,
ascending correlator order and then ascending qubit tuples.

All same-axis entries are evaluated from a single basis: one probability
vector per axis in exact mode and one shared count table per axis in
finite-shot mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .ansatz import QubitGraph
from .errors import ConfigError
from .statevector import (
    AXES,
    PauliString,
    ShotConfig,
    StateVector,
    born_probabilities,
)

_CONTEXT_CACHE: dict = {}


@dataclass(frozen=True)
class MeasurementScheme:
    axes: tuple[str, ...] = AXES
    max_order: int = 2
    connectivity: QubitGraph | None = None  # None = all-to-all

    def __post_init__(self):
        if not self.axes or any(a not in AXES for a in self.axes):
            raise ConfigError(f"axes must be a nonempty subset of {AXES}")
        if len(set(self.axes)) != len(self.axes):
            raise ConfigError("duplicate axes in measurement scheme")
        if self.max_order not in (1, 2, 3):
            raise ConfigError("max_order must be 1, 2 or 3")


@dataclass
class MeasurementVector:
    """Observable values in canonical order, with the scheme that defines it."""

    values: np.ndarray
    scheme: MeasurementScheme

    def __len__(self) -> int:
        return self.values.shape[0]


def qubit_tuples(n_qubits: int, scheme: MeasurementScheme) -> list[tuple[int, ...]]:
    """Ordered qubit tuples measured in every axis: singles, then pairs,
    then triples (pairs from the connectivity edges, triples from its
    triangles; every combination when connectivity is all-to-all)."""
    graph = scheme.connectivity
    if graph is not None and graph.n_qubits != n_qubits:
        raise ConfigError(
            f"connectivity graph has {graph.n_qubits} qubits, state has {n_qubits}"
        )
    tuples: list[tuple[int, ...]] = [(q,) for q in range(n_qubits)]
    if scheme.max_order >= 2:
        if graph is None:
            pairs = list(combinations(range(n_qubits), 2))
        else:
            pairs = sorted({tuple(sorted(e)) for e in graph.edges})
        tuples.extend(pairs)
    if scheme.max_order >= 3:
        if graph is None:
            tuples.extend(combinations(range(n_qubits), 3))
        else:
            edge_set = {tuple(sorted(e)) for e in graph.edges}
            tuples.extend(
                t
                for t in combinations(range(n_qubits), 3)
                if all(p in edge_set for p in combinations(t, 2))
            )
    return tuples


def build_observables(n_qubits: int, scheme: MeasurementScheme) -> list[PauliString]:
    """The full observable list in canonical (axis-major) order."""
    tuples = qubit_tuples(n_qubits, scheme)
    return [PauliString(axis, t) for axis in scheme.axes for t in tuples]


def vector_size(n_qubits: int, scheme: MeasurementScheme) -> int:
    return len(scheme.axes) * len(qubit_tuples(n_qubits, scheme))


class MeasurementContext:
    """Sign matrix and axis bookkeeping precomputed for one (n_qubits, scheme).

    Row t of the sign matrix holds, for every outcome index i, the product
    of the +-1 eigenvalues of the t-th qubit tuple, so all same-axis values
    are one matrix-vector product away from the axis distribution.
    """

    def __init__(self, n_qubits: int, scheme: MeasurementScheme):
        self.n_qubits = n_qubits
        self.scheme = scheme
        self.tuples = qubit_tuples(n_qubits, scheme)
        idx = np.arange(2**n_qubits)
        bit_signs = np.array([1 - 2 * ((idx >> q) & 1) for q in range(n_qubits)])
        rows = np.ones((len(self.tuples), 2**n_qubits))
        for r, t in enumerate(self.tuples):
            for q in t:
                rows[r] *= bit_signs[q]
        self.sign_matrix = rows

    @property
    def size(self) -> int:
        return len(self.scheme.axes) * len(self.tuples)

    @property
    def block_size(self) -> int:
        return len(self.tuples)

    def measure(
        self,
        state: StateVector,
        shot_cfg: ShotConfig | None = None,
        rng: np.random.Generator | None = None,
    ) -> np.ndarray:
        shot_cfg = shot_cfg or ShotConfig()
        if shot_cfg.shots is not None and rng is None:
            rng = np.random.default_rng(shot_cfg.seed)
        blocks = []
        for axis in self.scheme.axes:
            probs = born_probabilities(state, axis)
            if shot_cfg.shots is None:
                blocks.append(self.sign_matrix @ probs)
            else:
                counts = rng.multinomial(shot_cfg.shots, probs)
                blocks.append(self.sign_matrix @ counts / shot_cfg.shots)
        return np.concatenate(blocks)


def measurement_context(n_qubits: int, scheme: MeasurementScheme) -> MeasurementContext:
    key = (n_qubits, scheme)
    ctx = _CONTEXT_CACHE.get(key)
    if ctx is None:
        ctx = MeasurementContext(n_qubits, scheme)
        _CONTEXT_CACHE[key] = ctx
    return ctx


def measure_vector(
    state: StateVector,
    scheme: MeasurementScheme,
    shot_cfg: ShotConfig | None = None,
    rng: np.random.Generator | None = None,
) -> MeasurementVector:
    """Evaluate the scheme's observables on a state.

    Exact mode (shots=None) computes expectations from the wave function;
    finite-shot mode draws one count table per axis and derives all
    same-axis correlators from the shared samples.
    """
    ctx = measurement_context(state.n_qubits, scheme)
    return MeasurementVector(ctx.measure(state, shot_cfg, rng), scheme)
