"""Per-time-step circuit construction from a declarative layer stack.

A circuit spec is an ordered list of layers: data-encoding rotations fed by
phi(W_in @ X_t), parameter-free CX networks on graph sub-rounds, measurement
feedback rotations fed by the previous step's outcomes, and frozen random
blocks.  Presets L1-L5 cover the standard stacks; "enc5cx2" is the
5-rotation-layer / 2-CX-network stack used for the Lorenz63 benchmark.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._kernels import GATE_CX
from .errors import ConfigError
from .statevector import _ROTATION_CODE, _AXIS_TO_KIND, AXES, GateOp

FEATURE_MAPS = {
    "tanh": np.tanh,
    "pi_tanh": lambda x: np.pi * np.tanh(x),
    "pi_sigmoid": lambda x: np.pi / (1.0 + np.exp(-np.asarray(x, dtype=float))),
    "identity": lambda x: np.asarray(x, dtype=float),
    "pi_identity": lambda x: np.pi * np.asarray(x, dtype=float),
}


def feature_map(name: str):
    try:
        return FEATURE_MAPS[name]
    except KeyError:
        raise ConfigError(
            f"unknown feature map {name!r}; known: {sorted(FEATURE_MAPS)}"
        ) from None


@dataclass(frozen=True)
class QubitGraph:
    """Edge list on qubit vertices, optionally split into two CX sub-rounds."""

    n_qubits: int
    edges: tuple[tuple[int, int], ...]
    sub_rounds: tuple[tuple[tuple[int, int], ...], tuple[tuple[int, int], ...]] | None = None

    def __post_init__(self):
        for a, b in self.edges:
            if a == b:
                raise ConfigError(f"self-loop ({a},{b}) not allowed")
            if not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits):
                raise ConfigError(f"edge ({a},{b}) out of range for {self.n_qubits} qubits")


def ring_graph(n_qubits: int) -> QubitGraph:
    """Ring edges (i, i+1 mod n) split into two alternating CX sub-rounds.

    For even n the sub-rounds are the two perfect matchings of the cycle.
    For odd n a 2-round split is impossible without repeats, so the leftover
    closing edge (n-1, 0) is appended to the second sub-round.  n=2 has a
    single edge (the duplicate is suppressed) and an empty second round.
    """
    if n_qubits < 2:
        raise ConfigError("ring graph needs at least 2 qubits")
    if n_qubits == 2:
        return QubitGraph(2, ((0, 1),), (((0, 1),), ()))
    edges = tuple((i, (i + 1) % n_qubits) for i in range(n_qubits))
    if n_qubits % 2 == 0:
        ring_1 = edges[0::2]
        ring_2 = edges[1::2]
    else:
        ring_1 = edges[0:-1:2]
        ring_2 = edges[1:-1:2] + (edges[-1],)
    return QubitGraph(n_qubits, edges, (ring_1, ring_2))


def all_to_all_graph(n_qubits: int) -> QubitGraph:
    edges = tuple(
        (i, j) for i in range(n_qubits) for j in range(i + 1, n_qubits)
    )
    return QubitGraph(n_qubits, edges)


# --------------------------------------------------------------------------
# layer types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DataEncodingLayer:
    """Rotation layer with angles phi(W_in^(weight_id) @ X_t).

    ``axes`` lists the per-qubit rotation axes, e.g. ("X",) for a single
    rotation per qubit or ("Z", "X", "Z") for a U3-style triple; the encoded
    vector is consumed qubit-major (qubit 0 and the top of the circuit get
    the first components).
    """

    axes: tuple[str, ...]
    weight_id: int
    feature_map: str = "tanh"

    def n_angles(self, n_qubits: int) -> int:
        return n_qubits * len(self.axes)


@dataclass(frozen=True)
class CXNetworkLayer:
    """Parameter-free CX gates; edge (a, b) means control a, target b."""

    edges: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class MeasurementFeedbackLayer:
    """Rotations R_P(phi(source[sel])) fed by the previous time step.

    ``source`` is "measurement" (M_{t-1}) or "reservoir" (r_{t-1}); the
    default selection wires the single-qubit expectation <P_q> into R_P on
    qubit q for every axis in ``axes``.  A custom selection is a flat tuple
    of source indices, one per (qubit, axis) pair, qubit-major.
    """

    source: str = "measurement"
    axes: tuple[str, ...] = AXES
    feature_map: str = "identity"
    selection: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.source not in ("measurement", "reservoir"):
            raise ConfigError(f"unknown feedback source {self.source!r}")

    def n_angles(self, n_qubits: int) -> int:
        return n_qubits * len(self.axes)


@dataclass(frozen=True)
class RandomBlockLayer:
    """Frozen random rotations (drawn once, uniform on [0, 2pi]) plus a CX network."""

    axes: tuple[str, ...]
    angles: tuple[float, ...]
    edges: tuple[tuple[int, int], ...]


Layer = DataEncodingLayer | CXNetworkLayer | MeasurementFeedbackLayer | RandomBlockLayer


@dataclass(frozen=True)
class CircuitSpec:
    n_qubits: int
    layers: tuple[Layer, ...]

    @property
    def encoding_layers(self) -> tuple[DataEncodingLayer, ...]:
        return tuple(l for l in self.layers if isinstance(l, DataEncodingLayer))

    @property
    def encoding_dims(self) -> tuple[int, ...]:
        """Angle count d_L consumed by each data-encoding layer, in order."""
        return tuple(l.n_angles(self.n_qubits) for l in self.encoding_layers)

    @property
    def has_feedback(self) -> bool:
        return any(isinstance(l, MeasurementFeedbackLayer) for l in self.layers)


# --------------------------------------------------------------------------
# presets
# --------------------------------------------------------------------------


def _random_block(n_qubits: int, graph: QubitGraph, rng: np.random.Generator) -> RandomBlockLayer:
    axes = ("Z", "X", "Z")
    angles = tuple(rng.uniform(0.0, 2.0 * np.pi, size=n_qubits * len(axes)).tolist())
    ring_1, ring_2 = graph.sub_rounds
    return RandomBlockLayer(axes=axes, angles=angles, edges=ring_1 + ring_2)


def _l2_stack(n_qubits, n_layers, fmap, graph, start_weight_id=0):
    """Single-rotation layers (axis cycling X, Y, Z) each followed by a CX
    network on alternating ring sub-rounds."""
    ring_1, ring_2 = graph.sub_rounds
    layers: list[Layer] = []
    for j in range(n_layers):
        layers.append(
            DataEncodingLayer(axes=(AXES[j % 3],), weight_id=start_weight_id + j, feature_map=fmap)
        )
        layers.append(CXNetworkLayer(edges=ring_1 if j % 2 == 0 else ring_2))
    return layers


def preset_circuit(
    name: str,
    n_qubits: int,
    n_layers: int = 1,
    feature_map: str = "tanh",
    rng: np.random.Generator | None = None,
) -> CircuitSpec:
    """Build a named layer stack.

    L1: n_layers repetitions of a U3-style triple-rotation layer followed by
        CX networks on both ring sub-rounds.
    L2: n_layers single-rotation layers, each followed by a CX network on
        alternating ring sub-rounds.
    L3: L2 stack plus a measurement-feedback block.
    L4: L3 plus a frozen random block.
    L5: L2 stack plus a frozen random block.
    enc5cx2: five single-rotation layers with ring-CX networks after the
        second and fourth (7 data-encoding-family layers in total).
    """
    graph = ring_graph(n_qubits)
    ring_1, ring_2 = graph.sub_rounds
    fmap = feature_map
    if name == "L1":
        layers: list[Layer] = []
        for j in range(n_layers):
            layers.append(DataEncodingLayer(axes=("Z", "X", "Z"), weight_id=j, feature_map=fmap))
            layers.append(CXNetworkLayer(edges=ring_1))
            layers.append(CXNetworkLayer(edges=ring_2))
        return CircuitSpec(n_qubits, tuple(layers))
    if name == "L2":
        return CircuitSpec(n_qubits, tuple(_l2_stack(n_qubits, n_layers, fmap, graph)))
    if name == "L3":
        layers = _l2_stack(n_qubits, n_layers, fmap, graph)
        layers.append(MeasurementFeedbackLayer(feature_map=fmap))
        return CircuitSpec(n_qubits, tuple(layers))
    if name in ("L4", "L5"):
        if rng is None:
            raise ConfigError(f"preset {name} has a random block and needs an rng")
        layers = _l2_stack(n_qubits, n_layers, fmap, graph)
        if name == "L4":
            layers.append(MeasurementFeedbackLayer(feature_map=fmap))
        layers.append(_random_block(n_qubits, graph, rng))
        return CircuitSpec(n_qubits, tuple(layers))
    if name == "enc5cx2":
        axes_seq = ("X", "Y", "Z", "X", "Y")
        layers = []
        for j, ax in enumerate(axes_seq):
            layers.append(DataEncodingLayer(axes=(ax,), weight_id=j, feature_map=fmap))
            if j == 1:
                layers.append(CXNetworkLayer(edges=ring_1))
            elif j == 3:
                layers.append(CXNetworkLayer(edges=ring_2))
        return CircuitSpec(n_qubits, tuple(layers))
    raise ConfigError(f"unknown circuit preset {name!r}")


PRESETS = ("L1", "L2", "L3", "L4", "L5", "enc5cx2")


# --------------------------------------------------------------------------
# angle computation and gate emission
# --------------------------------------------------------------------------


def encode_input(W_in: np.ndarray, X_t: np.ndarray, phi) -> np.ndarray:
    """Rotation angles phi(W_in @ X_t) for one data-encoding layer."""
    W_in = np.asarray(W_in, dtype=float)
    X_t = np.asarray(X_t, dtype=float)
    if W_in.ndim != 2 or W_in.shape[1] != X_t.shape[0]:
        raise ConfigError(
            f"weight matrix {W_in.shape} does not match input of length {X_t.shape[0]}"
        )
    if isinstance(phi, str):
        phi = feature_map(phi)
    return phi(W_in @ X_t)


def default_feedback_selection(
    n_qubits: int, axes: tuple[str, ...], source_block: int
) -> tuple[int, ...]:
    """Indices of the single-qubit expectations <P_q> in an axis-major source
    vector whose per-axis block has ``source_block`` entries (singles first)."""
    sel = []
    for q in range(n_qubits):
        for ax in axes:
            sel.append(AXES.index(ax) * source_block + q)
    return tuple(sel)


def feedback_angles(
    source: np.ndarray, selection: tuple[int, ...], phi
) -> np.ndarray:
    """Angles phi(source[selection]) for a measurement-feedback layer."""
    source = np.asarray(source, dtype=float)
    sel = np.asarray(selection, dtype=np.int64)
    if sel.size and (sel.min() < 0 or sel.max() >= source.shape[0]):
        raise ConfigError("feedback selection index out of range")
    if isinstance(phi, str):
        phi = feature_map(phi)
    return phi(source[sel])


def resolve_feedback(
    spec: CircuitSpec,
    source_len: int,
    source_block: int,
    reservoir_len: int | None = None,
) -> CircuitSpec:
    """Fill in default selections for feedback layers that have none.

    ``source_block`` is the per-axis block size of the measurement vector
    (number of qubit tuples per axis).  Reservoir-sourced layers can use the
    same default layout only when the reservoir mirrors the measurement
    vector (W_M = identity); otherwise they need an explicit selection.
    """
    layers = []
    for layer in spec.layers:
        if isinstance(layer, MeasurementFeedbackLayer) and layer.selection is None:
            if layer.source == "reservoir" and reservoir_len not in (None, source_len):
                raise ConfigError(
                    "reservoir-sourced feedback with a custom reservoir size "
                    "needs an explicit selection"
                )
            sel = default_feedback_selection(spec.n_qubits, layer.axes, source_block)
            if max(sel) >= source_len:
                raise ConfigError(
                    "default feedback selection exceeds the source vector; "
                    "provide an explicit selection"
                )
            layers.append(replace(layer, selection=sel))
        else:
            layers.append(layer)
    return CircuitSpec(spec.n_qubits, tuple(layers))


class CircuitProgram:
    """A circuit spec compiled against its weight matrices.

    The gate structure is flattened once into kernel arrays; per time step
    only the rotation angles are recomputed from (X_t, feedback).
    """

    def __init__(self, spec: CircuitSpec, W_in: list[np.ndarray]):
        if len(W_in) < len(spec.encoding_layers):
            raise ConfigError(
                f"spec has {len(spec.encoding_layers)} encoding layers but only "
                f"{len(W_in)} input weight matrices were provided"
            )
        self.spec = spec
        self.n_qubits = spec.n_qubits
        kinds, ta, tb = [], [], []
        static = []  # static angle per gate (0 for data/feedback slots)
        self._enc = []  # (W, phi, gate slots)
        self._fb = []  # (source kind, phi, gate slots, selection)
        enc_i = 0
        for layer in spec.layers:
            if isinstance(layer, DataEncodingLayer):
                W = np.asarray(W_in[enc_i], dtype=float)
                if W.shape[0] != layer.n_angles(spec.n_qubits):
                    raise ConfigError(
                        f"encoding layer {enc_i} needs {layer.n_angles(spec.n_qubits)} "
                        f"angles, weight matrix provides {W.shape[0]}"
                    )
                slots = []
                for q in range(spec.n_qubits):
                    for ax in layer.axes:
                        slots.append(len(kinds))
                        kinds.append(_ROTATION_CODE[_AXIS_TO_KIND[ax]])
                        ta.append(q)
                        tb.append(-1)
                        static.append(0.0)
                self._enc.append((W, feature_map(layer.feature_map), np.asarray(slots)))
                enc_i += 1
            elif isinstance(layer, CXNetworkLayer):
                for a, b in layer.edges:
                    kinds.append(GATE_CX)
                    ta.append(a)
                    tb.append(b)
                    static.append(0.0)
            elif isinstance(layer, MeasurementFeedbackLayer):
                if layer.selection is None:
                    raise ConfigError(
                        "feedback layer has no selection; call resolve_feedback first"
                    )
                slots = []
                for q in range(spec.n_qubits):
                    for ax in layer.axes:
                        slots.append(len(kinds))
                        kinds.append(_ROTATION_CODE[_AXIS_TO_KIND[ax]])
                        ta.append(q)
                        tb.append(-1)
                        static.append(0.0)
                self._fb.append(
                    (layer.source, feature_map(layer.feature_map), np.asarray(slots),
                     np.asarray(layer.selection, dtype=np.int64))
                )
            elif isinstance(layer, RandomBlockLayer):
                k = 0
                for q in range(spec.n_qubits):
                    for ax in layer.axes:
                        kinds.append(_ROTATION_CODE[_AXIS_TO_KIND[ax]])
                        ta.append(q)
                        tb.append(-1)
                        static.append(layer.angles[k])
                        k += 1
                for a, b in layer.edges:
                    kinds.append(GATE_CX)
                    ta.append(a)
                    tb.append(b)
                    static.append(0.0)
            else:
                raise ConfigError(f"unknown layer type {type(layer).__name__}")
        self.kinds = np.asarray(kinds, dtype=np.int64)
        self.targ_a = np.asarray(ta, dtype=np.int64)
        self.targ_b = np.asarray(tb, dtype=np.int64)
        self.static_angles = np.asarray(static, dtype=np.float64)
        self.rotation_mask = self.kinds != GATE_CX

    @property
    def n_gates(self) -> int:
        return self.kinds.shape[0]

    def angles(
        self,
        X_t: np.ndarray,
        measurement_fb: np.ndarray | None = None,
        reservoir_fb: np.ndarray | None = None,
    ) -> np.ndarray:
        """Per-gate angle array for one time step (CX entries stay 0)."""
        out = self.static_angles.copy()
        X_t = np.asarray(X_t, dtype=float)
        for W, phi, slots in self._enc:
            out[slots] = phi(W @ X_t)
        for source_kind, phi, slots, sel in self._fb:
            src = measurement_fb if source_kind == "measurement" else reservoir_fb
            if src is None:
                src = np.zeros(int(sel.max()) + 1)  # first step: no outcomes yet
            out[slots] = phi(np.asarray(src, dtype=float)[sel])
        return out

    def gate_list(self, angles: np.ndarray) -> list[GateOp]:
        """Materialize the program as GateOp objects for the given angles."""
        kind_names = {v: k for k, v in _ROTATION_CODE.items()}
        gates = []
        for g in range(self.n_gates):
            if self.kinds[g] == GATE_CX:
                gates.append(GateOp("CX", (int(self.targ_a[g]), int(self.targ_b[g]))))
            else:
                gates.append(
                    GateOp(kind_names[int(self.kinds[g])], (int(self.targ_a[g]),),
                           (float(angles[g]),))
                )
        return gates


def build_circuit(
    spec: CircuitSpec,
    X_t: np.ndarray,
    weights: list[np.ndarray],
    measurement_fb: np.ndarray | None = None,
    reservoir_fb: np.ndarray | None = None,
) -> list[GateOp]:
    """Emit the deterministic gate list for one time step.

    ``weights`` holds one input weight matrix per data-encoding layer, in
    layer order.  Feedback vectors default to zeros on the first step.
    """
    program = CircuitProgram(spec, weights)
    angles = program.angles(X_t, measurement_fb, reservoir_fb)
    return program.gate_list(angles)
