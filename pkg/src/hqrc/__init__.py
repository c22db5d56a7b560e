"""Hybrid quantum-classical reservoir computing for chaotic forecasting.

A statevector-simulated parameterized circuit produces Pauli expectation
vectors that drive a classical leaky reservoir; a ridge-regression readout
closes the autoregressive forecasting loop.
"""

from ._kernels import backend_name
from .ansatz import (
    CircuitSpec,
    CXNetworkLayer,
    DataEncodingLayer,
    MeasurementFeedbackLayer,
    QubitGraph,
    RandomBlockLayer,
    build_circuit,
    encode_input,
    preset_circuit,
    ring_graph,
)
from .dynamics import (
    Normalizer,
    OdeSystem,
    Trajectory,
    double_scroll,
    double_scroll_deriv,
    fit_normalizer,
    integrate_rk4,
    lorenz63,
    lorenz63_deriv,
)
from .errors import ConfigError, NumericFault, UsageError
from .experiment import (
    ExperimentConfig,
    RunSummary,
    emit_report,
    load_config,
    run_experiment,
    run_sweep,
)
from .measurement import (
    MeasurementScheme,
    MeasurementVector,
    build_observables,
    measure_vector,
    vector_size,
)
from .metrics import (
    OverlapReport,
    VptConfig,
    VptResult,
    attractor_overlap,
    poincare_return_map,
    rmse_at,
    vpt,
)
from .readout import (
    HqrcStepper,
    ReadoutModel,
    TrainingConfig,
    fit_ridge,
    forecast,
    run_training,
)
from .reservoir import (
    ActivationSet,
    ReservoirState,
    WeightDims,
    WeightSet,
    assemble_learning_vector,
    generate_weights,
    spectral_normalize,
    update_classical,
    update_hqrc,
)
from .statevector import (
    GateOp,
    PauliString,
    ShotConfig,
    StateVector,
    apply_gate,
    estimate_from_counts,
    expectation,
    init_state,
    perturb_angles,
    sample_basis,
)

__version__ = "0.1.0"
