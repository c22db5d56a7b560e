"""Acceptance suite: one test per release criterion, each printing a
PASS line with its measured quantities (run with -s to see them live).

The chaotic-forecasting criteria use band targets, not point values:
exact VPT numbers are not reproducible across implementations, so the
bands below are the contract.
"""

import time

import numpy as np
import pytest
from scipy.sparse.linalg import lsqr

import dense_oracle as oracle
from hqrc.ansatz import preset_circuit
from hqrc.dynamics import LORENZ63_IC, integrate_rk4, lorenz63
from hqrc.errors import NumericFault
from hqrc.experiment import ExperimentConfig, run_experiment, run_sweep
from hqrc.measurement import MeasurementScheme, build_observables, measure_vector
from hqrc.metrics import VptConfig, poincare_return_map, rmse_at, vpt
from hqrc.readout import fit_ridge
from hqrc.reservoir import (
    ActivationSet,
    ReservoirState,
    WeightSet,
    spectral_normalize,
    update_classical,
    update_hqrc,
)
from hqrc.statevector import (
    GateOp,
    PauliString,
    apply_circuit,
    estimate_from_counts,
    init_state,
    sample_basis,
)

WORKERS = 2


def _report(n, text):
    print(f"\n[ACCEPTANCE {n}] PASS: {text}")


# -------------------------------------------------------------------------
# 1. simulator oracle equivalence
# -------------------------------------------------------------------------


def test_01_simulator_oracle_equivalence():
    rng = np.random.default_rng(2024)
    scheme = MeasurementScheme(max_order=3)
    t0 = time.perf_counter()
    max_amp_err = 0.0
    max_exp_err = 0.0
    for _ in range(500):
        n = int(rng.integers(1, 5))
        gates = oracle.random_circuit(rng, n, max_gates=40)
        state = apply_circuit(init_state(n), gates)
        ref = oracle.simulate(gates, n)
        max_amp_err = max(max_amp_err, float(np.max(np.abs(state.amplitudes - ref))))

        mv = measure_vector(state, scheme)
        obs = build_observables(n, scheme)
        for value, o in zip(mv.values, obs):
            want = oracle.pauli_expectation(state.amplitudes, o.axis, o.qubits, n)
            max_exp_err = max(max_exp_err, abs(value - want))
    elapsed = time.perf_counter() - t0
    assert max_amp_err < 1e-10
    assert max_exp_err < 1e-10
    assert elapsed < 60.0
    _report(1, f"500 circuits: amp err {max_amp_err:.2e}, expectation err "
               f"{max_exp_err:.2e}, {elapsed:.1f}s")


# -------------------------------------------------------------------------
# 2. classical-limit reduction
# -------------------------------------------------------------------------


def test_02_classical_limit_reduction():
    rng = np.random.default_rng(7)
    worst = 0.0
    for k in range(1000):
        n_res = int(rng.integers(2, 12))
        n_meas = int(rng.integers(2, 12))
        d_in = int(rng.integers(1, 5))
        w = WeightSet(
            W_in=[],
            W_r=rng.standard_normal((n_res, n_res)),
            W_M=rng.standard_normal((n_res, n_meas)),
            W_X=rng.standard_normal((n_res, d_in)),
        )
        f = "tanh" if k % 2 == 0 else "identity"
        alpha = float(rng.uniform(0.0, 1.0))
        acts = ActivationSet(f_M="zero", f_r="identity", f_X="identity", g=f, alpha=alpha)
        r = ReservoirState(r=rng.standard_normal(n_res))
        X = rng.standard_normal(d_in)
        M = rng.standard_normal(n_meas)
        hybrid = update_hqrc(r, M, X, acts, w)
        classical = update_classical(r, X, alpha, f, w.W_r, w.W_X)
        worst = max(worst, float(np.max(np.abs(hybrid.r - classical.r))))
    assert worst < 1e-12
    _report(2, f"1000 probes, max |Eq7 - Eq1| = {worst:.2e}")


# -------------------------------------------------------------------------
# 3. ridge regression
# -------------------------------------------------------------------------


def test_03_ridge_regression():
    rng = np.random.default_rng(11)
    worst_resid = 0.0
    worst_oracle = 0.0
    for _ in range(100):
        p = int(rng.integers(3, 12))
        n = int(rng.integers(p, 40))
        d = int(rng.integers(1, 4))
        R = rng.standard_normal((p, n))
        Y = rng.standard_normal((d, n))
        beta = 10.0 ** rng.uniform(-6, -2)
        model = fit_ridge(R, Y, beta)

        G = R @ R.T + beta * np.eye(p)
        B = Y @ R.T
        resid = np.max(np.abs(model.W_o @ G - B)) / (np.max(np.abs(B)) + 1.0)
        worst_resid = max(worst_resid, float(resid))

        for i in range(d):
            ref = lsqr(R.T, Y[i], damp=np.sqrt(beta), atol=1e-14, btol=1e-14)[0]
            worst_oracle = max(worst_oracle, float(np.max(np.abs(model.W_o[i] - ref))))

        norms = [np.linalg.norm(fit_ridge(R, Y, b).W_o, 2)
                 for b in (1e-6, 1e-3, 1e-1, 10.0)]
        assert all(a >= b - 1e-12 for a, b in zip(norms, norms[1:]))
    assert worst_resid <= 1e-8
    assert worst_oracle <= 1e-6
    _report(3, f"100 systems: normal-eq residual {worst_resid:.2e}, "
               f"lsqr-oracle deviation {worst_oracle:.2e}, ||W_o|| monotone in beta")


# -------------------------------------------------------------------------
# 4 + 5. Lorenz63 headline and the classical separations
# -------------------------------------------------------------------------


@pytest.fixture(scope="module")
def lorenz_sweep():
    base = ExperimentConfig()  # enc5cx2 circuit, 8 qubits, order-2 all-to-all
    axes = {
        "circuit.feature_map": ["tanh", "pi_tanh", "pi_sigmoid", "identity", "pi_identity"],
        "reservoir.alpha": [0.6, 0.7],
        "readout.beta": [1e-6, 1e-7, 1e-8],
    }
    return run_sweep(base, axes, seeds=list(range(20)), workers=WORKERS)


def test_04_lorenz63_headline(lorenz_sweep):
    cells = lorenz_sweep
    assert sum(len(c.summaries) for c in cells) == 600
    for cell in cells:
        assert all(s.error is None for s in cell.summaries)

    best = max((s for c in cells for s in c.summaries), key=lambda s: s.vpt)
    assert best.vpt >= 8.0

    best_cell = max(cells, key=lambda c: c.aggregates()["median"])
    med = best_cell.aggregates()["median"]
    assert 3.0 <= med <= 9.0

    # long-term behavior of the best run
    assert best.overlap_fraction >= 0.95
    rm_pred = np.asarray(best.return_map_pred)
    rm_truth = np.asarray(best.return_map_truth)
    assert rm_pred.shape[0] > 0 and rm_truth.shape[0] > 0
    lo = rm_truth.min(axis=0)
    hi = rm_truth.max(axis=0)
    pad = 0.1 * (hi - lo)
    assert np.all(rm_pred >= lo - pad) and np.all(rm_pred <= hi + pad)

    fam = best_cell.overrides
    _report(4, f"best VPT {best.vpt:.2f} (>= 8) at {best.params['feature_map']}/"
               f"a={best.params['alpha']}/b={best.params['beta']:g} seed {best.seed}; "
               f"best-family median {med:.2f} in [3, 9] ({fam}); "
               f"overlap {best.overlap_fraction:.3f}; return map inside truth box")


def test_05_classical_baseline_separation(lorenz_sweep):
    best_hqrc = max(s.vpt for c in lorenz_sweep for s in c.summaries)

    # (a) same family, f_M = 0: the quantum contribution is switched off
    ablated = ExperimentConfig().with_field("reservoir.f_M", "zero")
    ablation_vpts = [run_experiment(ablated, seed).vpt for seed in range(5)]
    assert all(v < 1.0 for v in ablation_vpts)

    # (b) standalone leaky-tanh ESN at reservoir size 108
    esn = ExperimentConfig().with_field("mode", "classical-esn")
    esn_vpts = [run_experiment(esn, seed).vpt for seed in range(8)]
    assert max(esn_vpts) > 0.0
    assert max(esn_vpts) < best_hqrc

    _report(5, f"f_M=0 ablation VPTs max {max(ablation_vpts):.2f} (< 1); "
               f"ESN-108 best {max(esn_vpts):.2f} in (0, {best_hqrc:.2f})")


# -------------------------------------------------------------------------
# 6. shot-noise degradation
# -------------------------------------------------------------------------


def test_06_shot_noise_degradation():
    # seed-averaged means; the per-seed trend is noisy (24 seeds stabilize it)
    seeds = list(range(24))
    base = ExperimentConfig().with_field("readout.beta", 1e-6)
    levels = [None, 50_000, 25_000, 10_000, 5_000, 1_000]
    cells = run_sweep(base, {"noise.shots": levels}, seeds=seeds, workers=WORKERS)
    means = [cell.aggregates()["mean"] for cell in cells]
    for a, b in zip(means, means[1:]):
        assert a >= b, f"mean VPT increased along shot degradation: {means}"
    mean_exact = means[0]
    mean_10k = means[levels.index(10_000)]
    assert mean_10k < mean_exact

    coherent = base.with_field("noise.shots", 10_000).with_field(
        "noise.coherent_sigma", 0.05
    )
    cells_c = run_sweep(coherent, {}, seeds=seeds, workers=WORKERS)
    mean_coherent = cells_c[0].aggregates()["mean"]
    assert mean_coherent < mean_10k

    chain = " >= ".join(f"{m:.2f}" for m in means)
    _report(6, f"mean VPT chain exact->50k->25k->10k->5k->1k: {chain}; "
               f"sigma=0.05 at 10k shots: {mean_coherent:.2f} < {mean_10k:.2f}")


# -------------------------------------------------------------------------
# 7. double-scroll
# -------------------------------------------------------------------------


def test_07_double_scroll():
    base = (
        ExperimentConfig()
        .with_field("system.name", "double_scroll")
        .with_field("system.train_steps", 4000)
        .with_field("circuit.feature_map", "pi_tanh")
        .with_field("scheme.max_order", 3)
    )
    axes = {"reservoir.alpha": [0.5, 0.7], "readout.beta": [1e-6, 1e-7]}
    cells = run_sweep(base, axes, seeds=[0, 1, 2, 3], workers=WORKERS)
    for cell in cells:
        assert all(s.error is None for s in cell.summaries)
    best = max((s for c in cells for s in c.summaries), key=lambda s: s.vpt)
    assert best.vpt >= 50.0
    assert best.overlap_fraction >= 0.95
    _report(7, f"reservoir 276, best VPT {best.vpt:.2f} (>= 50) at "
               f"a={best.params['alpha']}/b={best.params['beta']:g} seed {best.seed}, "
               f"overlap {best.overlap_fraction:.3f}")


# -------------------------------------------------------------------------
# 8. metric unit tests and convergence slopes
# -------------------------------------------------------------------------


def test_08_metric_unit_tests():
    # representative exact-example battery (full coverage in the module tests)
    np.testing.assert_array_equal(init_state(2).amplitudes, [1, 0, 0, 0])
    s = init_state(2)
    s.amplitudes[:] = [0, 1, 0, 0]
    apply_circuit(s, [GateOp("CX", (0, 1))])
    np.testing.assert_array_equal(s.amplitudes, [0, 0, 0, 1])
    assert estimate_from_counts({0: 3, 3: 1}, PauliString("Z", (0,))) == 0.5
    np.testing.assert_allclose(
        spectral_normalize(np.diag([2.0, 1.0])), np.diag([1.0, 0.5]), atol=1e-10
    )
    assert rmse_at(np.ones(3), np.ones(3), np.ones(3)) == 0.0
    from hqrc.dynamics import double_scroll_deriv, lorenz63_deriv

    np.testing.assert_allclose(
        lorenz63_deriv((1.0, 1.0, 1.0)), [0.0, 26.0, 1 - 8 / 3], atol=1e-15
    )
    np.testing.assert_array_equal(double_scroll_deriv((0.0, 0.0, 0.0)), np.zeros(3))

    # RK4 order-4 convergence
    from hqrc.dynamics import OdeSystem

    errs, dts = [], [0.1, 0.05, 0.025, 0.0125]
    for dt in dts:
        traj = integrate_rk4(
            OdeSystem("decay", lambda p: -p, dt, (0,)), np.array([1.0]), int(round(1 / dt))
        )
        errs.append(abs(traj.points[-1, 0] - np.exp(-1.0)))
    rk4_slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert abs(rk4_slope - 4.0) < 0.3

    # sampling convergence -1/2 slope
    plus = apply_circuit(init_state(1), [GateOp("RY", (0,), (np.pi / 2,))])
    rng = np.random.default_rng(5)
    shot_levels = [100, 1000, 10_000, 100_000]
    stds = []
    for shots in shot_levels:
        reps = [
            estimate_from_counts(sample_basis(plus, "Z", shots, rng), PauliString("Z", (0,)))
            for _ in range(120)
        ]
        stds.append(np.std(reps))
    samp_slope = np.polyfit(np.log(shot_levels), np.log(stds), 1)[0]
    assert abs(samp_slope + 0.5) < 0.1

    # VPT epsilon-monotonicity and scale invariance, 100 random probe pairs
    rng = np.random.default_rng(6)
    for _ in range(100):
        n = int(rng.integers(10, 50))
        truth = rng.standard_normal((n, 3))
        pred = truth + rng.standard_normal((n, 3)) * rng.uniform(0.05, 0.8)
        sigma = rng.uniform(0.5, 2.0, 3)
        e1, e2 = sorted(rng.uniform(0.05, 1.0, 2))
        t1 = vpt(pred, truth, VptConfig(sigma=sigma, dt=0.1, epsilon=e1))
        t2 = vpt(pred, truth, VptConfig(sigma=sigma, dt=0.1, epsilon=e2))
        assert t2.time >= t1.time
        c = float(rng.uniform(0.1, 10.0))
        r1 = vpt(pred, truth, VptConfig(sigma=sigma, dt=0.1, epsilon=e1))
        r2 = vpt(c * pred, c * truth, VptConfig(sigma=c * sigma, dt=0.1, epsilon=e1))
        assert r1.index == r2.index

    _report(8, f"trivial examples exact; RK4 slope {rk4_slope:.2f} (4 +- 0.3); "
               f"sampling slope {samp_slope:.2f} (-0.5 +- 0.1); VPT properties on 100 probes")
