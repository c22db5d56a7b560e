"""Compare the numba and pure-numpy statevector kernels.

Runs the same randomly-parameterized gate program through both backends and
reports per-call timings plus an end-to-end experiment timing.  The numpy
backend is always importable as the private fallback; the numba backend is
present unless HQRC_NO_NUMBA=1.

Usage: python benchmarks/bench_kernels.py [--qubits 8] [--gates 64] [--reps 2000]
"""

import argparse
import time

import numpy as np

from hqrc import _kernels
from hqrc._kernels import _run_gates_numpy


def random_program(rng, n_qubits, n_gates):
    kinds = rng.integers(0, 4, size=n_gates).astype(np.int64)
    ta = rng.integers(0, n_qubits, size=n_gates).astype(np.int64)
    tb = np.full(n_gates, -1, dtype=np.int64)
    for g in np.nonzero(kinds == _kernels.GATE_CX)[0]:
        a, b = rng.choice(n_qubits, size=2, replace=False)
        ta[g], tb[g] = a, b
    angles = rng.uniform(-np.pi, np.pi, size=n_gates)
    return kinds, ta, tb, angles


def time_backend(fn, n_qubits, program, reps):
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    fn(amps, *program)  # warm-up (jit compile / cache load)
    t0 = time.perf_counter()
    for _ in range(reps):
        amps[:] = 0.0
        amps[0] = 1.0
        fn(amps, *program)
    return (time.perf_counter() - t0) / reps


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--qubits", type=int, default=8)
    parser.add_argument("--gates", type=int, default=64)
    parser.add_argument("--reps", type=int, default=2000)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    program = random_program(rng, args.qubits, args.gates)

    t_numpy = time_backend(_run_gates_numpy, args.qubits, program, args.reps)
    print(f"numpy  backend: {t_numpy * 1e6:9.1f} us/circuit "
          f"({args.gates} gates, {args.qubits} qubits)")

    if _kernels.USE_NUMBA:
        t_numba = time_backend(_kernels.run_gates, args.qubits, program, args.reps)
        print(f"numba  backend: {t_numba * 1e6:9.1f} us/circuit")
        print(f"speedup: {t_numpy / t_numba:.1f}x")

        # cross-check: both backends produce identical amplitudes
        a1 = np.zeros(2**args.qubits, dtype=np.complex128); a1[0] = 1.0
        a2 = a1.copy()
        _run_gates_numpy(a1, *program)
        _kernels.run_gates(a2, *program)
        err = np.max(np.abs(a1 - a2))
        print(f"max amplitude deviation between backends: {err:.2e}")
    else:
        print("numba backend disabled (HQRC_NO_NUMBA) or unavailable")

    from hqrc.experiment import ExperimentConfig, run_experiment

    cfg = ExperimentConfig()
    t0 = time.perf_counter()
    s = run_experiment(cfg, 0)
    print(f"\nend-to-end Lorenz63 run ({_kernels.backend_name()} backend): "
          f"{time.perf_counter() - t0:.2f} s, vpt={s.vpt:.2f}")


if __name__ == "__main__":
    main()
