"""Hot statevector kernels: gate application over complex amplitude arrays.

Two interchangeable backends provide identical semantics:

* a numba ``@njit`` backend (default), compiled lazily on first use, and
* a pure-numpy backend, selected by setting the environment variable
  ``HQRC_NO_NUMBA=1`` before import (also used automatically when numba
  is not installed).

``benchmarks/bench_kernels.py`` compares the two.

Amplitude arrays are little-endian: bit ``q`` of the basis index is the
state of qubit ``q``.  All kernels mutate ``amps`` in place.
"""

import os

import numpy as np

# gate codes used in compiled circuit programs
GATE_RX = 0
GATE_RY = 1
GATE_RZ = 2
GATE_CX = 3


def _numba_disabled() -> bool:
    return os.environ.get("HQRC_NO_NUMBA", "0").lower() in ("1", "true", "yes")


# --------------------------------------------------------------------------
# pure-numpy backend
# --------------------------------------------------------------------------


def _apply_1q_numpy(amps, qubit, m00, m01, m10, m11):
    idx = np.arange(amps.shape[0])
    i0 = idx[(idx >> qubit) & 1 == 0]
    i1 = i0 + (1 << qubit)
    a0 = amps[i0]
    a1 = amps[i1]
    amps[i0] = m00 * a0 + m01 * a1
    amps[i1] = m10 * a0 + m11 * a1


def _apply_cx_numpy(amps, control, target):
    idx = np.arange(amps.shape[0])
    sel = ((idx >> control) & 1 == 1) & ((idx >> target) & 1 == 0)
    i0 = idx[sel]
    i1 = i0 | (1 << target)
    a = amps[i0].copy()
    amps[i0] = amps[i1]
    amps[i1] = a


def _rotation_elements(kind, angle):
    """2x2 matrix entries of exp(-i*angle*P/2) for P = X, Y or Z."""
    c = np.cos(0.5 * angle)
    s = np.sin(0.5 * angle)
    if kind == GATE_RX:
        return c, -1j * s, -1j * s, c
    if kind == GATE_RY:
        return c, -s, s, c
    return c - 1j * s, 0.0, 0.0, c + 1j * s  # RZ, diagonal


def _run_gates_numpy(amps, kinds, targ_a, targ_b, angles):
    for g in range(kinds.shape[0]):
        k = kinds[g]
        if k == GATE_CX:
            _apply_cx_numpy(amps, targ_a[g], targ_b[g])
        else:
            m00, m01, m10, m11 = _rotation_elements(k, angles[g])
            _apply_1q_numpy(amps, targ_a[g], m00, m01, m10, m11)


# --------------------------------------------------------------------------
# numba backend
# --------------------------------------------------------------------------

USE_NUMBA = False
if not _numba_disabled():
    try:
        from numba import njit

        USE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False

if USE_NUMBA:

    @njit(cache=True)
    def _apply_1q_numba(amps, qubit, m00, m01, m10, m11):
        step = 1 << qubit
        n = amps.shape[0]
        for base in range(0, n, 2 * step):
            for off in range(step):
                i0 = base + off
                i1 = i0 + step
                a0 = amps[i0]
                a1 = amps[i1]
                amps[i0] = m00 * a0 + m01 * a1
                amps[i1] = m10 * a0 + m11 * a1

    @njit(cache=True)
    def _apply_cx_numba(amps, control, target):
        cbit = 1 << control
        tbit = 1 << target
        n = amps.shape[0]
        for i in range(n):
            if (i & cbit) != 0 and (i & tbit) == 0:
                j = i | tbit
                tmp = amps[i]
                amps[i] = amps[j]
                amps[j] = tmp

    @njit(cache=True)
    def _run_gates_numba(amps, kinds, targ_a, targ_b, angles):
        for g in range(kinds.shape[0]):
            k = kinds[g]
            if k == GATE_CX:
                _apply_cx_numba(amps, targ_a[g], targ_b[g])
            else:
                c = np.cos(0.5 * angles[g])
                s = np.sin(0.5 * angles[g])
                if k == GATE_RX:
                    _apply_1q_numba(amps, targ_a[g], c + 0j, -1j * s, -1j * s, c + 0j)
                elif k == GATE_RY:
                    _apply_1q_numba(amps, targ_a[g], c + 0j, -s + 0j, s + 0j, c + 0j)
                else:
                    _apply_1q_numba(amps, targ_a[g], c - 1j * s, 0j, 0j, c + 1j * s)

    apply_1q = _apply_1q_numba
    apply_cx = _apply_cx_numba
    run_gates = _run_gates_numba
else:
    apply_1q = _apply_1q_numpy
    apply_cx = _apply_cx_numpy
    run_gates = _run_gates_numpy


def backend_name() -> str:
    """Name of the active kernel backend ("numba" or "numpy")."""
    return "numba" if USE_NUMBA else "numpy"
