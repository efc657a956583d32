"""Runge-Kutta steppers used by the master-equation and Schrodinger solvers.

Two methods are provided: an adaptive Dormand-Prince 5(4) pair (the
default) and a fixed-step classic RK4 kept for convergence cross-checks.
Both integrate a generic complex-vector ODE ``dy/dt = rhs(t, y)`` from 0
to ``t_end`` and land exactly on a sorted list of checkpoint times where
a callback receives the state.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import SolverError

# Dormand-Prince 5(4) tableau.
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784,
                   11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])
_DP_E = _DP_B5 - _DP_B4

_MIN_STEP = 1e-10  # ns; far below any time scale of the problem
_SAFETY = 0.9
_MAX_GROW = 5.0
_MAX_SHRINK = 0.2


def _error_norm(err: np.ndarray, y0: np.ndarray, y1: np.ndarray,
                rtol: float, atol: float) -> float:
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((np.abs(err) / scale) ** 2)))


def rk45_adaptive(rhs: Callable[[float, np.ndarray], np.ndarray],
                  y0: np.ndarray,
                  t_end: float,
                  checkpoints: Sequence[float],
                  rtol: float = 1e-10,
                  atol: float = 1e-10,
                  max_step: float = 0.01,
                  on_checkpoint: Callable[[float, np.ndarray], None] | None = None,
                  ) -> np.ndarray:
    """Integrate from t=0 to t_end, calling back at every checkpoint.

    ``checkpoints`` must be strictly increasing, positive and end at
    ``t_end``.  The first stage is reused across accepted steps (FSAL).
    """
    y = np.array(y0, dtype=complex, copy=True)
    t = 0.0
    h = min(max_step, t_end)
    k = [None] * 7
    k[0] = rhs(t, y)
    for t_stop in checkpoints:
        snap = 1e-12 * max(1.0, abs(t_stop))
        while t_stop - t > snap:
            if h < _MIN_STEP:
                raise SolverError("step size underflow in rk45", t_ns=t)
            h = min(h, max_step, t_stop - t)
            for i in range(1, 7):
                yi = y + h * sum(a * k[j] for j, a in enumerate(_DP_A[i]))
                k[i] = rhs(t + h * _dp_c(i), yi)
            y5 = y + h * (_DP_B5[0] * k[0] + _DP_B5[2] * k[2]
                          + _DP_B5[3] * k[3] + _DP_B5[4] * k[4]
                          + _DP_B5[5] * k[5])
            err = h * (_DP_E[0] * k[0] + _DP_E[2] * k[2] + _DP_E[3] * k[3]
                       + _DP_E[4] * k[4] + _DP_E[5] * k[5] + _DP_E[6] * k[6])
            norm = _error_norm(err, y, y5, rtol, atol)
            if math.isfinite(norm) and norm <= 1.0:
                t += h
                y = y5
                k[0] = k[6]  # FSAL
                h *= _MAX_GROW if norm == 0.0 else min(
                    _MAX_GROW, max(_MAX_SHRINK, _SAFETY * norm ** -0.2))
            elif not math.isfinite(norm):
                h *= _MAX_SHRINK
            else:
                h *= max(_MAX_SHRINK, _SAFETY * norm ** -0.2)
        t = t_stop
        if on_checkpoint is not None:
            on_checkpoint(t_stop, y)
    return y


_DP_C_VALUES = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)


def _dp_c(i: int) -> float:
    return _DP_C_VALUES[i]


def rk4_fixed(rhs: Callable[[float, np.ndarray], np.ndarray],
              y0: np.ndarray,
              t_end: float,
              checkpoints: Sequence[float],
              dt: float = 0.001,
              on_checkpoint: Callable[[float, np.ndarray], None] | None = None,
              ) -> np.ndarray:
    """Classic RK4 with a fixed nominal step, exact on checkpoints.

    Each checkpoint interval is divided into ``ceil(span/dt)`` equal
    steps so the nominal step is never exceeded.
    """
    if dt <= 0:
        raise SolverError("rk4 needs a positive time step")
    y = np.array(y0, dtype=complex, copy=True)
    t = 0.0
    for t_stop in checkpoints:
        span = t_stop - t
        if span <= 0:
            if on_checkpoint is not None:
                on_checkpoint(t_stop, y)
            continue
        n = max(1, int(math.ceil(span / dt - 1e-12)))
        h = span / n
        for _ in range(n):
            k1 = rhs(t, y)
            k2 = rhs(t + 0.5 * h, y + (0.5 * h) * k1)
            k3 = rhs(t + 0.5 * h, y + (0.5 * h) * k2)
            k4 = rhs(t + h, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        t = t_stop
        if not np.isfinite(abs(y[0])):
            raise SolverError("non-finite state in rk4", t_ns=t)
        if on_checkpoint is not None:
            on_checkpoint(t_stop, y)
    return y
