"""Dormand-Prince 5(4) with step control, for complex state arrays.

Kept separate from scipy so that the numerical tracer and the jet-ODE route
for the holonomy (which uses scipy's DOP853) do not share an integrator.
The state may carry a leading batch axis; the error norm is the max over
the batch, so all members advance with a common step.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


class StepUnderflow(RuntimeError):
    pass


def dp54_step(f: Callable, t: float, y: np.ndarray, h: float, k1: np.ndarray | None = None):
    """One step; returns ``(y_new, err_vector, k_last)`` (FSAL: ``k_last = f(t+h, y_new)``)."""
    ks = [f(t, y) if k1 is None else k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks))
        ks.append(f(t + _C[i] * h, yi))
    y_new = y + h * sum(b * k for b, k in zip(_B5, ks) if b)
    err = h * sum(e * k for e, k in zip(_E, ks) if e)
    return y_new, err, ks[-1]


def error_norm(err: np.ndarray, y0: np.ndarray, y1: np.ndarray, rtol: float, atol: float) -> float:
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.max(np.abs(err) / scale))


@dataclass
class Controller:
    rtol: float = 1e-11
    atol: float = 1e-13
    h_min: float = 1e-14
    safety: float = 0.9

    def next_h(self, h: float, enorm: float) -> float:
        if enorm == 0:
            return h * 5.0
        return h * min(5.0, max(0.2, self.safety * enorm ** (-1 / 5)))


def integrate(f: Callable, y0: np.ndarray, t_end: float, h0: float = 1e-2, rtol: float = 1e-11,
              atol: float = 1e-13, max_steps: int = 1_000_000, track_norm: bool = False):
    """State at ``t_end`` (fixed horizon, no events).

    With ``track_norm`` also returns the largest norm of each batch row over
    the accepted steps.
    """
    ctl = Controller(rtol, atol)
    t, y = 0.0, np.asarray(y0, dtype=complex)
    h = min(h0, t_end)
    k1 = None
    peak = np.linalg.norm(y, axis=-1)
    for _ in range(max_steps):
        if t_end - t <= 1e-14 * max(1.0, abs(t_end)):
            return (y, peak) if track_norm else y
        h = min(h, t_end - t)
        y_new, err, k_last = dp54_step(f, t, y, h, k1)
        en = error_norm(err, y, y_new, rtol, atol)
        if en <= 1.0:
            t, y, k1 = t + h, y_new, k_last
            peak = np.maximum(peak, np.linalg.norm(y, axis=-1))
        if h < ctl.h_min and en > 1.0:
            raise StepUnderflow(f"step size underflow at t={t}")
        h = ctl.next_h(h, en)
    raise RuntimeError("maximum number of steps exceeded")


__all__ = ["StepUnderflow", "Controller", "dp54_step", "error_norm", "integrate"]
