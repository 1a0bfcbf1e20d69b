"""Numerical leaf tracing in a ball, boundary transversality and numeric holonomy.

A leaf of a holomorphic field is a complex curve; a trace follows it along one
real direction ``e^{i theta}`` at a time, i.e. the real-time flow of
``Re(e^{i theta} X)``.  The closedness classification is a heuristic: a
finite trace gives evidence, never a certificate.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np

from .rk import Controller, StepUnderflow, dp54_step, error_norm, integrate
from .scalars import EXACT
from .series import TruncatedSeries
from .vectorfields import VectorField, linear_part

SEPARATRIX = "SeparatrixCandidate"
CLOSED = "Closed"
UNDETERMINED = "Undetermined"

ORIGIN_FRACTION = 1e-3
EXIT_MARGIN = 1e-6
DEFAULT_DIRECTIONS = 8


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class TraceConfig:
    epsilon: float = 1.0
    c0: complex = 0.5
    step: float = 1e-2
    tol: float = 1e-11
    max_time: float = 40.0
    max_samples: int = 20_000

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0 < abs(self.c0) < self.epsilon:
            raise ValueError("need 0 < |c0| < epsilon")
        if self.tol <= 0:
            raise ValueError("tol must be positive")

    def to_json(self) -> dict:
        d = asdict(self)
        d["c0"] = [complex(self.c0).real, complex(self.c0).imag]
        return d


class PolyField:
    """Fast evaluation of a polynomial vector field at (batches of) points."""

    def __init__(self, X: VectorField):
        X = X.to_float() if X.mode == EXACT else X
        self.n = X.nvars
        monos = sorted({k for c in X for k in c.terms})
        self.exps = np.asarray(monos, dtype=int).reshape(len(monos), self.n)
        self.coef = np.zeros((self.n, len(monos)), dtype=complex)
        index = {k: i for i, k in enumerate(monos)}
        for j, c in enumerate(X):
            for k, v in c.terms.items():
                self.coef[j, index[k]] = complex(v)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        if x.ndim == 1:
            return self.coef @ np.prod(x[None, :] ** self.exps, axis=1)
        vals = np.prod(x[:, None, :] ** self.exps[None, :, :], axis=2)
        return vals @ self.coef.T


@dataclass
class ExitEvent:
    time: float
    point: np.ndarray
    margin: float  # radial derivative Re<V, P> at the exit point

    def to_json(self) -> dict:
        return {"time": self.time, "margin": self.margin,
                "point": [[float(v.real), float(v.imag)] for v in self.point]}


@dataclass
class LeafTrace:
    times: np.ndarray
    samples: np.ndarray
    exit_events: list[ExitEvent]
    classification: str
    min_distance_to_origin: float
    theta: float
    seed: np.ndarray
    stopped: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "theta": self.theta,
            "seed": [[float(v.real), float(v.imag)] for v in self.seed],
            "classification": self.classification,
            "min_distance_to_origin": self.min_distance_to_origin,
            "exit_events": [e.to_json() for e in self.exit_events],
            "stopped": self.stopped,
            "samples": int(len(self.times)),
        }


def _half_trace(field_fn, y0, sign_dir: complex, cfg: TraceConfig):
    """One time direction; stops at the sphere, near the origin or at ``max_time``."""
    eps = cfg.epsilon
    near = ORIGIN_FRACTION * eps

    def f(_t, y):
        return sign_dir * field_fn(y)

    ctl = Controller(cfg.tol, cfg.tol * 1e-2)
    t, y, h = 0.0, np.asarray(y0, dtype=complex), cfg.step
    ts, ys = [0.0], [y]
    k1 = None
    while True:
        if t >= cfg.max_time:
            return ts, ys, None, "max_time"
        if len(ts) >= cfg.max_samples:
            return ts, ys, None, "max_samples"
        h = min(h, cfg.max_time - t)
        y_new, err, k_last = dp54_step(f, t, y, h, k1)
        en = error_norm(err, y, y_new, cfg.tol, cfg.tol * 1e-2)
        if en > 1.0:
            if h < ctl.h_min:
                raise StepUnderflow(f"step size underflow at t={t}")
            h = ctl.next_h(h, en)
            continue
        r_new = np.linalg.norm(y_new)
        if r_new > eps:
            # land on the sphere by bisecting the step length
            lo, hi = 0.0, h
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                ym, _, _ = dp54_step(f, t, y, mid, k1)
                if np.linalg.norm(ym) > eps:
                    hi = mid
                else:
                    lo = mid
                if hi - lo < 1e-15:
                    break
            ym, _, _ = dp54_step(f, t, y, lo, k1) if lo > 0 else (y, None, None)
            ts.append(t + lo)
            ys.append(ym)
            v = f(0.0, ym)
            margin = float(np.real(np.vdot(ym, v)))
            return ts, ys, ExitEvent(t + lo, ym, margin), "exit"
        t, y, k1 = t + h, y_new, k_last
        ts.append(t)
        ys.append(y)
        if r_new < near:
            return ts, ys, None, "origin"
        h = ctl.next_h(h, en)


def integrate_leaf(X: VectorField, seed: Sequence[complex], theta: float = 0.0,
                   config: TraceConfig | None = None) -> LeafTrace:
    """Trace the leaf through ``seed`` along ``e^{i theta}`` in both time directions."""
    cfg = config or TraceConfig()
    seed = np.asarray(seed, dtype=complex)
    if seed.shape != (X.nvars,):
        raise TraceError("seed has the wrong dimension")
    r0 = np.linalg.norm(seed)
    if r0 >= cfg.epsilon:
        raise TraceError("seed lies outside the ball")
    fn = PolyField(X)
    if np.linalg.norm(fn(seed)) == 0:
        raise TraceError("seed is a singular point")
    direction = complex(math.cos(theta), math.sin(theta))
    tf, yf, ef, sf = _half_trace(fn, seed, direction, cfg)
    tb, yb, eb, sb = _half_trace(fn, seed, -direction, cfg)
    times = np.asarray([-t for t in reversed(tb[1:])] + tf)
    samples = np.asarray(list(reversed(yb[1:])) + yf)
    dmin = float(np.min(np.linalg.norm(samples, axis=1)))
    exits = [e for e in (eb, ef) if e is not None]
    if eb is not None:
        eb.time = -eb.time
    if dmin < ORIGIN_FRACTION * cfg.epsilon:
        cls = SEPARATRIX
    elif ef is not None and eb is not None and all(abs(e.margin) > EXIT_MARGIN for e in exits):
        cls = CLOSED
    else:
        cls = UNDETERMINED
    return LeafTrace(times, samples, exits, cls, dmin, float(theta), seed,
                     {"forward": sf, "backward": sb})


def trace_directions(k: int = DEFAULT_DIRECTIONS) -> list[float]:
    return [2 * math.pi * i / k for i in range(k)]


def integral_deviation(trace: LeafTrace, integrals: Sequence[TruncatedSeries]) -> np.ndarray:
    """``|F_j(sample) - F_j(seed)|`` per sample (rows) and integral (columns)."""
    out = np.zeros((len(trace.times), len(integrals)))
    for j, F in enumerate(integrals):
        f0 = F.evaluate(trace.seed)
        out[:, j] = [abs(F.evaluate(p) - f0) for p in trace.samples]
    return out


def write_trace_csv(path, trace: LeafTrace, integrals: Sequence[TruncatedSeries] = ()) -> None:
    dev = integral_deviation(trace, integrals) if integrals else np.zeros((len(trace.times), 0))
    n = trace.samples.shape[1]
    header = ["t"] + [f"{p}_x{j + 1}" for j in range(n) for p in ("re", "im")] + [
        f"dev_F{j + 1}" for j in range(dev.shape[1])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for t, p, d in zip(trace.times, trace.samples, dev):
            row = [repr(float(t))]
            for v in p:
                row += [repr(float(v.real)), repr(float(v.imag))]
            row += [repr(float(x)) for x in d]
            w.writerow(row)


# --------------------------------------------------------------------------
# transversality and the monotone functional
# --------------------------------------------------------------------------


def _oriented_lambdas(X: VectorField) -> tuple[list[float], int] | None:
    """Real diagonal spectrum oriented to the profile (negatives, then one positive last)."""
    lin = np.asarray(linear_part(X.to_float() if X.mode == EXACT else X), dtype=complex)
    if np.max(np.abs(lin - np.diag(np.diag(lin)))) > 0 or np.max(np.abs(np.diag(lin).imag)) > 0:
        return None
    lams = [float(v.real) for v in np.diag(lin)]
    if all(v < 0 for v in lams[:-1]) and lams[-1] > 0:
        return lams, 1
    if all(v > 0 for v in lams[:-1]) and lams[-1] < 0:
        return [-v for v in lams], -1
    return None


def monotone_functional(x: np.ndarray, lams: Sequence[float]) -> float:
    """``ln|x'|^2 + (m / (4 lambda_n)) ln|x_n|^2`` with ``m = min_j |lambda_j|``.

    For the linear model its derivative along ``Re(X)`` is at most ``-3m/2``.
    """
    m = min(-v for v in lams[:-1])
    xt = np.asarray(x[:-1])
    return float(np.log(np.vdot(xt, xt).real) + (m / (4 * lams[-1])) * np.log(abs(x[-1]) ** 2))


@dataclass
class TransversalityRecord:
    point: np.ndarray
    radial: float
    functional_derivative: float | None

    @property
    def sign(self) -> str:
        if abs(self.radial) <= 1e-12:
            return "tangent"
        return "outward" if self.radial > 0 else "inward"

    def to_json(self) -> dict:
        return {"radial": self.radial, "sign": self.sign,
                "functional_derivative": self.functional_derivative}


def sphere_transversality(X: VectorField, point: Sequence[complex], epsilon: float) -> TransversalityRecord:
    """Radial derivative ``Re<X(P), P>`` and the functional's derivative at ``P``."""
    p = np.asarray(point, dtype=complex)
    if abs(np.linalg.norm(p) - epsilon) > 1e-9:
        raise TraceError("point is not on the sphere of radius epsilon")
    v = PolyField(X)(p)
    radial = float(np.real(np.vdot(p, v)))
    deriv = None
    prof = _oriented_lambdas(X)
    if prof is not None:
        lams, sgn = prof
        xt, vt = p[:-1], sgn * v[:-1]
        if np.vdot(xt, xt).real > 0 and p[-1] != 0:
            m = min(-x for x in lams[:-1])
            deriv = float(2 * np.real(np.vdot(xt, vt)) / np.vdot(xt, xt).real
                          + (m / (4 * lams[-1])) * 2 * np.real(np.conj(p[-1]) * sgn * v[-1]) / abs(p[-1]) ** 2)
    return TransversalityRecord(p, radial, deriv)


# --------------------------------------------------------------------------
# numeric holonomy
# --------------------------------------------------------------------------


@dataclass
class NumericHolonomy:
    seeds: np.ndarray
    endpoints: np.ndarray
    skipped: list[int]
    deviation: float | None

    def to_json(self) -> dict:
        return {"seeds": int(len(self.seeds)), "skipped": self.skipped, "max_deviation": self.deviation}


def numeric_holonomy(X: VectorField, config: TraceConfig, seeds: np.ndarray, theta=None) -> NumericHolonomy:
    """Integrate ``(2 pi i / lambda_n) X`` over ``t`` in ``[0, 1]`` from ``(seed, c0)``.

    ``theta`` (a transverse jet) is evaluated at the same seeds to report the
    largest endpoint deviation.
    """
    n = X.nvars
    lin = np.asarray(linear_part(X.to_float() if X.mode == EXACT else X), dtype=complex)
    ln = lin[n - 1, n - 1].real
    if ln <= 0:
        raise TraceError("lambda_n must be positive")
    fn = PolyField(X)
    seeds = np.asarray(seeds, dtype=complex).reshape(-1, n - 1)
    y0 = np.hstack([seeds, np.full((len(seeds), 1), complex(config.c0))])
    omega = 2j * math.pi / ln

    def f(_t, y):
        return omega * fn(y)

    end, peak = integrate(f, y0, 1.0, h0=config.step, rtol=config.tol, atol=config.tol * 1e-2,
                          track_norm=True)
    escaped = [int(i) for i in np.nonzero(peak > config.epsilon)[0]]
    keep = [i for i in range(len(seeds)) if i not in escaped]
    endpoints = end[:, : n - 1]
    dev = None
    if theta is not None and keep:
        sym = np.asarray([theta.evaluate(s) for s in seeds[keep]])
        dev = float(np.max(np.abs(sym - endpoints[keep])))
    return NumericHolonomy(seeds, endpoints, escaped, dev)


def transversal_seeds(nt: int, count: int, radius: float, seed: int = 0) -> np.ndarray:
    """``count`` points in C^nt with norm ``<= radius`` (deterministic)."""
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(count, nt)) + 1j * rng.normal(size=(count, nt))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r = radius * rng.uniform(0.2, 1.0, size=(count, 1))
    return z * r


__all__ = [
    "TraceConfig",
    "LeafTrace",
    "ExitEvent",
    "TraceError",
    "PolyField",
    "integrate_leaf",
    "trace_directions",
    "integral_deviation",
    "write_trace_csv",
    "monotone_functional",
    "sphere_transversality",
    "TransversalityRecord",
    "NumericHolonomy",
    "numeric_holonomy",
    "transversal_seeds",
    "SEPARATRIX",
    "CLOSED",
    "UNDETERMINED",
]
