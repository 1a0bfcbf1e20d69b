import csv
import math

import numpy as np
import pytest

from foliation_lab.leaftracer import (
    CLOSED,
    SEPARATRIX,
    UNDETERMINED,
    TraceConfig,
    TraceError,
    integral_deviation,
    integrate_leaf,
    monotone_functional,
    numeric_holonomy,
    sphere_transversality,
    trace_directions,
    transversal_seeds,
    write_trace_csv,
)
from foliation_lab.rk import integrate
from foliation_lab.scalars import FLOAT
from foliation_lab.series import TruncatedSeries
from foliation_lab.vectorfields import VectorField

SADDLE = VectorField.diagonal((1, 1, -1), 4, FLOAT)
X0 = VectorField.diagonal((-1, -1, 1), 4, FLOAT)


def saddle_integrals():
    x, y, z = TruncatedSeries.variables(3, 4, FLOAT)
    return [x * z, y * z]


# ---- integrator -------------------------------------------------------------


def test_dp54_exponential():
    y = integrate(lambda t, y: 1j * y, np.array([1.0 + 0j]), 2 * math.pi, rtol=1e-12, atol=1e-14)
    assert abs(y[0] - 1) <= 1e-10


def test_dp54_batch_tracks_peak():
    y0 = np.array([[1.0 + 0j], [0.5 + 0j]])
    y, peak = integrate(lambda t, y: -y, y0, 1.0, track_norm=True)
    assert np.allclose(y[:, 0], y0[:, 0] * math.exp(-1), atol=1e-10)
    assert np.allclose(peak, [1.0, 0.5])


# ---- classification ---------------------------------------------------------


def test_axis_seed_is_separatrix_candidate():
    tr = integrate_leaf(SADDLE, [0, 0, 0.5], 0.0)
    assert tr.classification == SEPARATRIX
    assert np.max(np.abs(tr.samples[:, :2])) == 0
    assert tr.min_distance_to_origin < 1e-3


def test_plane_seed_is_separatrix_candidate():
    tr = integrate_leaf(SADDLE, [0.3, -0.2, 0], 0.0)
    assert tr.classification == SEPARATRIX
    assert np.max(np.abs(tr.samples[:, 2])) == 0


def test_generic_seed_is_closed_and_conserves():
    seed = [0.3, 0.2, 0.4]
    tr = integrate_leaf(SADDLE, seed, 0.0)
    assert tr.classification == CLOSED
    assert len(tr.exit_events) == 2
    dev = integral_deviation(tr, saddle_integrals())
    assert dev.max() <= 1e-8


def test_rotation_direction_without_exit_is_undetermined():
    # along e^{i pi/2} the linear flow only rotates phases, so no exit occurs
    tr = integrate_leaf(SADDLE, [0.3, 0.2, 0.4], math.pi / 2, TraceConfig(max_time=5))
    assert tr.classification == UNDETERMINED


@pytest.mark.parametrize("theta", trace_directions())
def test_samples_stay_in_ball(theta):
    cfg = TraceConfig()
    tr = integrate_leaf(SADDLE, [0.3, 0.2, 0.4], theta, cfg)
    assert np.max(np.linalg.norm(tr.samples, axis=1)) <= cfg.epsilon * (1 + 1e-9)


def test_unit_multiple_conserves_exact_integrals():
    x1, x2, x3 = TruncatedSeries.variables(3, 6, FLOAT)
    X = VectorField.diagonal((-1, -1, 1), 6, FLOAT).times(1 + x1 * x3)
    ints = [x1 * x3, x2 * x3]
    for theta in trace_directions():
        tr = integrate_leaf(X, [0.3, 0.1j, 0.4], theta)
        dev = integral_deviation(tr, ints)
        scale = np.array([1 + abs(F.evaluate(tr.seed)) for F in ints])
        assert (dev / scale).max() <= 1e-7


def test_trace_errors():
    with pytest.raises(TraceError):
        integrate_leaf(SADDLE, [1.0, 0, 0.5])
    with pytest.raises(TraceError):
        integrate_leaf(SADDLE, [0, 0, 0])
    with pytest.raises(TraceError):
        integrate_leaf(SADDLE, [0.1, 0.1])


@pytest.mark.parametrize("kwargs", [{"epsilon": 0}, {"c0": 0}, {"c0": 2.0}, {"tol": 0}])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        TraceConfig(**kwargs)


def test_csv_columns(tmp_path):
    tr = integrate_leaf(SADDLE, [0.3, 0.2, 0.4], 0.0)
    path = tmp_path / "t.csv"
    write_trace_csv(path, tr, saddle_integrals())
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "re_x1", "im_x1", "re_x2", "im_x2", "re_x3", "im_x3", "dev_F1", "dev_F2"]
    assert len(rows) == len(tr.times) + 1


# ---- transversality and the monotone functional --------------------------------


@pytest.mark.parametrize(
    "point, radial, sign",
    [((0, 0, 1), 1.0, "outward"), ((1, 0, 0), -1.0, "inward"),
     ((2 ** -0.5, 0, 2 ** -0.5), 0.0, "tangent")],
)
def test_sphere_transversality(point, radial, sign):
    rec = sphere_transversality(X0, point, 1.0)
    assert abs(rec.radial - radial) <= 1e-12
    assert rec.sign == sign


def test_transversality_scales_with_epsilon():
    rec = sphere_transversality(X0, (0, 0, 0.5), 0.5)
    assert abs(rec.radial - 0.25) <= 1e-12


def test_functional_derivative_negative_at_tangency():
    rec = sphere_transversality(X0, (2 ** -0.5, 0, 2 ** -0.5), 1.0)
    assert rec.functional_derivative is not None and rec.functional_derivative < 0


def test_transversality_requires_sphere_point():
    with pytest.raises(TraceError):
        sphere_transversality(X0, (0.5, 0, 0), 1.0)


@pytest.mark.parametrize("lam", [(-1, -1, 1), (-1, -2, 3), (-2, -3, 5)])
def test_functional_monotone_along_forward_trace(lam):
    X = VectorField.diagonal(lam, 4, FLOAT)
    tr = integrate_leaf(X, [0.2 + 0.1j, 0.1 + 0.1j, 0.3], 0.0)
    vals = [monotone_functional(p, lam) for p in tr.samples[tr.times >= 0]]
    assert len(vals) > 5
    assert max(b - a for a, b in zip(vals, vals[1:])) <= 1e-9


# ---- numeric holonomy -------------------------------------------------------------


def test_numeric_holonomy_identity():
    seeds = transversal_seeds(2, 8, 0.1, seed=1)
    nh = numeric_holonomy(X0, TraceConfig(), seeds)
    assert np.max(np.abs(nh.endpoints - seeds)) <= 1e-10
    assert nh.skipped == []


def test_numeric_holonomy_closed_form():
    lam = (-1, -2, 3)
    X = VectorField.diagonal(lam, 4, FLOAT)
    seeds = transversal_seeds(2, 8, 0.1, seed=2)
    nh = numeric_holonomy(X, TraceConfig(), seeds)
    expected = seeds * np.exp(2j * math.pi * np.array(lam[:2]) / lam[2])
    assert np.max(np.abs(nh.endpoints - expected)) <= 1e-8


def test_numeric_holonomy_skips_escaping_seeds():
    seeds = np.array([[0.05, 0.05], [0.95, 0.0]])
    nh = numeric_holonomy(X0, TraceConfig(), seeds)
    assert nh.skipped == [1]


def test_transversal_seed_norms():
    s = transversal_seeds(2, 32, 0.1)
    assert s.shape == (32, 2) and np.all(np.linalg.norm(s, axis=1) <= 0.1 + 1e-15)
    assert np.array_equal(s, transversal_seeds(2, 32, 0.1))
