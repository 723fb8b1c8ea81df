import math

import numpy as np
import pytest

from core.errors import AccuracyError, DomainError
from lighttails.quadrature import (
    QuadratureSpec,
    log_integrate,
    log_panel_integrate,
    peaked_window,
)


def test_gaussian_far_below_double_range():
    # integral of exp(-800 - z^2) over the real line
    def log_f(z):
        return -800.0 - np.asarray(z) ** 2

    result = log_integrate(log_f, [-40.0, 0.0, 40.0])
    assert result.log_value == pytest.approx(-800.0 + 0.5 * math.log(math.pi), rel=1e-12)
    assert result.rel_error <= 1e-10


def test_integrable_singularity_at_lower_edge():
    # integral_0^1 z^-1/2 dz = 2
    def log_f(z):
        return -0.5 * np.log(np.asarray(z))

    result = log_integrate(log_f, [0.0, 1e-8, 1e-4, 1.0], QuadratureSpec(rel_tol=1e-8))
    assert math.exp(result.log_value) == pytest.approx(2.0, rel=1e-6)


def test_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(rel_tol=0.1)
    with pytest.raises(DomainError):
        QuadratureSpec(max_subdivisions=10)


def test_subdivision_limit_raises_with_best_estimate():
    def log_f(z):
        z = np.asarray(z)
        return np.log(np.abs(np.sin(200.0 * z)) + 1e-3)

    with pytest.raises(AccuracyError) as excinfo:
        log_integrate(log_f, [0.0, 50.0], QuadratureSpec(rel_tol=1e-12, max_subdivisions=64))
    assert math.isfinite(excinfo.value.best_estimate)


def test_panel_rule_matches_closed_form():
    # integral_0^s z e^-z dz = 1 - (1 + s) e^-s
    uppers = np.array([0.5, 2.0, 10.0])

    def log_f(s, z):
        return np.log(z) - z

    log_values, _ = log_panel_integrate(log_f, uppers, 16)
    expected = 1.0 - (1.0 + uppers) * np.exp(-uppers)
    assert np.allclose(np.exp(log_values), expected, rtol=1e-10)


def test_peaked_window_brackets_the_mass():
    def log_f(z):
        z = np.asarray(z)
        return -0.5 * ((z - 30.0) / 0.2) ** 2

    points = peaked_window(log_f, 0.0, 25.0, 1.0)
    assert points[0] < 30.0 - 2.0 < 30.0 + 2.0 < points[-1]
    assert any(abs(p - 30.0) < 1e-6 for p in points)
