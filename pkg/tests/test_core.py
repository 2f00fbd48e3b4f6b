import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delaylab.core import (DelaySystem, HistoryFunction, Tag, Trajectory, Verdict,
                           hermite_coefficients, shift_polynomial)
from delaylab.errors import ConfigurationError, DomainError


def parabola():
    # (t - 1)^2 = 1 - 2t + t^2
    return HistoryFunction.polynomial([1.0, -2.0, 1.0], -1.0)


def test_history_polynomial_values():
    h = parabola()
    assert h(-1.0)[0] == pytest.approx(4.0, abs=1e-14)
    assert h(0.0)[0] == pytest.approx(1.0, abs=1e-14)
    assert h(-0.5)[0] == pytest.approx(2.25, abs=1e-14)


def test_zero_history():
    h = HistoryFunction.constant([0.0], -2.0)
    for t in np.linspace(-2, 0, 7):
        assert h(t)[0] == 0.0


@pytest.mark.parametrize("t", [-1.5, 1e-3, 0.5])
def test_history_outside_span(t):
    with pytest.raises(DomainError):
        parabola()(t)


def test_history_tiling_checked():
    with pytest.raises(ConfigurationError):
        HistoryFunction(-1.0, ((-1.0, -0.4, [[1.0]]), (-0.5, 0.0, [[1.0]])), 1)
    with pytest.raises(ConfigurationError):
        HistoryFunction(-1.0, ((-1.0, 0.0, [[1.0, 0, 0, 0, 1.0]]),), 1)


def test_history_roundtrip_dict():
    h = HistoryFunction.from_function(lambda t: [math.sin(t), t * t], -2.0, 8)
    g = HistoryFunction.from_dict(h.to_dict())
    ts = np.linspace(-2, 0, 33)
    np.testing.assert_array_equal(h.evaluate_many(ts), g.evaluate_many(ts))
    c = HistoryFunction.from_dict({"constant": [1.0, 2.0], "span_start": -3.0})
    np.testing.assert_array_equal(c(-3.0), [1.0, 2.0])


def test_from_function_hermite_accuracy():
    h = HistoryFunction.from_function(np.sin, -math.pi, 200, np.cos)
    ts = np.linspace(-math.pi, 0, 1001)
    err = np.max(np.abs(h.evaluate_many(ts)[:, 0] - np.sin(ts)))
    assert err < 1e-9


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=4), st.floats(-3, 3))
def test_shift_polynomial(coeffs, shift):
    c = np.array(coeffs)
    s = np.linspace(-1, 1, 5)
    lhs = np.polynomial.polynomial.polyval(s + shift, c)
    rhs = np.polynomial.polynomial.polyval(s, shift_polynomial(c, shift))
    np.testing.assert_allclose(lhs, rhs, atol=1e-9 * max(1.0, np.max(np.abs(lhs))))


@settings(max_examples=50)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3),
       st.floats(0.01, 2))
def test_hermite_interpolates_endpoints(y0, y1, d0, d1, h):
    c = hermite_coefficients(np.array([y0]), np.array([y1]), np.array([d0]),
                             np.array([d1]), h)[0]
    p = np.polynomial.Polynomial(c)
    assert p(0) == pytest.approx(y0, abs=1e-12)
    assert p(h) == pytest.approx(y1, abs=1e-9)
    assert p.deriv()(0) == pytest.approx(d0, abs=1e-9)
    assert p.deriv()(h) == pytest.approx(d1, abs=1e-8)


def constant_trajectory(c=2.5):
    ts = np.linspace(0, 3, 7)
    vals = np.full((7, 1), c)
    return Trajectory(ts, vals, np.zeros_like(vals), ())


def test_trajectory_constant_segment():
    tr = constant_trajectory()
    for t in (0.0, 0.3, 1.5, 3.0):
        assert tr(t)[0] == 2.5


def test_trajectory_domain():
    tr = constant_trajectory()
    with pytest.raises(DomainError):
        tr(3.5)
    with pytest.raises(DomainError):
        tr(-0.1)


def test_trajectory_continuity_at_nodes():
    ts = np.linspace(0, 1, 11)
    vals = np.sin(ts)[:, None]
    tr = Trajectory(ts, vals, np.cos(ts)[:, None], ())
    for t in ts[1:-1]:
        assert tr(t, side="left")[0] == pytest.approx(tr(t, side="right")[0], abs=1e-14)
    assert len(tr.segments) == 10


def test_delay_system_validation():
    with pytest.raises(ConfigurationError):
        DelaySystem(1, (1.0, 0.5), lambda t, x, d: x)
    with pytest.raises(ConfigurationError):
        DelaySystem(1, (-1.0,), lambda t, x, d: x)
    s = DelaySystem(1, (0.0, 0.5, 2.0), lambda t, x, d: x)
    assert s.tau_max == 2.0 and s.tau_min == 0.5


def test_verdict_dict():
    v = Verdict(Tag.OSCILLATORY, "x", {"a": 1.0}, note="n")
    d = v.to_dict()
    assert d["tag"] == "Oscillatory"
    assert d["justification"] == {"criterion": "x", "parameters": {"a": 1.0}}
    assert not v.is_unknown
