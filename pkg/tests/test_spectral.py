import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from delaylab.core import DelaySystem, Tag
from delaylab.errors import (BoundaryRootError, NoImaginaryRootError, NoRootsFound,
                             PreconditionError, UnsupportedDimensionError)
from delaylab.spectral import (QuasiPolynomial, RootWindow, charfun_eval, hopf_point_scalar,
                               linear_scalar_characteristic, linearize_at,
                               neutral_destabilization_check, rightmost_root,
                               roots_in_rectangle, routh_hurwitz_2, stability_switch_scan,
                               winding_count)
from delaylab.zoo import make_model


def real_root(f, lo, hi):
    return brentq(f, lo, hi, xtol=1e-15)


ROOT_02 = real_root(lambda x: x + 0.2 * math.exp(-x), -1.0, 0.0)


def test_bisection_oracle_value():
    assert ROOT_02 == pytest.approx(-0.2592, abs=1e-4)


# --- evaluation ---------------------------------------------------------------

def test_charfun_values():
    q = QuasiPolynomial([1.0, 1.0], ((1.0, [2.0]),))
    assert charfun_eval(q, 0.0) == pytest.approx(3.0)
    hopf = QuasiPolynomial([0.0, 1.0], ((1.0, [math.pi / 2]),))
    assert abs(charfun_eval(hopf, 1j * math.pi / 2)) < 1e-12
    q02 = QuasiPolynomial([0.0, 1.0], ((1.0, [0.2]),))
    assert abs(q02(ROOT_02)) < 1e-12


def test_terms_merge_and_fold():
    q = QuasiPolynomial([1.0, 1.0], ((0.5, [1.0]), (0.5, [2.0]), (0.0, [3.0])))
    assert q.delays == (0.5,)
    np.testing.assert_allclose(q.base, [4.0, 1.0])
    np.testing.assert_allclose(q.delayed_terms[0][1], [3.0])
    np.testing.assert_allclose(q.undelayed(), [7.0, 1.0])


@settings(max_examples=40)
@given(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_derivative_matches_difference(z):
    q = QuasiPolynomial([1.0, -0.5, 1.0], ((0.7, [0.3, 0.2]), (1.9, [-1.0])))
    h = 1e-6
    fd = (q(z + h) - q(z - h)) / (2 * h)
    assert abs(fd - q.derivative(z)) < 1e-5 * max(1.0, abs(q.derivative(z)))


def test_dict_roundtrip():
    q = QuasiPolynomial([1.0, 2.0, 1.0], ((0.5, [1.0, 0.5]),))
    r = QuasiPolynomial.from_dict(q.to_dict())
    assert r(0.3 + 0.2j) == q(0.3 + 0.2j)


# --- root counting ----------------------------------------------------------

def test_count_single_real_root():
    q = QuasiPolynomial([0.0, 1.0], ((1.0, [0.2]),))
    rs = roots_in_rectangle(q, RootWindow(-1, 1, 3))
    assert rs.count == 1
    assert rs.roots[0].real == pytest.approx(ROOT_02, abs=1e-10)
    assert rs.roots[0].imag == 0.0


def test_second_real_root_outside():
    f = lambda x: x + 0.2 * math.exp(-x)
    r2 = real_root(f, -4.0, -1.5)
    assert r2 == pytest.approx(-2.5426, abs=1e-4)
    q = QuasiPolynomial([0.0, 1.0], ((1.0, [0.2]),))
    rs = roots_in_rectangle(q, RootWindow(-3, 1, 3))
    assert rs.count == 2
    assert sorted(z.real for z in rs.roots) == pytest.approx([r2, ROOT_02], abs=1e-10)


def test_count_polynomial():
    rs = roots_in_rectangle(QuasiPolynomial([1.0, 1.0]), RootWindow(-2, 0, 1))
    assert rs.count == 1 and rs.roots[0] == pytest.approx(-1.0)


def test_hopf_root_located():
    q = QuasiPolynomial([0.0, 1.0], ((1.0, [math.pi / 2]),))
    rs = roots_in_rectangle(q, RootWindow(-0.1, 0.1, 3, im_min=0.1))
    assert rs.count == 1
    assert abs(rs.roots[0] - 1j * math.pi / 2) < 1e-10


def test_boundary_root_reported():
    # roots -1 and -1.000001 straddle the jittered left side
    q = QuasiPolynomial([1.000001, 2.000001, 1.0])
    with pytest.raises(BoundaryRootError) as info:
        winding_count(q, (-1.0, 1.0, -1.0, 1.0))
    assert info.value.side == "left"


def test_boundary_jitter_recovers():
    q = QuasiPolynomial([1.0, 1.0])
    rs = roots_in_rectangle(q, RootWindow(-1.0, 1.0, 1.0))
    assert rs.count == 1


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=2, max_size=3),
       st.floats(0.1, 1.5), st.floats(-2, 2))
def test_counts_match_polynomial_roots_when_delay_vanishes(base, tau, c):
    # the count of a delay-free polynomial agrees with numpy's roots
    q = QuasiPolynomial(list(base) + [1.0])
    w = RootWindow(-3.3, 3.1, 3.7)
    roots = np.roots(np.r_[1.0, list(base)[::-1]])
    inside = [z for z in roots if -3.3 < z.real < 3.1 and abs(z.imag) < 3.7]
    near_edge = any(min(abs(z.real + 3.3), abs(z.real - 3.1), abs(abs(z.imag) - 3.7)) < 1e-4
                    for z in roots)
    if near_edge:
        return
    assert roots_in_rectangle(q, w).count == len(inside)


def test_conjugate_symmetry():
    q = QuasiPolynomial([1.0, 1.0], ((1.25, [2.0]),))
    rs = roots_in_rectangle(q, RootWindow(-5, 1, 30))
    for z in rs.roots:
        assert any(abs(w - z.conjugate()) < 1e-12 for w in rs.roots)


# --- rightmost roots --------------------------------------------------------

def test_rightmost_stable():
    q = QuasiPolynomial([0.0, 1.0], ((1.0, [0.2]),))
    r = rightmost_root(q)
    assert r.root.real == pytest.approx(ROOT_02, abs=1e-10)
    assert r.verdict.tag is Tag.LOCALLY_STABLE
    assert r.right_edge_clear


def test_rightmost_across_hopf():
    above = rightmost_root(linear_scalar_characteristic(1, 2, 1.25))
    below = rightmost_root(linear_scalar_characteristic(1, 2, 1.15))
    assert above.max_real > 0 and above.verdict.tag is Tag.UNSTABLE
    assert below.max_real < 0 and below.verdict.tag is Tag.LOCALLY_STABLE
    assert len(above.tied) == 2


def test_rightmost_empty_window():
    with pytest.raises(NoRootsFound):
        rightmost_root(QuasiPolynomial([1.0, 1.0]), RootWindow(0, 1, 1))


def test_narrow_window_is_not_a_stability_claim():
    r = rightmost_root(QuasiPolynomial([1.0, 1.0]), RootWindow(-2, 0.2, 1))
    assert r.verdict.tag is Tag.UNKNOWN


def test_rightmost_matches_full_solve():
    q = make_model("cooperative", {"r1": 1, "r2": 1.5, "k1": 1, "k2": 0.5, "alpha1": 2,
                                   "alpha2": 2, "tau1": 1, "tau2": 1}).characteristic(6.0)
    w = RootWindow(-3, 1, 40)
    full = roots_in_rectangle(q, w)
    assert full.count > 20
    assert rightmost_root(q, w).max_real == pytest.approx(max(z.real for z in full.roots),
                                                          abs=1e-10)


def test_neutral_root_far_right():
    q = make_model("neutral_example", {"tau": 0.1}).characteristic(0.1)
    r = rightmost_root(q, RootWindow(-1, 8, 400, im_min=0.0))
    assert r.max_real > 0
    assert q.is_neutral and not r.right_edge_clear
    q0 = make_model("neutral_example", {"tau": 0.0}).characteristic(0.0)
    assert abs(rightmost_root(q0).root - (-1 / 3)) < 1e-12


# --- linearization ----------------------------------------------------------

def test_linearize_scalar_delay():
    alpha = 0.8
    sys1 = DelaySystem(1, (1.0,), lambda t, x, d: -alpha * d[0])
    q = linearize_at(sys1, [0.0])
    np.testing.assert_allclose(q.base, [0.0, 1.0])
    assert q.delays == (1.0,)
    assert q.delayed_terms[0][1][0] == pytest.approx(alpha, abs=1e-8)


def test_linearize_ode_has_no_delayed_terms():
    sys1 = DelaySystem(2, (), lambda t, x, d: np.array([x[1], -x[0] - x[1]]))
    q = linearize_at(sys1, [0.0, 0.0])
    assert q.delayed_terms == ()
    np.testing.assert_allclose(q.base, [1.0, 1.0, 1.0], atol=1e-8)


def test_prey_predator_p():
    spec = make_model("prey_predator", {"gamma": 1, "k": 2, "a": 1, "b": 1, "c": 1,
                                        "m": 0.5, "tau": 1})
    q = linearize_at(spec.system, spec.steady_state)
    c0, p, lead = q.undelayed()
    assert lead == pytest.approx(1.0)
    assert p == pytest.approx(5 / 6, abs=1e-5)
    assert c0 > 0
    assert routh_hurwitz_2(p, c0).tag is Tag.LOCALLY_STABLE


def test_prey_predator_tiny_predator_state():
    # y* ~ 5e-7: a fixed absolute difference step would cross zero in y**m
    params = {"gamma": 0.6522345154515978, "k": 0.27476658024159695, "a": 2.02226084158224,
              "b": 0.8010935636825374, "c": 1.7783872279477937, "m": 0.8558436238454727}
    spec = make_model("prey_predator", dict(params, tau=1.0))
    x, y = spec.steady_state
    assert y < 1e-6
    g, k, a, b, c, m = (params[n] for n in ("gamma", "k", "a", "b", "c", "m"))
    c0, p, _ = linearize_at(spec.system, spec.steady_state).undelayed()
    assert p == pytest.approx(c * (1 - m) + g * x / k, rel=1e-7)
    assert c0 == pytest.approx(g / k * x * c * (1 - m) + a * m * b * x * y ** (2 * m - 1), rel=1e-7)


def test_linearize_rejects_non_steady_state():
    spec = make_model("hutchinson", {"gamma": 1, "k": 1, "tau": 1})
    with pytest.raises(PreconditionError):
        linearize_at(spec.system, [0.5])


def test_linearize_dimension_limit():
    sys3 = DelaySystem(3, (), lambda t, x, d: -x)
    with pytest.raises(UnsupportedDimensionError):
        linearize_at(sys3, np.zeros(3))


# --- Hopf and switches ------------------------------------------------------

def test_hopf_point_formulas():
    hp = hopf_point_scalar(1, 2)
    assert hp.w0 == pytest.approx(math.sqrt(3))
    assert hp.tau0 == pytest.approx(2 * math.pi / 3 / math.sqrt(3))
    assert hp.tau0 == pytest.approx(1.20920, abs=1e-5)
    assert hp.period == pytest.approx(3.6276, abs=1e-4)
    q = linear_scalar_characteristic(1, 2, hp.tau0)
    assert abs(q(1j * hp.w0)) < 1e-12
    for k in range(4):
        assert abs(linear_scalar_characteristic(1, 2, hp.crossing(k))(1j * hp.w0)) < 1e-11


def test_hopf_quarter_period():
    hp = hopf_point_scalar(0, 1)
    assert hp.tau0 == pytest.approx(math.pi / 2)
    assert hp.period == pytest.approx(2 * math.pi)
    for b in (0.3, 1.7, 5.0):
        hp = hopf_point_scalar(0, b)
        assert hp.period == pytest.approx(2 * math.pi / b, rel=1e-15)
        assert hp.period == pytest.approx(4 * hp.tau0, rel=1e-15)


def test_hopf_requires_b_above_a():
    with pytest.raises(NoImaginaryRootError):
        hopf_point_scalar(2, 1)


def test_switch_scan_finds_hopf():
    scan = stability_switch_scan(lambda t: linear_scalar_characteristic(1, 2, t), (0, 3), 61)
    assert len(scan.events) == 1
    ev = scan.events[0]
    assert ev.tau_star == pytest.approx(hopf_point_scalar(1, 2).tau0, abs=1e-4)
    assert ev.direction == "destabilizing"
    assert ev.crossing_frequency == pytest.approx(math.sqrt(3), abs=1e-3)


def test_switch_scan_no_delay_term():
    scan = stability_switch_scan(lambda t: linear_scalar_characteristic(1, 0, t), (0, 3), 11)
    assert scan.events == ()


def test_switch_scan_thread_cap(monkeypatch):
    monkeypatch.setenv("DELAYLAB_THREADS", "2")
    scan = stability_switch_scan(lambda t: linear_scalar_characteristic(1, 2, t), (1, 1.5), 6)
    assert len(scan.events) == 1


# --- closed-form checks -----------------------------------------------------

@pytest.mark.parametrize("p,q,tag", [(5 / 6, 0.5, Tag.LOCALLY_STABLE), (-1, 1, Tag.UNSTABLE),
                                     (0, 1, Tag.UNKNOWN), (1, -1, Tag.UNSTABLE)])
def test_routh_hurwitz(p, q, tag):
    assert routh_hurwitz_2(p, q).tag is tag


def test_routh_matches_roots():
    for p, q in [(1.0, 2.0), (-0.3, 1.0), (2.0, -1.0)]:
        stable = all(z.real < 0 for z in np.roots([1, p, q]))
        assert (routh_hurwitz_2(p, q).tag is Tag.LOCALLY_STABLE) == stable


def test_neutral_flag():
    assert neutral_destabilization_check(QuasiPolynomial([1.0, 1.0], ((0.1, [0.0, 2.0]),)))
    assert not neutral_destabilization_check(QuasiPolynomial([1.0, 1.0], ((1.0, [2.0]),)))
    assert not neutral_destabilization_check(QuasiPolynomial([1.0, 0.0, 1.0],
                                                             ((1.0, [0.0, 1.0]),)))


def test_unit_root_identity():
    # sanity on cmath: e^{-i pi/2} = -i, used by the Hopf identity above
    assert abs(cmath.exp(-1j * math.pi / 2) + 1j) < 1e-15
