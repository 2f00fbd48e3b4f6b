"""Closed-form sufficient stability and oscillation conditions, plus a
Lyapunov functional monitor for simulated Lotka-Volterra trajectories.

Every test returns a :class:`~delaylab.core.Verdict`. Failure of a sufficient
condition yields ``Unknown``, never ``Unstable``. Threshold comparisons are
exact: inputs are converted to :class:`fractions.Fraction` and compared
without a tolerance band.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from .core import Certainty, Tag, Trajectory, Verdict
from .errors import ConfigurationError, DomainError

FD_STEP = 1e-6
EQUALITY_TOL = 1e-8


def _exact(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


def oscillation_test_linear(a, tau) -> Verdict:
    """``x'(t) + a x(t - tau) = 0``: all solutions oscillate iff ``a e tau > 1``."""
    if not (a > 0 and tau > 0):
        raise DomainError("a and tau must be positive")
    product = float(a) * math.e * float(tau)
    params = {"a": float(a), "tau": float(tau), "a_e_tau": product}
    if product > 1:
        return Verdict(Tag.OSCILLATORY, "linear_oscillation_proposition", params,
                       note="all nontrivial solutions oscillate")
    return Verdict(Tag.NONOSCILLATORY, "linear_oscillation_proposition", params,
                   note="a nonoscillatory solution exists")


def stepan_discrete(a0, a1, b, tau) -> Verdict:
    """``x'' + a1 x' + a0 x = sum_j b_j x(t - tau_j)``.

    Criterion A (``a1 > S / sqrt(a0 - S)``, ``S = sum |b_j|``) is independent
    of the delays; criterion B (``a1 > sum |b_j| tau_j``) covers the given
    delays and any smaller ones.
    """
    b = [float(v) for v in b]
    tau = [float(v) for v in tau]
    if len(b) != len(tau):
        raise ConfigurationError("b and tau must have equal length")
    if any(t < 0 for t in tau):
        raise ConfigurationError("delays must be nonnegative")
    S = math.fsum(abs(v) for v in b)
    weighted = math.fsum(abs(v) * t for v, t in zip(b, tau))
    params = {"a0": float(a0), "a1": float(a1), "sum_abs_b": S, "sum_abs_b_tau": weighted}
    if not a0 > S:
        return Verdict(Tag.UNKNOWN, "stepan_discrete", params,
                       note="precondition a0 > sum|b_j| fails")
    if a1 > S / math.sqrt(a0 - S):
        return Verdict(Tag.ABSOLUTELY_STABLE, "stepan_discrete/A", params,
                       note="uniformly asymptotically stable for all delays")
    if a1 > weighted:
        return Verdict(Tag.LOCALLY_STABLE, "stepan_discrete/B", params,
                       note="uniformly asymptotically stable for these delays")
    return Verdict(Tag.UNKNOWN, "stepan_discrete", params, note="neither inequality holds")


@dataclass(frozen=True)
class DiscreteMeasure:
    """Atomic measure on ``[-tau, 0]``: ``atoms`` is a list of ``(theta, weight)``."""

    atoms: tuple

    def __post_init__(self):
        atoms = tuple((float(th), float(w)) for th, w in self.atoms)
        if any(th > 0 or not math.isfinite(th) or not math.isfinite(w) for th, w in atoms):
            raise ConfigurationError("atom locations must be finite and nonpositive")
        object.__setattr__(self, "atoms", atoms)

    @property
    def total_variation(self):
        return math.fsum(abs(w) for _, w in self.atoms)

    @property
    def first_moment(self):
        return math.fsum(abs(th) * abs(w) for th, w in self.atoms)


def stepan_distributed(a0, a1, eta: DiscreteMeasure) -> Verdict:
    """``x'' + a1 x' + a0 x = int_{-tau}^0 x(t + theta) d eta(theta)`` for atomic ``eta``."""
    tv = eta.total_variation
    moment = eta.first_moment
    params = {"a0": float(a0), "a1": float(a1), "total_variation": tv, "moment": moment}
    if not a0 > tv:
        return Verdict(Tag.UNKNOWN, "stepan_distributed", params,
                       note="precondition a0 > total variation fails")
    if a1 > tv / math.sqrt(a0 - tv):
        return Verdict(Tag.ABSOLUTELY_STABLE, "stepan_distributed/A", params,
                       note="uniformly asymptotically stable for all delays")
    if a1 > moment:
        return Verdict(Tag.LOCALLY_STABLE, "stepan_distributed/B", params,
                       note="uniformly asymptotically stable for these delays")
    return Verdict(Tag.UNKNOWN, "stepan_distributed", params, note="neither inequality holds")


def hutchinson_global_test(gamma, tau) -> Verdict:
    """Global stability of ``x = k`` for the delayed logistic equation.

    Holds for ``gamma * tau <= 3/2``, refined to ``<= 37/24``; histories must
    satisfy ``phi >= 0`` and ``phi(0) > 0``.
    """
    g, t = _exact(gamma), _exact(tau)
    if not (g > 0 and t > 0):
        raise DomainError("gamma and tau must be positive")
    prod = g * t
    params = {"gamma": float(g), "tau": float(t), "gamma_tau": float(prod)}
    hist = "requires history phi >= 0 with phi(0) > 0"
    if prod <= Fraction(3, 2):
        return Verdict(Tag.GLOBALLY_STABLE, "hutchinson_3/2", params, note=hist)
    if prod <= Fraction(37, 24):
        return Verdict(Tag.GLOBALLY_STABLE, "hutchinson_37/24", params, note=hist)
    note = "no global criterion applies"
    if float(prod) >= math.pi / 2:
        note += (f"; gamma*tau >= pi/2 so the linearization at k has crossed its Hopf "
                 f"point tau0 = {math.pi / (2 * float(g)):.17g}")
    return Verdict(Tag.UNKNOWN, "hutchinson_global", params, note=note)


def cooperative_absolute_test(r, k, alpha) -> Verdict:
    """Two-species cooperative model: ``r_i, k_i, alpha_i > 0`` and ``alpha_i > k_i``."""
    params = {"r": list(map(float, r)), "k": list(map(float, k)), "alpha": list(map(float, alpha))}
    values = list(r) + list(k) + list(alpha)
    if len(values) != 6:
        raise ConfigurationError("r, k and alpha must be pairs")
    if not all(v > 0 for v in values):
        return Verdict(Tag.UNKNOWN, "cooperative_absolute", params, note="positivity fails")
    for i in range(2):
        if not alpha[i] > k[i]:
            return Verdict(Tag.UNKNOWN, "cooperative_absolute", params,
                           note=f"alpha_{i + 1} > k_{i + 1} fails")
    return Verdict(Tag.ABSOLUTELY_STABLE, "cooperative_absolute", params,
                   note="no delay-induced stability switches")


# --- competition model ------------------------------------------------------

def _d1(f, x):
    h = FD_STEP * max(1.0, abs(x))
    return (f(x + h) - f(x - h)) / (2 * h)


def _partial(m, x1, x2, wrt):
    if wrt == 0:
        return _d1(lambda s: m(s, x2), x1)
    return _d1(lambda s: m(x1, s), x2)


def _boundary_equilibrium(g, hi):
    """Smallest positive zero of ``g`` on ``(0, hi]`` by sign-change scan and bisection."""
    xs = np.linspace(0.0, hi, 2001)[1:]
    vals = np.array([g(x) for x in xs])
    for i in range(len(xs) - 1):
        if vals[i] == 0:
            return float(xs[i])
        if vals[i] * vals[i + 1] < 0:
            return float(brentq(g, xs[i], xs[i + 1], xtol=1e-15))
    return None


def competition_delay_independent_test(b1, b2, m1, m2, steady_state, probe_box,
                                       boundary_equilibria=None, grid=20) -> Verdict:
    """Numerically check the six hypotheses of the delay-independent stability
    theorem for ``x1' = b1(x1) - m1(x1, x2)``, ``x2' = b2(x2) - m2(x1, x2)``
    (delays elided).

    ``probe_box`` is ``((x1_lo, x1_hi), (x2_lo, x2_hi))``. Conditions quantified
    over unbounded sets are sampled on the box, so the verdict is numeric
    evidence.
    """
    (l1, h1), (l2, h2) = probe_box
    alpha, beta = map(float, steady_state)
    if not (l1 <= alpha <= h1 and l2 <= beta <= h2):
        raise ConfigurationError("steady state must lie inside the probe box")
    g1 = np.linspace(l1, h1, grid)
    g2 = np.linspace(l2, h2, grid)
    params = {"steady_state": [alpha, beta], "probe_box": [[l1, h1], [l2, h2]]}

    def fail(cond, why):
        return Verdict(Tag.UNKNOWN, "competition_delay_independent",
                       dict(params, failed=cond), Certainty.NUMERIC, f"condition {cond} fails: {why}")

    # (i) monotonicity at interior points
    for x1 in g1[g1 > 0]:
        if not _d1(b1, x1) > 0:
            return fail("(i)", f"db1/dx1 <= 0 at x1={x1:.6g}")
    for x2 in g2[g2 > 0]:
        if not _d1(b2, x2) > 0:
            return fail("(i)", f"db2/dx2 <= 0 at x2={x2:.6g}")
    for x1 in g1[g1 > 0]:
        for x2 in g2[g2 > 0]:
            for name, m in (("m1", m1), ("m2", m2)):
                for wrt in (0, 1):
                    if not _partial(m, x1, x2, wrt) > 0:
                        return fail("(i)", f"d{name}/dx{wrt + 1} <= 0 at ({x1:.6g}, {x2:.6g})")
    # (ii) vanishing at zero
    if abs(b1(0.0)) > EQUALITY_TOL or abs(b2(0.0)) > EQUALITY_TOL:
        return fail("(ii)", "b_i(0) != 0")
    for x2 in g2:
        if abs(m1(0.0, x2)) > EQUALITY_TOL:
            return fail("(ii)", f"m1(0, {x2:.6g}) != 0")
    for x1 in g1:
        if abs(m2(x1, 0.0)) > EQUALITY_TOL:
            return fail("(ii)", f"m2({x1:.6g}, 0) != 0")
    # (iii) single-species equilibria
    if boundary_equilibria is None:
        e1 = _boundary_equilibrium(lambda s: b1(s) - m1(s, 0.0), h1)
        e2 = _boundary_equilibrium(lambda s: b2(s) - m2(0.0, s), h2)
        if e1 is None or e2 is None:
            return fail("(iii)", "no positive boundary equilibrium in the probe box")
    else:
        e1, e2 = map(float, boundary_equilibria)
    if not (e1 > 0 and e2 > 0):
        return fail("(iii)", "boundary equilibria must be positive")
    if abs(b1(e1) - m1(e1, 0.0)) > EQUALITY_TOL or abs(b2(e2) - m2(0.0, e2)) > EQUALITY_TOL:
        return fail("(iii)", "boundary equilibrium residual too large")
    params["boundary_equilibria"] = [e1, e2]
    # (iv) a level delta_i beyond which species i declines for every sampled partner density
    d1 = next((d for d in g1[g1 > 0] if all(b1(d) - m1(d, x2) < 0 for x2 in g2)), None)
    d2 = next((d for d in g2[g2 > 0] if all(b2(d) - m2(x1, d) < 0 for x1 in g1)), None)
    if d1 is None or d2 is None:
        return fail("(iv)", "no delta_i found on the probe box edges")
    params["delta"] = [float(d1), float(d2)]
    # (v) interior steady state
    r1 = b1(alpha) - m1(alpha, beta)
    r2 = b2(beta) - m2(alpha, beta)
    if not (alpha > 0 and beta > 0) or abs(r1) > EQUALITY_TOL or abs(r2) > EQUALITY_TOL:
        return fail("(v)", f"steady-state residuals ({r1:.3g}, {r2:.3g})")
    # (vi) diagonal dominance at the steady state
    m1x1, m1x2 = _partial(m1, alpha, beta, 0), _partial(m1, alpha, beta, 1)
    m2x1, m2x2 = _partial(m2, alpha, beta, 0), _partial(m2, alpha, beta, 1)
    db1, db2 = _d1(b1, alpha), _d1(b2, beta)
    params["dominance"] = [m1x1, db1 + m2x1, m2x2, db2 + m1x2]
    if not m1x1 > db1 + m2x1:
        return fail("(vi)", f"dm1/dx1 = {m1x1:.6g} <= {db1 + m2x1:.6g}")
    if not m2x2 > db2 + m1x2:
        return fail("(vi)", f"dm2/dx2 = {m2x2:.6g} <= {db2 + m1x2:.6g}")
    return Verdict(Tag.ABSOLUTELY_STABLE, "competition_delay_independent", params,
                   Certainty.NUMERIC,
                   "(vi) checked by evaluation; (i) and (iv) sampled on the probe box")


# --- Lyapunov monitor -------------------------------------------------------

@dataclass(frozen=True)
class LyapunovSeries:
    times: np.ndarray
    values: np.ndarray


def lyapunov_lv_monitor(tr: Trajectory, x_star, b_weights, delays, n_samples=None,
                        t_start=None) -> LyapunovSeries:
    """Sample ``v(t) = sum_i |log(x_i/x*_i)| + sum_ij |b_ij| int_{t-tau_ij}^t |x_j - x*_j| ds``.

    Integrals use the composite trapezoid rule at the trajectory's step size.
    """
    x_star = np.atleast_1d(np.asarray(x_star, dtype=float))
    W = np.abs(np.atleast_2d(np.asarray(b_weights, dtype=float)))
    T = np.atleast_2d(np.asarray(delays, dtype=float))
    n = x_star.size
    if W.shape != (n, n) or T.shape != (n, n):
        raise ConfigurationError("b_weights and delays must be n x n")
    if np.any(x_star <= 0):
        raise DomainError("x_star must be strictly positive")
    if np.any(tr.values[:, :n] <= 0):
        raise DomainError("trajectory must stay strictly positive")
    tmax = float(T.max())
    t_start = tr.t0 + tmax if t_start is None else float(t_start)
    if t_start < tr.t0 + tmax - 1e-12:
        raise DomainError("samples must start at least max(tau) after the trajectory start")
    h = float(np.min(np.diff(tr.times)))
    if n_samples is None:
        n_samples = max(2, int(round((tr.t_end - t_start) / h)) + 1)
    ts = np.linspace(t_start, tr.t_end, n_samples)
    v = np.abs(np.log(tr(ts)[:, :n] / x_star)).sum(axis=1)
    for i in range(n):
        for j in range(n):
            if W[i, j] == 0 or T[i, j] == 0:
                continue
            m = max(1, int(math.ceil(T[i, j] / h - 1e-9)))
            offs = np.linspace(-T[i, j], 0.0, m + 1)
            pts = ts[:, None] + offs[None, :]
            dev = np.abs(tr(pts)[..., j] - x_star[j])
            v += W[i, j] * np.trapezoid(dev, offs, axis=1)
    return LyapunovSeries(ts, v)
