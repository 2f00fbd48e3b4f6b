"""Named biological and test models with their analytic steady states."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .core import DelaySystem, HistoryFunction, Trajectory
from .errors import ConfigurationError, DivergenceError, DomainError, NoPositiveSteadyState
from .spectral import QuasiPolynomial, linearize_at

MAX_ITER = 10_000


@dataclass(frozen=True, eq=False)
class ModelSpec:
    name: str
    parameters: dict
    system: DelaySystem
    steady_states: list
    default_history: HistoryFunction
    characteristic: Optional[Callable[[float], QuasiPolynomial]] = None
    extras: dict = field(default_factory=dict)

    @property
    def steady_state(self):
        """The canonical (positive, else first) steady state."""
        for state, _ in self.steady_states:
            if np.all(state > 0):
                return state
        return self.steady_states[0][0]


_REQUIRED = {
    "hutchinson": ("gamma", "k", "tau"),
    "prey_predator": ("gamma", "k", "a", "b", "c", "m", "tau"),
    "allee": ("a", "b", "c", "tau"),
    "cooperative": ("r1", "r2", "k1", "k2", "alpha1", "alpha2", "tau1", "tau2"),
    "competition": ("beta1", "beta2", "c11", "c12", "c21", "c22"),
    "linear_scalar": ("a", "b", "tau"),
    "damped_secondorder": (),
    "neutral_example": ("tau",),
    "cheyne_stokes_linear": ("a", "beta", "v0_prime", "tau"),
}

_DEFAULTS = {
    "competition": {"tau11": 0.0, "tau12": 0.0, "tau21": 0.0, "tau22": 0.0},
    "damped_secondorder": {"c1": 0.5, "c0": 0.5, "tau": math.pi},
    "neutral_example": {"a": 1.0, "c": 2.0},
}

MODEL_NAMES = tuple(_REQUIRED)


def _delay_table(named):
    """Sorted distinct delays and the slot index of each named delay."""
    delays = sorted(set(named.values()))
    return tuple(delays), {k: delays.index(v) for k, v in named.items()}


def _history(state, tau_max):
    return HistoryFunction.constant(0.5 * np.asarray(state, dtype=float), span_start=-tau_max)


def _retau(name, params, keys):
    def builder(tau):
        p = dict(params)
        for k in keys:
            p[k] = tau
        spec = make_model(name, p)
        return linearize_at(spec.system, spec.steady_state)
    return builder


def make_model(name: str, params: dict | None = None) -> ModelSpec:
    """Build a named model.

    Models: hutchinson, prey_predator, allee, cooperative, competition,
    linear_scalar, damped_secondorder, neutral_example, cheyne_stokes_linear.
    """
    if name not in _REQUIRED:
        raise ConfigurationError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}")
    p = dict(_DEFAULTS.get(name, {}))
    p.update({k: float(v) for k, v in (params or {}).items()})
    missing = [k for k in _REQUIRED[name] if k not in p]
    if missing:
        raise ConfigurationError(f"model {name} needs parameters: {', '.join(missing)}")
    unknown = set(p) - set(_REQUIRED[name]) - set(_DEFAULTS.get(name, {}))
    if unknown:
        raise ConfigurationError(f"model {name} has no parameters {', '.join(sorted(unknown))}")
    if not all(math.isfinite(v) for v in p.values()):
        raise ConfigurationError("parameters must be finite")
    for k, v in p.items():
        if k.startswith("tau") and v < 0:
            raise ConfigurationError(f"{k} must be nonnegative")
    return _BUILDERS[name](p)


def _hutchinson(p):
    g, k, tau = p["gamma"], p["k"], p["tau"]
    if not (g > 0 and k > 0):
        raise ConfigurationError("hutchinson needs gamma > 0 and k > 0")

    def rhs(t, x, d):
        return g * x * (1.0 - d[0] / k)

    system = DelaySystem(1, (tau,), rhs, linearizable=True, name="hutchinson")
    states = [(np.array([0.0]), "extinction"), (np.array([k]), "carrying capacity x = k")]
    return ModelSpec("hutchinson", p, system, states, _history([k], tau),
                     _retau("hutchinson", p, ["tau"]))


def prey_predator_steady_state(gamma, k, a, b, c, m):
    """Positive equilibrium by damped fixed-point iteration (damping 0.5).

    ``x = g(x)`` with ``g`` decreasing from ``g(0) > 0`` to ``g(k) = 0``, so the
    root is bracketed on ``(0, k)``; when the iteration is not contractive the
    bracket is solved with Brent's method instead.
    """

    def y_of(x):
        return max(0.0, gamma / a * (1.0 - x / k)) ** (1.0 / m)

    def g(x):
        return c / b * y_of(x) ** (1.0 - m)

    x = 0.5 * k
    for _ in range(MAX_ITER):
        x_new = 0.5 * x + 0.5 * g(x)
        if not math.isfinite(x_new):
            break
        if abs(x_new - x) <= 1e-15 * max(1.0, abs(x)):
            x = x_new
            y = y_of(x)
            if x > 0 and y > 0 and abs(b * x * y ** m - c * y) < 1e-12 * max(1.0, c * y):
                return x, y
        x = x_new
    x = brentq(lambda s: s - g(s), 0.0, k, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    y = y_of(x)
    if x > 0 and y > 0 and abs(b * x * y ** m - c * y) < 1e-12 * max(1.0, c * y):
        return x, y
    raise DivergenceError("prey-predator steady-state iteration did not converge")


def _prey_predator(p):
    g, k, a, b, c, m, tau = (p[n] for n in ("gamma", "k", "a", "b", "c", "m", "tau"))
    if not all(v > 0 for v in (g, k, a, b, c)):
        raise ConfigurationError("prey_predator needs gamma, k, a, b, c > 0")
    if not 0 < m < 1:
        raise ConfigurationError("prey_predator needs 0 < m < 1")

    def rhs(t, x, d):
        u, v = x
        ud, vd = d[0]
        return np.array([u * (g * (1.0 - u / k) - a * v ** m), b * ud * vd ** m - c * v])

    xs, ys = prey_predator_steady_state(g, k, a, b, c, m)
    system = DelaySystem(2, (tau,), rhs, linearizable=True, name="prey_predator")
    states = [(np.array([xs, ys]), "interior equilibrium E*")]
    return ModelSpec("prey_predator", p, system, states, _history([xs, ys], tau),
                     _retau("prey_predator", p, ["tau"]))


def allee_equilibrium(a, b, c):
    return (b + math.sqrt(b * b + 4 * a * c)) / (2 * c)


def _allee(p):
    a, b, c, tau = p["a"], p["b"], p["c"], p["tau"]
    if not (a > 0 and c > 0):
        raise ConfigurationError("allee needs a > 0 and c > 0")

    def rhs(t, x, d):
        xd = d[0]
        return x * (a + b * xd - c * xd * xd)

    xs = allee_equilibrium(a, b, c)
    system = DelaySystem(1, (tau,), rhs, linearizable=True, name="allee")
    states = [(np.array([0.0]), "extinction"), (np.array([xs]), "unique positive equilibrium")]
    return ModelSpec("allee", p, system, states, _history([xs], tau), _retau("allee", p, ["tau"]))


def cooperative_steady_state(k1, k2, alpha1, alpha2):
    """Newton iteration from ``((k1 + alpha1)/2, (k2 + alpha2)/2)``."""
    x = np.array([(k1 + alpha1) / 2, (k2 + alpha2) / 2])
    for _ in range(MAX_ITER):
        x1, x2 = x
        F = np.array([x1 - (k1 + alpha1 * x2) / (1 + x2), x2 - (k2 + alpha2 * x1) / (1 + x1)])
        if np.max(np.abs(F)) < 1e-14 * max(1.0, np.max(np.abs(x))):
            if np.all(x > 0):
                return x
            break
        J = np.array([[1.0, -(alpha1 - k1) / (1 + x2) ** 2],
                      [-(alpha2 - k2) / (1 + x1) ** 2, 1.0]])
        try:
            x = x - np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(x)):
            break
    raise DivergenceError("cooperative steady-state Newton iteration did not converge")


def _cooperative(p):
    r1, r2, k1, k2, a1, a2 = (p[n] for n in ("r1", "r2", "k1", "k2", "alpha1", "alpha2"))
    delays, slot = _delay_table({"tau1": p["tau1"], "tau2": p["tau2"]})
    s1, s2 = slot["tau1"], slot["tau2"]

    def rhs(t, x, d):
        u, v = x
        vd = d[s2][1]
        ud = d[s1][0]
        return np.array([r1 * u * ((k1 + a1 * vd) / (1 + vd) - u),
                         r2 * v * ((k2 + a2 * ud) / (1 + ud) - v)])

    xs = cooperative_steady_state(k1, k2, a1, a2)
    system = DelaySystem(2, delays, rhs, linearizable=True, name="cooperative")
    states = [(xs, "positive equilibrium (Newton)"), (np.zeros(2), "trivial")]
    return ModelSpec("cooperative", p, system, states, _history(xs, delays[-1]),
                     _retau("cooperative", p, ["tau1", "tau2"]))


def _competition(p):
    be1, be2 = p["beta1"], p["beta2"]
    c11, c12, c21, c22 = p["c11"], p["c12"], p["c21"], p["c22"]

    def b1(x):
        return be1 * x

    def b2(x):
        return be2 * x

    def m1(x1, x2):
        return x1 * (1 + c11 * x1 + c12 * x2)

    def m2(x1, x2):
        return x2 * (1 + c21 * x1 + c22 * x2)

    named = {k: p[k] for k in ("tau11", "tau12", "tau21", "tau22")}
    delays, slot = _delay_table(named)

    def rhs(t, x, d):
        return np.array([b1(d[slot["tau11"]][0]) - m1(x[0], d[slot["tau12"]][1]),
                         b2(d[slot["tau22"]][1]) - m2(d[slot["tau21"]][0], x[1])])

    M = np.array([[c11, c12], [c21, c22]])
    try:
        xs = np.linalg.solve(M, [be1 - 1, be2 - 1])
    except np.linalg.LinAlgError:
        raise ConfigurationError("competition steady state is not unique") from None
    for i, v in enumerate(xs):
        if not v > 0:
            raise NoPositiveSteadyState(i, float(v))
    system = DelaySystem(2, delays, rhs, linearizable=True, name="competition")
    states = [(xs, "interior equilibrium (alpha, beta)"), (np.zeros(2), "trivial")]
    extras = {"b1": b1, "b2": b2, "m1": m1, "m2": m2,
              "boundary_equilibria": ((be1 - 1) / c11 if c11 else None,
                                      (be2 - 1) / c22 if c22 else None)}
    return ModelSpec("competition", p, system, states, _history(xs, delays[-1]),
                     _retau("competition", p, list(named)), extras)


def _linear_scalar(p, name="linear_scalar"):
    a, b, tau = p["a"], p["b"], p["tau"]

    def rhs(t, x, d):
        return -a * x - b * d[0]

    system = DelaySystem(1, (tau,), rhs, linearizable=True, name=name)
    return ModelSpec(name, p, system, [(np.array([0.0]), "trivial")],
                     HistoryFunction.constant([1.0], -tau),
                     lambda s: QuasiPolynomial([a, 1.0], ((s, [b]),)))


def _damped_secondorder(p):
    c1, c0, tau = p["c1"], p["c0"], p["tau"]

    def rhs(t, x, d):
        return np.array([x[1], -c1 * x[1] + c0 * d[0][0]])

    system = DelaySystem(2, (tau,), rhs, linearizable=True, name="damped_secondorder")
    hist = HistoryFunction.from_function(lambda t: np.array([1 - math.sin(t), -math.cos(t)]),
                                         -tau, 200,
                                         lambda t: np.array([-math.cos(t), math.sin(t)]))
    return ModelSpec("damped_secondorder", p, system, [(np.zeros(2), "trivial")], hist,
                     lambda s: QuasiPolynomial([0.0, c1, 1.0], ((s, [-c0]),)))


def _neutral_example(p):
    a, c, tau = p["a"], p["c"], p["tau"]

    def rhs(t, x, d):
        raise ConfigurationError("neutral_example is analyzed spectrally only")

    system = DelaySystem(1, (tau,), rhs, name="neutral_example")
    return ModelSpec("neutral_example", p, system, [(np.array([0.0]), "trivial")],
                     HistoryFunction.constant([1.0], -tau),
                     lambda s: QuasiPolynomial([a, 1.0], ((s, [0.0, c]),)))


def _cheyne_stokes(p):
    b = p["beta"] * p["v0_prime"]
    spec = _linear_scalar({"a": p["a"], "b": b, "tau": p["tau"]}, "cheyne_stokes_linear")
    return ModelSpec("cheyne_stokes_linear", p, spec.system, spec.steady_states,
                     spec.default_history, spec.characteristic, {"b": b})


_BUILDERS = {
    "hutchinson": _hutchinson,
    "prey_predator": _prey_predator,
    "allee": _allee,
    "cooperative": _cooperative,
    "competition": _competition,
    "linear_scalar": _linear_scalar,
    "damped_secondorder": _damped_secondorder,
    "neutral_example": _neutral_example,
    "cheyne_stokes_linear": _cheyne_stokes,
}


@dataclass(frozen=True, eq=False)
class ScaledHutchinson:
    """``y'(s) = -alpha y(s - 1) (1 + y(s))`` with ``y = x/k - 1`` and ``s = t/tau``."""

    alpha: float
    k: float
    tau: float
    system: DelaySystem

    def to_y(self, x):
        return np.asarray(x, dtype=float) / self.k - 1.0

    def to_x(self, y):
        return self.k * (1.0 + np.asarray(y, dtype=float))

    def to_scaled_time(self, t):
        return np.asarray(t, dtype=float) / self.tau

    def to_time(self, s):
        return np.asarray(s, dtype=float) * self.tau

    def history(self, h: HistoryFunction) -> HistoryFunction:
        """Map an x-history on ``[-tau, 0]`` exactly onto the y-history on ``[-1, 0]``."""
        pieces = []
        for a, b, c in h.pieces:
            scaled = c * self.tau ** np.arange(c.shape[1]) / self.k
            scaled[:, 0] -= 1.0
            pieces.append((a / self.tau, b / self.tau, scaled))
        return HistoryFunction(h.span_start / self.tau, tuple(pieces), h.dimension)


def nondimensionalize_hutchinson(gamma, tau, k=1.0) -> ScaledHutchinson:
    if not (gamma > 0 and tau > 0 and k > 0):
        raise DomainError("gamma, tau and k must be positive")
    alpha = gamma * tau

    def rhs(t, y, d):
        return -alpha * d[0] * (1.0 + y)

    system = DelaySystem(1, (1.0,), rhs, linearizable=True, name="hutchinson_scaled")
    return ScaledHutchinson(alpha, float(k), float(tau), system)


def allee_transform(params, tr: Trajectory) -> Trajectory:
    """``y = x/x* - 1`` applied to a trajectory of the Allee model."""
    a, b, c = params["a"], params["b"], params["c"]
    if not (a > 0 and c > 0):
        raise ConfigurationError("allee transform needs a > 0 and c > 0")
    xs = allee_equilibrium(a, b, c)
    assert xs > 0
    return Trajectory(tr.times, tr.values / xs - 1.0, tr.derivatives / xs, tr.breakpoints)


@dataclass(frozen=True)
class AlleeBounds:
    M: float
    L: float
    T: float
    lower: float
    upper: float
    min_observed: float
    max_observed: float

    @property
    def hold(self):
        return self.lower <= self.min_observed and self.max_observed <= self.upper


def allee_oscillation_bounds(params, tr: Trajectory) -> AlleeBounds:
    """Check ``exp(-M tau) <= 1 + y(t) <= exp(L x* tau)`` for ``t >= T``.

    ``M`` and ``L x*`` are the largest negative and positive values of the
    per-capita rate ``alpha(t) y(t - tau) / (1 + y(t))`` along the run (its
    ``alpha(t)`` factor as in ``y' = -alpha(t) y(t - tau)``); ``T`` is one
    delay after the first zero of ``y``.
    """
    a, b, c, tau = params["a"], params["b"], params["c"], params["tau"]
    xs = allee_equilibrium(a, b, c)
    ty = allee_transform(params, tr)
    ts = tr.times[tr.times >= tr.t0 + tau]
    y = ty(ts)[:, 0]
    yd = ty(ts - tau)[:, 0]
    alpha_t = ((2 * c * xs - b) * xs + c * xs * xs * yd) * (1 + y)
    rate = -alpha_t * yd / (1 + y)
    M = max(0.0, float(np.max(-rate)))
    L = max(0.0, float(np.max(rate))) / xs
    yall = ty.values[:, 0]
    zeros = np.flatnonzero(yall[:-1] * yall[1:] <= 0)
    T = float(tr.times[zeros[0] + 1] + tau) if zeros.size else math.inf
    after = ty.values[tr.times >= T, 0]
    lo = float(np.min(1 + after)) if after.size else math.nan
    hi = float(np.max(1 + after)) if after.size else math.nan
    return AlleeBounds(M, L, T, math.exp(-M * tau), math.exp(L * xs * tau), lo, hi)
