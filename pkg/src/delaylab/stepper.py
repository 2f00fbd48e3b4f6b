"""Method-of-steps integration of delay systems.

Fixed-step classical Runge-Kutta on a mesh that contains every propagated
discontinuity, with cubic Hermite dense output feeding the delayed lookups.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import Certainty, DelaySystem, HistoryFunction, Tag, Trajectory, Verdict
from .errors import BlowUpError, ConfigurationError, DomainError

DEFAULT_BREAKPOINT_ORDER = 3
DEFAULT_ZERO_TOL = 1e-7
OSCILLATION_EVENTS = 3


@dataclass(frozen=True)
class IntegratorOptions:
    step: float
    t_end: float
    breakpoint_order: int = DEFAULT_BREAKPOINT_ORDER
    zero_tol: float = DEFAULT_ZERO_TOL

    def __post_init__(self):
        if not self.step > 0:
            raise ConfigurationError("step must be positive")
        if not self.t_end > 0:
            raise ConfigurationError("t_end must be positive")
        if self.breakpoint_order < 0:
            raise ConfigurationError("breakpoint_order must be nonnegative")
        if self.zero_tol < 0:
            raise ConfigurationError("zero_tol must be nonnegative")


def breakpoints(delays, t0, t_end, order=DEFAULT_BREAKPOINT_ORDER):
    """Discontinuity times ``t0 + sum k_i tau_i`` with ``sum k_i <= order + 1``.

    Only points in ``(t0, t_end]`` are returned, sorted, with near-duplicates
    (closer than 1e-12) merged.
    """
    taus = [float(d) for d in delays if d > 0]
    if not taus:
        return []
    found = set()
    for total in range(1, order + 2):
        for combo in itertools.combinations_with_replacement(taus, total):
            s = t0 + math.fsum(combo)
            if t0 < s <= t_end + 1e-12:
                found.add(min(s, t_end))
    out = []
    for s in sorted(found):
        if not out or s - out[-1] > 1e-12:
            out.append(s)
    return out


def build_mesh(h, t_end, marks):
    """Uniform-ish mesh on ``[0, t_end]`` in which every mark is a node."""
    nodes = [0.0]
    for b in sorted(set([m for m in marks if 0 < m < t_end] + [t_end])):
        a = nodes[-1]
        if b - a <= 1e-12:
            continue
        n = max(1, math.ceil((b - a) / h - 1e-9))
        nodes.extend(np.linspace(a, b, n + 1)[1:].tolist())
        nodes[-1] = b
    return np.array(nodes)


class _Lookup:
    """Precomputed delayed reads for one (stage offset, delay) pair.

    For every step ``i`` the argument ``t_i + c*h_i - tau`` either falls in the
    history (value precomputed) or on a completed segment ``j < i`` of the
    trajectory (Hermite weights precomputed).
    """

    def __init__(self, mesh, c, tau, history):
        t = mesh[:-1] + c * np.diff(mesh)
        s = t - tau
        self.in_history = s <= 0.0
        self.hist = np.zeros((len(s), history.dimension))
        if self.in_history.any():
            self.hist[self.in_history] = history.evaluate_many(
                np.maximum(s[self.in_history], history.span_start))
        j = np.searchsorted(mesh, s, side="right") - 1
        # arguments equal to (or rounding just past) the current node read the last finished segment
        j = np.clip(j, 0, np.arange(len(s)) - 1)
        j = np.maximum(j, 0)
        hj = mesh[j + 1] - mesh[j]
        th = np.clip((s - mesh[j]) / hj, 0.0, 1.0)
        th2, th3 = th * th, th * th * th
        self.j = j
        self.w = np.stack([2 * th3 - 3 * th2 + 1, (th3 - 2 * th2 + th) * hj,
                           -2 * th3 + 3 * th2, (th3 - th2) * hj], axis=1)

    def read(self, i, X, F):
        if self.in_history[i]:
            return self.hist[i]
        j = self.j[i]
        w = self.w[i]
        return w[0] * X[j] + w[1] * F[j] + w[2] * X[j + 1] + w[3] * F[j + 1]


def integrate(system: DelaySystem, history: HistoryFunction, opts: IntegratorOptions) -> Trajectory:
    """Solve ``system`` on ``[0, opts.t_end]`` from ``history`` by the method of steps.

    Raises
    ------
    ConfigurationError
        if the step exceeds the smallest positive delay or the history does
        not cover ``[-tau_max, 0]``.
    BlowUpError
        if the state becomes non-finite; carries the failure time.
    """
    h = float(opts.step)
    tau_min = system.tau_min
    if tau_min is not None and h > tau_min * (1 + 1e-12):
        raise ConfigurationError(f"step {h:g} exceeds the smallest delay {tau_min:g}")
    if history.dimension != system.dimension:
        raise ConfigurationError("history and system dimensions differ")
    if history.span_start > -system.tau_max + 1e-12 * max(1.0, system.tau_max):
        raise ConfigurationError(
            f"history starts at {history.span_start:g} but the largest delay is {system.tau_max:g}")

    bps = breakpoints(system.delays, 0.0, opts.t_end, opts.breakpoint_order)
    mesh = build_mesh(h, opts.t_end, bps)
    n_steps = len(mesh) - 1
    X = np.empty((n_steps + 1, system.dimension))
    F = np.empty_like(X)
    X[0] = history(0.0)

    positive = [(k, tau) for k, tau in enumerate(system.delays) if tau > 0]
    lookups = {c: [(k, _Lookup(mesh, c, tau, history)) for k, tau in positive]
               for c in (0.0, 0.5, 1.0)}
    zero_slots = [k for k, tau in enumerate(system.delays) if tau == 0]
    m = len(system.delays)
    rhs = system.rhs

    def delayed(c, i, state):
        out = [None] * m
        for k, lk in lookups[c]:
            out[k] = lk.read(i, X, F)
        for k in zero_slots:
            out[k] = state
        return out

    def f(t, x, d):
        return np.asarray(rhs(t, x, d), dtype=float)

    F[0] = f(mesh[0], X[0], delayed(0.0, 0, X[0]))
    if not (np.all(np.isfinite(X[0])) and np.all(np.isfinite(F[0]))):
        raise BlowUpError(0.0)
    for i in range(n_steps):
        t, x = mesh[i], X[i]
        hi = mesh[i + 1] - t
        k1 = F[i]
        x2 = x + 0.5 * hi * k1
        d_half = delayed(0.5, i, x2)
        k2 = f(t + 0.5 * hi, x2, d_half)
        x3 = x + 0.5 * hi * k2
        if zero_slots:
            d_half = delayed(0.5, i, x3)
        k3 = f(t + 0.5 * hi, x3, d_half)
        x4 = x + hi * k3
        d_end = delayed(1.0, i, x4)
        k4 = f(t + hi, x4, d_end)
        xn = x + (hi / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        X[i + 1] = xn
        if zero_slots:
            d_end = delayed(1.0, i, xn)
        F[i + 1] = f(mesh[i + 1], xn, d_end)
        if not (np.all(np.isfinite(xn)) and np.all(np.isfinite(F[i + 1]))):
            raise BlowUpError(mesh[i + 1])
    return Trajectory(mesh, X, F, tuple(bps))


def _segment_min_abs(tr, i, comp, ref):
    """Minimum of ``|x - ref|`` over segment ``i`` of the Hermite interpolant."""
    a, b = tr.times[i], tr.times[i + 1]
    hseg = b - a
    y0 = tr.values[i, comp] - ref
    y1 = tr.values[i + 1, comp] - ref
    d0 = tr.derivatives[i, comp] * hseg
    d1 = tr.derivatives[i + 1, comp] * hseg
    # y(th) = y0 + d0 th + c2 th^2 + c3 th^3 on th in [0, 1]
    c2 = 3 * (y1 - y0) - 2 * d0 - d1
    c3 = 2 * (y0 - y1) + d0 + d1
    cands = [0.0, 1.0]
    roots = np.roots([3 * c3, 2 * c2, d0]) if (c3 or c2) else []
    for r in np.atleast_1d(roots):
        if abs(r.imag) < 1e-12 and 0.0 < r.real < 1.0:
            cands.append(r.real)
    th = np.array(cands)
    vals = y0 + d0 * th + c2 * th ** 2 + c3 * th ** 3
    return float(np.min(np.abs(vals)))


def classify_oscillation_empirical(tr: Trajectory, reference, window_start,
                                   zero_tol=DEFAULT_ZERO_TOL, window_end=None,
                                   component=0) -> Verdict:
    """Finite-window oscillation classifier for ``y = x - reference``.

    Counts sign changes of ``y`` between mesh nodes plus touches, i.e. segments
    where the interpolant dips below ``zero_tol`` in magnitude without changing
    sign while ``y`` is not small on the whole segment. Three or more events
    give Oscillatory; a fixed sign with ``|y| >= zero_tol`` throughout gives
    Nonoscillatory; anything else is Unknown.
    """
    window_end = tr.t_end if window_end is None else float(window_end)
    if window_start < tr.t0 or window_end > tr.t_end + 1e-12 or window_end <= window_start:
        raise DomainError("oscillation window must lie inside the trajectory span")
    ref = float(np.atleast_1d(reference)[component])
    if not np.isfinite(ref):
        raise DomainError("reference must be finite")

    i0 = max(0, int(np.searchsorted(tr.times, window_start, side="right")) - 1)
    i1 = min(len(tr.times) - 1, int(np.searchsorted(tr.times, window_end, side="left")))
    y = tr.values[i0:i1 + 1, component] - ref
    params = {"window_start": float(window_start), "window_end": window_end,
              "zero_tol": float(zero_tol), "reference": ref}

    sign_changes = int(np.count_nonzero(y[:-1] * y[1:] < 0))
    touches = 0
    previously_touching = False
    for k in range(len(y) - 1):
        seg_max = max(abs(y[k]), abs(y[k + 1]))
        if y[k] * y[k + 1] < 0 or seg_max < zero_tol:
            previously_touching = False
            continue
        touching = _segment_min_abs(tr, i0 + k, component, ref) < zero_tol
        if touching and not previously_touching:
            touches += 1
        previously_touching = touching
    events = sign_changes + touches
    params.update(sign_changes=sign_changes, touches=touches)

    if np.all(np.abs(y) < zero_tol):
        return Verdict(Tag.UNKNOWN, "empirical_oscillation", params, Certainty.NUMERIC,
                       "solution indistinguishable from the reference (trivial)")
    if events >= OSCILLATION_EVENTS:
        return Verdict(Tag.OSCILLATORY, "empirical_oscillation", params, Certainty.NUMERIC)
    fixed_sign = bool(np.all(y > 0) or np.all(y < 0))
    if fixed_sign and events == 0 and np.all(np.abs(y) >= zero_tol):
        return Verdict(Tag.NONOSCILLATORY, "empirical_oscillation", params, Certainty.NUMERIC)
    return Verdict(Tag.UNKNOWN, "empirical_oscillation", params, Certainty.NUMERIC,
                   "too few zero events in the window to decide")
