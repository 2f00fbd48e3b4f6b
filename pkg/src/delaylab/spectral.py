"""Characteristic quasi-polynomials: linearization, root location, Hopf points
and stability-switch scans.
"""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import Certainty, DelaySystem, Tag, Verdict
from .errors import (BoundaryRootError, ConfigurationError, DelayLabError, NoImaginaryRootError,
                     NoRootsFound, NumericFailure, PreconditionError, RefinementError,
                     UnsupportedDimensionError)

log = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-8
JITTER = 1e-6
NEWTON_TOL = 1e-12
NEWTON_MAXITER = 100
STABLE_MARGIN = 1e-9
SWITCH_TOL = 1e-6
_MAX_EDGE_SAMPLES = 1 << 17


def _trim(c):
    c = np.atleast_1d(np.asarray(c, dtype=float))
    nz = np.flatnonzero(c)
    return c[: nz[-1] + 1] if nz.size else c[:0]


def _polyval(c, z):
    out = np.zeros_like(z, dtype=complex)
    for a in c[::-1]:
        out = out * z + a
    return out


def _polyder(c):
    return c[1:] * np.arange(1, len(c)) if len(c) > 1 else np.zeros(0)


def degree(c):
    return len(_trim(c)) - 1


@dataclass(frozen=True, eq=False)
class QuasiPolynomial:
    """``D(lam) = P0(lam) + sum_k Pk(lam) exp(-lam tau_k)``.

    Coefficients are ascending powers of ``lam``. Terms with equal delays are
    merged and a zero delay is folded into ``P0``.
    """

    base: np.ndarray
    delayed_terms: tuple = ()

    def __post_init__(self):
        base = np.atleast_1d(np.asarray(self.base, dtype=float)).copy()
        merged = {}
        for tau, c in self.delayed_terms:
            tau = float(tau)
            if tau < 0 or not np.isfinite(tau):
                raise ConfigurationError("delays must be finite and nonnegative")
            c = np.atleast_1d(np.asarray(c, dtype=float))
            if tau == 0.0:
                n = max(len(base), len(c))
                base = np.pad(base, (0, n - len(base))) + np.pad(c, (0, n - len(c)))
                continue
            key = next((k for k in merged if abs(k - tau) <= 1e-12 * max(1.0, tau)), tau)
            prev = merged.get(key, np.zeros(0))
            n = max(len(prev), len(c))
            merged[key] = np.pad(prev, (0, n - len(prev))) + np.pad(c, (0, n - len(c)))
        base = _trim(base)
        if base.size < 2:
            raise ConfigurationError("the undelayed polynomial must have degree at least 1")
        terms = tuple(sorted((k, _trim(c)) for k, c in merged.items() if _trim(c).size))
        for _, c in terms:
            c.setflags(write=False)
        base.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "delayed_terms", terms)

    @property
    def degree(self):
        return len(self.base) - 1

    @property
    def delays(self):
        return tuple(t for t, _ in self.delayed_terms)

    def __call__(self, lam):
        z = np.asarray(lam, dtype=complex)
        out = _polyval(self.base, z)
        for tau, c in self.delayed_terms:
            out = out + _polyval(c, z) * np.exp(-z * tau)
        return out if out.ndim else complex(out)

    def derivative(self, lam):
        z = np.asarray(lam, dtype=complex)
        out = _polyval(_polyder(self.base), z)
        for tau, c in self.delayed_terms:
            out = out + (_polyval(_polyder(c), z) - tau * _polyval(c, z)) * np.exp(-z * tau)
        return out if out.ndim else complex(out)

    def magnitude(self, lam):
        """Sum of the moduli of the individual terms; a scale for residuals."""
        z = np.asarray(lam, dtype=complex)
        out = np.abs(_polyval(self.base, z))
        for tau, c in self.delayed_terms:
            out = out + np.abs(_polyval(c, z) * np.exp(-z * tau))
        return out if out.ndim else float(out)

    def undelayed(self):
        """Ascending coefficients of ``D`` with every delay set to zero."""
        out = self.base.copy()
        for _, c in self.delayed_terms:
            n = max(len(out), len(c))
            out = np.pad(out, (0, n - len(out))) + np.pad(c, (0, n - len(c)))
        return _trim(out)

    @property
    def is_neutral(self):
        return neutral_destabilization_check(self)

    def to_dict(self):
        return {"base": self.base.tolist(),
                "delayed_terms": [{"tau": t, "coeffs": c.tolist()} for t, c in self.delayed_terms]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["base"], tuple((t["tau"], t["coeffs"]) for t in d.get("delayed_terms", ())))


def charfun_eval(q: QuasiPolynomial, lam):
    return q(lam)


@dataclass(frozen=True)
class RootWindow:
    """Closed search rectangle.

    With ``im_min`` left as ``None`` the rectangle is symmetric about the
    real axis, ``[re_min, re_max] x [-im_max, im_max]``.
    """

    re_min: float = -5.0
    re_max: float = 1.0
    im_max: float = 50.0
    im_min: float | None = None

    def __post_init__(self):
        if not self.re_min < self.re_max:
            raise ConfigurationError("re_min must be below re_max")
        if not self.im_max > 0:
            raise ConfigurationError("im_max must be positive")
        if self.im_min is not None and not self.im_min < self.im_max:
            raise ConfigurationError("im_min must be below im_max")

    @property
    def im_lo(self):
        return -self.im_max if self.im_min is None else self.im_min

    @property
    def rect(self):
        return (self.re_min, self.re_max, self.im_lo, self.im_max)

    def to_dict(self):
        return {"re_min": self.re_min, "re_max": self.re_max, "im_min": self.im_lo,
                "im_max": self.im_max}


DEFAULT_WINDOW = RootWindow()


# --- argument principle ---------------------------------------------------

def _edge_increment(q, z0, z1, side, tol):
    """Total change of arg D along the segment z0 -> z1, adaptively sampled.

    The initial grid resolves the fastest exponential rotation (``tau_max``
    times the vertical extent) with at most pi/8 radians between samples, so
    the refinement test below cannot be fooled by aliasing.
    """
    tau_max = max(q.delays, default=0.0)
    turns = tau_max * abs((z1 - z0).imag) / (np.pi / 8)
    s = np.linspace(0.0, 1.0, max(65, int(math.ceil(turns)) + 1))
    D = q(z0 + (z1 - z0) * s)
    while True:
        small = np.abs(D) < tol
        if small.any():
            z = z0 + (z1 - z0) * s[np.argmax(small)]
            raise BoundaryRootError(side, z.imag if side in ("left", "right") else z.real)
        dphi = np.angle(D[1:] / D[:-1])
        bad = np.flatnonzero(np.abs(dphi) >= np.pi / 2)
        if bad.size == 0:
            return float(dphi.sum())
        if s.size > _MAX_EDGE_SAMPLES or np.min(s[bad + 1] - s[bad]) * abs(z1 - z0) < 1e-13:
            z = z0 + (z1 - z0) * s[bad[0]]
            raise BoundaryRootError(side, z.imag if side in ("left", "right") else z.real)
        mids = 0.5 * (s[bad] + s[bad + 1])
        Dm = q(z0 + (z1 - z0) * mids)
        s = np.insert(s, bad + 1, mids)
        D = np.insert(D, bad + 1, Dm)


def _edges(rect):
    x0, x1, y0, y1 = rect
    return [("bottom", complex(x0, y0), complex(x1, y0)),
            ("right", complex(x1, y0), complex(x1, y1)),
            ("top", complex(x1, y1), complex(x0, y1)),
            ("left", complex(x0, y1), complex(x0, y0))]


def winding_count(q, rect, tol=BOUNDARY_TOL):
    """Number of zeros of ``q`` inside ``rect = (re_min, re_max, im_min, im_max)``."""
    total = sum(_edge_increment(q, a, b, side, tol) for side, a, b in _edges(rect))
    w = total / (2 * np.pi)
    n = int(round(w))
    if abs(w - n) > 1e-3 or n < 0:
        raise NumericFailure(f"winding number {w:.6f} is not a nonnegative integer")
    return n


_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)


def _centroid_estimate(q, rect):
    """(1/2 pi i) * contour integral of lam D'/D; the root for a 1-root rectangle."""
    acc = 0j
    for _, a, b in _edges(rect):
        z = a + (b - a) * (_GL_X + 1) / 2
        dz = (b - a) / 2
        acc += np.sum(_GL_W * z * q.derivative(z) / q(z)) * dz
    return acc / (2j * np.pi)


def newton_refine(q, z0, tol=NEWTON_TOL, maxiter=NEWTON_MAXITER):
    """Newton iteration with the analytic derivative.

    Converged when ``|D| < tol * max(1, magnitude)``, ``magnitude`` being the
    sum of the moduli of the terms of ``D`` at the iterate.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        return _newton(q, complex(z0), tol, maxiter)


def _newton(q, z, tol, maxiter):
    z0 = z
    for _ in range(maxiter):
        d = q(z)
        scale = max(1.0, q.magnitude(z))
        if abs(d) < tol * scale:
            return z
        dd = q.derivative(z)
        if dd == 0 or not np.isfinite(dd):
            break
        step = d / dd
        z -= step
        if not np.isfinite(z):
            break
        if abs(step) <= 4e-16 * max(1.0, abs(z)) and abs(q(z)) < 1e3 * tol * scale:
            return z
    raise RefinementError(f"Newton did not converge from {complex(z0):.6g}")


def _inside(z, rect, pad):
    x0, x1, y0, y1 = rect
    return x0 - pad <= z.real <= x1 + pad and y0 - pad <= z.imag <= y1 + pad


_SPLIT_OFFSETS = (0.0, 0.0173, -0.0291, 0.0419, -0.0537, 0.0661, -0.0787)


def _split(q, rect, n, depth):
    x0, x1, y0, y1 = rect
    vertical = (x1 - x0) >= (y1 - y0)
    for off in _SPLIT_OFFSETS:
        if vertical:
            c = 0.5 * (x0 + x1) + off * (x1 - x0)
            halves = ((x0, c, y0, y1), (c, x1, y0, y1))
        else:
            c = 0.5 * (y0 + y1) + off * (y1 - y0)
            halves = ((x0, x1, y0, c), (x0, x1, c, y1))
        try:
            counts = [winding_count(q, r) for r in halves]
        except BoundaryRootError:
            continue
        if sum(counts) != n:
            continue
        out = []
        for r, k in zip(halves, counts):
            out.extend(_solve(q, r, k, depth + 1))
        return out
    raise NumericFailure("could not find a root-free split line")


def _solve(q, rect, n, depth=0):
    if n == 0:
        return []
    x0, x1, y0, y1 = rect
    size = max(x1 - x0, y1 - y0)
    if n == 1 or size < 1e-7 or depth > 60:
        guess = _centroid_estimate(q, rect) / n if n == 1 else complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
        if not np.isfinite(guess) or not _inside(guess, rect, 0.0):
            guess = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
        try:
            z = newton_refine(q, guess)
        except RefinementError:
            if n == 1 and size > 1e-7:
                return _split(q, rect, n, depth)
            raise
        if _inside(z, rect, 1e-9 * max(1.0, size)):
            return [z] * n
        if n == 1 and size > 1e-7:
            return _split(q, rect, n, depth)
        raise RefinementError("Newton left the search rectangle")
    return _split(q, rect, n, depth)


def _pair_conjugates(roots, real_coeffs=True):
    """Snap near-real roots to the axis and make conjugate partners exact."""
    roots = [complex(z) for z in roots]
    if not real_coeffs:
        return sorted(roots, key=lambda z: (-z.real, -z.imag))
    out = []
    used = [False] * len(roots)
    for i, z in enumerate(roots):
        if abs(z.imag) <= 1e-10 * max(1.0, abs(z)):
            roots[i] = complex(z.real, 0.0)
    order = sorted(range(len(roots)), key=lambda i: (-roots[i].real, -roots[i].imag))
    for i in order:
        if used[i]:
            continue
        z = roots[i]
        used[i] = True
        out.append(z)
        if z.imag > 0:
            tol = 1e-7 * max(1.0, abs(z))
            for j in order:
                if not used[j] and abs(roots[j] - z.conjugate()) < tol:
                    used[j] = True
                    out.append(z.conjugate())
                    break
    return out


@dataclass(frozen=True)
class RootSet:
    count: int
    roots: tuple
    window: RootWindow


_SIDE_INDEX = {"left": 0, "right": 1, "bottom": 2, "top": 3}


def _jitter(rect, side):
    rect = list(rect)
    idx = _SIDE_INDEX[side]
    rect[idx] += -JITTER if idx in (0, 2) else JITTER
    return tuple(rect)


def _count_jittered(q, rect):
    """Winding count, retrying once with the offending side moved 1e-6 outward.

    Returns the count and the rectangle it refers to.
    """
    try:
        return winding_count(q, rect), rect
    except BoundaryRootError as err:
        rect = _jitter(rect, err.side)
        return winding_count(q, rect), rect


def _solve_jittered(q, rect):
    n, rect = _count_jittered(q, rect)
    return n, _solve(q, rect, n)


def roots_in_rectangle(q: QuasiPolynomial, window: RootWindow = DEFAULT_WINDOW) -> RootSet:
    """Count roots inside ``window`` by the argument principle and locate each.

    The rectangle is subdivided until each piece holds at most one root, which
    is then polished by Newton's method. A root on the boundary raises
    :class:`BoundaryRootError` after one automatic 1e-6 outward jitter of the
    offending side.
    """
    n, roots = _solve_jittered(q, window.rect)
    return RootSet(n, tuple(_pair_conjugates(roots)), window)


@dataclass(frozen=True)
class RightmostResult:
    root: complex
    tied: tuple
    max_real: float
    right_edge_clear: bool
    verdict: Verdict
    roots: tuple = field(default=(), repr=False)


def _right_edge_clear(q, window):
    if neutral_destabilization_check(q):
        return False
    ext = max(1.0, window.re_max - window.re_min)
    rect = (window.re_max, window.re_max + ext, window.im_lo, window.im_max)
    try:
        return winding_count(q, rect) == 0
    except DelayLabError:
        return False


_STRIP_ROOTS = 8


def _rightmost_strip(q, window):
    """Narrow ``window`` from the left to a strip ``[x, re_max]`` that still
    holds the rightmost roots but at most a handful of others.

    Only winding counts are used, so roots far to the left are never located.
    Returns the strip as a rectangle tuple (possibly jittered).
    """
    n, rect = _count_jittered(q, window.rect)
    if n == 0:
        raise NoRootsFound("no characteristic roots in the window; widen it")
    lo, hi = rect[0], rect[1]
    min_width = 1e-3 * max(1.0, hi - lo)
    while n > _STRIP_ROOTS and hi - lo > min_width:
        mid = 0.5 * (lo + hi)
        c, trial = _count_jittered(q, (mid,) + rect[1:])
        if trial[1:] != rect[1:]:
            rect = (rect[0],) + trial[1:]
        if c > 0:
            lo, n = trial[0], c
        else:
            hi = mid
    return (lo,) + rect[1:]


def rightmost_root(q: QuasiPolynomial, window: RootWindow = DEFAULT_WINDOW,
                   check_right_edge=True) -> RightmostResult:
    """Root of maximal real part inside ``window``.

    Conjugate partners (equal real part) are reported together in ``tied``;
    ``roots`` lists the roots of the rightmost strip that was solved, not
    necessarily every root in the window.
    The verdict is LocallyStable when the maximal real part is below -1e-9 and
    the window reaches at least Re = 0.5.
    """
    _, found = _solve_jittered(q, _rightmost_strip(q, window))
    roots = tuple(_pair_conjugates(found))
    sigma = max(z.real for z in roots)
    tied = tuple(z for z in roots if sigma - z.real <= STABLE_MARGIN * max(1.0, abs(sigma)))
    root = max(tied, key=lambda z: z.imag)
    clear = _right_edge_clear(q, window) if check_right_edge else True
    params = {"max_real_part": sigma, "window": window.to_dict()}
    if sigma < -STABLE_MARGIN and window.re_max >= 0.5:
        verdict = Verdict(Tag.LOCALLY_STABLE, "rightmost_root", params, Certainty.NUMERIC)
    elif sigma > STABLE_MARGIN:
        verdict = Verdict(Tag.UNSTABLE, "rightmost_root", params, Certainty.NUMERIC)
    else:
        verdict = Verdict(Tag.UNKNOWN, "rightmost_root", params, Certainty.NUMERIC,
                          "rightmost root on the imaginary axis or window too narrow")
    if not clear:
        verdict = Verdict(verdict.tag, verdict.criterion, params, verdict.certainty,
                          (verdict.note + "; " if verdict.note else "")
                          + "roots may exist to the right of the window")
    return RightmostResult(root, tied, sigma, clear, verdict, roots)


# --- linearization --------------------------------------------------------

def _poly_mul(a, b):
    return np.convolve(a, b)


def _poly_add(a, b):
    n = max(len(a), len(b))
    return np.pad(a, (0, n - len(a))) + np.pad(b, (0, n - len(b)))


def _dict_mul(p, r):
    out = {}
    for ta, ca in p.items():
        for tb, cb in r.items():
            key = round(ta + tb, 12)
            out[key] = _poly_add(out.get(key, np.zeros(0)), _poly_mul(ca, cb))
    return out


def _dict_sub(p, r):
    out = dict(p)
    for t, c in r.items():
        out[t] = _poly_add(out.get(t, np.zeros(0)), -c)
    return out


def jacobians(system: DelaySystem, x_star, t=0.0):
    """Central-difference Jacobians with respect to the current and each delayed state."""
    x_star = np.asarray(x_star, dtype=float)
    n = system.dimension
    m = len(system.delays)
    # relative steps keep positive states positive (fractional powers need it)
    steps = 1e-6 * np.where(x_star != 0, np.abs(x_star), 1.0)
    base_delayed = [x_star.copy() for _ in range(m)]

    def col(slot, i):
        e = np.zeros(n)
        e[i] = steps[i]
        if slot < 0:
            fp = system(t, x_star + e, base_delayed)
            fm = system(t, x_star - e, base_delayed)
        else:
            dp = [x_star.copy() for _ in range(m)]
            dm = [x_star.copy() for _ in range(m)]
            dp[slot] = x_star + e
            dm[slot] = x_star - e
            fp = system(t, x_star, dp)
            fm = system(t, x_star, dm)
        return (fp - fm) / (2 * steps[i])

    A0 = np.column_stack([col(-1, i) for i in range(n)])
    Ak = [np.column_stack([col(k, i) for i in range(n)]) for k in range(m)]
    return A0, Ak


def linearize_at(system: DelaySystem, x_star, t=0.0) -> QuasiPolynomial:
    """Characteristic quasi-polynomial ``det(lam I - A0 - sum Ak exp(-lam tau_k))``."""
    n = system.dimension
    if n > 2:
        raise UnsupportedDimensionError("linearization is implemented for dimension 1 and 2")
    x_star = np.atleast_1d(np.asarray(x_star, dtype=float))
    m = len(system.delays)
    resid = system(t, x_star, [x_star] * m)
    if not np.linalg.norm(resid) < 1e-8:
        raise PreconditionError(f"not a steady state: |rhs| = {np.linalg.norm(resid):.3g}")
    A0, Ak = jacobians(system, x_star, t)
    A0 = A0.copy()
    delayed = []
    for tau, A in zip(system.delays, Ak):
        if tau == 0:
            A0 += A
        else:
            delayed.append((tau, A))

    def entry(i, j):
        e = {0.0: np.array([-A0[i, j], 1.0 if i == j else 0.0])}
        for tau, A in delayed:
            if A[i, j] != 0.0:
                e[round(tau, 12)] = _poly_add(e.get(round(tau, 12), np.zeros(0)),
                                              np.array([-A[i, j]]))
        return e

    if n == 1:
        det = entry(0, 0)
    else:
        det = _dict_sub(_dict_mul(entry(0, 0), entry(1, 1)), _dict_mul(entry(0, 1), entry(1, 0)))
    base = det.pop(0.0, np.zeros(0))
    return QuasiPolynomial(base, tuple(det.items()))


# --- Hopf points and switches -----------------------------------------------

@dataclass(frozen=True)
class HopfPoint:
    """Purely imaginary root ``i w0`` of ``lam + a + b exp(-lam tau)`` at ``tau0``."""

    a: float
    b: float
    w0: float
    tau0: float
    period: float

    def crossing(self, k):
        """k-th delay at which ``+/- i w0`` are roots."""
        return (math.acos(-self.a / self.b) + 2 * math.pi * k) / self.w0

    def family(self, count=4):
        return [self.crossing(k) for k in range(count)]

    def to_dict(self, count=4):
        return {"a": self.a, "b": self.b, "w0": self.w0, "tau0": self.tau0,
                "period": self.period, "family": self.family(count)}


def hopf_point_scalar(a, b) -> HopfPoint:
    a, b = float(a), float(b)
    if a < 0:
        raise ConfigurationError("a must be nonnegative")
    if not b > a:
        raise NoImaginaryRootError("b must exceed a for a purely imaginary root to exist")
    w0 = math.sqrt(b * b - a * a)
    tau0 = math.acos(-a / b) / w0
    return HopfPoint(a, b, w0, tau0, 2 * math.pi / w0)


def linear_scalar_characteristic(a, b, tau) -> QuasiPolynomial:
    """``lam + a + b exp(-lam tau)`` for ``x' + a x + b x(t - tau) = 0``."""
    return QuasiPolynomial([a, 1.0], ((tau, [b]),))


@dataclass(frozen=True)
class SwitchEvent:
    tau_star: float
    direction: str
    crossing_frequency: float

    def to_dict(self):
        return {"tau_star": self.tau_star, "direction": self.direction,
                "crossing_frequency": self.crossing_frequency}


@dataclass(frozen=True)
class SwitchScan:
    events: tuple
    taus: np.ndarray
    sigma: np.ndarray
    warnings: tuple = ()


def _threads():
    env = os.environ.get("DELAYLAB_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigurationError("DELAYLAB_THREADS must be a positive integer") from None
        if n < 1:
            raise ConfigurationError("DELAYLAB_THREADS must be a positive integer")
        return n
    return os.cpu_count() or 1


def _sigma(builder, tau, window):
    try:
        res = rightmost_root(builder(tau), window, check_right_edge=False)
        return res.max_real, res.root, None
    except NoRootsFound:
        return -math.inf, None, f"tau={tau:.17g}: no roots in window, treated as stable"
    except DelayLabError as err:
        return math.nan, None, f"tau={tau:.17g}: {err}"


def stability_switch_scan(builder: Callable[[float], QuasiPolynomial], tau_range, grid,
                          window: RootWindow = DEFAULT_WINDOW) -> SwitchScan:
    """Scan the maximal real part over a uniform delay grid and bisect sign changes.

    Grid failures are recorded in ``warnings`` and skipped.
    """
    lo, hi = float(tau_range[0]), float(tau_range[1])
    if grid < 2 or not hi > lo:
        raise ConfigurationError("need grid >= 2 and tau_hi > tau_lo")
    taus = np.linspace(lo, hi, int(grid))
    workers = max(1, min(_threads(), len(taus)))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda t: _sigma(builder, t, window), taus))
    else:
        results = [_sigma(builder, t, window) for t in taus]
    sigma = np.array([r[0] for r in results])
    warnings = [r[2] for r in results if r[2]]
    for w in warnings:
        log.warning(w)

    events = []
    valid = [i for i in range(len(taus)) if not math.isnan(sigma[i])]
    for i, j in zip(valid, valid[1:]):
        s_i, s_j = sigma[i] > 0, sigma[j] > 0
        if s_i == s_j:
            continue
        a, b = taus[i], taus[j]
        root = None
        while b - a > SWITCH_TOL:
            mid = 0.5 * (a + b)
            s, r, _ = _sigma(builder, mid, window)
            if math.isnan(s):
                break
            if (s > 0) == s_i:
                a = mid
            else:
                b = mid
            root = r if r is not None else root
        tau_star = 0.5 * (a + b)
        s, r, _ = _sigma(builder, tau_star, window)
        root = r if r is not None else root
        freq = abs(root.imag) if root is not None else math.nan
        events.append(SwitchEvent(tau_star, "destabilizing" if s_j else "stabilizing", freq))
    return SwitchScan(tuple(events), taus, sigma, tuple(warnings))


# --- closed-form checks -----------------------------------------------------

def routh_hurwitz_2(p, q) -> Verdict:
    """Routh-Hurwitz test for ``lam^2 + p lam + q``."""
    params = {"p": float(p), "q": float(q)}
    if abs(p) < 1e-12 or abs(q) < 1e-12:
        return Verdict(Tag.UNKNOWN, "routh_hurwitz_2", params, note="boundary case")
    if p > 0 and q > 0:
        return Verdict(Tag.LOCALLY_STABLE, "routh_hurwitz_2", params)
    return Verdict(Tag.UNSTABLE, "routh_hurwitz_2", params)


def neutral_destabilization_check(q: QuasiPolynomial) -> bool:
    """True when a delayed term carries the top derivative order (neutral type).

    Advisory only: it flags the structural condition, it does not decide stability.
    """
    return any(len(c) - 1 == q.degree and c[-1] != 0 for _, c in q.delayed_terms)
