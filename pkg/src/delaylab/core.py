"""Domain types shared by the rest of the package.

Histories and trajectories are piecewise cubic in time; delay systems bundle a
right-hand side with its ordered list of discrete delays; verdicts carry the
name of whichever criterion or computation produced them.
"""
from __future__ import annotations

import bisect
import enum
from dataclasses import dataclass, field
from math import comb
from typing import Any, Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError

MAX_HISTORY_DEGREE = 3

RHS = Callable[[float, np.ndarray, Sequence[np.ndarray]], Any]


def _span_slack(a, b):
    return 1e-12 * max(1.0, abs(a), abs(b))


def _frozen(arr, dtype=float):
    a = np.array(arr, dtype=dtype)
    a.setflags(write=False)
    return a


def shift_polynomial(coeffs, shift):
    """Coefficients of ``p(s + shift)`` given ascending coefficients of ``p``."""
    c = np.asarray(coeffs, dtype=float)
    deg = c.shape[-1] - 1
    out = np.zeros_like(c)
    for k in range(deg + 1):
        for j in range(k + 1):
            out[..., j] += c[..., k] * comb(k, j) * shift ** (k - j)
    return out


def _horner(coeffs, s):
    """Evaluate ascending ``coeffs`` (shape (dim, deg+1)) at ``s`` (any shape)."""
    s = np.asarray(s, dtype=float)
    out = np.zeros(s.shape + coeffs.shape[:1])
    for c in coeffs.T[::-1]:
        out = out * s[..., None] + c
    return out


@dataclass(frozen=True, eq=False)
class HistoryFunction:
    """Piecewise polynomial initial datum on ``[span_start, 0]``.

    Each piece is ``(start, end, coeffs)`` with ``coeffs`` of shape
    ``(dimension, degree + 1)`` holding ascending powers of ``t - start``.
    """

    span_start: float
    pieces: tuple
    dimension: int

    def __post_init__(self):
        if self.span_start > 0:
            raise ConfigurationError("history span must start at or before 0")
        if not self.pieces:
            raise ConfigurationError("history needs at least one piece")
        frozen = []
        expect = float(self.span_start)
        for start, end, coeffs in self.pieces:
            c = np.array(coeffs, dtype=float)
            if c.ndim == 1:
                c = c[None, :]
            if c.shape[0] != self.dimension:
                raise ConfigurationError(
                    f"piece has {c.shape[0]} components, expected {self.dimension}")
            if c.shape[1] - 1 > MAX_HISTORY_DEGREE:
                raise ConfigurationError("history pieces are limited to degree 3")
            if not np.all(np.isfinite(c)):
                raise ConfigurationError("history coefficients must be finite")
            if abs(float(start) - expect) > _span_slack(start, expect):
                raise ConfigurationError(
                    f"history pieces leave a gap or overlap at t={expect:.17g}")
            if float(end) < float(start):
                raise ConfigurationError("history piece with negative length")
            frozen.append((float(start), float(end), _frozen(c)))
            expect = float(end)
        if abs(expect) > _span_slack(expect, self.span_start):
            raise ConfigurationError("history pieces must end at t=0")
        object.__setattr__(self, "pieces", tuple(frozen))
        object.__setattr__(self, "span_start", float(self.span_start))
        object.__setattr__(self, "_starts", [p[0] for p in frozen])

    @classmethod
    def constant(cls, value, span_start=-1.0):
        v = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(span_start, ((span_start, 0.0, v[:, None]),), v.size)

    @classmethod
    def polynomial(cls, coeffs, span_start):
        """Single polynomial piece given ascending coefficients in ``t``.

        ``coeffs`` is a flat list for scalar histories or one list per component.
        """
        c = np.array(coeffs, dtype=float)
        if c.ndim == 1:
            c = c[None, :]
        local = shift_polynomial(c, span_start)
        return cls(span_start, ((span_start, 0.0, local),), c.shape[0])

    @classmethod
    def from_function(cls, f, span_start, n_pieces=200, df=None):
        """Piecewise cubic Hermite interpolant of a smooth callable.

        ``f(t)`` returns the state; ``df(t)`` its derivative (central
        differences are used when omitted).
        """
        knots = np.linspace(span_start, 0.0, n_pieces + 1)
        vals = np.array([np.atleast_1d(f(t)) for t in knots], dtype=float)
        if df is None:
            eps = 1e-6 * max(1.0, abs(span_start))
            ders = np.array([(np.atleast_1d(f(t + eps)) - np.atleast_1d(f(t - eps))) / (2 * eps)
                             for t in knots], dtype=float)
        else:
            ders = np.array([np.atleast_1d(df(t)) for t in knots], dtype=float)
        pieces = []
        for i in range(n_pieces):
            a, b = knots[i], knots[i + 1]
            coeffs = hermite_coefficients(vals[i], vals[i + 1], ders[i], ders[i + 1], b - a)
            pieces.append((a, b if i < n_pieces - 1 else 0.0, coeffs))
        return cls(span_start, tuple(pieces), vals.shape[1])

    def _check(self, t):
        if t < self.span_start - _span_slack(self.span_start, t) or t > _span_slack(0.0, t):
            raise DomainError(
                f"t={t:.17g} outside history span [{self.span_start:.17g}, 0]")

    def __call__(self, t):
        """State at time ``t`` (shape ``(dimension,)``)."""
        t = float(t)
        self._check(t)
        i = max(0, bisect.bisect_right(self._starts, t) - 1)
        start, _, coeffs = self.pieces[i]
        return _horner(coeffs, t - start)

    def evaluate_many(self, ts):
        ts = np.asarray(ts, dtype=float)
        if ts.size:
            self._check(float(ts.min()))
            self._check(float(ts.max()))
        idx = np.clip(np.searchsorted(self._starts, ts, side="right") - 1, 0, len(self.pieces) - 1)
        out = np.empty(ts.shape + (self.dimension,))
        for i in np.unique(idx):
            mask = idx == i
            start, _, coeffs = self.pieces[i]
            out[mask] = _horner(coeffs, ts[mask] - start)
        return out

    def to_dict(self):
        return {
            "span_start": self.span_start,
            "pieces": [{"start": a, "end": b, "coeffs": c.tolist()} for a, b, c in self.pieces],
        }

    @classmethod
    def from_dict(cls, d, dimension=None):
        if "constant" in d:
            return cls.constant(d["constant"], d.get("span_start", -1.0))
        pieces = tuple((p["start"], p["end"], p["coeffs"]) for p in d["pieces"])
        dim = dimension or np.atleast_2d(np.asarray(d["pieces"][0]["coeffs"], float)).shape[0]
        return cls(d["span_start"], pieces, dim)


def hermite_coefficients(y0, y1, d0, d1, h):
    """Ascending cubic coefficients in ``s = t - t0`` of the Hermite interpolant."""
    y0, y1, d0, d1 = (np.asarray(v, dtype=float) for v in (y0, y1, d0, d1))
    dy = (y1 - y0) / h
    c2 = (3 * dy - 2 * d0 - d1) / h
    c3 = (d0 + d1 - 2 * dy) / h ** 2
    return np.stack([y0, d0, c2, c3], axis=-1)


@dataclass(frozen=True)
class KernelTerm:
    """Exponential kernel ``alpha * exp(-alpha * s)`` coupling component j into i."""

    alpha: float
    i: int
    j: int
    coefficient: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigurationError("kernel rates must be strictly positive")


@dataclass(frozen=True, eq=False)
class DelaySystem:
    """``x'(t) = rhs(t, x(t), [x(t - tau_1), ..., x(t - tau_m)])``."""

    dimension: int
    delays: tuple
    rhs: RHS
    kernel_terms: tuple = ()
    linearizable: bool = False
    name: str = ""

    def __post_init__(self):
        if int(self.dimension) < 1:
            raise ConfigurationError("dimension must be a positive integer")
        delays = tuple(float(d) for d in self.delays)
        if any(d < 0 or not np.isfinite(d) for d in delays):
            raise ConfigurationError("delays must be finite and nonnegative")
        if any(b <= a for a, b in zip(delays, delays[1:])):
            raise ConfigurationError("delays must be strictly increasing")
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "kernel_terms", tuple(self.kernel_terms))

    @property
    def tau_max(self):
        return self.delays[-1] if self.delays else 0.0

    @property
    def tau_min(self):
        """Smallest positive delay, or ``None`` for an ODE."""
        pos = [d for d in self.delays if d > 0]
        return pos[0] if pos else None

    def __call__(self, t, x, delayed):
        return np.asarray(self.rhs(t, x, delayed), dtype=float)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Piecewise cubic Hermite solution on ``[t0, t_end]``.

    ``times`` are the mesh nodes, ``values``/``derivatives`` the state and its
    derivative there. Segment ``i`` is the Hermite cubic on
    ``[times[i], times[i+1]]``.
    """

    times: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    breakpoints: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "times", _frozen(self.times))
        object.__setattr__(self, "values", _frozen(np.atleast_2d(self.values)))
        object.__setattr__(self, "derivatives", _frozen(np.atleast_2d(self.derivatives)))
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))

    @property
    def t0(self):
        return float(self.times[0])

    @property
    def t_end(self):
        return float(self.times[-1])

    @property
    def dimension(self):
        return self.values.shape[1]

    @property
    def segments(self):
        """List of ``((a, b), coeffs)``; coefficients ascending in ``t - a``."""
        h = np.diff(self.times)
        coeffs = hermite_coefficients(self.values[:-1], self.values[1:],
                                      self.derivatives[:-1], self.derivatives[1:], h[:, None])
        return [((float(self.times[i]), float(self.times[i + 1])), coeffs[i])
                for i in range(len(h))]

    def _index(self, ts, side):
        # side="left" picks the segment ending at a node, "right" the one starting there
        idx = np.searchsorted(self.times, ts, side="right" if side == "right" else "left") - 1
        return np.clip(idx, 0, len(self.times) - 2)

    def __call__(self, t, side="right"):
        """Evaluate at scalar or array ``t``; returns ``(..., dimension)``."""
        ts = np.asarray(t, dtype=float)
        lo, hi = ts.min(initial=np.inf), ts.max(initial=-np.inf)
        slack = _span_slack(self.t0, self.t_end)
        if ts.size and (lo < self.t0 - slack or hi > self.t_end + slack):
            raise DomainError(
                f"t outside trajectory span [{self.t0:.17g}, {self.t_end:.17g}]")
        i = self._index(ts, side)
        a = self.times[i]
        h = self.times[i + 1] - a
        th = ((ts - a) / h)[..., None]
        th2, th3 = th * th, th * th * th
        h00 = 2 * th3 - 3 * th2 + 1
        h10 = th3 - 2 * th2 + th
        h01 = -2 * th3 + 3 * th2
        h11 = th3 - th2
        hh = h[..., None]
        return (h00 * self.values[i] + h10 * hh * self.derivatives[i]
                + h01 * self.values[i + 1] + h11 * hh * self.derivatives[i + 1])

    def sample(self, ts):
        return self(np.asarray(ts, dtype=float))


class Tag(str, enum.Enum):
    GLOBALLY_STABLE = "GloballyStable"
    LOCALLY_STABLE = "LocallyStable"
    ABSOLUTELY_STABLE = "AbsolutelyStableInDelays"
    UNSTABLE = "Unstable"
    OSCILLATORY = "Oscillatory"
    NONOSCILLATORY = "Nonoscillatory"
    UNKNOWN = "Unknown"


class Certainty(str, enum.Enum):
    PROVED = "proved-by-criterion"
    NUMERIC = "numeric-evidence"


@dataclass(frozen=True)
class Verdict:
    tag: Tag
    criterion: str
    parameters: dict = field(default_factory=dict)
    certainty: Certainty = Certainty.PROVED
    note: str = ""

    def to_dict(self):
        return {
            "tag": self.tag.value,
            "justification": {"criterion": self.criterion, "parameters": dict(self.parameters)},
            "certainty": self.certainty.value,
            "note": self.note,
        }

    @property
    def is_unknown(self):
        return self.tag is Tag.UNKNOWN
