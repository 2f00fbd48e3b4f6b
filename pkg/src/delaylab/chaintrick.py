"""Linear chain trick for Lotka-Volterra systems with exponential kernels.

The distributed term ``alpha * int_{-inf}^t exp(-alpha (t - s)) x_j(s) ds``
becomes an auxiliary state ``x_{n+j}`` obeying ``x_{n+j}' = alpha (x_j - x_{n+j})``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DelaySystem, HistoryFunction, KernelTerm
from .errors import ConfigurationError, NoPositiveSteadyState, SingularityError


@dataclass(frozen=True, eq=False)
class LotkaVolterraDistributed:
    """``x_i' = x_i (b_i + sum_j a_ij x_j + sum_j beta_ij alpha int exp(-alpha(t-s)) x_j(s) ds)``."""

    b: np.ndarray
    A: np.ndarray
    B: np.ndarray
    alpha: float

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        n = b.size
        A = np.asarray(self.A, dtype=float).reshape(n, n)
        B = np.asarray(self.B, dtype=float).reshape(n, n)
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise ConfigurationError("model coefficients must be finite")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ConfigurationError("kernel rate alpha must be positive")
        for name, arr in (("b", b), ("A", A), ("B", B)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def n(self):
        return self.b.size

    def to_dict(self):
        return {"type": "lv_distributed", "b": self.b.tolist(), "A": self.A.tolist(),
                "B": self.B.tolist(), "alpha": self.alpha}


def reduce_exponential_kernel(m: LotkaVolterraDistributed) -> DelaySystem:
    """The equivalent ``2n``-dimensional autonomous ODE (no delays)."""
    n, b, A, B, alpha = m.n, m.b, m.A, m.B, m.alpha

    def rhs(t, x, delayed):
        u, w = x[:n], x[n:]
        return np.concatenate([u * (b + A @ u + B @ w), alpha * (u - w)])

    kernels = tuple(KernelTerm(alpha, i, j, float(B[i, j]))
                    for i in range(n) for j in range(n) if B[i, j] != 0)
    return DelaySystem(2 * n, (), rhs, kernel_terms=kernels, linearizable=True,
                       name="lv_reduced")


def _exp_poly_integral(coeffs, alpha, length):
    """``int_0^L exp(alpha s) p(s) ds`` for ascending ``coeffs`` of ``p`` (per component)."""
    # int s^k e^{as} ds = e^{as} sum_j (-1)^j k!/(k-j)! s^(k-j) / a^(j+1)
    out = np.zeros(coeffs.shape[0])
    eL = math.exp(alpha * length)
    for k in range(coeffs.shape[1]):
        upper = 0.0
        lower = 0.0
        for j in range(k + 1):
            fac = (-1) ** j * math.factorial(k) / math.factorial(k - j) / alpha ** (j + 1)
            upper += fac * length ** (k - j)
            lower += fac * (1.0 if k - j == 0 else 0.0)
        out += coeffs[:, k] * (eL * upper - lower)
    return out


def auxiliary_initial_values(m: LotkaVolterraDistributed, history: HistoryFunction):
    """``alpha * int_{-inf}^0 exp(alpha s) x_j(s) ds`` for each component.

    Before ``history.span_start`` the history is continued by its earliest
    value, which keeps the improper integral finite and closed-form.
    """
    if history.dimension != m.n:
        raise ConfigurationError("history dimension must equal n")
    a = m.alpha
    s0 = history.span_start
    total = history(s0) * math.exp(a * s0)  # frozen tail: alpha * int_{-inf}^{s0} e^{a s} c ds
    for start, end, coeffs in history.pieces:
        total = total + a * math.exp(a * start) * _exp_poly_integral(coeffs, a, end - start)
    return total


def reduced_initial_state(m: LotkaVolterraDistributed, history: HistoryFunction):
    return np.concatenate([history(0.0), auxiliary_initial_values(m, history)])


def reduced_history(m: LotkaVolterraDistributed, history: HistoryFunction) -> HistoryFunction:
    """Constant ``2n``-dimensional history carrying the reduced initial state."""
    return HistoryFunction.constant(reduced_initial_state(m, history), span_start=0.0)


def lv_steady_state(m: LotkaVolterraDistributed):
    """Positive solution of ``(A + B) x* = -b``.

    Raises
    ------
    SingularityError
        if ``A + B`` is singular.
    NoPositiveSteadyState
        naming the first nonpositive component.
    """
    M = m.A + m.B
    if np.linalg.cond(M) > 1e14:
        raise SingularityError("A + B is singular")
    try:
        x = np.linalg.solve(M, -m.b)
    except np.linalg.LinAlgError:
        raise SingularityError("A + B is singular") from None
    for i, v in enumerate(x):
        if not v > 0:
            raise NoPositiveSteadyState(i, float(v))
    return x


def reduced_steady_state(m: LotkaVolterraDistributed):
    x = lv_steady_state(m)
    return np.concatenate([x, x])
