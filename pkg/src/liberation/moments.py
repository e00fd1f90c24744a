"""Moment hierarchy g_n(t) = tau[(q p_t q)^n] and its adaptive integration.

Component n of the vector field depends only on g_1..g_n, so truncating the
hierarchy at any order N gives a closed system: the truncation is exact.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParameter, StepFailure
from .measures import TraceParams

DEFAULT_ORDER = 64


@dataclass(frozen=True, eq=False)
class MomentVector:
    """Truncated moments (g_1..g_N); g0 = alpha + beta is stored, never evolved."""

    g: np.ndarray
    g0: float = float("nan")

    def __post_init__(self):
        g = np.array(self.g, dtype=float).reshape(-1)
        if g.size == 0:
            raise BadParameter("moment vector needs at least one component")
        g.flags.writeable = False
        object.__setattr__(self, "g", g)

    @property
    def order(self) -> int:
        return self.g.size

    def __len__(self):
        return self.g.size

    def __getitem__(self, n):
        """1-based access: mv[1] is g_1, mv[0] is g0."""
        if n == 0:
            return self.g0
        if not 1 <= n <= self.order:
            raise IndexError(n)
        return float(self.g[n - 1])

    def with_params(self, p: TraceParams) -> MomentVector:
        return MomentVector(self.g, p.alpha + p.beta)


@dataclass(frozen=True)
class FlowState:
    t: float
    moments: MomentVector
    params: TraceParams = field(default_factory=TraceParams)


def constant_moments(value: float, N: int, p: TraceParams | None = None) -> MomentVector:
    g0 = (p.alpha + p.beta) if p else float("nan")
    return MomentVector(np.full(N, float(value)), g0)


def arcsine_moments(N: int, mass: float = 0.5) -> MomentVector:
    """mass * binom(2n, n) / 4^n: the steady state at alpha = beta = 1/2."""
    c = np.empty(N)
    acc = 1.0
    for n in range(1, N + 1):
        acc *= (2 * n - 1) / (2 * n)
        c[n - 1] = acc
    return MomentVector(mass * c, 1.0)


# ---------------------------------------------------------------------------
# vector field


def _self_conv(g):
    """S[n] = sum_{j=1}^{n-1} g_j g_{n-j} for n = 1..N (S[1] = 0)."""
    N = g.size
    full = np.convolve(g, g)  # full[k] = sum g_{i+1} g_{k-i+1}, index k <-> n = k+2
    s = np.zeros(N)
    s[1:] = full[: N - 1]
    return s


def _rhs_array(g, alpha, beta):
    N = g.size
    n = np.arange(1, N + 1, dtype=float)
    s = _self_conv(g)
    out = np.empty(N)
    out[0] = -g[0] + alpha * beta
    if N > 1:
        # the second sum in the n-th equation is S[n-1]
        out[1:] = n[1:] * (-g[1:] + (alpha + beta) * g[:-1] - s[1:] + s[:-1])
    return out


def moment_rhs(g: MomentVector, p: TraceParams, form: str = "explicit") -> np.ndarray:
    """Time derivative of (g_1..g_N).

    ``form="explicit"`` evaluates the three-case system term by term;
    ``form="compact"`` uses the single recursion with g_0 = alpha + beta.
    """
    arr = g.g if isinstance(g, MomentVector) else np.asarray(g, dtype=float)
    if form == "explicit":
        return _rhs_array(arr, p.alpha, p.beta)
    if form == "compact":
        return _rhs_compact(arr, p.alpha, p.beta)
    raise BadParameter(f"unknown form {form!r}")


def _rhs_compact(g, alpha, beta):
    N = g.size
    ext = np.concatenate(([alpha + beta], g))  # ext[j] = g_j, j = 0..N
    out = np.empty(N)
    out[0] = -g[0] + alpha * beta
    for n in range(2, N + 1):
        j = np.arange(1, n)
        acc = np.sum((ext[j] - ext[j - 1]) * ext[n - j])
        out[n - 1] = -n * (ext[n] + acc)
    return out


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4)

_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array(
    [5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B5 - _B4


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0


def _integrate(f, y, t0, t1, tol, h0=None, on_step=None, stats=None):
    """Integrate y' = f(y) from t0 to t1 with PI-controlled DOPRI5.

    The error estimate is measured in the max norm against an absolute
    tolerance, which suits moments bounded by 1.
    """
    if t1 == t0:
        return y.copy()
    span = t1 - t0
    t = t0
    y = y.copy()
    k1 = f(y)
    scale = max(np.max(np.abs(k1)), 1e-8)
    h = h0 or min(span, 0.1 * tol**0.2 / scale)
    h_min = 1e-14 * max(1.0, abs(t1))
    err_prev = 1e-4
    k = np.empty((7, y.size))
    while t < t1:
        h = min(h, t1 - t)
        k[0] = k1
        for i in range(1, 7):
            k[i] = f(y + h * np.dot(_A[i], k[:i]))
        y_new = y + h * np.dot(_B5[:6], k[:6])
        err = h * np.max(np.abs(np.dot(_E, k))) / tol
        if err <= 1.0:
            t = t1 if t1 - t - h <= 1e-15 * abs(t1) else t + h
            y = y_new
            k1 = k[6]  # first-same-as-last
            if stats is not None:
                stats.accepted += 1
            if on_step is not None:
                on_step(t, y)
            fac = 0.9 * max(err, 1e-10) ** (-0.7 / 5) * err_prev ** (0.4 / 5)
            h *= min(5.0, max(0.2, fac))
            err_prev = max(err, 1e-4)
        else:
            if stats is not None:
                stats.rejected += 1
            h *= max(0.1, 0.9 * err ** (-1 / 5))
        if h < h_min and t1 - t > h_min:
            raise StepFailure(f"step size underflow at t={t:.6g} (tol={tol:g})")
    return y


def evolve_moments(
    g0: MomentVector, t: float, p: TraceParams, tol: float = 1e-10
) -> MomentVector:
    """Moments at time t from initial moments g0."""
    if tol <= 0:
        raise BadParameter("tol must be positive")
    if t < 0:
        raise BadParameter("t must be nonnegative")
    if t == 0:
        return MomentVector(g0.g, p.alpha + p.beta)
    f = lambda y: _rhs_array(y, p.alpha, p.beta)  # noqa: E731
    y = _integrate(f, np.asarray(g0.g, dtype=float), 0.0, float(t), tol)
    return MomentVector(y, p.alpha + p.beta)


def evolve_many(g0: MomentVector, times, p: TraceParams, tol: float = 1e-10):
    """Moments at each of the increasing ``times`` (one integration pass)."""
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or (times.size and times[0] < 0):
        raise BadParameter("times must be nonnegative and nondecreasing")
    f = lambda y: _rhs_array(y, p.alpha, p.beta)  # noqa: E731
    y = np.asarray(g0.g, dtype=float)
    t_prev = 0.0
    out = []
    for t in times:
        y = _integrate(f, y, t_prev, float(t), tol)
        t_prev = float(t)
        out.append(MomentVector(y, p.alpha + p.beta))
    return out


def trajectory(g0: MomentVector, t: float, p: TraceParams, tol: float = 1e-10):
    """Accepted-step trajectory: (times, array of shape (steps + 1, N))."""
    ts, ys = [0.0], [np.asarray(g0.g, dtype=float).copy()]

    def record(tt, yy):
        ts.append(tt)
        ys.append(yy.copy())

    f = lambda y: _rhs_array(y, p.alpha, p.beta)  # noqa: E731
    _integrate(f, ys[0], 0.0, float(t), tol, on_step=record)
    return np.array(ts), np.array(ys)


def write_trajectory_csv(path, times, rows, header_line: str | None = None):
    """CSV with header ``t,g1,...,gN``; 17 significant digits."""
    rows = np.atleast_2d(rows)
    with open(path, "w", newline="") as fh:
        if header_line:
            fh.write(f"# {header_line}\n")
        w = csv.writer(fh)
        w.writerow(["t"] + [f"g{n}" for n in range(1, rows.shape[1] + 1)])
        for t, r in zip(times, rows):
            w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in r])


# ---------------------------------------------------------------------------
# closed forms


def g1_closed_form(g1_0: float, t: float, p: TraceParams) -> float:
    e = math.exp(-t)
    return g1_0 * e + p.alpha * p.beta * (1 - e)


def fubm_moment(k: int, t: float) -> float:
    """k-th moment tau(u_t^k) of the free unitary Brownian motion."""
    if k < 1:
        raise BadParameter("k must be >= 1")
    total = 0.0
    for j in range(k):
        total += (-t) ** j / math.factorial(j) * math.comb(k, j + 1) * k ** (j - 1)
    return math.exp(-k * t / 2) * total
