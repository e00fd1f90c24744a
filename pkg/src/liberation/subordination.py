"""Subordination for the trace-1/2 flow (alpha = beta = 1/2, so a = b = 0).

With H(z) = sqrt(z) sqrt(z-1) G(z) the flow is H_t = H_0 o f_t, where the
subordinator f_t solves

    L(f) = L(z) + t H_0(f),    L(z) = 1/2 log(z - 1/2 + sqrt(z) sqrt(z-1)),

and M (the inverse of L) is M(w) = 1/2 exp(-2w) (exp(2w) + 1/2)^2.  A root of
F(zeta) = L(zeta) - t H_0(zeta) - L(z) in the upper half-plane is unique, so
the solver may use any iteration that stays in the closed upper half-plane.

Boundary values on (0, 1) are reached by lowering z = x + i eps through a
ladder of heights and finishing at eps = 0, each level warm-started from the
previous one.  Real inputs in (0, 1] are always read as upper-edge limits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadParameter, BranchCut, NoConvergence
from .measures import DensityGrid, SpectralMeasure, chebyshev_nodes, total_mass
from .transform import sqrt_z_zm1

LOG_HALF_HALF = 0.5 * math.log(0.5)
EPS_LADDER = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
MAX_ITER = 500


def _upper(z):
    """Complex array with any zero imaginary part forced to +0."""
    z = np.array(z, dtype=complex, ndmin=1)
    z.imag = np.where(z.imag == 0, 0.0, z.imag)
    return z


def map_M(w):
    w = np.asarray(w, dtype=complex)
    e = np.exp(2 * w)
    return 0.5 * (e + 0.5) ** 2 / e


def map_L(z, edge: bool = False):
    """1/2 log(z - 1/2 + sqrt(z) sqrt(z-1)), mapping C_+ onto the strip S.

    Real z in (0, 1] gives the upper-edge limit.  Real z <= 0 lies on the
    cut and needs ``edge=True`` to select the limit from above.
    """
    scalar = np.ndim(z) == 0
    z = _upper(z)
    if not edge and np.any((z.imag == 0) & (z.real <= 0)):
        raise BranchCut("z on (-inf, 0]; pass edge=True for the upper-edge limit")
    out = 0.5 * np.log(z - 0.5 + sqrt_z_zm1(z))
    return out[0] if scalar else out


def map_L_derivative(z):
    return 1 / (2 * sqrt_z_zm1(z))


def in_strip(w):
    w = np.asarray(w, dtype=complex)
    return (w.real > LOG_HALF_HALF) & (w.imag > 0) & (w.imag < np.pi / 2)


@dataclass(frozen=True, eq=False)
class SubordinationProblem:
    """Initial shifted measure nu_0 (mass 1/2) and a time t > 0."""

    nu0: SpectralMeasure
    t: float = 1.0

    def __post_init__(self):
        mass = total_mass(self.nu0)
        if abs(mass - 0.5) > 1e-10:
            raise BadParameter(f"nu_0 must have mass 1/2, got {mass:.12g}")
        if not self.t > 0:
            raise BadParameter("t must be positive")

    def at(self, t: float) -> SubordinationProblem:
        return SubordinationProblem(self.nu0, t)


@dataclass(frozen=True)
class SubordinationResult:
    z: complex
    f: complex
    H: complex
    iterations: int
    converged: bool
    residual: float = float("nan")


def H0_eval(nu0: SpectralMeasure, z):
    """sqrt(z) sqrt(z-1) G_{nu_0}(z); tends to the mass 1/2 at infinity."""
    scalar = np.ndim(z) == 0
    z = _upper(z)
    with np.errstate(invalid="ignore"):
        out = sqrt_z_zm1(z) * nu0.cauchy(z)
    return out[0] if scalar else out


def H0_derivative(nu0: SpectralMeasure, z):
    z = _upper(z)
    s = sqrt_z_zm1(z)
    return (2 * z - 1) / (2 * s) * nu0.cauchy(z) + s * nu0.cauchy_derivative(z)


# ---------------------------------------------------------------------------
# iterations


@dataclass
class _Solve:
    zeta: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    residual: np.ndarray


def _newton(nu0, Lz, t, zeta, tol, max_iter=60):
    """Damped Newton on F(zeta) = L(zeta) - t H0(zeta) - L(z), vectorized.

    Steps that would leave the closed upper half-plane or increase |F| are
    halved; points stop individually when the step or the residual is small
    or the residual has stagnated at round-off level.
    """
    zeta = _upper(zeta).copy()
    n = zeta.size
    active = np.ones(n, dtype=bool)
    conv = np.zeros(n, dtype=bool)
    iters = np.zeros(n, dtype=int)
    F = map_L(zeta, edge=True) - t * H0_eval(nu0, zeta) - Lz
    res = np.abs(F)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        zi = zeta[idx]
        Fi = F[idx]
        J = map_L_derivative(zi) - t * H0_derivative(nu0, zi)
        step = Fi / J
        lam = np.ones(idx.size)
        new = zi.copy()
        Fnew = Fi.copy()
        pending = np.ones(idx.size, dtype=bool)
        for _ in range(30):
            k = np.flatnonzero(pending)
            if k.size == 0:
                break
            cand = zi[k] - lam[k] * step[k]
            cand = np.where(cand.imag < 0, cand.real + 0j, cand)
            cand = _upper(cand)
            Fc = map_L(cand, edge=True) - t * H0_eval(nu0, cand) - Lz[idx[k]]
            ok = np.isfinite(Fc) & (np.abs(Fc) <= np.abs(Fi[k]) * (1 - 1e-4 * lam[k]) + 1e-15)
            new[k[ok]] = cand[ok]
            Fnew[k[ok]] = Fc[ok]
            pending[k[ok]] = False
            lam[k[~ok]] *= 0.5
        moved = np.abs(new - zi)
        # a failed line search leaves the point unchanged; round-off stagnation
        stalled = pending & (np.abs(Fi) < 1e3 * tol)
        zeta[idx] = new
        F[idx] = Fnew
        res[idx] = np.abs(Fnew)
        iters[idx] += 1
        done = (res[idx] < tol) | (moved < tol * (1 + np.abs(new))) | stalled
        done &= np.isfinite(res[idx]) & (res[idx] < 1e3 * tol)
        conv[idx[done]] = True
        active[idx[done]] = False
        dead = pending & ~stalled
        active[idx[dead]] = False
    return _Solve(zeta, conv, iters, res)


def _picard(nu0, Lz, t, zeta, tol, max_iter=MAX_ITER):
    """Damped fixed-point iteration zeta <- (1-lam) zeta + lam M(L(z) + t H0(zeta))."""
    zeta = _upper(zeta).copy()
    n = zeta.size
    conv = np.zeros(n, dtype=bool)
    iters = np.zeros(n, dtype=int)
    lam = np.ones(n)
    prev = np.full(n, np.inf)
    for it in range(max_iter):
        act = ~conv
        if not act.any():
            break
        target = map_M(Lz[act] + t * H0_eval(nu0, zeta[act]))
        upd = target - zeta[act]
        size = np.abs(upd)
        # shrink lam wherever the update grew
        grew = size > prev[act]
        lam_a = np.where(grew, lam[act] * 0.5, lam[act])
        lam[act] = np.maximum(lam_a, 1e-3)
        cand = _upper(zeta[act] + lam[act] * upd)
        cand = np.where(cand.imag < 0, cand.real + 0j, cand)
        zeta[act] = cand
        prev[act] = size
        iters[act] += 1
        ai = np.flatnonzero(act)
        conv[ai[size < tol]] = True
    F = map_L(zeta, edge=True) - t * H0_eval(nu0, zeta) - Lz
    return _Solve(zeta, conv, iters, np.abs(F))


def _initial_guess(nu0, z, t):
    return _upper(map_M(map_L(z, edge=True) + t * H0_eval(nu0, z)))


def _solve_at(nu0, z, t, tol, method, zeta0=None):
    Lz = map_L(z, edge=True)
    zeta = _initial_guess(nu0, z, t) if zeta0 is None else _upper(zeta0)
    if method == "newton":
        s = _newton(nu0, Lz, t, zeta, tol)
        if not s.converged.all():
            # t-continuation from the identity for the stragglers
            bad = ~s.converged
            s2 = _continue_in_t(nu0, z[bad], Lz[bad], t, tol)
            s.zeta[bad] = s2.zeta
            s.converged[bad] = s2.converged
            s.iterations[bad] += s2.iterations
            s.residual[bad] = s2.residual
        return s
    if method == "picard":
        return _picard(nu0, Lz, t, zeta, tol)
    raise BadParameter(f"unknown method {method!r}")


def _continue_in_t(nu0, z, Lz, t, tol, steps=40):
    ts = np.geomspace(min(1e-4, t / 10), t, steps)
    zeta = _upper(z).copy()
    total = np.zeros(z.size, dtype=int)
    s = None
    for tk in ts:
        s = _newton(nu0, Lz, tk, zeta, tol)
        zeta = s.zeta
        total += s.iterations
    s.iterations = total
    return s


def _interior_or_edge(z):
    z = _upper(z)
    edge = (z.imag == 0) & (z.real > 0) & (z.real < 1)
    if np.any((z.imag == 0) & ~edge & (z.real >= 0) & (z.real <= 1)):
        raise BadParameter("real z must lie strictly inside (0, 1) or off [0, 1]")
    return z, edge


def solve_many(prob: SubordinationProblem, z, tol: float = 1e-12, method: str = "newton",
               zeta0=None, raise_on_failure: bool = True):
    """Vectorized subordinator: returns (f, H, converged, iterations, residual).

    Real z in (0, 1) are boundary points, reached through the eps ladder
    unless a warm start ``zeta0`` is supplied.
    """
    nu0, t = prob.nu0, prob.t
    z, edge = _interior_or_edge(z)
    f = np.empty(z.size, dtype=complex)
    conv = np.zeros(z.size, dtype=bool)
    iters = np.zeros(z.size, dtype=int)
    res = np.zeros(z.size)
    inner = ~edge
    if inner.any():
        s = _solve_at(nu0, z[inner], t, tol, method,
                      None if zeta0 is None else np.asarray(zeta0)[inner])
        f[inner], conv[inner], iters[inner], res[inner] = s.zeta, s.converged, s.iterations, s.residual
    if edge.any():
        x = z[edge].real
        warm = None if zeta0 is None else _upper(np.asarray(zeta0)[edge])
        ok = np.zeros(x.size, dtype=bool)
        if warm is not None:
            s = _solve_at(nu0, _upper(x), t, tol, method, warm) if method == "picard" else \
                _newton(nu0, map_L(_upper(x), edge=True), t, warm, tol)
            ok = s.converged
            fe, ie, re_ = s.zeta, s.iterations, s.residual
        else:
            fe = np.empty(x.size, dtype=complex)
            ie = np.zeros(x.size, dtype=int)
            re_ = np.zeros(x.size)
        if not ok.all():
            todo = ~ok
            s = _ladder(nu0, x[todo], t, tol, method)
            fe[todo], ok[todo], ie[todo], re_[todo] = s.zeta, s.converged, s.iterations, s.residual
        f[edge], conv[edge], iters[edge], res[edge] = fe, ok, ie, re_
    H = H0_eval(nu0, f)
    if raise_on_failure and not conv.all():
        bad = np.flatnonzero(~conv)
        raise NoConvergence(
            f"{bad.size} point(s) did not converge, first at z={z[bad[0]]}", last=f
        )
    return f, H, conv, iters, res


def _ladder(nu0, x, t, tol, method):
    zeta = None
    total = np.zeros(x.size, dtype=int)
    for eps in EPS_LADDER + (0.0,):
        z = _upper(x + 1j * eps)
        s = _solve_at(nu0, z, t, tol, method, zeta)
        zeta = s.zeta
        total += s.iterations
    s.iterations = total
    return s


def solve_subordinator(prob: SubordinationProblem, z: complex, tol: float = 1e-12,
                       method: str = "newton") -> SubordinationResult:
    """f_t(z) and H_t(z) = H_0(f_t(z)) at a single point."""
    if complex(z).imag < 0:
        raise BadParameter("z must lie in the closed upper half-plane")
    f, H, conv, it, res = solve_many(prob, np.array([z]), tol, method, raise_on_failure=False)
    out = SubordinationResult(complex(z), complex(f[0]), complex(H[0]), int(it[0]),
                              bool(conv[0]), float(res[0]))
    if not out.converged:
        raise NoConvergence(f"subordinator did not converge at z={z}", last=out)
    return out


def H_t(prob: SubordinationProblem, z, tol: float = 1e-12):
    return solve_many(prob, z, tol)[1]


def G_t(prob: SubordinationProblem, z, tol: float = 1e-12):
    """Shifted Cauchy transform of nu_t through H_t / (sqrt(z) sqrt(z-1))."""
    z = _upper(z)
    return H_t(prob, z, tol) / sqrt_z_zm1(z)


def in_omega(prob: SubordinationProblem, w) -> np.ndarray:
    """True where L(w) - t H_0(w) lies in the open strip S."""
    w = np.asarray(w, dtype=complex)
    return in_strip(map_L(w, edge=True) - prob.t * H0_eval(prob.nu0, w))


def density_at(prob: SubordinationProblem, x, tol: float = 1e-12):
    """rho_t(x) = Re H_t(x) / (pi sqrt(x(1-x))) from boundary values of H_t."""
    x = np.asarray(x, dtype=float)
    _, H, *_ = solve_many(prob, x.ravel() + 0j, tol)
    rho = np.maximum(H.real, 0.0) / (np.pi * np.sqrt(x.ravel() * (1 - x.ravel())))
    return rho.reshape(x.shape) if x.ndim else float(rho[0])


@dataclass
class BoundarySweep:
    """Boundary values of H_t on Chebyshev nodes, with warm-start state."""

    x: np.ndarray
    t: float
    f: np.ndarray
    H: np.ndarray
    converged: np.ndarray

    @property
    def rho(self):
        return np.maximum(self.H.real, 0.0) / (np.pi * np.sqrt(self.x * (1 - self.x)))

    def arc_profile(self):
        """pi sqrt(x(1-x)) rho_t = Re H_t (nu_t level)."""
        return np.maximum(self.H.real, 0.0)


class BoundaryTracker:
    """Follows the boundary solution on a fixed Chebyshev grid as t increases,
    warm-starting each time from the closest solved time."""

    def __init__(self, nu0: SpectralMeasure, n: int = 256, tol: float = 1e-12):
        self.nu0 = nu0
        self.x = chebyshev_nodes(n)
        self.tol = tol
        self._cache: dict = {}

    def sweep(self, t: float) -> BoundarySweep:
        if t in self._cache:
            return self._cache[t]
        prob = SubordinationProblem(self.nu0, t)
        warm = None
        if self._cache:
            tk = min(self._cache, key=lambda s: abs(math.log(s / t)))
            if abs(math.log(tk / t)) < 0.7:
                warm = self._cache[tk].f
        f, H, conv, *_ = solve_many(prob, self.x + 0j, self.tol, zeta0=warm)
        out = BoundarySweep(self.x, t, f, H, conv)
        self._cache[t] = out
        return out


def evolved_measure(prob: SubordinationProblem, n: int = 256, tol: float = 1e-12) -> SpectralMeasure:
    """nu_t as a Chebyshev density grid (assumes nu_t has no atoms)."""
    x = chebyshev_nodes(n)
    _, H, *_ = solve_many(prob, x + 0j, tol)
    return SpectralMeasure((), DensityGrid.from_arc_profile(np.maximum(H.real, 0.0)))


def semigroup_restart(prob: SubordinationProblem, t0: float, n: int = 256) -> SubordinationProblem:
    """Re-pose the problem from nu_{t0}, leaving time t - t0 (optional pre-step)."""
    if not 0 < t0 < prob.t:
        raise BadParameter("need 0 < t0 < t")
    nu = evolved_measure(prob.at(t0), n)
    # renormalize the round-off of the grid quadrature
    nu = nu.scaled(0.5 / total_mass(nu))
    return SubordinationProblem(nu, prob.t - t0)
