"""Logarithmic energy, projection free entropy, liberation Fisher information
and mutual free information along the trace-1/2 flow.

Normalizations used throughout:

* nu_hat = 2 nu_t is the probability version of the moving part.
* On Chebyshev grids the arc profile g = pi sqrt(x(1-x)) rho_hat expands as
  sum a_k T_k(1 - 2x), and since ln|x - y| = -ln 4 - 2 sum T_k T_k / k,
  Sigma = -ln 4 a_0^2 - sum a_k^2 / (2k) exactly for polynomial profiles.
* Along the flow the boundary values H_t(x) = s (pi rho_t + i h_t), with
  s = sqrt(x(1-x)) and h_t the principal value int rho_t(y)/(x-y) dy, so
  nu_hat_t has arc profile 2 Re H_t and the profile value
  phi*(t) = int (2 Im H_t / s)^2 rho_hat_t s^2 dx = (8/n) sum (Im H)^2 Re H.
  Here the Hilbert transform carries no 1/pi; ``fisher`` follows the
  1/pi convention instead, so phi*(t) = pi^2 fisher(rho_hat_t).
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import (
    BadParameter,
    DivergentIntegral,
    GeneralPositionViolated,
    TailDivergence,
)
from .measures import (
    DensityGrid,
    SpectralMeasure,
    TraceParams,
    arc_coefficients,
    chebyshev_nodes,
    total_mass,
)
from .subordination import BoundaryTracker, H0_eval, SubordinationProblem

NEGATIVE_INFINITY = float("-inf")
LOG4 = math.log(4.0)


@dataclass(frozen=True)
class EntropyConfig:
    C_const: float = 0.0
    T_max: float = 20.0
    tail_model: str = "exp_fit"
    t_min: float = 0.0
    nodes: int = 256
    quad_tol: float = 1e-7
    noise_floor: float = 1e-13

    def __post_init__(self):
        if not self.T_max > 0:
            raise BadParameter("T_max must be positive")
        if self.tail_model not in ("exp_fit", "drop"):
            raise BadParameter(f"unknown tail model {self.tail_model!r}")
        if not 0 <= self.t_min < self.T_max:
            raise BadParameter("need 0 <= t_min < T_max")


@dataclass(frozen=True)
class PhiProfile:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape:
            raise BadParameter("times and values must have equal length")
        if np.any(np.diff(times) <= 0):
            raise BadParameter("times must be increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)


# ---------------------------------------------------------------------------
# logarithmic energy


def _energy_from_arc(g, lo=0.0, hi=1.0):
    a = arc_coefficients(g)
    k = np.arange(1, a.size)
    return float(math.log((hi - lo) / 4) * a[0] ** 2 - np.sum(a[1:] ** 2 / (2 * k)))


def _double_antiderivative(s):
    """F with F'' = ln|s| and F(0) = 0."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 0.5 * s**2 * np.log(np.abs(s)) - 0.75 * s**2
    return np.where(s == 0, 0.0, out)


def cell_log_kernel(edges):
    """K[i, j] = int_{cell i} int_{cell j} ln|x - y| dy dx for cells between
    consecutive ``edges``, exact (including the diagonal)."""
    e = np.asarray(edges, dtype=float)
    a, b = e[:-1, None], e[1:, None]
    c, d = e[None, :-1], e[None, 1:]
    F = _double_antiderivative
    return F(b - c) + F(a - d) - F(b - d) - F(a - c)


def log_energy(rho) -> float:
    """Sigma = double integral of ln|u - v| rho(u) rho(v).

    Accepts a DensityGrid or a SpectralMeasure; any atom gives -inf.
    Chebyshev grids use the spectral formula; linear grids use cell averages
    with the exactly integrated log kernel.
    """
    if isinstance(rho, SpectralMeasure):
        if rho.atoms:
            return NEGATIVE_INFINITY
        rho = rho.density
    if rho.is_empty:
        return 0.0
    if rho.rule == "chebyshev":
        return _energy_from_arc(rho.arc_profile(), rho.lo, rho.hi)
    x, v = rho.nodes, rho.values
    mass = 0.5 * (v[:-1] + v[1:]) * np.diff(x)
    h = np.diff(x)
    K = cell_log_kernel(x) / np.outer(h, h)
    return float(mass @ K @ mass)


# ---------------------------------------------------------------------------
# chi_proj and fisher


def _as_density(nu_hat):
    if isinstance(nu_hat, SpectralMeasure):
        return nu_hat.density
    return nu_hat


def chi_proj(nu_hat: SpectralMeasure, p: TraceParams | None = None,
             cfg: EntropyConfig | None = None) -> float:
    """Projection free entropy from the closed form in Sigma and boundary logs."""
    p = p or TraceParams()
    cfg = cfg or EntropyConfig()
    if p.alpha00 * p.alpha11 > 0 or p.alpha10 * p.alpha01 > 0:
        raise GeneralPositionViolated("intersection traces are not in general position")
    if isinstance(nu_hat, SpectralMeasure) and nu_hat.atoms:
        return NEGATIVE_INFINITY
    grid = _as_density(nu_hat)
    val = 0.25 * log_energy(grid)
    c0 = 0.5 * (p.alpha10 + p.alpha01)
    c1 = 0.5 * (p.alpha11 + p.alpha00)
    if c0:
        val += c0 * grid.integrate(np.log)
    if c1:
        val += c1 * grid.integrate(lambda x: np.log1p(-x))
    return val - cfg.C_const


def _boundary_hilbert(measure_or_grid, x):
    """Principal value int rho(y)/(x - y) dy (no 1/pi) at real x."""
    return np.real(measure_or_grid.cauchy(np.asarray(x, dtype=float) + 0j))


def _fisher_at(rho_hat, p, n):
    x = chebyshev_nodes(n)
    w = (np.pi / n) * np.sqrt(x * (1 - x))
    if isinstance(rho_hat, SpectralMeasure):
        dens = rho_hat.density_at(x)
    else:
        dens = rho_hat.density(x)
    phi = _boundary_hilbert(rho_hat, x) / np.pi
    c0 = p.alpha01 + p.alpha10
    c1 = p.alpha00 + p.alpha11
    if c0:
        phi = phi + c0 / x
    if c1:
        phi = phi + c1 / (1 - x)
    return float(np.sum(w * phi**2 * dens * x * (1 - x)))


def fisher(rho_hat, p: TraceParams | None = None, n: int = 512, rtol: float = 1e-2) -> float:
    """int phi^2 rho_hat x(1-x) dx with phi = (1/pi) PV int rho_hat/(x-y) dy
    plus the boundary corrections; refinement n -> 2n must agree to rtol."""
    p = p or TraceParams()
    if isinstance(rho_hat, SpectralMeasure) and rho_hat.atoms:
        raise DivergentIntegral("fisher information needs a density")
    if isinstance(rho_hat, DensityGrid) and rho_hat.rule == "chebyshev" and len(rho_hat) < n:
        n = len(rho_hat)
    coarse = _fisher_at(rho_hat, p, n)
    fine = _fisher_at(rho_hat, p, 2 * n)
    if not (np.isfinite(coarse) and np.isfinite(fine)):
        raise DivergentIntegral("non-finite quadrature")
    if abs(fine - coarse) > rtol * max(abs(fine), 1e-12) + 1e-12:
        raise DivergentIntegral(
            f"quadrature fails to settle under refinement ({coarse:.6g} vs {fine:.6g})"
        )
    return fine


# ---------------------------------------------------------------------------
# flow quantities


def _phi_from_H(H):
    n = H.size
    re = np.maximum(H.real, 0.0)
    return float(8.0 / n * np.sum(H.imag**2 * re))


def _chi_from_H(H):
    return 0.25 * _energy_from_arc(2 * np.maximum(H.real, 0.0))


class FlowEntropy:
    """phi*(t) and chi_proj(nu_hat_t) on a shared Chebyshev boundary grid.

    Boundary solves are cached and warm-started across times.
    """

    def __init__(self, prob: SubordinationProblem, nodes: int = 256, tol: float = 1e-12):
        self.nu0 = prob.nu0
        self.tracker = BoundaryTracker(prob.nu0, nodes, tol)
        self.x = self.tracker.x

    def H(self, t: float) -> np.ndarray:
        if t == 0:
            return H0_eval(self.nu0, self.x + 0j)
        return self.tracker.sweep(float(t)).H

    def phi(self, t: float) -> float:
        return _phi_from_H(self.H(t))

    def chi(self, t: float) -> float:
        if t == 0 and self.nu0.atoms:
            return NEGATIVE_INFINITY
        return _chi_from_H(self.H(t))


def phi_profile(prob: SubordinationProblem, times, nodes: int = 256) -> PhiProfile:
    """phi*(t) along the flow; t = 0 uses the initial boundary values."""
    flow = FlowEntropy(prob, nodes)
    times = np.asarray(times, dtype=float)
    return PhiProfile(times, np.array([flow.phi(t) for t in times]))


@dataclass
class IstarReport:
    istar: float
    integral: float
    tail: float
    t_min: float
    tail_rate: float = float("nan")
    warnings: list = field(default_factory=list)


def _exp_tail(flow, T, floor):
    ts = np.linspace(T / 10, T, 20)
    vals = np.array([flow.phi(t) for t in ts])
    keep = vals > floor
    if keep.sum() < 3:
        return 0.0, float("nan")
    slope, icpt = np.polyfit(ts[keep], np.log(vals[keep]), 1)
    rate = -slope
    if rate <= 0:
        raise TailDivergence(f"fitted tail rate {rate:.3g} is not decaying")
    return float(math.exp(icpt - rate * T) / rate), float(rate)


def istar_report(prob: SubordinationProblem, cfg: EntropyConfig | None = None,
                 flow: FlowEntropy | None = None) -> IstarReport:
    cfg = cfg or EntropyConfig()
    flow = flow or FlowEntropy(prob, cfg.nodes)
    notes = []
    t_min = cfg.t_min
    if prob.nu0.atoms and t_min == 0:
        t_min = 1e-3
        notes.append(f"nu_0 has atoms: i* is infinite; reporting the integral from t={t_min:g}")
    # the integrand is smooth on (0, T]; split where its scale changes
    T = cfg.T_max
    breaks = [b for b in (1e-3, 1e-2, 0.1, 1.0, 3.0) if t_min < b < T]
    edges = [max(t_min, 0.0)] + breaks + [T]
    # with atoms the support edge sweeps across the fixed nodes, which puts
    # small kinks into phi*(t); extra subdivision cannot remove them
    limit = 20 if prob.nu0.atoms else 100
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            if lo > 0:
                # phi* behaves like 1/t near atoms: integrate in log t
                val, _ = integrate.quad(lambda u: flow.phi(math.exp(u)) * math.exp(u),
                                        math.log(lo), math.log(hi),
                                        epsabs=cfg.quad_tol * 1e-2, epsrel=cfg.quad_tol, limit=limit)
            else:
                val, _ = integrate.quad(flow.phi, lo, hi, epsabs=cfg.quad_tol * 1e-2,
                                        epsrel=cfg.quad_tol, limit=limit)
        total += val
    tail, rate = 0.0, float("nan")
    if cfg.tail_model == "exp_fit":
        tail, rate = _exp_tail(flow, T, cfg.noise_floor)
    half = 0.5 * (total + tail)
    return IstarReport(half, 0.5 * total, 0.5 * tail, t_min, rate, notes)


def istar(prob: SubordinationProblem, cfg: EntropyConfig | None = None) -> float:
    """Mutual free information 1/2 int_0^inf phi*(t) dt (truncated, plus tail)."""
    return istar_report(prob, cfg).istar


def check_derivative_identity(prob: SubordinationProblem, t: float, h: float = 1e-3,
                              nodes: int = 256):
    """(d chi_proj / dt by central difference, phi*(t) / 2)."""
    if not t > h > 0:
        raise BadParameter("need t > h > 0")
    flow = FlowEntropy(prob, nodes)
    lhs = (flow.chi(t + h) - flow.chi(t - h)) / (2 * h)
    return lhs, 0.5 * flow.phi(t)


def unification_report(prob: SubordinationProblem, cfg: EntropyConfig | None = None,
                       profile_times=None) -> dict:
    """i* next to the constant-free entropy difference chi(inf) - chi(0)."""
    cfg = cfg or EntropyConfig()
    flow = FlowEntropy(prob, cfg.nodes)
    rep = istar_report(prob, cfg, flow)
    nu_hat0 = prob.nu0.scaled(2.0)
    chi0 = chi_proj(nu_hat0, TraceParams(), cfg)
    chi_inf = 0.25 * -LOG4 - cfg.C_const
    if profile_times is None:
        profile_times = np.concatenate(([0.0] if not prob.nu0.atoms else [],
                                        np.geomspace(1e-3, cfg.T_max, 25)))
    profile = [{"t": float(t), "phi": flow.phi(float(t))} for t in profile_times]
    return {
        "istar": rep.istar,
        "chi_proj_t0": chi0,
        "chi_proj_inf": chi_inf,
        "ftc_gap": rep.istar - (chi_inf - chi0),
        "tail": rep.tail,
        "t_min": rep.t_min,
        "warnings": rep.warnings,
        "profile": profile,
    }


def write_report(path, report: dict, header_line: str | None = None):
    payload = dict(report)
    if header_line:
        payload = {"provenance": header_line, **payload}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=_json_float)


def _json_float(obj):
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(type(obj))


def mass_check(nu_hat) -> float:
    return total_mass(nu_hat) if isinstance(nu_hat, SpectralMeasure) else nu_hat.integrate()
