"""Cauchy transforms, boundary values and the steady state of the flow.

All square roots follow one convention: sqrt(z) sqrt(z - 1) is the product of
principal roots, analytic off [0, 1] and equal to i sqrt(x(1-x)) on the upper
edge of (0, 1).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _jacobi
from .errors import BadParameter, BranchAmbiguity, DomainError, NegativeDensity, PoleAtZ
from .measures import SpectralMeasure, TraceParams, jacobi_measure
from .moments import MomentVector, evolve_many, evolve_moments


@dataclass(frozen=True)
class ComplexSample:
    z: complex
    value: complex

    def __post_init__(self):
        if complex(self.z).imag < 0:
            raise DomainError("sample point must lie in the closed upper half-plane")


@dataclass(frozen=True)
class EpsilonSchedule:
    """Heights x + i*eps used to approach the real axis, and the polynomial
    degree of the Richardson extrapolation to eps = 0."""

    levels: tuple = (1e-2, 5e-3, 2.5e-3)
    order: int = 2

    def __post_init__(self):
        lv = tuple(float(v) for v in self.levels)
        if not lv or any(v <= 0 for v in lv) or any(b >= a for a, b in zip(lv, lv[1:])):
            raise BadParameter("levels must be positive and strictly decreasing")
        if not 0 <= self.order < len(lv):
            raise BadParameter("order must be smaller than the number of levels")
        object.__setattr__(self, "levels", lv)

    def extrapolate(self, values) -> np.ndarray:
        """Value at eps = 0 of the degree-``order`` fit; values has shape
        (len(levels), ...)."""
        eps = np.asarray(self.levels)
        values = np.asarray(values)
        V = np.vander(eps, self.order + 1, increasing=True)
        flat = values.reshape(len(eps), -1)
        coef, *_ = np.linalg.lstsq(V, flat, rcond=None)
        return coef[0].reshape(values.shape[1:])


DEFAULT_SCHEDULE = EpsilonSchedule()


def sqrt_z_zm1(z):
    """sqrt(z) * sqrt(z - 1) with principal roots."""
    z = np.asarray(z, dtype=complex)
    return np.sqrt(z) * np.sqrt(z - 1)


# ---------------------------------------------------------------------------
# Cauchy transform and series


def cauchy(m: SpectralMeasure, z):
    """G_m(z) = int dm(x) / (z - x).

    Real z is accepted; inside the support it yields the upper-edge limit.
    """
    z = np.asarray(z, dtype=complex)
    on_axis = z.imag == 0
    for a in m.atoms:
        if np.any(on_axis & (np.abs(z.real - a.location) < 1e-15)):
            raise PoleAtZ(f"z coincides with the atom at {a.location}")
    out = m.cauchy(z)
    return out.item() if out.ndim == 0 else out


def series_tail_bound(N: int, z) -> float:
    r = np.abs(z)
    return r ** (-N - 1) / (r - 1)


def shifted_G_series(g: MomentVector, p: TraceParams, z, margin: float = 0.05):
    """min(alpha, beta)/z + sum_n g_n / z^(n+1), the shifted transform of the
    flow expressed through its moments."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) <= 1 + margin):
        raise DomainError(f"series needs |z| > {1 + margin}")
    w = 1 / z
    acc = np.zeros_like(z)
    for gn in g.g[::-1]:
        acc = (acc + gn) * w
    out = w * (p.m + acc)
    return out.item() if out.ndim == 0 else out


def moment_G_field(g0: MomentVector, p: TraceParams, tol: float = 1e-12):
    """Callable (t, z) -> shifted G built from moments evolved to time t."""
    cache = {}

    def field(t, z):
        key = float(t)
        if key not in cache:
            cache[key] = evolve_moments(g0, key, p, tol)
        return shifted_G_series(cache[key], p, z)

    return field


# ---------------------------------------------------------------------------
# boundary values


def stieltjes_density(Geval, x, sched: EpsilonSchedule = DEFAULT_SCHEDULE, tol: float = 1e-6):
    """Density at x from -Im G(x + i eps)/pi extrapolated to eps = 0."""
    x = np.asarray(x, dtype=float)
    vals = np.array([-np.imag(Geval(x + 1j * e)) / np.pi for e in sched.levels])
    rho = sched.extrapolate(vals)
    if np.any(rho < -tol):
        raise NegativeDensity(f"extrapolated density {np.min(rho):.3g} below -{tol:g}")
    return rho.item() if rho.ndim == 0 else rho


def hilbert(rho, x, sched: EpsilonSchedule = DEFAULT_SCHEDULE):
    """Principal value (1/pi) int rho(y) / (x - y) dy.

    ``rho`` is anything exposing ``cauchy`` (a DensityGrid or a measure).
    """
    x = np.asarray(x, dtype=float)
    if np.any((x <= 0) | (x >= 1)):
        raise DomainError("x must lie strictly inside (0, 1)")
    vals = np.array([np.real(rho.cauchy(x + 1j * e)) / np.pi for e in sched.levels])
    h = sched.extrapolate(vals)
    return h.item() if h.ndim == 0 else h


# ---------------------------------------------------------------------------
# steady state


def steady_G(alpha: float, beta: float, z, disc_tol: float = 1e-14):
    """Shifted transform of the free Jacobi law (static atom removed)."""
    z = np.asarray(z, dtype=complex)
    rm, rp = _jacobi.edges(alpha, beta)
    if np.any(np.abs((z - rp) * (z - rm)) < disc_tol):
        raise BranchAmbiguity("z is at a spectral edge; the branch is ambiguous")
    out = _jacobi.shifted_cauchy(alpha, beta, z)
    return out.item() if out.ndim == 0 else out


def jacobi_limit(alpha: float, beta: float) -> SpectralMeasure:
    TraceParams(alpha, beta)  # validates the traces
    return jacobi_measure(alpha, beta)


def jacobi_edges(alpha: float, beta: float):
    return _jacobi.edges(alpha, beta)


def jacobi_density(alpha: float, beta: float, x):
    return _jacobi.density(alpha, beta, x)


# ---------------------------------------------------------------------------
# PDE, edges and local mass


def _pde_raw(Gfield, t, z, h, p):
    a, b = p.a, p.b

    def flux(zz):
        G = Gfield(t, zz)
        return zz * (zz - 1) * G**2 - (a * zz + b) * G

    dt = (Gfield(t + h, z) - Gfield(t - h, z)) / (2 * h)
    dz = (flux(z + h) - flux(z - h)) / (2 * h)
    return dt - dz


def pde_residual(Gfield, t: float, z: complex, h: float = 1e-4, p: TraceParams | None = None):
    """Residual of dG/dt = d/dz[z(z-1)G^2 - (az+b)G] by central differences,
    Richardson-combined over steps h and h/2."""
    p = p or TraceParams()
    if h <= 0 or t - h < 0:
        raise BadParameter("need 0 < h <= t")
    r1 = _pde_raw(Gfield, t, z, h, p)
    r2 = _pde_raw(Gfield, t, z, h / 2, p)
    return complex((4 * r2 - r1) / 3)


def edge_velocity(x: float, Gval: float, p: TraceParams) -> float:
    """Speed 2 G x (1 - x) + a x + b of a spectral edge x_t."""
    return 2 * Gval * x * (1 - x) + p.a * x + p.b


def contour_mass(
    Geval, center: float, radius: float, n: int = 256, offset: float = 0.5,
    conjugate_symmetric: bool = False,
) -> complex:
    """Trapezoidal (1/2 pi i) * contour integral of G over |z - center| = radius.

    ``offset`` shifts the nodes by that fraction of a step; the default keeps
    nodes off the real axis.  With ``conjugate_symmetric`` only the upper
    half is evaluated and G(conj z) = conj G(z) supplies the rest.
    """
    if n < 64:
        raise BadParameter("contour_mass needs n >= 64")
    theta = 2 * np.pi * (np.arange(n) + offset) / n
    e = np.exp(1j * theta)
    z = center + radius * e
    if conjugate_symmetric:
        if n % 2 or offset != 0.5:
            raise BadParameter("conjugate symmetry needs even n and offset 0.5")
        half = n // 2
        vals = np.empty(n, dtype=complex)
        vals[:half] = Geval(z[:half])
        # node n-1-k is the mirror image of node k
        vals[half:] = np.conj(vals[:half][::-1])
    else:
        vals = np.asarray(Geval(z), dtype=complex)
    return complex(radius * np.mean(vals * e))


# ---------------------------------------------------------------------------
# exports


def write_density_csv(path, x, rho, header_line: str | None = None):
    with open(path, "w", newline="") as fh:
        if header_line:
            fh.write(f"# {header_line}\n")
        w = csv.writer(fh)
        w.writerow(["x", "rho"])
        for xi, ri in zip(np.ravel(x), np.ravel(rho)):
            w.writerow([f"{xi:.17g}", f"{ri:.17g}"])


def write_field_csv(path, ts, zs, Gs, header_line: str | None = None):
    with open(path, "w", newline="") as fh:
        if header_line:
            fh.write(f"# {header_line}\n")
        w = csv.writer(fh)
        w.writerow(["t", "re_z", "im_z", "re_G", "im_G"])
        for t, z, G in zip(ts, zs, Gs):
            w.writerow([f"{v:.17g}" for v in (t, z.real, z.imag, G.real, G.imag)])


def moment_field_samples(g0: MomentVector, p: TraceParams, times, zs, tol: float = 1e-12):
    """Evaluate the moment-built shifted G on a (t, z) product grid."""
    rows = []
    for t, mv in zip(times, evolve_many(g0, times, p, tol)):
        for z in zs:
            rows.append((t, complex(z), complex(shifted_G_series(mv, p, z))))
    return rows
