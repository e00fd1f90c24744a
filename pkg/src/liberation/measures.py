"""Finite positive measures on [0, 1]: atoms plus a gridded density.

Densities live on one of two grids:

* ``"chebyshev"`` -- Chebyshev-Gauss nodes on ``[lo, hi]``.  The density is
  handled through its *arc profile* ``g = pi * sqrt((x-lo)(hi-x)) * rho``,
  expanded in Chebyshev polynomials.  Square-root edge blow-up (arcsine-like
  laws, the free Jacobi law, every density produced by the liberation flow)
  is absorbed into the weight, so quadrature is spectrally accurate and the
  arcsine law is integrated exactly.
* ``"linear"`` -- arbitrary increasing nodes, density piecewise linear
  between them and zero outside.

Presets additionally carry *exact parts* (uniform blocks, free Jacobi
continuous parts); when present they are authoritative for mass, moments and
Cauchy transforms, and the grid is only their sampling.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.fft import dct

from . import _jacobi
from .errors import BadParameter, MassDeficit

DEFAULT_NODES = 512
ATOM_TOL = 1e-12


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class TraceParams:
    """Traces alpha = tau(p), beta = tau(q) and the derived flow constants.

    ``intersections`` optionally overrides the traces of
    (p^q, p^q', p'^q, p'^q') -- by default the general-position values.
    """

    alpha: float = 0.5
    beta: float = 0.5
    intersections: tuple | None = None
    a: float = field(init=False)
    b: float = field(init=False)
    alpha11: float = field(init=False)
    alpha10: float = field(init=False)
    alpha01: float = field(init=False)
    alpha00: float = field(init=False)

    def __post_init__(self):
        al, be = self.alpha, self.beta
        if not (0 < al <= 1 and 0 < be <= 1):
            raise BadParameter(f"traces must lie in (0, 1], got alpha={al}, beta={be}")
        set_ = object.__setattr__
        set_(self, "a", 2 * min(al, be) - 1)
        set_(self, "b", abs(al - be))
        if self.intersections is None:
            a11, a10 = max(al + be - 1, 0.0), max(al - be, 0.0)
            a01, a00 = max(be - al, 0.0), max(1 - al - be, 0.0)
        else:
            a11, a10, a01, a00 = (float(v) for v in self.intersections)
            if min(a11, a10, a01, a00) < 0:
                raise BadParameter("intersection traces must be nonnegative")
        set_(self, "alpha11", a11)
        set_(self, "alpha10", a10)
        set_(self, "alpha01", a01)
        set_(self, "alpha00", a00)

    @property
    def m(self) -> float:
        """Mass of the moving part nu_t, min(alpha, beta)."""
        return min(self.alpha, self.beta)

    @property
    def static_atom(self) -> float:
        return 1 - self.m

    @property
    def trace_half(self) -> bool:
        return self.alpha == 0.5 and self.beta == 0.5


# ---------------------------------------------------------------------------
# Chebyshev machinery


def chebyshev_angles(n: int) -> np.ndarray:
    return (2 * np.arange(n) + 1) * np.pi / (2 * n)


def chebyshev_nodes(n: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Increasing Chebyshev-Gauss nodes lo + (hi-lo)(1 - cos theta_k)/2."""
    return lo + (hi - lo) * 0.5 * (1 - np.cos(chebyshev_angles(n)))


def arc_coefficients(g: np.ndarray) -> np.ndarray:
    """Coefficients a_k with g(x_j) = sum_k a_k T_k(cos theta_j)."""
    g = np.asarray(g, dtype=float)
    n = len(g)
    a = dct(g, type=2) / n
    a[0] *= 0.5
    return a


def _horner(coef, q):
    acc = np.zeros_like(q)
    for c in coef[::-1]:
        acc = acc * q + c
    return acc


def _w_variable(z, lo, hi):
    """w = 1 - 2(z - lo)/(hi - lo), keeping the sign of a zero imaginary part
    flipped so upper-edge inputs land on the lower edge of [-1, 1]."""
    z = np.asarray(z, dtype=complex)
    ell = hi - lo
    w = np.empty(z.shape, dtype=complex)
    w.real = 1 - 2 * (z.real - lo) / ell
    w.imag = -2 * z.imag / ell
    return w


def _joukowski_root(w):
    """sqrt(w - 1) sqrt(w + 1), shifting only the real part so that a signed
    zero imaginary part picks the same side of the cut in both factors."""
    lo = np.empty(w.shape, dtype=complex)
    hi = np.empty(w.shape, dtype=complex)
    lo.real, lo.imag = w.real - 1, w.imag
    hi.real, hi.imag = w.real + 1, w.imag
    return np.sqrt(lo) * np.sqrt(hi)


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """Density values on a node set; see the module docstring for the rules."""

    nodes: np.ndarray
    values: np.ndarray
    rule: str = "chebyshev"
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        values = np.array(self.values, dtype=float)
        if nodes.shape != values.shape or nodes.ndim != 1:
            raise BadParameter("nodes and values must be 1-d arrays of equal length")
        if len(nodes) and np.any(np.diff(nodes) <= 0):
            raise BadParameter("grid nodes must be strictly increasing")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise BadParameter("density values must be finite and nonnegative")
        if self.rule not in ("chebyshev", "linear"):
            raise BadParameter(f"unknown quadrature rule {self.rule!r}")
        if len(nodes) and (nodes[0] < 0 or nodes[-1] > 1):
            raise BadParameter("grid nodes must lie in [0, 1]")
        nodes.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    @classmethod
    def empty(cls) -> DensityGrid:
        return cls(np.empty(0), np.empty(0))

    @classmethod
    def chebyshev(cls, fn, n: int = DEFAULT_NODES, lo: float = 0.0, hi: float = 1.0):
        x = chebyshev_nodes(n, lo, hi)
        return cls(x, np.asarray(fn(x), dtype=float) * np.ones(n), "chebyshev", lo, hi)

    @classmethod
    def from_arc_profile(cls, g, lo: float = 0.0, hi: float = 1.0):
        """Build a Chebyshev grid from samples of g = pi*sqrt((x-lo)(hi-x))*rho."""
        g = np.asarray(g, dtype=float)
        x = chebyshev_nodes(len(g), lo, hi)
        s = np.sqrt((x - lo) * (hi - x))
        return cls(x, g / (np.pi * s), "chebyshev", lo, hi)

    def __len__(self):
        return len(self.nodes)

    @property
    def is_empty(self) -> bool:
        return len(self.nodes) == 0

    @property
    def spacing(self) -> np.ndarray:
        return np.sqrt((self.nodes - self.lo) * (self.hi - self.nodes))

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weights for integrating f * rho against dx."""
        n = len(self.nodes)
        if n == 0:
            return np.empty(0)
        if self.rule == "chebyshev":
            return (np.pi / n) * self.spacing
        w = np.zeros(n)
        dx = np.diff(self.nodes)
        w[:-1] += 0.5 * dx
        w[1:] += 0.5 * dx
        return w

    def arc_profile(self) -> np.ndarray:
        if self.rule != "chebyshev":
            raise BadParameter("arc profile is only defined on Chebyshev grids")
        return np.pi * self.spacing * self.values

    def integrate(self, f=None) -> float:
        """Integral of f(x) rho(x) dx by the grid's rule (f=None means 1)."""
        if self.is_empty:
            return 0.0
        if self.rule == "chebyshev":
            fx = 1.0 if f is None else f(self.nodes)
            return float(np.sum(self.weights * self.values * fx))
        # Gauss-Legendre on each linear cell
        t, wt = np.polynomial.legendre.leggauss(8)
        x0, x1 = self.nodes[:-1], self.nodes[1:]
        v0, v1 = self.values[:-1], self.values[1:]
        half = 0.5 * (x1 - x0)
        xs = 0.5 * (x0 + x1)[:, None] + half[:, None] * t[None, :]
        lam = 0.5 * (1 + t)[None, :]
        rho = v0[:, None] * (1 - lam) + v1[:, None] * lam
        fx = 1.0 if f is None else f(xs)
        return float(np.sum(half[:, None] * wt[None, :] * rho * fx))

    def cauchy(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.is_empty:
            return np.zeros(z.shape, dtype=complex)
        if self.rule == "chebyshev":
            a = arc_coefficients(self.arc_profile())
            w = _w_variable(z, self.lo, self.hi)
            r = _joukowski_root(w)
            q = w - r
            return -(2 / (self.hi - self.lo)) * _horner(a, q) / r
        return self._linear_cauchy(z, derivative=False)

    def cauchy_derivative(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.is_empty:
            return np.zeros(z.shape, dtype=complex)
        if self.rule == "chebyshev":
            a = arc_coefficients(self.arc_profile())
            ell = self.hi - self.lo
            w = _w_variable(z, self.lo, self.hi)
            r = _joukowski_root(w)
            q = w - r
            k = np.arange(len(a))
            s0 = _horner(a, q)
            s1 = _horner(a * k, q)
            # d/dw [q^k / r] = -(q^k / r^2)(k + w / r); dw/dz = -2/ell
            d_dw = -(s1 + s0 * w / r) / r**2
            return -(2 / ell) * d_dw * (-2 / ell)
        return self._linear_cauchy(z, derivative=True)

    def _linear_cauchy(self, z, derivative):
        x = self.nodes
        v = self.values
        slope = np.diff(v) / np.diff(x)
        icpt = v[:-1] - slope * x[:-1]
        zz = z[..., None]
        if not derivative:
            logs = np.log(zz - x)  # upper-edge signs survive: imag(z) is kept
            # rho extended linearly to z, times log((z-x0)/(z-x1)), minus slope*dx
            seg = (icpt + slope * zz) * (logs[..., :-1] - logs[..., 1:])
            return np.sum(seg - slope * np.diff(x), axis=-1)
        inv = 1.0 / (zz - x)
        logs = np.log(zz - x)
        seg = slope * (logs[..., :-1] - logs[..., 1:]) + (icpt + slope * zz) * (
            inv[..., :-1] - inv[..., 1:]
        )
        return np.sum(seg, axis=-1)

    def density(self, x) -> np.ndarray:
        """Interpolated density at x (zero outside the grid's support)."""
        x = np.asarray(x, dtype=float)
        if self.is_empty:
            return np.zeros_like(x)
        if self.rule == "linear":
            return np.interp(x, self.nodes, self.values, left=0.0, right=0.0)
        return np.maximum(-self.cauchy(x + 0j).imag / np.pi, 0.0)

    def scaled(self, c: float) -> DensityGrid:
        return DensityGrid(self.nodes, self.values * c, self.rule, self.lo, self.hi)


# ---------------------------------------------------------------------------
# exact parts


def _log1p(w):
    """Complex log(1 + w), accurate for small |w| (numpy's is not)."""
    return 2 * np.arctanh(w / (2 + w))


@dataclass(frozen=True)
class UniformPart:
    left: float
    right: float
    mass: float

    def __post_init__(self):
        if not (0 <= self.left < self.right <= 1) or self.mass < 0:
            raise BadParameter(f"bad uniform block {self}")

    @property
    def height(self):
        return self.mass / (self.right - self.left)

    def moments(self, N):
        n = np.arange(1, N + 1)
        a, b = self.left, self.right
        return self.height * (b ** (n + 1) - a ** (n + 1)) / (n + 1)

    def cauchy(self, z):
        z = np.asarray(z, dtype=complex)
        width = self.right - self.left
        far = np.abs(z - 0.5 * (self.left + self.right)) > 2 * width
        # the difference of logs cancels badly far from the block
        zf = np.where(far, z, 2.0 + 0j)
        with np.errstate(divide="ignore", invalid="ignore"):
            near = np.log(z - self.left) - np.log(z - self.right)
            return self.height * np.where(far, _log1p(width / (zf - self.right)), near)

    def cauchy_derivative(self, z):
        z = np.asarray(z, dtype=complex)
        return -self.height * (self.right - self.left) / ((z - self.left) * (z - self.right))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.left) & (x <= self.right), self.height, 0.0)

    def support(self):
        return self.left, self.right


@dataclass(frozen=True)
class JacobiPart:
    """``scale`` times the absolutely continuous part of the free Jacobi law."""

    alpha: float
    beta: float
    scale: float = 1.0

    @property
    def mass(self):
        m0, m1 = _jacobi.atom_masses(self.alpha, self.beta)
        return self.scale * (1 - m0 - m1)

    def support(self):
        return _jacobi.edges(self.alpha, self.beta)

    def _grid(self):
        lo, hi = self.support()
        return DensityGrid.chebyshev(self.density, DEFAULT_NODES, lo, hi)

    def moments(self, N):
        if self.alpha == 0.5 and self.beta == 0.5:
            n = np.arange(1, N + 1)
            central = np.exp(
                [math.lgamma(2 * k + 1) - 2 * math.lgamma(k + 1) - k * math.log(4) for k in n]
            )
            return self.scale * 0.5 * central
        g = self._grid()
        return np.array([g.integrate(lambda x, k=k: x**k) for k in range(1, N + 1)])

    def cauchy(self, z):
        _, m1 = _jacobi.atom_masses(self.alpha, self.beta)
        z = np.asarray(z, dtype=complex)
        val = _jacobi.shifted_cauchy(self.alpha, self.beta, z)
        if m1 > 0:
            val = val - m1 / (z - 1)
        return self.scale * val

    def cauchy_derivative(self, z):
        _, m1 = _jacobi.atom_masses(self.alpha, self.beta)
        z = np.asarray(z, dtype=complex)
        val = _jacobi.shifted_cauchy_derivative(self.alpha, self.beta, z)
        if m1 > 0:
            val = val + m1 / (z - 1) ** 2
        return self.scale * val

    def density(self, x):
        return self.scale * _jacobi.density(self.alpha, self.beta, x)


_PART_KINDS = {"uniform": UniformPart, "jacobi": JacobiPart}


def _part_to_dict(part):
    if isinstance(part, UniformPart):
        return {"kind": "uniform", "left": part.left, "right": part.right, "mass": part.mass}
    return {"kind": "jacobi", "alpha": part.alpha, "beta": part.beta, "scale": part.scale}


def _part_from_dict(d):
    d = dict(d)
    kind = d.pop("kind")
    try:
        return _PART_KINDS[kind](**d)
    except (KeyError, TypeError) as exc:
        raise BadParameter(f"bad exact part {kind!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# measures


@dataclass(frozen=True)
class Atom:
    location: float
    mass: float

    def __post_init__(self):
        if not (0 <= self.location <= 1):
            raise BadParameter(f"atom location {self.location} outside [0, 1]")
        if not (self.mass >= 0 and math.isfinite(self.mass)):
            raise BadParameter(f"atom mass {self.mass} must be finite and >= 0")


@dataclass(frozen=True, eq=False)
class SpectralMeasure:
    atoms: tuple = ()
    density: DensityGrid = field(default_factory=DensityGrid.empty)
    exact: tuple = ()

    def __post_init__(self):
        atoms = tuple(a for a in self.atoms if a.mass >= ATOM_TOL)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "exact", tuple(self.exact))

    @property
    def has_density(self) -> bool:
        return bool(self.exact) or not self.density.is_empty

    def atom_at(self, x: float, tol: float = ATOM_TOL) -> float:
        return sum(a.mass for a in self.atoms if abs(a.location - x) <= tol)

    def continuous_mass(self) -> float:
        if self.exact:
            return float(sum(p.mass for p in self.exact))
        return self.density.integrate()

    def cauchy(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for at in self.atoms:
            out = out + at.mass / (z - at.location)
        if self.exact:
            for part in self.exact:
                out = out + part.cauchy(z)
        else:
            out = out + self.density.cauchy(z)
        return out

    def cauchy_derivative(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for at in self.atoms:
            out = out - at.mass / (z - at.location) ** 2
        if self.exact:
            for part in self.exact:
                out = out + part.cauchy_derivative(z)
        else:
            out = out + self.density.cauchy_derivative(z)
        return out

    def density_at(self, x) -> np.ndarray:
        if self.exact:
            return sum(p.density(x) for p in self.exact)
        return self.density.density(x)

    def scaled(self, c: float) -> SpectralMeasure:
        atoms = tuple(Atom(a.location, a.mass * c) for a in self.atoms)
        exact = tuple(_scale_part(p, c) for p in self.exact)
        return SpectralMeasure(atoms, self.density.scaled(c), exact)

    def with_atom(self, location: float, mass: float) -> SpectralMeasure:
        """Add ``mass`` to the atom at ``location`` (creating it if needed)."""
        atoms = list(self.atoms)
        for i, a in enumerate(atoms):
            if a.location == location:
                atoms[i] = Atom(location, a.mass + mass)
                break
        else:
            atoms.append(Atom(location, mass))
            atoms.sort(key=lambda a: a.location)
        return SpectralMeasure(tuple(atoms), self.density, self.exact)


def _scale_part(p, c):
    if isinstance(p, UniformPart):
        return UniformPart(p.left, p.right, p.mass * c)
    return JacobiPart(p.alpha, p.beta, p.scale * c)


def total_mass(m: SpectralMeasure) -> float:
    return float(sum(a.mass for a in m.atoms)) + m.continuous_mass()


def moments(m: SpectralMeasure, N: int, p: TraceParams | None = None):
    """Moment vector (int x^n dm, n = 1..N).  Atoms at 0 contribute nothing."""
    from .moments import MomentVector

    if N < 1:
        raise BadParameter("N must be >= 1")
    n = np.arange(1, N + 1)
    g = np.zeros(N)
    for a in m.atoms:
        g += a.mass * a.location**n
    if m.exact:
        for part in m.exact:
            g += part.moments(N)
    elif not m.density.is_empty:
        g += np.array([m.density.integrate(lambda x, k=k: x**k) for k in n])
    g0 = (p.alpha + p.beta) if p is not None else float("nan")
    return MomentVector(g, g0)


def split_static_atom(mu: SpectralMeasure, p: TraceParams, tol: float = 1e-10):
    """Remove the static atom (1 - min(alpha, beta)) delta_0 from mu.

    Returns ``(nu, atom_mass)``.
    """
    need = p.static_atom
    have = mu.atom_at(0.0)
    if have < need - tol:
        raise MassDeficit(f"atom at 0 has mass {have:.6g}, need {need:.6g}")
    atoms = []
    for a in mu.atoms:
        if a.location <= ATOM_TOL:
            rest = a.mass - need
            if rest >= ATOM_TOL:
                atoms.append(Atom(a.location, rest))
        else:
            atoms.append(a)
    return SpectralMeasure(tuple(atoms), mu.density, mu.exact), need


# ---------------------------------------------------------------------------
# presets

PRESETS = ("point", "bernoulli", "uniform", "arcsine", "two_bump")


def preset(
    name: str,
    p: TraceParams | None = None,
    extra: Sequence[float] = (),
    level: str = "mu",
    n: int = DEFAULT_NODES,
) -> SpectralMeasure:
    """Standard initial conditions.

    The shape is normalized to mass min(alpha, beta).  At ``level="mu"`` the
    static atom (1 - min(alpha, beta)) delta_0 is added so the total is 1.

    extra: point -> (x0,); uniform -> () or (a, b); two_bump -> (a1, b1, a2, b2).
    """
    p = p or TraceParams()
    if level not in ("mu", "nu"):
        raise BadParameter(f"level must be 'mu' or 'nu', got {level!r}")
    extra = tuple(float(e) for e in extra)
    m = p.m
    atoms: tuple = ()
    exact: tuple = ()
    if name == "point":
        if len(extra) != 1:
            raise BadParameter("point needs one location")
        atoms = (Atom(extra[0], m),)
    elif name == "bernoulli":
        if extra:
            raise BadParameter("bernoulli takes no parameters")
        atoms = (Atom(1.0, m),)
    elif name == "uniform":
        if extra not in ((),) and len(extra) != 2:
            raise BadParameter("uniform takes () or (a, b)")
        a, b = extra if extra else (0.0, 1.0)
        exact = (UniformPart(a, b, m),)
    elif name == "arcsine":
        if extra:
            raise BadParameter("arcsine takes no parameters")
        exact = (JacobiPart(0.5, 0.5, 2 * m),)
    elif name == "two_bump":
        if len(extra) != 4:
            raise BadParameter("two_bump needs a1,b1,a2,b2")
        a1, b1, a2, b2 = extra
        if not (0 <= a1 < b1 <= a2 < b2 <= 1):
            raise BadParameter("two_bump needs 0 <= a1 < b1 <= a2 < b2 <= 1")
        width = (b1 - a1) + (b2 - a2)
        exact = (
            UniformPart(a1, b1, m * (b1 - a1) / width),
            UniformPart(a2, b2, m * (b2 - a2) / width),
        )
    else:
        raise BadParameter(f"unknown preset {name!r}; choose from {PRESETS}")
    grid = _sample_parts(exact, n) if exact else DensityGrid.empty()
    meas = SpectralMeasure(atoms, grid, exact)
    if level == "mu":
        meas = meas.with_atom(0.0, p.static_atom)
    return meas


def _sample_parts(parts, n):
    if len(parts) == 1:
        lo, hi = parts[0].support()
    else:
        lo, hi = 0.0, 1.0
    return DensityGrid.chebyshev(lambda x: sum(p.density(x) for p in parts), n, lo, hi)


def jacobi_measure(alpha: float, beta: float) -> SpectralMeasure:
    m0, m1 = _jacobi.atom_masses(alpha, beta)
    part = JacobiPart(alpha, beta, 1.0)
    atoms = [Atom(0.0, m0), Atom(1.0, m1)]
    exact = (part,) if part.mass > ATOM_TOL else ()
    grid = _sample_parts(exact, DEFAULT_NODES) if exact else DensityGrid.empty()
    return SpectralMeasure(tuple(atoms), grid, exact)


# ---------------------------------------------------------------------------
# serialization


def to_dict(m: SpectralMeasure) -> dict:
    d = {
        "atoms": [{"x": a.location, "m": a.mass} for a in m.atoms],
        "grid": {
            "nodes": m.density.nodes.tolist(),
            "values": m.density.values.tolist(),
            "rule": m.density.rule,
            "lo": m.density.lo,
            "hi": m.density.hi,
        },
    }
    if m.exact:
        d["exact"] = [_part_to_dict(p) for p in m.exact]
    return d


def from_dict(d: dict) -> SpectralMeasure:
    try:
        atoms = tuple(Atom(float(a["x"]), float(a["m"])) for a in d.get("atoms", []))
        g = d.get("grid") or {"nodes": [], "values": []}
        nodes = np.asarray(g["nodes"], dtype=float)
        rule = g.get("rule")
        lo, hi = float(g.get("lo", 0.0)), float(g.get("hi", 1.0))
        if rule is None:
            cheb = len(nodes) > 0 and np.allclose(nodes, chebyshev_nodes(len(nodes)), atol=1e-14)
            rule = "chebyshev" if cheb else "linear"
        grid = DensityGrid(nodes, np.asarray(g["values"], dtype=float), rule, lo, hi)
    except (KeyError, TypeError) as exc:
        raise BadParameter(f"malformed measure JSON: {exc}") from exc
    exact = tuple(_part_from_dict(p) for p in d.get("exact", []))
    return SpectralMeasure(atoms, grid, exact)


def to_json(m: SpectralMeasure) -> str:
    return json.dumps(to_dict(m))


def from_json(text: str) -> SpectralMeasure:
    return from_dict(json.loads(text))
