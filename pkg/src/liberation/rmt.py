"""Random-matrix oracle: Brownian motion on U(d) and the angle operator QP_tQ.

The Hermitian eigensolver is self-contained: complex Householder reduction
to tridiagonal form, a diagonal phase change making the tridiagonal real,
then implicit-shift QL on the real tridiagonal.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from ._tridiag import householder_tridiagonal, tql2
from .errors import BadParameter, NoConvergence
from .measures import Atom, DensityGrid, SpectralMeasure, TraceParams

ATOM_CLUSTER_TOL = 1e-8


@dataclass
class RngStream:
    """Reproducible PCG64 stream keyed by (seed, stream)."""

    seed: int
    stream: int = 0
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise BadParameter("seed must be a 64-bit unsigned integer")
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> RngStream:
        """Independent stream for sub-task ``index`` (e.g. a trial)."""
        return RngStream(self.seed, self.stream * 1_000_003 + index + 1)

    def normal(self, size):
        return self.generator.standard_normal(size)


# ---------------------------------------------------------------------------
# matrices


def hermitian_residual(A) -> float:
    A = np.asarray(A)
    return float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0


def unitarity_residual(U) -> float:
    U = np.asarray(U)
    return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))))


def gue_increment(d: int, dt: float, rng: RngStream) -> np.ndarray:
    """Hermitian Gaussian with entry variance dt/d, so E[(1/d) Tr X^2] = dt."""
    if d < 1 or dt < 0:
        raise BadParameter("need d >= 1 and dt >= 0")
    g = rng.normal((2, d, d))
    Z = (g[0] + 1j * g[1]) / np.sqrt(2)
    return (Z + Z.conj().T) * np.sqrt(dt / (2 * d))


def haar_unitary(d: int, rng: RngStream) -> np.ndarray:
    """QR of a complex Ginibre matrix with the phases of diag(R) removed."""
    if d < 1:
        raise BadParameter("d must be >= 1")
    g = rng.normal((2, d, d))
    Q, R = np.linalg.qr((g[0] + 1j * g[1]) / np.sqrt(2))
    ph = np.diagonal(R) / np.abs(np.diagonal(R))
    return Q * ph[None, :]


# ---------------------------------------------------------------------------
# eigensolver


def _householder_tridiagonal(A, want_q=True):
    """Unitary Q and a Hermitian tridiagonal T = Q* A Q (as diag, subdiag)."""
    A = np.array(A, dtype=np.complex128, order="C")
    n = A.shape[0]
    Q = np.eye(n, dtype=np.complex128)
    householder_tridiagonal(A, Q, want_q)
    diag = np.real(np.diagonal(A)).copy()
    sub = np.diagonal(A, -1).copy()
    return (Q if want_q else None), diag, sub


def hermitian_eigen(A, vectors: bool = True):
    """Eigen-decomposition A = V diag(lam) V* with ascending lam.

    Raises NoConvergence when QL needs more than 30*d iterations.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise BadParameter("A must be square")
    n = A.shape[0]
    if hermitian_residual(A) > 1e-12 * max(1.0, float(np.max(np.abs(A)))):
        raise BadParameter("A is not Hermitian")
    if n == 0:
        return np.empty(0), np.empty((0, 0), dtype=complex)
    Q, d, sub = _householder_tridiagonal(A, vectors)
    # phase change D making the subdiagonal real and nonnegative
    mag = np.abs(sub)
    ph = np.ones(n, dtype=complex)
    for i in range(n - 1):
        ph[i + 1] = ph[i] * (sub[i] / mag[i] if mag[i] > 0 else 1.0)
    e = np.zeros(n)
    e[: n - 1] = mag
    ZT = np.eye(n) if vectors else np.empty((n, 0))
    used = tql2(d, e, ZT, 30 * n)
    if used < 0:
        raise NoConvergence(f"QL did not converge within {30 * n} iterations", last=d)
    order = np.argsort(d, kind="stable")
    lam = d[order]
    if not vectors:
        return lam, None
    V = (Q * ph[None, :]) @ ZT[order].T
    return lam, V


def eigvalsh(A) -> np.ndarray:
    return hermitian_eigen(A, vectors=False)[0]


# ---------------------------------------------------------------------------
# Brownian motion and angles


def evolve_ubm(d: int, t: float, steps: int, rng: RngStream) -> np.ndarray:
    """U_t by the exponential scheme U <- U exp(i dX), exactly unitary."""
    if steps < 1:
        raise BadParameter("steps must be >= 1")
    if t < 0:
        raise BadParameter("t must be nonnegative")
    U = np.eye(d, dtype=complex)
    if t == 0:
        return U
    dt = t / steps
    for _ in range(steps):
        lam, V = hermitian_eigen(gue_increment(d, dt, rng))
        U = U @ ((V * np.exp(1j * lam)[None, :]) @ V.conj().T)
    return U


def projection_rank(trace: float, d: int) -> int:
    return int(np.floor(trace * d + 0.5))


def angle_eigenvalues(U, d: int, p: TraceParams, coupling: str, rng: RngStream | None = None):
    """All d eigenvalues of Q U P U* Q for one sample."""
    ka, kb = projection_rank(p.alpha, d), projection_rank(p.beta, d)
    if coupling == "equal":
        Qr = np.eye(d, dtype=complex)[:, :kb]
    elif coupling == "haar_free":
        if rng is None:
            raise BadParameter("haar_free coupling needs an rng")
        Qr = haar_unitary(d, rng)[:, :kb]
    else:
        raise BadParameter(f"unknown coupling {coupling!r}")
    W = Qr.conj().T @ U[:, :ka]
    B = W @ W.conj().T
    B = 0.5 * (B + B.conj().T)
    lam = eigvalsh(B)
    return np.concatenate((np.zeros(d - kb), lam))


@dataclass
class AngleSample:
    """Raw eigenvalues per trial plus the trace statistics of U_t."""

    eigenvalues: np.ndarray
    tr_u: np.ndarray
    tr_u2: np.ndarray
    d: int

    def moments(self, N: int) -> np.ndarray:
        lam = self.eigenvalues.ravel()
        return np.array([np.mean(lam**n) for n in range(1, N + 1)])


def sample_angles(d: int, p: TraceParams, t: float, steps: int, trials: int,
                  coupling: str, rng: RngStream) -> AngleSample:
    """Run ``trials`` independent liberation samples, each on its own stream."""
    if trials < 1:
        raise BadParameter("trials must be >= 1")
    eigs, tr1, tr2 = [], [], []
    for k in range(trials):
        sub = rng.child(k)
        U = evolve_ubm(d, t, max(steps, 1), sub)
        eigs.append(angle_eigenvalues(U, d, p, coupling, sub))
        tr1.append(np.trace(U) / d)
        tr2.append(np.trace(U @ U) / d)
    return AngleSample(np.array(eigs), np.array(tr1), np.array(tr2), d)


def histogram_measure(eigs, bins: int = 200, tol: float = ATOM_CLUSTER_TOL):
    """Atoms at 0 and 1 (eigenvalues within tol) plus a binned density.

    Returns (measure, counts, edges, atoms dict).
    """
    lam = np.ravel(eigs)
    total = lam.size
    at0 = np.abs(lam) <= tol
    at1 = np.abs(lam - 1) <= tol
    rest = np.clip(lam[~(at0 | at1)], 0.0, 1.0)
    edges = np.linspace(0.0, 1.0, bins + 1)
    counts, _ = np.histogram(rest, edges)
    width = edges[1] - edges[0]
    centers = 0.5 * (edges[:-1] + edges[1:])
    grid = DensityGrid(centers, counts / (total * width), "linear")
    atoms = {"0": at0.sum() / total, "1": at1.sum() / total}
    meas = SpectralMeasure((Atom(0.0, atoms["0"]), Atom(1.0, atoms["1"])), grid)
    return meas, counts, edges, atoms


def empirical_angle_measure(d: int, p: TraceParams, t: float, steps: int, trials: int,
                            coupling: str, rng: RngStream, bins: int = 200) -> SpectralMeasure:
    sample = sample_angles(d, p, t, steps, trials, coupling, rng)
    return histogram_measure(sample.eigenvalues, bins)[0]


def atom_mass_at_one(measure, tol: float = ATOM_CLUSTER_TOL) -> float:
    """Fraction of spectral mass at 1: raw eigenvalues or a measure's atom."""
    if isinstance(measure, SpectralMeasure):
        return measure.atom_at(1.0, tol)
    lam = np.ravel(measure)
    if lam.size == 0:
        return 0.0
    return float(np.mean(np.abs(lam - 1) <= tol))


def write_histogram(path, counts, edges, atoms: dict, header_line: str | None = None):
    """Histogram CSV plus an atoms JSON sidecar at ``path + '.atoms.json'``."""
    with open(path, "w", newline="") as fh:
        if header_line:
            fh.write(f"# {header_line}\n")
        w = csv.writer(fh)
        w.writerow(["bin_left", "bin_right", "count"])
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            w.writerow([f"{lo:.17g}", f"{hi:.17g}", int(c)])
    with open(str(path) + ".atoms.json", "w") as fh:
        json.dump({k: float(v) for k, v in atoms.items()}, fh)
