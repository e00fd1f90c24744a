import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy import integrate

from liberation.errors import BadParameter, BranchAmbiguity, DomainError, NegativeDensity, PoleAtZ
from liberation.measures import TraceParams, UniformPart, moments, preset
from liberation.moments import constant_moments
from liberation.transform import (
    ComplexSample,
    EpsilonSchedule,
    cauchy,
    contour_mass,
    edge_velocity,
    hilbert,
    jacobi_density,
    jacobi_edges,
    jacobi_limit,
    moment_G_field,
    pde_residual,
    shifted_G_series,
    steady_G,
    stieltjes_density,
    write_density_csv,
)

traces = st.floats(0.05, 0.95)
upper = st.tuples(st.floats(-1, 2), st.floats(1e-2, 2)).map(lambda t: complex(*t))


@given(traces, traces, upper)
def test_steady_state_flux_is_constant(al, be, z):
    # a stationary solution has z(z-1)G^2 - (az+b)G equal to its value at
    # infinity, m^2 - a m
    p = TraceParams(al, be)
    rm, rp = jacobi_edges(al, be)
    assume(abs((z - rm) * (z - rp)) > 1e-6)
    G = steady_G(al, be, z)
    flux = z * (z - 1) * G**2 - (p.a * z + p.b) * G
    assert flux == pytest.approx(p.m**2 - p.a * p.m, abs=1e-10)
    assert G.imag < 0


@given(traces, traces)
def test_jacobi_total_mass(al, be):
    law = jacobi_limit(al, be)
    rm, rp = jacobi_edges(al, be)
    assume(rp - rm > 1e-3)
    cont, _ = integrate.quad(lambda x: jacobi_density(al, be, x), rm, rp, limit=200)
    atoms = sum(a.mass for a in law.atoms)
    assert cont + atoms == pytest.approx(1.0, abs=1e-7)


def test_symmetric_jacobi_is_arcsine():
    assert jacobi_edges(0.5, 0.5) == pytest.approx((0.0, 1.0), abs=1e-15)
    x = np.array([0.1, 0.5, 0.77])
    # the moving part has mass 1/2; the other half is the static atom at 0
    assert np.allclose(jacobi_density(0.5, 0.5, x), 0.5 / (np.pi * np.sqrt(x * (1 - x))), atol=1e-12)


def test_steady_branch_ambiguity():
    rm, rp = jacobi_edges(0.3, 0.6)
    with pytest.raises(BranchAmbiguity):
        steady_G(0.3, 0.6, rp)


def test_contour_mass_of_steady_state():
    p = TraceParams(0.3, 0.6)
    G = lambda z: steady_G(0.3, 0.6, z)  # noqa: E731
    assert contour_mass(G, 0.5, 0.8).real == pytest.approx(p.m, abs=1e-10)
    with pytest.raises(BadParameter):
        contour_mass(G, 0.5, 0.8, n=32)
    with pytest.raises(BadParameter):
        contour_mass(G, 0.5, 0.8, n=65, conjugate_symmetric=True)


def test_stieltjes_density_of_uniform():
    nu = preset("uniform", level="nu")
    x = np.linspace(0.05, 0.95, 19)
    fine = EpsilonSchedule((1e-5, 5e-6, 2.5e-6))
    assert np.allclose(stieltjes_density(nu.cauchy, x, fine), 0.5, atol=1e-6)
    # the coarse default schedule is biased by O(eps / x) near the edges
    assert np.allclose(stieltjes_density(nu.cauchy, x), 0.5, atol=1e-4)


def test_negative_density_detected():
    with pytest.raises(NegativeDensity):
        stieltjes_density(lambda z: -1 / (z - 0.5), np.array([0.5]))


def test_hilbert_of_uniform():
    x = np.array([0.1, 0.25, 0.6, 0.9])
    got = hilbert(UniformPart(0, 1, 1.0), x, EpsilonSchedule((1e-4, 5e-5, 2.5e-5)))
    assert np.allclose(got, np.log(x / (1 - x)) / np.pi, atol=1e-6)
    with pytest.raises(DomainError):
        hilbert(UniformPart(0, 1, 1.0), np.array([1.0]))


def test_epsilon_schedule():
    s = EpsilonSchedule((0.3, 0.2, 0.1), 2)
    eps = np.array(s.levels)
    assert s.extrapolate(1 + 2 * eps - eps**2) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(BadParameter):
        EpsilonSchedule((0.1, 0.2))
    with pytest.raises(BadParameter):
        EpsilonSchedule((0.2, 0.1), order=2)


@given(st.floats(1.2, 4), st.floats(0.05, 3.1))
def test_series_matches_cauchy(r, th):
    p = TraceParams()
    nu = preset("two_bump", p, [0.1, 0.3, 0.5, 0.9], level="nu")
    z = r * np.exp(1j * th)
    got = shifted_G_series(moments(nu, 200, p), p, z)
    assert got == pytest.approx(complex(nu.cauchy(z)), abs=1e-12)


def test_series_domain():
    with pytest.raises(DomainError):
        shifted_G_series(constant_moments(0.5, 8), TraceParams(), 1.02j)


def test_pde_residual_detects_non_solutions():
    p = TraceParams()
    field = moment_G_field(moments(preset("point", p, [0.4]), 64, p), p)
    assert abs(pde_residual(field, 1.0, 2.0 + 1.0j, p=p)) < 1e-9
    assert abs(pde_residual(lambda t, z: 0.5 / z, 1.0, 2.0 + 1.0j, p=p)) > 1e-3
    stat = lambda t, z: steady_G(0.3, 0.6, z)  # noqa: E731
    assert abs(pde_residual(stat, 1.0, 0.4 + 0.3j, p=TraceParams(0.3, 0.6))) < 1e-9
    with pytest.raises(BadParameter):
        pde_residual(field, 1e-5, 2.0, h=1e-4)


def test_cauchy_pole_and_sample():
    nu = preset("bernoulli", level="nu")
    with pytest.raises(PoleAtZ):
        cauchy(nu, 1.0)
    assert cauchy(nu, 3.0) == pytest.approx(0.25)
    with pytest.raises(DomainError):
        ComplexSample(1 - 1j, 0j)


def test_edge_velocity():
    p = TraceParams(0.3, 0.6)
    assert edge_velocity(0.0, 1.0, p) == pytest.approx(p.b)
    assert edge_velocity(1.0, 1.0, p) == pytest.approx(p.a + p.b)
    assert edge_velocity(0.5, 2.0, p) == pytest.approx(1.0 + 0.5 * p.a + p.b)


def test_density_csv(tmp_path):
    path = tmp_path / "rho.csv"
    write_density_csv(path, [0.5], [1 / math.pi], "run")
    assert path.read_text().splitlines()[1:] == ["x,rho", f"0.5,{1 / math.pi:.17g}"]
