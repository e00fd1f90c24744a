import math

import numpy as np
import pytest
from scipy import integrate

from liberation.entropy import (
    EntropyConfig,
    FlowEntropy,
    PhiProfile,
    _exp_tail,
    cell_log_kernel,
    check_derivative_identity,
    chi_proj,
    fisher,
    istar_report,
    log_energy,
    mass_check,
    phi_profile,
    unification_report,
    write_report,
)
from liberation.errors import BadParameter, DivergentIntegral, GeneralPositionViolated, TailDivergence
from liberation.measures import DensityGrid, SpectralMeasure, TraceParams, preset
from liberation.subordination import SubordinationProblem

HALF = TraceParams()


def hat(name, *extra):
    return preset(name, HALF, list(extra), level="nu").scaled(2.0)


def uniform_problem(t=1.0):
    return SubordinationProblem(preset("uniform", HALF, level="nu"), t)


class TestLogEnergy:
    def test_closed_forms(self):
        assert log_energy(hat("arcsine")) == pytest.approx(-math.log(4), abs=1e-13)
        # semicircle of radius R = 1/2 on [0, 1]: -1/4 + ln(R/2)
        semi = DensityGrid.chebyshev(lambda x: 8 / np.pi * np.sqrt(x * (1 - x)), 64)
        assert log_energy(semi) == pytest.approx(-0.25 - math.log(4), abs=1e-13)
        x = np.linspace(0, 1, 201)
        assert log_energy(DensityGrid(x, np.ones_like(x), "linear")) == pytest.approx(-1.5, abs=1e-12)

    def test_linear_grid_against_brute_force(self):
        # 64-node grid; oracle: midpoint double sum over sub-cells with the
        # exact self-interaction of each sub-cell, Richardson-combined over
        # 20 and 40 sub-cells (the error is first order in the sub-cell size)
        x = np.linspace(0, 1, 64)
        v = 6 * x * (1 - x) + 0.2
        got = log_energy(DensityGrid(x, v, "linear"))
        cell = 0.5 * (v[:-1] + v[1:])

        def brute(sub):
            h = np.diff(x)[0] / sub
            mid = (np.arange(63 * sub) + 0.5) * h
            w = np.repeat(cell, sub) * h
            d = np.abs(mid[:, None] - mid[None, :])
            np.fill_diagonal(d, 1.0)
            return w @ np.log(d) @ w + np.sum(w**2) * (math.log(h) - 1.5)

        assert got == pytest.approx(2 * brute(40) - brute(20), abs=1e-5)

    def test_cell_kernel_diagonal(self):
        # int_0^h int_0^h ln|x - y| = h^2 (ln h - 3/2)
        K = cell_log_kernel([0.0, 0.3])
        assert K[0, 0] == pytest.approx(0.09 * (math.log(0.3) - 1.5), abs=1e-15)

    def test_atoms_give_minus_infinity(self):
        assert log_energy(hat("bernoulli")) == -math.inf
        assert chi_proj(hat("point", 0.3)) == -math.inf


class TestChiProj:
    def test_values(self):
        assert chi_proj(hat("arcsine")) == pytest.approx(-math.log(4) / 4, abs=1e-12)
        assert chi_proj(hat("uniform")) == pytest.approx(-0.375, abs=1e-5)
        assert chi_proj(hat("uniform"), cfg=EntropyConfig(C_const=1.0)) == pytest.approx(-1.375, abs=1e-5)

    def test_general_position_violation(self):
        p = TraceParams(0.5, 0.5, intersections=(0.1, 0.0, 0.0, 0.1))
        with pytest.raises(GeneralPositionViolated):
            chi_proj(hat("uniform"), p)


class TestFisher:
    def test_arcsine_is_free_of_information(self):
        assert fisher(hat("arcsine")) < 1e-8

    def test_uniform_against_quadrature(self):
        # Hilbert transform of the flat law is ln(x/(1-x)) / pi
        ref, _ = integrate.quad(lambda x: (math.log(x / (1 - x)) / math.pi) ** 2 * x * (1 - x), 0, 1)
        assert ref == pytest.approx(0.0217818277, abs=1e-9)
        assert fisher(hat("uniform")) == pytest.approx(ref, abs=1e-3)

    def test_divergent(self):
        with pytest.raises(DivergentIntegral):
            fisher(hat("bernoulli"))


class TestFlow:
    def test_profile_start_matches_fisher(self):
        prof = phi_profile(uniform_problem(), [0.0, 0.5, 1.0, 3.0])
        assert prof.values[0] == pytest.approx(math.pi**2 * 0.0217818277, rel=1e-3)
        assert np.all(np.diff(prof.values) < 0)
        assert prof.values[-1] < 1e-5

    def test_arcsine_flow_is_stationary(self):
        flow = FlowEntropy(SubordinationProblem(preset("arcsine", HALF, level="nu"), 1.0))
        assert flow.phi(0.7) < 1e-12
        assert flow.chi(0.7) == pytest.approx(-math.log(4) / 4, abs=1e-12)

    def test_entropy_increases_to_the_limit(self):
        flow = FlowEntropy(uniform_problem())
        chis = [flow.chi(t) for t in (0.0, 0.2, 0.5, 1.0, 4.0)]
        assert np.all(np.diff(chis) > 0)
        assert chis[-1] == pytest.approx(-math.log(4) / 4, abs=1e-6)

    def test_derivative_identity_argument_check(self):
        with pytest.raises(BadParameter):
            check_derivative_identity(uniform_problem(), 1e-3, 1e-3)

    def test_atomic_start_gets_cutoff(self):
        prob = SubordinationProblem(preset("bernoulli", HALF, level="nu"), 1.0)
        rep = istar_report(prob, EntropyConfig(T_max=0.1, tail_model="drop", nodes=64))
        assert rep.t_min == 1e-3 and rep.warnings
        assert np.isfinite(rep.istar) and rep.istar > 0

    def test_unification_report(self, tmp_path):
        rep = unification_report(uniform_problem(), EntropyConfig(T_max=20.0))
        assert rep["chi_proj_inf"] - rep["chi_proj_t0"] == pytest.approx(0.0284264, abs=1e-6)
        assert abs(rep["ftc_gap"]) < 1e-5
        path = tmp_path / "r.json"
        write_report(path, rep, "run")
        assert '"provenance": "run"' in path.read_text()


def test_tail_divergence_detected():
    class Growing:
        def phi(self, t):
            return math.exp(0.1 * t)

    with pytest.raises(TailDivergence):
        _exp_tail(Growing(), 20.0, 1e-13)


def test_config_and_profile_validation():
    with pytest.raises(BadParameter):
        EntropyConfig(T_max=0)
    with pytest.raises(BadParameter):
        EntropyConfig(tail_model="power")
    with pytest.raises(BadParameter):
        PhiProfile([0.0, 0.0], [1.0, 1.0])


def test_mass_check():
    assert mass_check(hat("uniform")) == pytest.approx(1.0)
    assert mass_check(SpectralMeasure((), DensityGrid.chebyshev(lambda x: 2 * x, 32))) == pytest.approx(1.0, abs=1e-3)
