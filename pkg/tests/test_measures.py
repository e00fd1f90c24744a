import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from liberation.errors import BadParameter, MassDeficit
from liberation.measures import (
    Atom,
    DensityGrid,
    JacobiPart,
    SpectralMeasure,
    TraceParams,
    UniformPart,
    chebyshev_nodes,
    from_json,
    jacobi_measure,
    moments,
    preset,
    split_static_atom,
    to_json,
    total_mass,
)

traces = st.floats(0.05, 1.0)
upper = st.tuples(st.floats(-2, 3), st.floats(1e-3, 3)).map(lambda t: complex(*t))


class TestTraceParams:
    def test_derived_constants(self):
        p = TraceParams(0.3, 0.6)
        assert p.a == pytest.approx(-0.4)
        assert p.b == pytest.approx(0.3)
        assert p.m == 0.3 and p.static_atom == pytest.approx(0.7)
        assert (p.alpha11, p.alpha10, p.alpha01, p.alpha00) == pytest.approx((0, 0, 0.3, 0.1))

    @pytest.mark.parametrize("al,be", [(0, 0.5), (0.5, 1.2), (-0.1, 0.3)])
    def test_rejects_bad_traces(self, al, be):
        with pytest.raises(BadParameter):
            TraceParams(al, be)

    @given(traces, traces)
    def test_intersections_sum_consistently(self, al, be):
        p = TraceParams(al, be)
        # tau(p) = tau(p^q) + tau(p^q'), tau(q) = tau(p^q) + tau(p'^q) in general position
        assert p.alpha11 + p.alpha10 <= al + 1e-15
        assert p.alpha11 + p.alpha01 <= be + 1e-15
        assert min(p.alpha11, p.alpha10, p.alpha01, p.alpha00) >= 0


class TestPresets:
    @pytest.mark.parametrize("name,extra", [("point", [0.3]), ("bernoulli", []), ("uniform", []),
                                            ("arcsine", []), ("two_bump", [0.1, 0.2, 0.6, 0.9])])
    @pytest.mark.parametrize("al,be", [(0.5, 0.5), (0.3, 0.6), (0.8, 0.7)])
    def test_masses(self, name, extra, al, be):
        p = TraceParams(al, be)
        assert total_mass(preset(name, p, extra)) == pytest.approx(1, abs=1e-12)
        assert total_mass(preset(name, p, extra, level="nu")) == pytest.approx(p.m, abs=1e-12)

    def test_unknown_and_bad_params(self):
        with pytest.raises(BadParameter):
            preset("nope")
        with pytest.raises(BadParameter):
            preset("point")
        with pytest.raises(BadParameter):
            preset("two_bump", extra=[0.5, 0.4, 0.6, 0.9])

    def test_uniform_moments_closed_form(self):
        g = moments(preset("uniform", level="nu"), 10).g
        assert np.allclose(g, [0.5 / (n + 1) for n in range(1, 11)], atol=1e-15)

    def test_arcsine_moments_closed_form(self):
        g = moments(preset("arcsine", level="nu"), 12).g
        ref = [0.5 * math.comb(2 * n, n) / 4**n for n in range(1, 13)]
        assert np.allclose(g, ref, atol=1e-14)

    def test_grid_matches_exact_parts(self):
        nu = preset("uniform", level="nu")
        grid_only = SpectralMeasure((), nu.density)
        # the arc profile of a flat density has sqrt edges: algebraic convergence
        assert grid_only.continuous_mass() == pytest.approx(0.5, abs=1e-5)
        z = np.array([2.0 + 0.5j, 0.5 + 0.3j, -1 + 1j])
        assert np.allclose(grid_only.cauchy(z), nu.cauchy(z), atol=1e-5)
        arc = SpectralMeasure((), preset("arcsine", level="nu").density)
        assert arc.continuous_mass() == pytest.approx(0.5, abs=1e-13)


class TestStaticAtom:
    def test_split(self):
        p = TraceParams(0.3, 0.6)
        nu, need = split_static_atom(preset("uniform", p), p)
        assert need == pytest.approx(0.7)
        assert total_mass(nu) == pytest.approx(0.3)
        assert nu.atom_at(0.0) == 0

    def test_deficit(self):
        p = TraceParams(0.5, 0.5)
        with pytest.raises(MassDeficit):
            split_static_atom(preset("uniform", p, level="nu"), p)


class TestCauchy:
    @given(upper)
    def test_herglotz_and_decay(self, z):
        for name in ("uniform", "arcsine", "two_bump"):
            extra = [0.1, 0.2, 0.7, 0.8] if name == "two_bump" else []
            G = preset(name, extra=extra, level="nu").cauchy(z)
            assert G.imag < 0
        far = 1e6 * z / abs(z)
        assert preset("uniform").cauchy(far) * far == pytest.approx(1.0, rel=1e-5)

    def test_uniform_closed_form(self):
        z = np.array([0.3 + 0.2j, 2.0 + 0j, -0.5 + 1j, 0.5 + 1e-9j])
        ref = np.log(z / (z - 1))
        assert np.allclose(UniformPart(0, 1, 1.0).cauchy(z), ref, atol=1e-12)

    def test_arcsine_at_two(self):
        # 1 / sqrt(z (z - 1)) at z = 2, times mass 1/2
        assert JacobiPart(0.5, 0.5, 1.0).cauchy(2.0) == pytest.approx(0.5 / math.sqrt(2), abs=1e-13)

    def test_derivative_matches_difference(self):
        nu = preset("two_bump", extra=[0.1, 0.2, 0.7, 0.8], level="nu")
        z, h = 0.4 + 0.3j, 1e-5
        fd = (nu.cauchy(z + h) - nu.cauchy(z - h)) / (2 * h)
        assert nu.cauchy_derivative(z) == pytest.approx(fd, abs=1e-8)


class TestGrid:
    def test_chebyshev_nodes_increasing_inside(self):
        x = chebyshev_nodes(64, 0.2, 0.7)
        assert np.all(np.diff(x) > 0) and x[0] > 0.2 and x[-1] < 0.7

    def test_chebyshev_integrates_polynomial_times_arc(self):
        # sqrt(x(1-x)) x^2 has a polynomial arc profile; exact value is B(7/2, 3/2)
        grid = DensityGrid.chebyshev(lambda x: np.sqrt(x * (1 - x)) * x**2, 32)
        ref = math.gamma(3.5) * math.gamma(1.5) / math.gamma(5)
        assert grid.integrate() == pytest.approx(ref, abs=1e-14)

    def test_linear_grid_trapezoid(self):
        x = np.linspace(0, 1, 101)
        grid = DensityGrid(x, 2 * x, "linear")
        assert grid.integrate() == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("nodes,values", [([0.2, 0.1], [1, 1]), ([0.1, 0.2], [1, -1]),
                                              ([0.1, 1.2], [1, 1])])
    def test_invalid(self, nodes, values):
        with pytest.raises(BadParameter):
            DensityGrid(np.array(nodes, float), np.array(values, float), "linear")


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(1e-6, 1)), max_size=4), st.booleans())
def test_json_round_trip(atoms, with_grid):
    grid = DensityGrid.chebyshev(lambda x: 1 + x, 16) if with_grid else DensityGrid.empty()
    m = SpectralMeasure(tuple(Atom(x, w) for x, w in atoms), grid)
    back = from_json(to_json(m))
    assert [(a.location, a.mass) for a in back.atoms] == [(a.location, a.mass) for a in m.atoms]
    assert np.array_equal(back.density.nodes, m.density.nodes)
    assert np.array_equal(back.density.values, m.density.values)
    assert back.density.rule == m.density.rule


def test_json_round_trip_exact_parts():
    m = preset("two_bump", extra=[0.1, 0.2, 0.7, 0.8])
    back = from_json(to_json(m))
    z = 0.4 + 0.2j
    assert back.cauchy(z) == pytest.approx(m.cauchy(z), abs=1e-15)


def test_jacobi_measure_masses():
    m = jacobi_measure(0.3, 0.6)
    assert total_mass(m) == pytest.approx(1.0, abs=1e-10)
    assert m.atom_at(0.0) == pytest.approx(0.7)
    m = jacobi_measure(0.8, 0.7)
    assert m.atom_at(1.0) == pytest.approx(0.5)
