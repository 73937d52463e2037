import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from surfdecay.errors import DomainError, GeometryViolation, NoDistinctExtrema
from surfdecay.physical_model import (CONSTANTS, CESIUM_D2, KHZ_UM3, THZ, AtomSpecies,
                                      DielectricHalfSpace, InternalState, PotentialParams,
                                      crossover_length, derive_repulsion_params, dielectric_c3,
                                      potential, transition_frequency, well_geometry)


def test_hbar_and_transition_frequency():
    assert CONSTANTS.hbar == CONSTANTS.planck_h / (2 * math.pi)
    assert CESIUM_D2.omega0 == pytest.approx(CONSTANTS.c / 852e-9, rel=1e-12)
    # 352 THz quoted for the cesium D2 line
    assert CESIUM_D2.omega0 == pytest.approx(3.52e14, rel=2e-3)
    assert CESIUM_D2.k0 == pytest.approx(2 * math.pi / 852.0, rel=1e-15)


def test_kinetic_coefficient_units():
    m = 132.9 * 1.66053906660e-27
    assert CESIUM_D2.kinetic_coefficient == pytest.approx(
        6.62607015e-34 / (8 * math.pi**2 * m) * 1e18, rel=1e-14)


def test_invalid_atom_and_dielectric():
    with pytest.raises(DomainError):
        AtomSpecies(-1.0, 852.0)
    with pytest.raises(DomainError):
        DielectricHalfSpace(0.9)
    assert dielectric_c3(1.0, 1.0) == 0.0


def test_repulsion_parameters_ground():
    p = derive_repulsion_params(1.56 * KHZ_UM3, 159.6 * THZ, 0.19)
    assert 52.0 <= p.alpha <= 55.0
    assert p.A == pytest.approx(1.6e18, rel=0.10)


def test_repulsion_parameters_excited():
    p = derive_repulsion_params(3.09 * KHZ_UM3, 316.0 * THZ, 0.19, InternalState.EXCITED)
    assert 52.0 <= p.alpha <= 55.0
    assert p.A == pytest.approx(3.17e18, rel=0.10)
    assert p.internal_state is InternalState.EXCITED


@pytest.mark.parametrize("x_m", [0.25, 0.2138, 0.1])
def test_geometry_violation(x_m):
    # x_a = (C3/D)^(1/3) = 0.2138 nm, lower bound x_a / 4^(1/3) = 0.1347 nm
    with pytest.raises(GeometryViolation, match="A3"):
        derive_repulsion_params(1.56 * KHZ_UM3, 159.6 * THZ, x_m)


@pytest.mark.parametrize("c3,depth", [(1.56, 159.6), (3.09, 316.0), (1.0, 50.0)])
def test_round_trip_fixed_point(c3, depth):
    x_a = (c3 * KHZ_UM3 / (depth * THZ)) ** (1 / 3)
    x_m = 0.85 * x_a
    geo = well_geometry(derive_repulsion_params(c3 * KHZ_UM3, depth * THZ, x_m))
    assert geo.depth_D == pytest.approx(depth * THZ, rel=1e-9)
    assert geo.x_m == pytest.approx(x_m, rel=1e-9)
    assert geo.xi_p < 4.0 < geo.xi_m
    assert geo.x_a / 4 ** (1 / 3) < geo.x_m < geo.x_a
    assert geo.peak_value > 0


def test_no_distinct_extrema_at_double_root():
    alpha, c3 = 50.0, 1e12
    A = 3 * alpha**3 * c3 / (256.0 / math.e**4)
    with pytest.raises(NoDistinctExtrema):
        well_geometry(PotentialParams(InternalState.GROUND, c3, A, alpha))


def test_potential_values(potentials):
    V_e, V_g = potentials
    for p in (V_e, V_g):
        geo = well_geometry(p)
        assert potential(p, geo.x_m) == pytest.approx(-geo.depth_D, rel=1e-12)
        assert potential(p, geo.x_p) > 0
        # only the van der Waals tail survives far out
        assert potential(p, 1e6) == pytest.approx(-p.C3 / 1e18, rel=1e-12)
        far = potential(p, 1e7)
        assert far < 0 and abs(far) < 1e-6
    with pytest.raises(DomainError):
        potential(V_g, 0.0)


def test_wall_dominance(potentials):
    _, V_g = potentials
    x = np.linspace(0.001, well_geometry(V_g).x_p / 4, 50)
    diff = V_g.A * np.exp(-V_g.alpha * x) - potential(V_g, x)
    np.testing.assert_allclose(diff, V_g.C3 / x**3, rtol=1e-9)


def test_potential_shape_between_extrema(potentials):
    for p in potentials:
        geo = well_geometry(p)
        x1 = np.linspace(geo.x_p, geo.x_m, 102)[1:-1]
        assert np.all(np.diff(potential(p, x1)) < 0)
        x2 = np.geomspace(geo.x_m, 1e4, 102)[1:]
        assert np.all(np.diff(potential(p, x2)) > 0)


def test_transition_frequency(potentials):
    V_e, V_g = potentials
    assert transition_frequency(1e7, V_e, V_g, CESIUM_D2) == pytest.approx(CESIUM_D2.omega0,
                                                                         rel=1e-12)
    x = np.geomspace(0.15, 100, 20)
    np.testing.assert_array_equal(transition_frequency(x, V_g, V_g, CESIUM_D2), CESIUM_D2.omega0)
    # red shift below ~0.16 nm, where the C3 difference equals omega0
    assert crossover_length(V_e.C3, V_g.C3, CESIUM_D2) == pytest.approx(0.16, abs=0.005)


@settings(max_examples=40, deadline=None)
@given(c3=st.floats(0.5, 5.0), depth=st.floats(20.0, 500.0), frac=st.floats(0.7, 0.98))
def test_derived_parameters_property(c3, depth, frac):
    x_a = (c3 * KHZ_UM3 / (depth * THZ)) ** (1 / 3)
    lower = x_a / 4 ** (1 / 3)
    x_m = lower + frac * (x_a - lower)
    assume(3.0 / (1.0 - (x_m / x_a) ** 3) < 59.0)
    p = derive_repulsion_params(c3 * KHZ_UM3, depth * THZ, x_m)
    assert p.extremum_ratio < 256.0 / math.e**4
    geo = well_geometry(p)
    assert geo.x_m == pytest.approx(x_m, rel=1e-8)
    assert geo.depth_D == pytest.approx(depth * THZ, rel=1e-8)
