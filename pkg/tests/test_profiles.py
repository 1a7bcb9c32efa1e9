import math

import mpmath
import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from warpflow.errors import ConstructionError, DomainError
from warpflow.profiles import (
    bhw_quantity, build_profile, lookup, ode_residual, volume_exact, write_profile_table, xi1_exact, xi_exact,
)
from warpflow.surface import quermassintegral, radial_sphere, weighted_enclosed_volume
from warpflow.warped_space import parse_space_spec

EUCLID = parse_space_spec("euclidean:n=2")
HYP = parse_space_spec("hyperbolic:n=2")


def schwarzschild_xi(s):
    # m = 2, n = 2: int phi'' phi dr = int ds / sqrt(s (s - 2)) = 2 arccosh(sqrt(s / 2))
    return 8 * math.pi * (s * math.sqrt(1 - 2 / s) - 2 * math.acosh(math.sqrt(s / 2)))


def test_euclidean_xi_closed_form():
    table = build_profile(EUCLID, 1.0, 10.0, 512)
    exact = 2 * np.sqrt(4 * np.pi) * np.sqrt(table.area)
    assert np.max(np.abs(table.xi / exact - 1)) <= 1e-8
    assert np.all(table.xi1 == 0.0)


def test_hyperbolic_xi_closed_form():
    table = build_profile(HYP, 0.0, 5.0, 512)
    r = table.r[1:]
    exact = 4 * np.pi * (np.sinh(r) * np.cosh(r) + r)
    assert np.max(np.abs(table.xi[1:] / exact - 1)) <= 1e-8
    assert np.allclose(table.xi1, table.volume, rtol=1e-12, atol=0)


def test_schwarzschild_xi_closed_form(schwarzschild):
    table = build_profile(schwarzschild, 0.0, 30.0, 256)
    phi = schwarzschild.warp(table.r)[0]
    exact = np.array([schwarzschild_xi(s) for s in phi])
    assert np.allclose(table.xi, exact, rtol=1e-10, atol=1e-10)


def test_schwarzschild_volume_by_mpmath(schwarzschild):
    s = 6.0
    # x = 2 (1 + z^2) removes the inverse square root at the horizon
    with mpmath.workdps(30):
        volume = 4 * mpmath.pi * mpmath.quad(lambda z: 16 * (1 + z * z) ** 2.5, [0, mpmath.sqrt(s / 2 - 1)])
    area = 4 * math.pi * s**2
    assert volume_exact(schwarzschild, area) == pytest.approx(float(volume), rel=1e-13)
    assert xi1_exact(schwarzschild, area) == pytest.approx(8 * math.pi * math.acosh(math.sqrt(3.0)), rel=1e-11)


@pytest.mark.parametrize("spec", ["hyperbolic:n=2", "dss:n=2,m=2,kappa=0", "dss:n=3,m=1,kappa=1"])
def test_xi_equals_quermassintegral_on_spheres(spaces, spec):
    space = spaces[spec]
    table = build_profile(space, space.a, 4.0, 64)
    for r in table.r[5::11]:
        s = radial_sphere(space, r, 65)
        row = np.searchsorted(table.r, r)
        assert table.xi[row] == pytest.approx(quermassintegral(s), rel=1e-9)
        assert table.xi1[row] == pytest.approx(weighted_enclosed_volume(s, "weighted_iso"), rel=1e-9)


def test_lookup_exact_at_nodes(ads):
    table = build_profile(ads, 0.2, 3.0, 128)
    for name in ("r", "volume", "xi1", "xi"):
        assert np.array_equal(lookup(table, name, table.area), table.column(name))


def test_lookup_tight_sphere_values():
    table = build_profile(EUCLID, 0.5, 3.0, 512)
    assert lookup(table, "xi", 4 * math.pi) == pytest.approx(8 * math.pi, rel=1e-8)
    table = build_profile(HYP, 0.5, 3.0, 512)
    s, c = math.sinh(1.0), math.cosh(1.0)
    assert lookup(table, "xi", 4 * math.pi * s * s) == pytest.approx(4 * math.pi * (s * c + 1), rel=1e-8)


def test_lookup_refuses_extrapolation():
    table = build_profile(EUCLID, 1.0, 2.0, 32)
    with pytest.raises(DomainError):
        lookup(table, "xi", table.area[-1] * 1.01)
    with pytest.raises(DomainError):
        lookup(table, "xi_eta", table.area[3])


@settings(max_examples=80, deadline=None)
@given(a=st.floats(0.0, 1.0), b=st.floats(0.0, 1.0))
def test_lookup_is_monotone(schwarzschild, a, b):
    table = _schwarzschild_table(schwarzschild)
    lo, hi = table.area_range
    x, y = sorted((lo + a * (hi - lo), lo + b * (hi - lo)))
    if y > x:
        assert lookup(table, "xi", x) < lookup(table, "xi", y)


_TABLES = {}


def _schwarzschild_table(space):
    if "s" not in _TABLES:
        _TABLES["s"] = build_profile(space, 0.0, 10.0, 96)
    return _TABLES["s"]


@pytest.mark.parametrize("spec", ["euclidean:n=2", "hyperbolic:n=2", "dss:n=2,m=2,kappa=1"])
def test_ode_residual_examples(spaces, spec):
    space = spaces[spec]
    r_hi = float(space.r_of_phi(10.0 * max(1.0, space.params.get("s0", 1.0))))
    assert ode_residual(build_profile(space, space.a, r_hi, 512)) <= 1e-6


def test_ode_residual_needs_rows():
    with pytest.raises(DomainError):
        ode_residual(build_profile(EUCLID, 1.0, 2.0, 32))


def test_ode_residual_detects_corruption(schwarzschild):
    table = build_profile(schwarzschild, 0.0, 10.0, 256)
    table.xi[100] *= 1.001
    assert ode_residual(table) > 1e-4


def test_weighted_columns(schwarzschild):
    table = build_profile(schwarzschild, 0.0, 8.0, 64, weight="weighted_iso")
    assert np.array_equal(table.xi_eta, table.xi1)
    assert table.names()[-1] == "xi_eta"
    decay = build_profile(schwarzschild, 0.0, 8.0, 64, weight=lambda r: np.exp(-r))
    assert np.all(np.diff(decay.xi_eta) > 0)
    with pytest.raises(ConstructionError):
        build_profile(schwarzschild, 0.0, 8.0, 64, weight="phi_prime")
    with pytest.raises(ConstructionError):
        build_profile(schwarzschild, 0.0, 8.0, 64, weight=lambda r: -np.ones_like(r))


def test_build_profile_argument_checks():
    with pytest.raises(DomainError):
        build_profile(EUCLID, 1.0, 2.0, 8)
    with pytest.raises(DomainError):
        build_profile(EUCLID, 2.0, 1.0, 64)


def test_profile_columns_monotone(spaces):
    for space in spaces.values():
        table = build_profile(space, space.a, 5.0, 128)
        assert np.all(np.diff(table.area) > 0)
        assert np.all(np.diff(table.xi) > 0)
        assert np.all(table.xi1 >= 0) and np.all(np.diff(table.xi1) >= 0)


def test_bhw_euclidean_unit_sphere_by_symbolic_terms():
    r, th = sp.symbols("r theta", positive=True)
    n = 2
    dmu = 2 * sp.pi * sp.sin(th)
    total_h = sp.integrate(sp.Integer(n) * dmu, (th, 0, sp.pi))  # phi' H = n on the unit sphere
    volume = sp.integrate(sp.integrate(r**n, (r, 0, 1)) * 2 * sp.pi * sp.sin(th), (th, 0, sp.pi))
    expected = float((total_h - n * (n + 1) * volume) / (4 * sp.pi) ** sp.Rational(n - 1, n))
    assert abs(bhw_quantity(radial_sphere(EUCLID, 1.0)) - expected) < 1e-12


def test_bhw_grid_independent_on_spheres(ads):
    r = ads.r_of_phi(3.0)
    assert bhw_quantity(radial_sphere(ads, r, 65)) == pytest.approx(bhw_quantity(radial_sphere(ads, r, 1025)),
                                                                   rel=1e-10)


def test_exact_inversions_match_table(ads):
    table = build_profile(ads, 0.0, 3.0, 64)
    assert np.allclose(xi_exact(ads, table.area[1:]), table.xi[1:], rtol=1e-12)


def test_write_profile_table(tmp_path):
    table = build_profile(HYP, 0.5, 1.0, 16)
    path = tmp_path / "profile.csv"
    write_profile_table(table, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "r,area,volume,xi1,xi"
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert np.array_equal(data[:, 4], table.xi)
