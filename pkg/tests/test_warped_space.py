import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from warpflow.errors import ConstructionError, DomainError
from warpflow.warped_space import (
    make_space, parse_space_spec, ricci, ricci_gap, space_spec_string, validate_assumptions, warp_eval,
)


def _fd(f, x, h):
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)


def ricci_oracle(space, r, theta=1.0, h=1e-3):
    """Ricci of dr^2 + phi^2 g_S for n = 2 from finite differences of the polar metric components."""
    assert space.n == 2

    def metric(x):
        phi = space.warp(x[0])[0]
        return np.diag([1.0, phi**2, phi**2 * math.sin(x[1]) ** 2])

    def dmetric(x):
        out = np.zeros((3, 3, 3))
        for k in range(3):
            e = np.zeros(3)
            e[k] = 1.0
            out[k] = _fd(lambda s: metric(x + s * e), 0.0, h)
        return out

    def christoffel(x):
        g_inv = np.linalg.inv(metric(x))
        dg = dmetric(x)
        first = 0.5 * (np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg)
        return np.einsum("kl,lij->kij", g_inv, first)

    x = np.array([r, theta, 0.0])
    gamma = christoffel(x)
    dgamma = np.zeros((3, 3, 3, 3))
    for m in range(2):
        e = np.zeros(3)
        e[m] = 1.0
        dgamma[m] = _fd(lambda s: christoffel(x + s * e), 0.0, h)
    ric = (
        np.einsum("kkij->ij", dgamma)
        - np.einsum("jkik->ij", dgamma)
        + np.einsum("kkl,lij->ij", gamma, gamma)
        - np.einsum("kjl,lik->ij", gamma, gamma)
    )
    return ric[0, 0], ric[1, 1]


def test_dss_horizon_roots():
    assert parse_space_spec("dss:n=2,m=2,kappa=0").params["s0"] == pytest.approx(2.0, abs=1e-14)
    assert parse_space_spec("dss:n=2,m=2,kappa=1").params["s0"] == pytest.approx(1.0, abs=1e-14)


def test_dss_without_root_rejected():
    with pytest.raises(ConstructionError):
        make_space("ds_schwarzschild", 2, {"m": 0.0})


def test_hyperbolic_warp():
    space = parse_space_spec("hyperbolic:n=2")
    s, c = math.sinh(1.0), math.cosh(1.0)
    assert np.allclose(warp_eval(space, 1.0), (s, c, s, c), rtol=0, atol=1e-15)


def test_euclidean_warp():
    assert warp_eval(parse_space_spec("euclidean:n=2"), 3.0) == (3.0, 1.0, 0.0, 0.0)


def test_schwarzschild_warp_at_phi_4(schwarzschild):
    r = schwarzschild.r_of_phi(4.0)
    phi, d1, d2, _ = warp_eval(schwarzschild, r)
    assert phi == pytest.approx(4.0, rel=1e-14)
    assert d1 == pytest.approx(math.sqrt(0.5), rel=1e-12)
    assert d2 == pytest.approx(0.0625, rel=1e-12)


def test_schwarzschild_radius_against_closed_form(schwarzschild):
    # r(s) = sqrt(s(s-2)) + 2 log((sqrt(s) + sqrt(s-2)) / sqrt(2)) for m = 2, n = 2
    s = np.array([2.5, 4.0, 10.0, 50.0])
    exact = np.sqrt(s * (s - 2)) + 2 * np.log((np.sqrt(s) + np.sqrt(s - 2)) / math.sqrt(2))
    assert np.allclose(schwarzschild.r_of_phi(s), exact, rtol=1e-13, atol=0)


def test_out_of_range_raises(schwarzschild):
    with pytest.raises(DomainError):
        warp_eval(schwarzschild, schwarzschild.r_max * 1.01)
    with pytest.raises(DomainError):
        warp_eval(schwarzschild, -0.1)


@pytest.mark.parametrize("spec", ["dss:n=2,m=2,kappa=0", "dss:n=2,m=2,kappa=1", "dss:n=3,m=1,kappa=0",
                                  "dss:n=3,m=1,kappa=1"])
def test_dss_identity_at_random_radii(spaces, spec, rng):
    space = spaces[spec]
    n, m, k = space.n, space.params["m"], space.kappa
    r = rng.uniform(space.a, space.r_max, 1000)
    phi, d1, d2, d3 = space.warp(r)
    assert np.all(np.diff(space.warp(np.sort(r))[0]) > 0)
    scale = 1.0 + k * phi**2
    assert np.max(np.abs(d1**2 - (1 - m * phi ** (1 - n) + k * phi**2)) / scale) < 1e-10
    assert np.allclose(d2, 0.5 * (n - 1) * m * phi ** (-n) + k * phi, rtol=1e-12, atol=0)


def test_dss_third_derivative_by_differences(ads):
    r = np.linspace(0.5, 3.0, 7)
    h = 1e-3
    numeric = _fd(lambda x: ads.warp(x)[2], r, h)
    assert np.allclose(ads.warp(r)[3], numeric, rtol=1e-8)


def test_ricci_space_forms():
    e = ricci(parse_space_spec("euclidean:n=2"), 2.0)
    assert (e.radial, e.tangential) == (0.0, 0.0)
    h = ricci(parse_space_spec("hyperbolic:n=2"), 1.0)
    assert h.radial == pytest.approx(-2.0, abs=1e-12)
    assert h.tangential == pytest.approx(-2 * math.sinh(1.0) ** 2, rel=1e-12)


def test_ricci_schwarzschild_at_phi_4(schwarzschild):
    assert ricci(schwarzschild, schwarzschild.r_of_phi(4.0)).radial == pytest.approx(-0.03125, rel=1e-12)


@pytest.mark.parametrize("spec", ["hyperbolic:n=2", "dss:n=2,m=2,kappa=0", "dss:n=2,m=2,kappa=1"])
@pytest.mark.parametrize("r", [0.7, 1.5, 3.0])
def test_ricci_matches_metric_oracle(spaces, spec, r):
    space = spaces[spec]
    pair = ricci(space, r)
    radial, tangential = ricci_oracle(space, r)
    assert radial == pytest.approx(pair.radial, rel=1e-6, abs=1e-9)
    assert tangential == pytest.approx(pair.tangential, rel=1e-6, abs=1e-9)


def test_ricci_gap_examples(schwarzschild):
    r = schwarzschild.r_of_phi(4.0)
    assert ricci_gap(schwarzschild, r, 2.0) == pytest.approx(-0.75 / 16 * 0.75, rel=1e-10)
    hyp = parse_space_spec("hyperbolic:n=2")
    assert abs(ricci_gap(hyp, 1.3, 0.4)) < 1e-14
    with pytest.raises(DomainError):
        ricci_gap(schwarzschild, r, 4.5)


@settings(max_examples=60, deadline=None)
@given(r=st.floats(0.05, 20.0), spec=st.sampled_from(["dss:n=2,m=2,kappa=0", "dss:n=3,m=1,kappa=1", "hyperbolic:n=2"]))
def test_ricci_gap_vanishes_on_radial_normal(spaces, r, spec):
    space = spaces[spec]
    assert ricci_gap(space, r, space.warp(r)[0]) == 0.0


@settings(max_examples=60, deadline=None)
@given(r=st.floats(0.05, 20.0), frac=st.floats(0.01, 1.0),
       spec=st.sampled_from(["dss:n=2,m=2,kappa=0", "dss:n=2,m=2,kappa=1", "dss:n=3,m=1,kappa=0"]))
def test_ricci_gap_nonpositive_on_valid_spaces(spaces, r, frac, spec):
    space = spaces[spec]
    assert ricci_gap(space, r, frac * space.warp(r)[0]) <= 1e-12


@pytest.mark.parametrize("spec", ["dss:n=2,m=2,kappa=0", "dss:n=2,m=2,kappa=1", "dss:n=3,m=1,kappa=0",
                                  "dss:n=3,m=1,kappa=1"])
def test_validator_passes_on_dss(spaces, spec):
    space = spaces[spec]
    report = validate_assumptions(space, min(50.0, space.r_max), 10_000)
    assert report.passed
    assert report.grid["samples"] == 10_000
    q1 = report.q_profiles["Q1"]
    assert report.monotonicity_violations["Q1_nondecreasing"] == 0
    assert np.all(q1 <= 1.0 + 1e-12)


def test_validator_fails_on_sine_counterexample():
    def warp(r):
        return r + np.sin(r), 1 + np.cos(r), -np.sin(r), -np.cos(r)

    space = make_space("custom", 2, {"warp": warp, "r_max": 10.0})
    report = validate_assumptions(space, 10.0, 10_000)
    assert not report.verdicts["i"]
    assert not report.passed


def test_custom_file_space(tmp_path):
    r = np.linspace(0.0, 5.0, 401)
    rows = np.column_stack([r, np.sinh(r), np.cosh(r), np.sinh(r), np.cosh(r)])
    path = tmp_path / "warp.csv"
    np.savetxt(path, rows, delimiter=",", header="r,phi,dphi,d2phi,d3phi", comments="")
    space = parse_space_spec(f"custom:file={path},n=2")
    assert space.warp(1.234)[0] == pytest.approx(math.sinh(1.234), rel=1e-8)
    assert space_spec_string(space).startswith("custom:file=")


def test_spec_string_round_trip(spaces):
    for spec, space in spaces.items():
        again = parse_space_spec(space_spec_string(space))
        assert again.kind == space.kind and again.n == space.n and again.r_max == space.r_max


def test_malformed_spec():
    with pytest.raises(ConstructionError):
        parse_space_spec("dss:n=2,m")
    with pytest.raises(ConstructionError):
        parse_space_spec("sphere:n=2")
    with pytest.raises(ConstructionError):
        make_space("euclidean", 1)
