import math

import pytest

import warpflow.verification as verification
from warpflow.errors import DomainError, PreconditionViolation
from warpflow.flows import FlowConfig, FlowTrace, run_flow
from warpflow.surface import cos_bump, offcenter_sphere, radial_sphere
from warpflow.verification import (
    INCONCLUSIVE, Verdict, check_limit_G, check_minkowski, check_monotone_G, fit_asymptotics, isoperimetric_sweep,
    parse_family_spec,
)
from warpflow.warped_space import parse_space_spec

EUCLID = parse_space_spec("euclidean:n=2")
HYP = parse_space_spec("hyperbolic:n=2")


@pytest.fixture(scope="module")
def radial_trace(schwarzschild):
    return run_flow(FlowConfig(schwarzschild, "sphere:phi=3", grid=65, t_end=3.0, cadence=0.1))


@pytest.fixture(scope="module")
def ads_small_run(ads):
    return run_flow(FlowConfig(ads, "cos_bump:phi0=3,eps=0.15,k=2", grid=129, t_end=6.0, cadence=0.1))


def _copy(trace, **changes):
    columns = {k: list(v) for k, v in trace.columns.items()}
    for name, (index, value) in changes.items():
        columns[name][index] = value
    return FlowTrace(columns=columns, metadata=dict(trace.metadata), phi_h_dev=list(trace.phi_h_dev))


def test_verdict_rule_and_serialization():
    ok = Verdict.judge("x", -1e-7, 1e-6, {"a": 1})
    bad = Verdict.judge("x", -2e-6, 1e-6)
    assert ok.passed and ok.status == "pass"
    assert not bad.passed and bad.status == "fail"
    assert Verdict.from_dict(ok.to_dict()) == ok
    odd = Verdict.inconclusive("y", 1e-4)
    assert math.isnan(odd.residual) and not odd.passed and odd.status == INCONCLUSIVE
    again = Verdict.from_dict({**odd.to_dict(), "residual": None})
    assert again.status == INCONCLUSIVE


def test_minkowski_radial_equality(spaces):
    for space in spaces.values():
        v = check_minkowski(radial_sphere(space, 1.5, 129))
        assert v.passed and abs(v.residual) <= 1e-8
        assert v.context["equality"] == "radial_sphere"


def test_minkowski_strict_on_euclidean_bump():
    v = check_minkowski(cos_bump(EUCLID, 2.0, 0.2, 2, 257))
    assert v.passed and v.residual > 0.1
    assert v.context["equality"] is None


def test_minkowski_geodesic_sphere_case():
    v = check_minkowski(offcenter_sphere(HYP, 0.3, 1.0, 257))
    assert v.passed and abs(v.residual) <= v.tolerance
    assert v.context["equality"] == "geodesic_sphere"


def test_minkowski_precondition():
    with pytest.raises(PreconditionViolation):
        check_minkowski(cos_bump(EUCLID, 2.0, 0.3, 4, 129))


def test_minkowski_random_radial_spheres(spaces, rng):
    space_list = list(spaces.values())
    worst = 0.0
    for _ in range(1000):
        space = space_list[rng.integers(len(space_list))]
        phi = rng.uniform(0.2, 15.0) * max(1.0, space.params.get("s0", 1.0))
        if space.kind == "ds_schwarzschild":
            phi = max(phi, space.params["s0"] * 1.01)
        v = check_minkowski(radial_sphere(space, space.r_of_phi(phi), 65))
        worst = max(worst, abs(v.residual))
        assert v.context["equality"] == "radial_sphere"
    assert worst <= 1e-8


def test_minkowski_sign_flip_injection(monkeypatch):
    surface = cos_bump(EUCLID, 2.0, 0.2, 2, 129)
    real = verification.quermassintegral
    monkeypatch.setattr(verification, "quermassintegral", lambda s: 0.9 * real(s))
    assert not check_minkowski(surface).passed


def test_monotone_g_on_radial_trace(radial_trace):
    v = check_monotone_G(radial_trace)
    assert v.passed and abs(v.residual) <= 1e-6


def test_monotone_g_detects_corruption(radial_trace):
    corrupted = _copy(radial_trace, G=(10, radial_trace["G"][10] + 1e-3))
    assert not check_monotone_G(corrupted).passed


def test_limit_g(radial_trace, ads):
    v = check_limit_G(radial_trace)
    assert v.passed and abs(v.residual) <= 1e-6
    short = run_flow(FlowConfig(ads, "cos_bump:phi0=3,eps=0.15,k=2", grid=65, t_end=0.5, cadence=0.1))
    odd = check_limit_G(short)
    assert odd.status == INCONCLUSIVE and not odd.passed
    corrupted = _copy(radial_trace, G=(-1, -1e-2))
    assert not check_limit_G(corrupted).passed


def test_proof_architecture_cross_check(ads, ads_small_run):
    trace = ads_small_run
    mono, limit = check_monotone_G(trace), check_limit_G(trace)
    initial = check_minkowski(cos_bump(ads, ads.r_of_phi(3.0), 0.15, 2, 129))
    assert mono.passed and limit.passed
    assert initial.passed == (mono.passed and limit.passed)
    assert trace["G"][0] >= -1e-6


def test_fit_asymptotics(radial_trace, ads_small_run):
    degenerate = fit_asymptotics(radial_trace, 2, 0.0)
    assert degenerate.degenerate and math.isnan(degenerate.umb_slope)
    rates = fit_asymptotics(ads_small_run, 2, 1.0)
    assert not rates.degenerate
    assert rates.umb_slope <= -0.5
    assert rates.umb_predicted == -1.0
    assert rates.H_terminal_dev < 1e-2
    with pytest.raises(DomainError):
        fit_asymptotics(FlowTrace(columns={k: v[:15] for k, v in radial_trace.columns.items()}), 2, 0.0)


def test_sweep_radial_members_and_margins(schwarzschild):
    verdicts = isoperimetric_sweep(schwarzschild, "cos_bump:seed=3,radial_every=5", 20)
    assert len(verdicts) == 20
    for v in verdicts:
        assert v.passed
        if v.context["eps"] == 0.0:
            assert abs(v.residual) <= 1e-9
        else:
            assert v.residual >= 1e-10


def test_sweep_euclidean_family():
    verdicts = isoperimetric_sweep(EUCLID, "cos_bump:", 10)
    assert all(v.passed for v in verdicts)
    assert all(v.context["margin_weighted"] == 0.0 for v in verdicts)


def test_sweep_parallel_is_identical(schwarzschild):
    family = parse_family_spec("cos_bump:phi=2.5..4,eps=0.02..0.1,k=3,grid=129,seed=7")
    serial = isoperimetric_sweep(schwarzschild, family, 8)
    parallel = isoperimetric_sweep(schwarzschild, family, 8, jobs=2)
    assert [v.to_dict() for v in serial] == [v.to_dict() for v in parallel]


def test_family_spec_parsing():
    spec = parse_family_spec("cos_bump:phi=3,eps=0.05..0.1,k=2")
    assert (spec.phi_lo, spec.phi_hi, spec.eps_lo, spec.k_max) == (3.0, 3.0, 0.05, 2)
    with pytest.raises(DomainError):
        parse_family_spec("ellipse:")
    with pytest.raises(DomainError):
        parse_family_spec("cos_bump:colour=red")
    with pytest.raises(DomainError):
        isoperimetric_sweep(EUCLID, "cos_bump:", 0)
