"""Checks of the Minkowski-type inequality, the monotone quantity G(t) and
the weighted isoperimetric inequality, each reported as a Verdict."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PreconditionViolation
from .flows import FlowTrace
from .profiles import volume_exact, xi1_exact, xi_exact
from .surface import GraphSurface, area, cos_bump, quermassintegral, radial_sphere, weighted_enclosed_volume
from .warped_space import WarpedSpace, parse_space_spec, space_spec_string

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"

MINKOWSKI_RTOL = 1e-6
EQUALITY_UMB = 1e-6
MONOTONE_SLACK = 1e-5
LIMIT_TOL = 1e-4
LIMIT_UMB = 1e-3
SWEEP_TOL = 1e-8


@dataclass(frozen=True)
class Verdict:
    name: str
    residual: float
    tolerance: float
    passed: bool
    context: dict = field(default_factory=dict)
    status: str = ""

    def __post_init__(self):
        if not self.status:
            object.__setattr__(self, "status", PASS if self.passed else FAIL)

    @classmethod
    def judge(cls, name, residual, tolerance, context=None) -> "Verdict":
        residual = float(residual)
        return cls(name, residual, float(tolerance), bool(residual >= -tolerance), dict(context or {}))

    @classmethod
    def inconclusive(cls, name, tolerance, context=None) -> "Verdict":
        return cls(name, math.nan, float(tolerance), False, dict(context or {}), INCONCLUSIVE)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "context": self.context,
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Verdict":
        residual = data["residual"]
        return cls(
            name=data["name"],
            residual=math.nan if residual is None else float(residual),
            tolerance=float(data["tolerance"]),
            passed=bool(data["pass"]),
            context=dict(data.get("context", {})),
            status=data.get("status", ""),
        )


# ------------------------------------------------------------- Minkowski
def check_minkowski(surface: GraphSurface) -> Verdict:
    """W(S) - xi(|S|) >= 0, with equality detection on coordinate spheres."""
    g = surface.geometry()
    h_min = float(np.min(g.H))
    if h_min < -1e-10:
        raise PreconditionViolation(f"surface is not weakly mean convex (min H = {h_min:.3g})")
    space = surface.space
    size = area(surface)
    w = quermassintegral(surface)
    xi = float(xi_exact(space, size))
    residual = w - xi
    tol = MINKOWSKI_RTOL * (1.0 + abs(w))
    umb = float(np.max(g.umb_dev))
    spread = float(np.max(np.abs(g.kappa_prof - g.kappa_rot)))
    equality = None
    if abs(residual) <= tol:
        if umb <= EQUALITY_UMB:
            equality = "radial_sphere"
        elif space.kind in ("euclidean", "hyperbolic") and spread <= EQUALITY_UMB:
            equality = "geodesic_sphere"
    context = {
        "space": space_spec_string(space),
        "grid": surface.count,
        "area": size,
        "W": w,
        "xi": xi,
        "H_min": h_min,
        "umb_dev_max": umb,
        "equality": equality,
    }
    return Verdict.judge("minkowski", residual, tol, context)


# -------------------------------------------------------------- G checks
def check_monotone_G(trace: FlowTrace, slack: float = MONOTONE_SLACK) -> Verdict:
    """Largest increase of G per unit time must not exceed ``slack``."""
    t = trace["t"]
    G = trace["G"]
    if len(t) < 2:
        raise DomainError("trace needs at least two samples")
    rate = np.diff(G) / np.diff(t)
    k = int(np.argmax(rate))
    context = {"samples": len(t), "worst_interval": [float(t[k]), float(t[k + 1])], "G0": float(G[0])}
    return Verdict.judge("monotone_G", -float(rate[k]), slack, context)


def check_limit_G(trace: FlowTrace, tolerance: float = LIMIT_TOL, umb_limit: float = LIMIT_UMB) -> Verdict:
    """G(t_end) >= -tolerance, provided the flow has become nearly umbilic."""
    t_end = float(trace["t"][-1])
    umb = float(trace["umb_dev_max"][-1])
    g_end = float(trace["G"][-1])
    context = {"t_end": t_end, "umb_dev_end": umb, "G_end": g_end}
    if not umb <= umb_limit:
        context["reason"] = f"umb_dev_max(t_end) = {umb:.3g} exceeds {umb_limit}"
        return Verdict.inconclusive("limit_G", tolerance, context)
    return Verdict.judge("limit_G", g_end, tolerance, context)


# ------------------------------------------------------------ asymptotics
@dataclass(frozen=True)
class RateRecord:
    umb_slope: float
    umb_predicted: float | None
    H_terminal_dev: float | None
    phi_h_slope: float | None
    window: tuple
    degenerate: bool
    unreliable: bool


def _log_slope(t: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(t, np.log(y), 1)[0])


def fit_asymptotics(trace: FlowTrace, n: int, kappa: float) -> RateRecord:
    """Log-linear fits over the final half of the trace."""
    t = trace["t"]
    if np.count_nonzero(t > 1.0) < 20:
        raise DomainError("rate fits need at least 20 samples past t = 1")
    half = len(t) // 2
    tt = t[half:]
    umb = trace["umb_dev_max"][half:]
    degenerate = bool(np.max(umb) <= 1e-12)
    rise = np.diff(umb)
    unreliable = bool(np.any(rise > 1e-9 * np.maximum(umb[:-1], 1e-300))) and not degenerate
    slope = math.nan if degenerate else _log_slope(tt, umb)
    H_dev = None
    phi_slope = None
    if kappa > 0:
        target = n * math.sqrt(kappa)
        H_dev = float(max(abs(trace["H_max"][-1] - target), abs(trace["H_min"][-1] - target)))
    elif trace.phi_h_dev:
        dev = np.asarray(trace.phi_h_dev[half:])
        phi_slope = math.nan if np.max(dev) <= 1e-12 else _log_slope(tt, np.maximum(dev, 1e-300))
    return RateRecord(
        umb_slope=slope,
        umb_predicted=-2.0 / n if kappa > 0 else None,
        H_terminal_dev=H_dev,
        phi_h_slope=phi_slope,
        window=(float(tt[0]), float(tt[-1])),
        degenerate=degenerate,
        unreliable=unreliable,
    )


# --------------------------------------------------- isoperimetric sweep
@dataclass(frozen=True)
class FamilySpec:
    """cos_bump competitors: phi(r0) uniform in [phi_lo, phi_hi], eps uniform in
    [eps_lo, eps_hi], k uniform in 1..k_max; every ``radial_every``-th member is a
    coordinate sphere."""

    phi_lo: float = 2.5
    phi_hi: float = 4.0
    eps_lo: float = 0.01
    eps_hi: float = 0.15
    k_max: int = 4
    grid: int = 257
    radial_every: int = 10
    seed: int = 0


def parse_family_spec(text: str) -> FamilySpec:
    """``cos_bump:phi=2.5..4,eps=0.01..0.15,k=4,grid=257,radial_every=10,seed=0``."""
    kind, _, rest = text.strip().partition(":")
    if kind != "cos_bump":
        raise DomainError(f"unknown family {kind!r}; only cos_bump is supported")
    values = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise DomainError(f"malformed family item {item!r}")
        values[key.strip()] = value.strip()

    def span(name, lo, hi):
        if name not in values:
            return lo, hi
        a, sep, b = values.pop(name).partition("..")
        return (float(a), float(b)) if sep else (float(a), float(a))

    phi_lo, phi_hi = span("phi", FamilySpec.phi_lo, FamilySpec.phi_hi)
    eps_lo, eps_hi = span("eps", FamilySpec.eps_lo, FamilySpec.eps_hi)
    spec = FamilySpec(
        phi_lo=phi_lo, phi_hi=phi_hi, eps_lo=eps_lo, eps_hi=eps_hi,
        k_max=int(values.pop("k", FamilySpec.k_max)),
        grid=int(values.pop("grid", FamilySpec.grid)),
        radial_every=int(values.pop("radial_every", FamilySpec.radial_every)),
        seed=int(values.pop("seed", FamilySpec.seed)),
    )
    if values:
        raise DomainError(f"unknown family keys {sorted(values)}")
    return spec


def _members(family: FamilySpec, count: int) -> list[dict]:
    rng = np.random.default_rng(family.seed)
    out = []
    for i in range(count):
        phi0 = float(rng.uniform(family.phi_lo, family.phi_hi))
        eps = float(rng.uniform(family.eps_lo, family.eps_hi))
        k = int(rng.integers(1, family.k_max + 1))
        if family.radial_every > 0 and i % family.radial_every == 0:
            eps = 0.0
        out.append({"index": i, "phi0": phi0, "eps": eps, "k": k})
    return out


def _sweep_one(space: WarpedSpace, member: dict, grid: int) -> Verdict:
    r0 = float(space.r_of_phi(member["phi0"]))
    if member["eps"] == 0.0:
        surface = radial_sphere(space, r0, grid)
    else:
        surface = cos_bump(space, r0, member["eps"], member["k"], grid)
    size = area(surface)
    weighted = weighted_enclosed_volume(surface, "weighted_iso")
    volume = weighted_enclosed_volume(surface, "one")
    margin_weighted = float(xi1_exact(space, size)) - weighted
    margin_volume = float(volume_exact(space, size)) - volume
    context = dict(member, area=size, weighted_volume=weighted, volume=volume,
                   margin_weighted=margin_weighted, margin_volume=margin_volume)
    return Verdict.judge("isoperimetric", min(margin_weighted, margin_volume), SWEEP_TOL, context)


def _sweep_worker(args):
    spec, member, grid = args
    return _sweep_one(parse_space_spec(spec), member, grid)


def isoperimetric_sweep(space: WarpedSpace, family: FamilySpec | str, count: int, jobs: int = 1) -> list[Verdict]:
    """Weighted and plain isoperimetric margins over a seeded cos_bump family."""
    if isinstance(family, str):
        family = parse_family_spec(family)
    if count < 1:
        raise DomainError("count must be positive")
    members = _members(family, count)
    if jobs > 1 and (space.kind != "custom" or "file" in space.params):
        spec = space_spec_string(space)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_worker, [(spec, m, family.grid) for m in members]))
    return [_sweep_one(space, m, family.grid) for m in members]


__all__ = [
    "Verdict", "check_minkowski", "check_monotone_G", "check_limit_G", "fit_asymptotics", "RateRecord",
    "FamilySpec", "parse_family_spec", "isoperimetric_sweep", "PASS", "FAIL", "INCONCLUSIVE",
]
