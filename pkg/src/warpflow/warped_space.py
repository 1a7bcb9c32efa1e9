"""Rotationally symmetric warped cylinders M = [a, inf) x S^n, g = dr^2 + phi(r)^2 g_S.

Built-in warps are the flat and hyperbolic space forms and the
deSitter-Schwarzschild family (phi')^2 = 1 - m phi^(1-n) + kappa phi^2.
All derivatives of phi come from closed forms; a tabulation is only used to
fix the correspondence r <-> phi for the Schwarzschild family.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator
from scipy.optimize import brentq

from . import _kernels
from .errors import ConstructionError, DomainError, NumericalFailure
from .numerics import gauss_legendre, sphere_area

KINDS = ("euclidean", "hyperbolic", "ds_schwarzschild", "custom")
WEIGHTS = ("one", "ricci_radial", "weighted_iso", "phi_prime")

# spacing of the uniform r-table used for the Schwarzschild family, per unit length scale
_DSS_TABLE_DR = 0.005
# panel width of the cumulative radial integral tables
_RADIAL_PANEL = 0.02
_GL_ORDER = 16


@dataclass(frozen=True)
class RicciPair:
    """Ric = radial * dr^2 + tangential * g_S for the warped metric."""

    radial: float | np.ndarray
    tangential: float | np.ndarray


@dataclass(frozen=True)
class AssumptionReport:
    """Grid-based check of the three warp conditions (convexity, slope bound, decay)."""

    grid: dict
    margins: dict
    verdicts: dict
    q_profiles: dict
    monotonicity_violations: dict

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())


@dataclass(frozen=True, eq=False)
class WarpedSpace:
    n: int
    a: float
    kappa: float
    kind: str
    params: dict
    r_max: float
    omega_n: float
    _dss: dict | None = field(default=None, repr=False)
    _custom: Callable | None = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    # ------------------------------------------------------------------ warp
    def _check_range(self, r: np.ndarray) -> None:
        tol = 1e-12 * max(1.0, self.r_max)
        if np.any(~np.isfinite(r)) or np.any(r < self.a - tol) or np.any(r > self.r_max + tol):
            bad = r[(r < self.a - tol) | (r > self.r_max + tol) | ~np.isfinite(r)]
            raise DomainError(
                f"r={bad.ravel()[0]!r} outside tabulated range [{self.a}, {self.r_max}]"
            )

    def warp(self, r):
        """(phi, phi', phi'', phi''') at r (scalar or array)."""
        scalar = np.ndim(r) == 0
        r = np.atleast_1d(np.asarray(r, dtype=float))
        self._check_range(r)
        if self.kind == "euclidean":
            out = (r.copy(), np.ones_like(r), np.zeros_like(r), np.zeros_like(r))
        elif self.kind == "hyperbolic":
            sh, ch = np.sinh(r), np.cosh(r)
            out = (sh, ch, sh.copy(), ch.copy())
        elif self.kind == "ds_schwarzschild":
            s, ds = self.phi_dphi(r)
            n, m, k = self.n, self.params["m"], self.kappa
            d2 = 0.5 * (n - 1) * m * s ** (-n) + k * s
            d3 = (-0.5 * n * (n - 1) * m * s ** (-n - 1) + k) * ds
            out = (s, ds, d2, d3)
        else:
            out = tuple(np.asarray(x, dtype=float) * np.ones_like(r) for x in self._custom(r))
        if scalar:
            return tuple(float(x[0]) for x in out)
        return out

    def phi_dphi(self, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Fast path returning only phi and phi' for a 1-D array of radii."""
        r = np.asarray(r, dtype=float)
        if self.kind == "euclidean":
            return r.copy(), np.ones_like(r)
        if self.kind == "hyperbolic":
            return np.sinh(r), np.cosh(r)
        if self.kind == "ds_schwarzschild":
            t = self._dss
            flat = np.ascontiguousarray(r.ravel())
            phi, dphi = _kernels.dss_phi_dphi(
                flat, t["x0"], t["dx"], t["zeta"], t["dzeta"], t["d2zeta"], t["s0"],
                float(self.params["m"]), float(self.n), float(self.kappa),
            )
            if np.any(np.isnan(phi)):
                self._check_range(flat)
                raise DomainError("r outside tabulated range")
            return phi.reshape(r.shape), dphi.reshape(r.shape)
        phi, dphi, _, _ = self.warp(r)
        return phi, dphi

    @property
    def horizon_area(self) -> float:
        """|dM| = omega_n phi(a)^n (zero for a degenerate point horizon)."""
        return self.omega_n * float(self.warp(self.a)[0]) ** self.n

    # ------------------------------------------------------- r <-> phi map
    def r_of_phi(self, phi):
        """Radius of the coordinate sphere with warp value ``phi``."""
        scalar = np.ndim(phi) == 0
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        if self.kind == "euclidean":
            r = phi.copy()
        elif self.kind == "hyperbolic":
            r = np.arcsinh(phi)
        elif self.kind == "ds_schwarzschild":
            r = _dss_r_of_phi(self._dss, phi)
        else:
            lo, hi = self.warp(np.array([self.a, self.r_max]))[0]

            def solve(p):
                if not lo <= p <= hi:
                    raise DomainError(f"phi={p} outside warp range [{lo}, {hi}]")
                if p == lo:
                    return self.a
                return brentq(lambda x: self.warp(x)[0] - p, self.a, self.r_max, xtol=1e-15, rtol=1e-15)

            r = np.array([solve(p) for p in phi])
        self._check_range(r)
        return float(r[0]) if scalar else r

    def r_of_area(self, area):
        """Radius of the coordinate sphere with the given area."""
        area = np.asarray(area, dtype=float)
        return self.r_of_phi((area / self.omega_n) ** (1.0 / self.n))

    # ------------------------------------------------------ radial integrals
    def integrand(self, weight, r: np.ndarray) -> np.ndarray:
        """weight(r) * phi(r)^n, written to stay finite at a point horizon."""
        phi, d1, d2, _ = self.warp(r)
        n = self.n
        if weight == "one":
            return phi**n
        if weight == "weighted_iso":
            return d2 * phi ** (n - 1)
        if weight == "ricci_radial":
            return -n * d2 * phi ** (n - 1)
        if weight == "phi_prime":
            return d1 * phi**n
        if callable(weight):
            return np.asarray(weight(r), dtype=float) * phi**n
        raise ConstructionError(f"unknown weight {weight!r}; expected one of {WEIGHTS} or a callable")

    def _radial_table(self, weight):
        key = weight
        table = self._cache.get(("radial", key))
        if table is not None:
            return table
        count = max(1, int(math.ceil((self.r_max - self.a) / _RADIAL_PANEL)))
        edges = np.linspace(self.a, self.r_max, count + 1)
        width = np.diff(edges)
        x16, w16 = gauss_legendre(_GL_ORDER)
        x8, w8 = gauss_legendre(_GL_ORDER // 2)
        pts16 = edges[:-1, None] + width[:, None] * x16[None, :]
        vals16 = self.integrand(weight, pts16.ravel()).reshape(pts16.shape)
        panel = (vals16 @ w16) * width
        # error estimate on the panels touching the horizon
        head = min(4, count)
        pts8 = edges[:head, None] + width[:head, None] * x8[None, :]
        vals8 = self.integrand(weight, pts8.ravel()).reshape(pts8.shape)
        panel8 = (vals8 @ w8) * width[:head]
        scale = np.abs(panel[:head]) + 1e-300
        if not np.all(np.isfinite(panel)) or np.any(np.abs(panel8 - panel[:head]) > 1e-8 * scale + 1e-14):
            raise NumericalFailure(f"radial integral of weight {weight!r} does not converge near the horizon")
        cumulative = np.concatenate([[0.0], np.cumsum(panel)])
        table = (edges, cumulative)
        self._cache[("radial", key)] = table
        return table

    def radial_integral(self, weight, r):
        """Integral of weight(s) phi(s)^n ds from the horizon a up to r."""
        scalar = np.ndim(r) == 0
        r = np.atleast_1d(np.asarray(r, dtype=float))
        self._check_range(r)
        edges, cumulative = self._radial_table(weight)
        r = np.clip(r, self.a, self.r_max)
        k = np.clip(np.searchsorted(edges, r, side="right") - 1, 0, len(edges) - 2)
        x, w = gauss_legendre(_GL_ORDER)
        width = r - edges[k]
        pts = edges[k][:, None] + width[:, None] * x[None, :]
        vals = self.integrand(weight, pts.ravel()).reshape(pts.shape)
        out = cumulative[k] + (vals @ w) * width
        return float(out[0]) if scalar else out


# ---------------------------------------------------------------- builders
def _dss_f(s, m, n, kappa):
    return 1.0 - m * s ** (1.0 - n) + kappa * s * s


def _dss_root(m: float, n: int, kappa: float) -> float:
    hi = m ** (1.0 / (n - 1))
    lo = hi
    while _dss_f(lo, m, n, kappa) >= 0.0:
        lo *= 0.5
        if lo < 1e-300:
            raise ConstructionError("no positive root of 1 - m s^(1-n) + kappa s^2")
    s0 = brentq(_dss_f, lo, hi, args=(m, n, kappa), xtol=1e-16, rtol=1e-15, maxiter=500)
    for _ in range(3):
        fp = (n - 1) * m * s0 ** (-n) + 2.0 * kappa * s0
        s0 -= _dss_f(s0, m, n, kappa) / fp
    return float(s0)


def _dss_g(zeta, s0, m, n, kappa):
    """dr/dzeta for s = s0 (1 + zeta^2); regular at zeta = 0."""
    zeta = np.ascontiguousarray(zeta, dtype=float)
    F, _ = _kernels.dss_reduced_array(zeta.ravel() ** 2, s0, float(m), float(n), float(kappa))
    return (2.0 * s0 / np.sqrt(F)).reshape(zeta.shape)


def _dss_g_scalar(zeta, s0, m, n, kappa):
    F, _ = _kernels.dss_reduced(zeta * zeta, s0, float(m), float(n), float(kappa))
    return 2.0 * s0 / math.sqrt(F)


def _dss_tabulate(s0, m, n, kappa, r_max):
    x, w = gauss_legendre(_GL_ORDER)
    # coarse zeta grid with dr ~ 0.05 per cell; exact cell integrals follow below
    zetas = [0.0]
    zeta = 0.0
    target = 0.05
    r_acc = 0.0
    while r_acc < r_max + 1.0:
        g = _dss_g_scalar(zeta, s0, m, n, kappa)
        step = min(target / g, max(0.05, zeta))
        r_acc += step * _dss_g_scalar(zeta + 0.5 * step, s0, m, n, kappa)
        zeta += step
        zetas.append(zeta)
        if len(zetas) > 10_000_000:
            raise NumericalFailure("deSitter-Schwarzschild tabulation did not reach r_max")
    zetas = np.array(zetas)
    widths = np.diff(zetas)
    pts = zetas[:-1, None] + widths[:, None] * x[None, :]
    cells = (_dss_g(pts.ravel(), s0, m, n, kappa).reshape(pts.shape) @ w) * widths
    big_r = np.concatenate([[0.0], np.cumsum(cells)])
    if np.any(np.diff(big_r) <= 0):
        raise NumericalFailure("non-monotone r(phi) tabulation")
    return zetas, big_r


def _dss_R(tab, zeta):
    """r as a function of zeta via cumulative table plus a Gauss panel."""
    zetas, big_r = tab["zetas"], tab["R"]
    k = np.clip(np.searchsorted(zetas, zeta, side="right") - 1, 0, len(zetas) - 2)
    x, w = gauss_legendre(_GL_ORDER)
    width = zeta - zetas[k]
    pts = zetas[k][:, None] + width[:, None] * x[None, :]
    vals = _dss_g(pts.ravel(), tab["s0"], tab["m"], tab["n"], tab["kappa"]).reshape(pts.shape)
    return big_r[k] + (vals @ w) * width


def _dss_r_of_phi(tab, phi):
    s0 = tab["s0"]
    if np.any(phi < s0 * (1.0 - 1e-14)):
        raise DomainError(f"phi below the horizon value s0={s0}")
    zeta = np.sqrt(np.maximum(phi - s0, 0.0) / s0)
    return _dss_R(tab, zeta)


@lru_cache(maxsize=32)
def _build_dss(n: int, m: float, kappa: float, r_max: float | None):
    if not (m > 0 and kappa >= 0):
        raise ConstructionError(f"deSitter-Schwarzschild needs m > 0 and kappa >= 0 (m={m}, kappa={kappa})")
    s0 = _dss_root(m, n, kappa)
    if r_max is None:
        r_max = 100.0 * max(1.0, s0)
    zetas, big_r = _dss_tabulate(s0, m, n, kappa, r_max)
    tab = {"zetas": zetas, "R": big_r, "s0": s0, "m": m, "n": n, "kappa": kappa}
    # the interpolation error scales with (dr / length)^6
    length = min(s0, 1.0 / math.sqrt(kappa)) if kappa > 0 else s0
    count = int(math.ceil(r_max / (_DSS_TABLE_DR * length)))
    r_nodes = np.linspace(0.0, r_max, count + 1)
    # invert R(zeta) = r by Newton from a linear guess
    zeta = np.interp(r_nodes, big_r, zetas)
    scale = np.maximum(1.0, r_nodes)
    best = np.inf
    for _ in range(16):
        resid = _dss_R(tab, zeta) - r_nodes
        worst = float(np.max(np.abs(resid) / scale))
        if worst < 1e-15 or worst >= best:
            break
        best = worst
        zeta = np.maximum(zeta - resid / _dss_g(zeta, s0, m, n, kappa), 0.0)
    if worst > 1e-14:
        raise NumericalFailure("Newton inversion of r(phi) did not converge")
    if np.any(np.diff(zeta) <= 0):
        raise NumericalFailure("non-monotone phi tabulation")
    # zeta' = sqrt(F) / (2 s0), zeta'' = zeta F_z / (4 s0^2)
    F, dF = _kernels.dss_reduced_array(zeta * zeta, s0, float(m), float(n), float(kappa))
    tab.update(
        x0=0.0,
        dx=float(r_nodes[1] - r_nodes[0]),
        zeta=zeta,
        dzeta=np.sqrt(F) / (2.0 * s0),
        d2zeta=zeta * dF / (4.0 * s0 * s0),
    )
    return tab, float(r_max), s0


def _custom_from_file(path: str | Path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] < 5:
        raise ConstructionError("custom warp file needs columns r, phi, dphi, d2phi, d3phi")
    r, p0, p1, p2, p3 = data[:, :5].T
    if np.any(np.diff(r) <= 0):
        raise ConstructionError("custom warp file must have strictly increasing r")
    s0 = CubicHermiteSpline(r, p0, p1)
    s1 = CubicHermiteSpline(r, p1, p2)
    s2 = CubicHermiteSpline(r, p2, p3)
    s3 = PchipInterpolator(r, p3)

    def evaluate(x):
        return s0(x), s1(x), s2(x), s3(x)

    return evaluate, float(r[0]), float(r[-1])


def make_space(kind: str, n: int, params: dict | None = None) -> WarpedSpace:
    """Construct a warped cylinder.

    ``params`` by kind: ds_schwarzschild needs ``m`` and optionally ``kappa``;
    custom needs either ``warp`` (callable r -> (phi, phi', phi'', phi''')) with
    ``a`` and ``r_max``, or ``file``.  Any kind accepts ``r_max``.
    """
    params = dict(params or {})
    if kind == "dss":
        kind = "ds_schwarzschild"
    if kind not in KINDS:
        raise ConstructionError(f"unknown space kind {kind!r}")
    n = int(n)
    if n < 2:
        raise ConstructionError(f"sphere dimension must be >= 2, got {n}")
    omega = sphere_area(n)
    r_max = params.pop("r_max", None)
    if kind in ("euclidean", "hyperbolic"):
        return WarpedSpace(
            n=n, a=0.0, kappa=0.0 if kind == "euclidean" else 1.0, kind=kind,
            params=params, r_max=float(r_max or 100.0), omega_n=omega,
        )
    if kind == "ds_schwarzschild":
        m = float(params.get("m", 0.0))
        kappa = float(params.get("kappa", 0.0))
        tab, r_max, s0 = _build_dss(n, m, kappa, r_max)
        return WarpedSpace(
            n=n, a=0.0, kappa=kappa, kind=kind,
            params={"m": m, "kappa": kappa, "s0": s0}, r_max=r_max, omega_n=omega, _dss=tab,
        )
    # custom
    if "file" in params:
        warp, a, hi = _custom_from_file(params["file"])
        r_max = min(float(r_max), hi) if r_max is not None else hi
    elif "warp" in params:
        warp = params["warp"]
        a = float(params.get("a", 0.0))
        if r_max is None:
            raise ConstructionError("custom warp callable needs r_max")
    else:
        raise ConstructionError("custom space needs 'warp' or 'file'")
    kappa = float(params.get("kappa", 0.0))
    a = float(params.get("a", a))
    meta = {k: v for k, v in params.items() if k != "warp"}
    return WarpedSpace(
        n=n, a=a, kappa=kappa, kind="custom", params=meta,
        r_max=float(r_max), omega_n=omega, _custom=warp,
    )


def parse_space_spec(spec: str) -> WarpedSpace:
    """Parse ``euclidean:n=2``, ``hyperbolic:n=2``, ``dss:n=2,m=2,kappa=0`` or ``custom:file=...``."""
    kind, _, rest = spec.strip().partition(":")
    fields = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ConstructionError(f"malformed space spec item {item!r}")
        fields[key.strip()] = value.strip()
    try:
        n = int(fields.pop("n", 2))
        params = {}
        for key, value in fields.items():
            params[key] = value if key == "file" else float(value)
    except ValueError as exc:
        raise ConstructionError(f"malformed space spec {spec!r}: {exc}") from None
    return make_space(kind, n, params)


def space_spec_string(space: WarpedSpace) -> str:
    if space.kind == "ds_schwarzschild":
        text = f"dss:n={space.n},m={space.params['m']:.17g},kappa={space.kappa:.17g}"
        default = 100.0 * max(1.0, space.params["s0"])
    elif space.kind == "custom":
        if "file" not in space.params:
            return f"custom:n={space.n}"
        text = f"custom:file={space.params['file']},n={space.n}"
        default = None
    else:
        text = f"{space.kind}:n={space.n}"
        default = 100.0
    if default is not None and space.r_max != default:
        text += f",r_max={space.r_max:.17g}"
    return text


# -------------------------------------------------------------- operations
def warp_eval(space: WarpedSpace, r):
    return space.warp(r)


def ricci(space: WarpedSpace, r) -> RicciPair:
    """Ricci tensor coefficients  -n phi''/phi dr^2 - [(n-1)(phi'^2-1) + phi phi''] g_S."""
    phi, d1, d2, _ = space.warp(r)
    n = space.n
    if np.any(np.asarray(phi) <= 0):
        raise DomainError("Ricci curvature undefined at a point horizon")
    radial = -n * d2 / phi
    tangential = -((n - 1) * (d1 * d1 - 1.0) + phi * d2)
    return RicciPair(radial, tangential)


def ricci_gap(space: WarpedSpace, r, u):
    """Ric(d_r, d_r) - Ric(nu, nu) for a unit normal with support function u."""
    phi, d1, d2, _ = space.warp(r)
    u = np.asarray(u, dtype=float)
    if np.any(u > phi * (1.0 + 1e-12)) or np.any(u <= 0):
        raise DomainError("support function must satisfy 0 < u <= phi(r)")
    ratio = np.minimum(u / phi, 1.0)
    out = (space.n - 1) * (d1 * d1 - phi * d2 - 1.0) / phi**2 * (1.0 - ratio * ratio)
    return float(out) if np.ndim(out) == 0 else out


def validate_assumptions(space: WarpedSpace, r_max: float, samples: int) -> AssumptionReport:
    """Sample the warp conditions on a uniform grid of (a, r_max]."""
    if samples < 2 or not r_max > space.a:
        raise DomainError("need samples >= 2 and r_max > a")
    r = space.a + (r_max - space.a) * np.arange(1, samples + 1) / samples
    phi, d1, d2, d3 = space.warp(r)
    k = space.kappa
    tol = 1e-10
    cond_i = (d2 - k * phi) / (1.0 + np.abs(d2) + k * phi)
    upper = 1.0 + k * phi * phi
    q1 = d1 * d1 / upper
    q2 = upper - d1 * d1
    q3 = 1.0 - d1 * d1 + phi * d2
    cond_ii_upper = q2 / upper
    cond_iii = -(d3 / phi - d2 * d1 / (phi * phi))
    margins = {
        "i": float(np.min(cond_i)),
        "ii_positive": float(np.min(d1)),
        "ii_upper": float(np.min(cond_ii_upper)),
        "iii": float(np.min(cond_iii)),
    }
    verdicts = {
        "i": margins["i"] >= -tol,
        "ii": margins["ii_positive"] > 0.0 and margins["ii_upper"] >= -tol,
        "iii": margins["iii"] >= -tol,
    }
    scale = 1e-12 * (upper + d1 * d1)
    violations = {
        "Q1_nondecreasing": int(np.sum(np.diff(q1) < -1e-12)),
        "Q2_nonincreasing": int(np.sum(np.diff(q2) > scale[1:])),
        "Q3_nonincreasing": int(np.sum(np.diff(q3) > scale[1:])),
    }
    return AssumptionReport(
        grid={"r_min": float(r[0]), "r_max": float(r[-1]), "samples": int(samples)},
        margins=margins,
        verdicts=verdicts,
        q_profiles={"r": r, "Q1": q1, "Q2": q2, "Q3": q3},
        monotonicity_violations=violations,
    )
