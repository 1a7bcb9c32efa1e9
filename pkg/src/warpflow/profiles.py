"""Area-indexed profiles of radial coordinate spheres.

Every column is a closed expression in r (or a cumulative radial integral),
so xi, xi1 and the volume equal the corresponding surface integrals on the
coordinate sphere {r} x S^n up to quadrature error.  Consumers evaluate the
columns as functions of the area |S(r)| = omega_n phi(r)^n.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionError, DomainError
from .numerics import MonotoneCubic
from .surface import GraphSurface, area, total_mean_curvature, weighted_enclosed_volume
from .warped_space import WarpedSpace

COLUMNS = ("r", "area", "volume", "xi1", "xi", "xi_eta")
MIN_SAMPLES = 16


@dataclass(frozen=True, eq=False)
class ProfileTable:
    """Columns sampled at radii uniform in r.

    Near a point horizon xi behaves like sqrt(area) and near a nondegenerate
    one like (area - area_h)^(3/2), so interpolation in the area loses accuracy
    in the first few intervals; start r_lo away from the horizon when lookups
    there matter.
    """

    space: WarpedSpace
    r: np.ndarray
    area: np.ndarray
    volume: np.ndarray
    xi1: np.ndarray
    xi: np.ndarray
    xi_eta: np.ndarray | None = None
    weight: str | None = None
    _eta: object = field(default=None, repr=False)
    _interp: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.r)

    @property
    def r_lo(self) -> float:
        return float(self.r[0])

    @property
    def r_hi(self) -> float:
        return float(self.r[-1])

    @property
    def area_range(self) -> tuple[float, float]:
        return float(self.area[0]), float(self.area[-1])

    def column(self, name: str) -> np.ndarray:
        if name not in COLUMNS or (name == "xi_eta" and self.xi_eta is None):
            raise DomainError(f"table has no column {name!r}")
        return getattr(self, name)

    def names(self) -> list[str]:
        return [c for c in COLUMNS if c != "xi_eta" or self.xi_eta is not None]

    def rows(self) -> np.ndarray:
        return np.column_stack([self.column(c) for c in self.names()])


def _eta_values(space: WarpedSpace, weight, r: np.ndarray) -> np.ndarray:
    phi = space.warp(r)[0]
    if callable(weight):
        return np.asarray(weight(r), dtype=float) * np.ones_like(r)
    with np.errstate(divide="ignore", invalid="ignore"):
        return space.integrand(weight, r) / phi**space.n


def _check_weight(space: WarpedSpace, weight, r: np.ndarray) -> None:
    eta = _eta_values(space, weight, r)
    keep = np.isfinite(eta)
    eta = eta[keep]
    if eta.size == 0 or np.any(eta <= 0):
        raise ConstructionError("weight must be positive on the table range")
    rise = np.diff(eta)
    if np.any(rise > 1e-12 * np.maximum(1.0, np.abs(eta[:-1]))):
        raise ConstructionError("weight must be nonincreasing in r")


def build_profile(space: WarpedSpace, r_lo: float, r_hi: float, samples: int = 512,
                  weight=None) -> ProfileTable:
    """Tabulate area, volume, xi1, xi (and xi_eta for ``weight``) at uniform radii."""
    if samples < MIN_SAMPLES:
        raise DomainError(f"need at least {MIN_SAMPLES} samples, got {samples}")
    if not space.a <= r_lo < r_hi <= space.r_max:
        raise DomainError(
            f"profile range [{r_lo}, {r_hi}] must satisfy {space.a} <= r_lo < r_hi <= {space.r_max}"
        )
    n, omega = space.n, space.omega_n
    r = np.linspace(r_lo, r_hi, int(samples))
    phi, dphi, _, _ = space.warp(r)
    iso = space.radial_integral("weighted_iso", r)
    xi_eta = None
    label = None
    if weight is not None:
        _check_weight(space, weight, r)
        xi_eta = omega * space.radial_integral(weight, r)
        label = weight if isinstance(weight, str) else getattr(weight, "__name__", "callable")
    return ProfileTable(
        space=space,
        r=r,
        area=omega * phi**n,
        volume=omega * space.radial_integral("one", r),
        xi1=omega * iso,
        xi=n * omega * (dphi * phi ** (n - 1) - iso),
        xi_eta=xi_eta,
        weight=label,
        _eta=weight,
    )


def _area_slopes(table: ProfileTable, name: str) -> np.ndarray:
    """Exact derivative of a column with respect to the area, node by node."""
    space = table.space
    n = space.n
    phi, d1, d2, _ = space.warp(table.r)
    with np.errstate(divide="ignore", invalid="ignore"):
        if name == "area":
            return np.ones_like(phi)
        if name == "r":
            return 1.0 / (n * space.omega_n * phi ** (n - 1) * d1)
        if name == "volume":
            return phi / (n * d1)
        if name == "xi1":
            return d2 / (n * d1)
        if name == "xi":
            return (n - 1) * d1 / phi
        eta = _eta_values(space, table._eta, table.r)
        return eta * phi / (n * d1)


def _interpolant(table: ProfileTable, name: str) -> MonotoneCubic:
    spline = table._interp.get(name)
    if spline is None:
        spline = MonotoneCubic(table.area, table.column(name), _area_slopes(table, name))
        table._interp[name] = spline
    return spline


def lookup(table: ProfileTable, column: str, area_value):
    """Monotone cubic interpolation of ``column`` in the area variable (never extrapolates)."""
    spline = _interpolant(table, column)
    return spline(area_value)


def xi_exact(space: WarpedSpace, area_value):
    """xi at a given area by inverting the area law instead of interpolating."""
    r = space.r_of_area(area_value)
    phi, dphi, _, _ = space.warp(r)
    n = space.n
    return n * space.omega_n * (dphi * phi ** (n - 1) - space.radial_integral("weighted_iso", r))


def xi1_exact(space: WarpedSpace, area_value):
    r = space.r_of_area(area_value)
    return space.omega_n * space.radial_integral("weighted_iso", r)


def volume_exact(space: WarpedSpace, area_value):
    r = space.r_of_area(area_value)
    return space.omega_n * space.radial_integral("one", r)


def _centered(values: np.ndarray, h: float) -> np.ndarray:
    """Sixth-order centered first derivative on interior nodes 3 .. len-4."""
    v = values
    return (-v[:-6] + 9.0 * v[1:-5] - 45.0 * v[2:-4] + 45.0 * v[4:-2] - 9.0 * v[5:-1] + v[6:]) / (60.0 * h)


def ode_residual(table: ProfileTable) -> float:
    """max |xi'(x) x - (n-1)/n (xi + n xi1)| / (1 + |xi|) over interior nodes.

    xi'(x) is the area derivative, formed as the ratio of centered
    r-differences of xi and of the area; the quotient stays smooth at a
    nondegenerate horizon where xi is not smooth as a function of x.  Near
    such a horizon d(area)/dr vanishes linearly, which costs one order, hence
    the wide stencil.
    """
    if len(table) < 64:
        raise DomainError(f"ode residual needs at least 64 rows, got {len(table)}")
    n = table.space.n
    h = float(table.r[1] - table.r[0])
    dxi = _centered(table.xi, h)
    dA = _centered(table.area, h)
    x = table.area[3:-3]
    xi = table.xi[3:-3]
    xi1 = table.xi1[3:-3]
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = dxi / dA
    ok = dA > 0
    lhs = x[ok] * slope[ok]
    rhs = (n - 1) / n * (xi[ok] + n * xi1[ok])
    return float(np.max(np.abs(lhs - rhs) / (1.0 + np.abs(xi[ok]))))


def bhw_quantity(surface: GraphSurface) -> float:
    """|S|^(-(n-1)/n) (int phi' H dmu - n(n+1) int_Omega phi' dv + n omega_n^(1/n) |dM|^((n-1)/n))."""
    space = surface.space
    n = space.n
    g = surface.geometry()
    size = area(surface)
    total = (
        total_mean_curvature(surface, weight=g.dphi)
        - n * (n + 1) * weighted_enclosed_volume(surface, "phi_prime")
        + n * space.omega_n ** (1.0 / n) * space.horizon_area ** ((n - 1) / n)
    )
    return float(size ** (-(n - 1) / n) * total)


def write_profile_table(table: ProfileTable, path) -> None:
    names = table.names()
    data = table.rows()
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in data:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


__all__ = [
    "ProfileTable", "build_profile", "lookup", "ode_residual", "bhw_quantity", "xi_exact",
    "xi1_exact", "volume_exact", "write_profile_table", "COLUMNS",
]
