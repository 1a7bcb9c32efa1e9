"""Axisymmetric star-shaped hypersurfaces as radial graphs r(theta) over S^n.

The polar angle grid is uniform on [0, pi] with an odd node count so that
composite Simpson applies.  The profile is extended across both poles by even
reflection, which builds r_theta = 0 at the poles into the stencils.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DomainError, MalformedProfile
from .numerics import product_simpson_weights, sphere_area
from .warped_space import WarpedSpace


@dataclass(frozen=True)
class PointGeometry:
    """Local geometry at one node (v is the graph gradient factor, u the support function)."""

    v: float
    u: float
    H: float
    kappa_prof: float
    kappa_rot: float
    umb_dev: float


@dataclass(frozen=True)
class NodalGeometry:
    """Per-node arrays of the same quantities as PointGeometry plus the warp."""

    r_theta: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    v: np.ndarray
    u: np.ndarray
    H: np.ndarray
    kappa_prof: np.ndarray
    kappa_rot: np.ndarray
    umb_dev: np.ndarray


def uniform_theta(count: int) -> np.ndarray:
    if count < 5 or count % 2 == 0:
        raise MalformedProfile(f"node count must be odd and >= 5, got {count}")
    return np.linspace(0.0, np.pi, count)


@dataclass(frozen=True, eq=False)
class GraphSurface:
    space: WarpedSpace
    theta: np.ndarray
    radii: np.ndarray
    _angular: dict = field(default_factory=dict, repr=False)
    _geo: list = field(default_factory=list, repr=False)

    @property
    def count(self) -> int:
        return len(self.theta)

    @property
    def h(self) -> float:
        return float(self.theta[1] - self.theta[0])

    def angular(self) -> dict:
        """Quadrature weights for sin^(n-1) d theta, cot(theta), and omega_{n-1}."""
        if not self._angular:
            n = self.space.n
            sin = np.sin(self.theta)
            sin[0] = sin[-1] = 0.0
            with np.errstate(divide="ignore"):
                cot = np.cos(self.theta) / np.where(sin > 0, sin, 1.0)
            cot[0] = cot[-1] = 0.0
            self._angular.update(
                weights=product_simpson_weights(self.count, n - 1), cot=cot,
                omega_base=sphere_area(n - 1),
            )
        return self._angular

    def geometry(self) -> NodalGeometry:
        """Nodal geometry arrays (cached)."""
        if self._geo:
            return self._geo[0]
        geo = nodal_geometry(self.space, self.radii, self.h, self.angular()["cot"])
        self._geo.append(geo)
        return geo

    def integrate(self, values) -> float:
        """Integral over the surface of nodal ``values`` against d mu."""
        g = self.geometry()
        ang = self.angular()
        n = self.space.n
        return float(ang["omega_base"] * np.sum(ang["weights"] * values * g.phi**n * g.v))

    def with_radii(self, radii) -> "GraphSurface":
        return from_profile(self.space, self.theta, radii, check_poles=False)


def nodal_geometry(space: WarpedSpace, radii: np.ndarray, h: float, cot: np.ndarray) -> NodalGeometry:
    radii = np.ascontiguousarray(radii, dtype=float)
    phi, dphi = space.phi_dphi(radii)
    rt, v, H, kp, kr = _kernels.graph_kernel(radii, phi, dphi, h, float(space.n), cot)
    ref = dphi / phi
    umb = np.maximum(np.abs(kp - ref), np.abs(kr - ref))
    return NodalGeometry(
        r_theta=rt, phi=phi, dphi=dphi, v=v, u=phi / v, H=H,
        kappa_prof=kp, kappa_rot=kr, umb_dev=umb,
    )


def _check_grid(theta: np.ndarray) -> None:
    count = len(theta)
    if count < 5 or count % 2 == 0:
        raise MalformedProfile(f"node count must be odd and >= 5, got {count}")
    if theta[0] != 0.0 or abs(theta[-1] - np.pi) > 1e-12:
        raise MalformedProfile("theta nodes must run from 0 to pi")
    step = np.diff(theta)
    if np.any(step <= 0):
        raise MalformedProfile("theta nodes must be strictly increasing")
    if np.max(np.abs(step - np.pi / (count - 1))) > 1e-9 * np.pi / (count - 1):
        raise MalformedProfile("theta nodes must be equispaced")


def _check_poles(radii: np.ndarray, h: float) -> None:
    second = np.abs(np.diff(radii, 2))
    tol = 2.0 * float(np.max(second)) + 1e-12 * float(np.max(np.abs(radii)))
    for a, b, c in ((radii[0], radii[1], radii[2]), (radii[-1], radii[-2], radii[-3])):
        # one-sided slope; O(h^3) for a profile that is even across the pole
        slope = (-3.0 * a + 4.0 * b - c) / (2.0 * h)
        if abs(slope) * h > tol:
            raise MalformedProfile(f"profile is not smooth at a pole (one-sided slope {slope:.3g})")


def from_profile(space: WarpedSpace, theta_nodes, radii, check_poles: bool = True) -> GraphSurface:
    theta = np.asarray(theta_nodes, dtype=float)
    radii = np.array(radii, dtype=float)
    if theta.shape != radii.shape or theta.ndim != 1:
        raise MalformedProfile("theta and radii must be 1-D arrays of equal length")
    _check_grid(theta)
    theta = np.linspace(0.0, np.pi, len(theta))
    if not np.all(np.isfinite(radii)):
        raise MalformedProfile("radii must be finite")
    if np.any(radii <= space.a):
        raise DomainError(f"profile touches the horizon r = {space.a}")
    if np.any(radii > space.r_max):
        raise DomainError(f"profile exceeds the tabulated range r <= {space.r_max}")
    if check_poles:
        _check_poles(radii, theta[1] - theta[0])
    surface = GraphSurface(space=space, theta=theta, radii=radii)
    if np.any(surface.geometry().u <= 0):
        raise MalformedProfile("support function must be positive")
    return surface


def radial_sphere(space: WarpedSpace, r: float, count: int = 257) -> GraphSurface:
    if not r > space.a:
        raise DomainError(f"radial sphere radius {r} must exceed the horizon {space.a}")
    theta = uniform_theta(count)
    return from_profile(space, theta, np.full(count, float(r)))


def cos_bump(space: WarpedSpace, r0: float, eps: float, k: int = 2, count: int = 257) -> GraphSurface:
    """r(theta) = r0 (1 + eps cos(k theta))."""
    theta = uniform_theta(count)
    return from_profile(space, theta, r0 * (1.0 + eps * np.cos(k * theta)))


def offcenter_sphere(space: WarpedSpace, offset: float, radius: float, count: int = 257) -> GraphSurface:
    """Geodesic sphere whose center sits at distance ``offset`` along the axis.

    Available for the flat and hyperbolic space forms only.
    """
    theta = uniform_theta(count)
    if space.kind == "euclidean":
        if abs(offset) >= radius:
            raise DomainError("the origin must lie inside the sphere")
        r = offset * np.cos(theta) + np.sqrt(radius**2 - (offset * np.sin(theta)) ** 2)
    elif space.kind == "hyperbolic":
        if abs(offset) >= radius:
            raise DomainError("the origin must lie inside the sphere")
        # cosh(dist) = cosh r cosh d - sinh r sinh d cos(theta) = cosh(radius)
        A = np.cosh(offset)
        B = np.sinh(offset) * np.cos(theta)
        norm = np.sqrt(A * A - B * B)
        r = np.arctanh(B / A) + np.arccosh(np.cosh(radius) / norm)
    else:
        raise DomainError("off-center geodesic spheres need a space form")
    return from_profile(space, theta, r)


def area(surface: GraphSurface) -> float:
    return surface.integrate(1.0)


def weighted_enclosed_volume(surface: GraphSurface, weight_id="one") -> float:
    """Integral of weight(r) dv over the region between the horizon and the surface."""
    ang = surface.angular()
    inner = surface.space.radial_integral(weight_id, surface.radii)
    return float(ang["omega_base"] * np.sum(ang["weights"] * inner))


def total_mean_curvature(surface: GraphSurface, weight=None) -> float:
    g = surface.geometry()
    return surface.integrate(g.H if weight is None else g.H * weight)


def quermassintegral(surface: GraphSurface) -> float:
    """Integral of H over the surface plus integral of Ric(d_r, d_r) over the enclosed region."""
    return total_mean_curvature(surface) + weighted_enclosed_volume(surface, "ricci_radial")


def geometry_at(surface: GraphSurface, node_index: int) -> PointGeometry:
    g = surface.geometry()
    i = int(node_index)
    if not -surface.count <= i < surface.count:
        raise IndexError(f"node {node_index} out of range")
    return PointGeometry(
        v=float(g.v[i]), u=float(g.u[i]), H=float(g.H[i]),
        kappa_prof=float(g.kappa_prof[i]), kappa_rot=float(g.kappa_rot[i]),
        umb_dev=float(g.umb_dev[i]),
    )


def bump(theta: np.ndarray, center: float, width: float) -> np.ndarray:
    """Smooth compactly supported ring bump in the polar angle.

    The support must avoid the poles unless the bump is centered on one.
    """
    if width <= 0:
        raise DomainError("bump width must be positive")
    on_pole = center == 0.0 or center == np.pi
    if not on_pole and (center - width <= 0.0 or center + width >= np.pi):
        raise DomainError("bump support must avoid the poles unless centered on one")
    x = (theta - center) / width
    out = np.zeros_like(theta)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
    return out


def _richardson_oracle(surface: GraphSurface, psi: np.ndarray, eps: float) -> float:
    v = surface.geometry().v
    move = psi * v

    def diff(e):
        plus = area(surface.with_radii(surface.radii + e * move))
        minus = area(surface.with_radii(surface.radii - e * move))
        return (plus - minus) / (2.0 * e)

    return (4.0 * diff(0.5 * eps) - diff(eps)) / 3.0


def first_variation_oracle(surface: GraphSurface, bump_center=None, bump_width=None, psi=None,
                           eps=None) -> float:
    """d/ds area(Sigma_s) for the normal variation with speed psi, by centered differences.

    Equals the integral of H psi d mu without ever evaluating a curvature
    formula.  ``psi`` may be supplied directly as nodal values; otherwise a
    bump (or psi = 1 when no center is given).
    """
    if psi is None:
        psi = np.ones(surface.count) if bump_center is None else bump(surface.theta, bump_center, bump_width)
    psi = np.asarray(psi, dtype=float)
    if eps is None:
        eps = 1e-3 * float(np.min(surface.radii - surface.space.a))
    reach = float(np.max(np.abs(psi) * surface.geometry().v)) * eps
    if np.min(surface.radii) - reach <= surface.space.a:
        raise DomainError("displaced surface crosses the horizon")
    return _richardson_oracle(surface, psi, eps)


# ------------------------------------------------------------- specs & IO
def parse_surface_spec(space: WarpedSpace, spec: str, count: int = 257) -> GraphSurface:
    """``sphere:r=..`` / ``sphere:phi=..``, ``cos_bump:r0=..,eps=..,k=..`` (or ``phi0=``), ``file:<path>``."""
    kind, _, rest = spec.strip().partition(":")
    if kind == "file":
        return read_profile_csv(space, rest)
    fields = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise MalformedProfile(f"malformed surface spec item {item!r}")
        try:
            fields[key.strip()] = float(value)
        except ValueError:
            raise MalformedProfile(f"non-numeric value in surface spec item {item!r}") from None
    need = {"sphere": ("r", "phi"), "cos_bump": ("r0", "phi0")}.get(kind)
    if need is not None and not any(k in fields for k in need):
        raise MalformedProfile(f"{kind} spec needs one of {need}")
    if kind == "sphere":
        r = fields["r"] if "r" in fields else space.r_of_phi(fields["phi"])
        return radial_sphere(space, r, count)
    if kind == "cos_bump":
        r0 = fields["r0"] if "r0" in fields else space.r_of_phi(fields["phi0"])
        k = fields.get("k", 2.0)
        if k != int(k) or k < 1:
            raise MalformedProfile("cos_bump frequency k must be a positive integer")
        return cos_bump(space, r0, fields.get("eps", 0.0), int(k), count)
    raise MalformedProfile(f"unknown surface kind {kind!r}")


def read_profile_csv(space: WarpedSpace, path) -> GraphSurface:
    with open(path) as fh:
        header = fh.readline().strip().replace(" ", "")
    if header != "theta,r":
        raise MalformedProfile(f"profile file must start with header 'theta,r', got {header!r}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return from_profile(space, data[:, 0], data[:, 1])


def write_profile_csv(surface: GraphSurface, path) -> None:
    with open(path, "w") as fh:
        fh.write("theta,r\n")
        for t, r in zip(surface.theta, surface.radii):
            fh.write(f"{t:.17g},{r:.17g}\n")


__all__ = [
    "GraphSurface", "PointGeometry", "NodalGeometry", "radial_sphere", "from_profile", "cos_bump",
    "offcenter_sphere", "geometry_at", "area", "weighted_enclosed_volume", "quermassintegral",
    "first_variation_oracle", "parse_surface_spec", "read_profile_csv", "write_profile_csv",
    "total_mean_curvature", "bump", "uniform_theta",
]
