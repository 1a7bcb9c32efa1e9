"""Inverse mean curvature flow and the mean-curvature-type flow for radial graphs.

Both flows move the graph r(theta) with dr/dt = v F, where F is the normal
speed: F = 1/H for IMCF and F = n phi' - u H for the mean-curvature-type
flow (GMCF).  Time stepping is classical RK4 on the nodal field with a
diffusion-limited step, rejected and halved when a guard rail trips.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import _kernels as K
from .errors import DomainError, NumericalFailure, PreconditionViolation, SpeedUndefined, StepCollapse
from .profiles import ProfileTable, bhw_quantity, build_profile, lookup
from .surface import (
    GraphSurface, area, parse_surface_spec, quermassintegral,
)
from .warped_space import WarpedSpace, parse_space_spec, space_spec_string

MODES = ("imcf", "gmcf")
H_FLOOR = 1e-8
V_MAX = 1e6
C_CFL = 0.2
MAX_HALVINGS = 40

TRACE_COLUMNS = ("t", "area", "W", "G", "H_min", "H_max", "umb_dev_max", "u_min", "r_min", "r_max")

_KIND_CODES = {"euclidean": K.KIND_EUCLIDEAN, "hyperbolic": K.KIND_HYPERBOLIC, "ds_schwarzschild": K.KIND_DSS}
_MODE_CODES = {"imcf": K.MODE_IMCF, "gmcf": K.MODE_GMCF}


@dataclass(frozen=True)
class FlowState:
    t: float
    surface: GraphSurface
    dt_last: float = 0.0


@dataclass
class FlowTrace:
    """Diagnostics sampled along a run, one list entry per sample."""

    columns: dict
    metadata: dict = field(default_factory=dict)
    # max |phi H - n phi'|, kept in memory for rate fits only
    phi_h_dev: list = field(default_factory=list)
    final: FlowState | None = None

    def __len__(self) -> int:
        return len(self.columns["t"])

    def __getitem__(self, name: str) -> np.ndarray:
        return np.asarray(self.columns[name], dtype=float)

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    def write_csv(self, path) -> None:
        names = self.names
        with open(path, "w") as fh:
            fh.write(",".join(names) + "\n")
            for k in range(len(self)):
                fh.write(",".join(f"{float(self.columns[c][k]):.17g}" for c in names) + "\n")

    def write_metadata(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.metadata, fh, sort_keys=True, indent=2)
            fh.write("\n")


def read_trace_csv(path) -> FlowTrace:
    with open(path) as fh:
        names = fh.readline().strip().split(",")
    required = list(TRACE_COLUMNS)
    if names[: len(required)] != required or names[len(required):] not in ([], ["Q_bhw"]):
        raise DomainError(f"unexpected trace header {','.join(names)!r}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return FlowTrace(columns={c: data[:, i].tolist() for i, c in enumerate(names)})


@dataclass(frozen=True)
class FlowConfig:
    space: WarpedSpace | str
    initial: GraphSurface | str
    mode: str = "imcf"
    grid: int = 257
    t_end: float = 1.0
    cadence: float = 0.1
    c_cfl: float = C_CFL
    h_floor: float = H_FLOOR
    v_max: float = V_MAX
    q_bhw: bool = False
    profile_rows: int = 2048
    max_steps: int = 5_000_000

    def resolve(self) -> tuple[WarpedSpace, GraphSurface]:
        space = parse_space_spec(self.space) if isinstance(self.space, str) else self.space
        if isinstance(self.initial, str):
            surface = parse_surface_spec(space, self.initial, self.grid)
        else:
            surface = self.initial
        return space, surface


# ---------------------------------------------------------------- speeds
def imcf_rhs(surface: GraphSurface, h_floor: float = H_FLOOR) -> np.ndarray:
    """dr/dt = v / H at every node."""
    g = surface.geometry()
    low = np.flatnonzero(~(g.H > h_floor))
    if low.size:
        i = int(low[0])
        raise SpeedUndefined(f"mean curvature {g.H[i]:.3g} at node {i} is not above {h_floor}",
                             node=i, value=float(g.H[i]))
    return g.v / g.H


def gmcf_rhs(surface: GraphSurface) -> np.ndarray:
    """dr/dt = v (n phi' - u H) at every node."""
    g = surface.geometry()
    return g.v * (surface.space.n * g.dphi - g.u * g.H)


def _rhs(surface: GraphSurface, mode: str, h_floor: float) -> np.ndarray:
    return imcf_rhs(surface, h_floor) if mode == "imcf" else gmcf_rhs(surface)


def diffusion_max(surface: GraphSurface, mode: str) -> float:
    """Largest coefficient of r_theta_theta in the linearized speed."""
    g = surface.geometry()
    if mode == "imcf":
        d = 1.0 / (g.phi**2 * g.H**2 * g.v**2)
    else:
        d = 1.0 / (g.phi * g.v**3)
    return float(np.max(d))


def stable_dt(surface: GraphSurface, mode: str, c_cfl: float = C_CFL) -> float:
    return c_cfl * surface.h**2 / diffusion_max(surface, mode)


# -------------------------------------------------------------- stepping
def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise DomainError(f"unknown flow mode {mode!r}; expected one of {MODES}")


def _tentative(surface: GraphSurface, radii: np.ndarray, v_max: float):
    """Surface for trial radii, or None when a guard rail is violated."""
    space = surface.space
    if not np.all(np.isfinite(radii)) or np.any(radii <= space.a):
        return None
    if np.any(radii > space.r_max):
        raise DomainError(f"flow left the tabulated range r <= {space.r_max}")
    trial = GraphSurface(space=space, theta=surface.theta, radii=radii)
    g = trial.geometry()
    if not (np.all(np.isfinite(g.H)) and np.max(g.v) <= v_max):
        return None
    return trial


def _rk4_python(surface, k1, dt, mode, h_floor, v_max):
    r = surface.radii
    stages = [k1]
    for c in (0.5, 0.5, 1.0):
        trial = _tentative(surface, r + c * dt * stages[-1], v_max)
        if trial is None:
            return None
        try:
            stages.append(_rhs(trial, mode, h_floor))
        except SpeedUndefined:
            return None
    k1, k2, k3, k4 = stages
    return _tentative(surface, r + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), v_max)


def advance(state: FlowState, mode: str, dt_target: float, c_cfl: float = C_CFL,
            h_floor: float = H_FLOOR, v_max: float = V_MAX) -> FlowState:
    """One accepted RK4 step of size at most ``dt_target``."""
    _check_mode(mode)
    if not dt_target > 0:
        raise DomainError("dt_target must be positive")
    surface = state.surface
    k1 = _rhs(surface, mode, h_floor)
    dt = min(dt_target, stable_dt(surface, mode, c_cfl))
    for _ in range(MAX_HALVINGS + 1):
        new = _rk4_python(surface, k1, dt, mode, h_floor, v_max)
        if new is not None:
            return FlowState(t=state.t + dt, surface=new, dt_last=dt)
        dt *= 0.5
    raise StepCollapse(f"step rejected {MAX_HALVINGS} times at t={state.t}")


def _compiled_args(space: WarpedSpace):
    code = _KIND_CODES.get(space.kind)
    if code is None:
        return None
    if code == K.KIND_DSS:
        t = space._dss
        return (code, t["x0"], t["dx"], t["zeta"], t["dzeta"], t["d2zeta"], t["s0"],
                float(space.params["m"]), float(space.n), float(space.kappa))
    empty = np.zeros(1)
    return (code, 0.0, 1.0, empty, empty, empty, 1.0, 0.0, float(space.n), float(space.kappa))


def _integrate(surface: GraphSurface, t: float, t_stop: float, mode: str, dt_target: float,
               c_cfl: float, h_floor: float, v_max: float, max_steps: int):
    """Advance to t_stop; returns (surface, t, accepted, rejected, dt_last)."""
    warp = _compiled_args(surface.space)
    if warp is None:
        state = FlowState(t=t, surface=surface)
        steps = 0
        while state.t < t_stop:
            remaining = t_stop - state.t
            state = advance(state, mode, min(dt_target, remaining), c_cfl, h_floor, v_max)
            if t_stop - state.t < 1e-12 * max(1.0, abs(t_stop)):
                state = FlowState(t=t_stop, surface=state.surface, dt_last=state.dt_last)
            steps += 1
            if steps >= max_steps:
                raise NumericalFailure(f"exceeded {max_steps} steps")
        return state.surface, state.t, steps, 0, state.dt_last
    space = surface.space
    cot = surface.angular()["cot"]
    r, t_new, acc, rej, dt_last, status, node = K.integrate_to(
        surface.radii.copy(), float(t), float(t_stop), float(dt_target), float(c_cfl),
        MAX_HALVINGS, int(max_steps), _MODE_CODES[mode], *warp, surface.h, cot,
        float(h_floor), float(space.a), float(v_max),
    )
    if status == K.LOW_H:
        raise SpeedUndefined(f"mean curvature not above {h_floor} at node {node}", node=int(node))
    if status == K.NONFINITE:
        raise NumericalFailure(f"non-finite geometry at node {node} (t={t_new})")
    if status == K.OUT_OF_RANGE:
        raise DomainError(f"flow left the tabulated range r <= {space.r_max}")
    if status == K.COLLAPSE:
        raise StepCollapse(f"step rejected {MAX_HALVINGS} times at t={t_new}")
    if status == K.MAX_STEPS:
        raise NumericalFailure(f"exceeded {max_steps} steps at t={t_new}")
    new = GraphSurface(space=space, theta=surface.theta, radii=r)
    return new, t_new, int(acc), int(rej), float(dt_last)


# ----------------------------------------------------------- exact radial
def radial_flow_exact(space: WarpedSpace, r0: float, t: float) -> float:
    """Radius at time t of the coordinate sphere moving by IMCF from r0."""
    if not r0 > space.a:
        raise DomainError(f"r0={r0} must exceed the horizon {space.a}")
    if t < 0:
        raise DomainError("t must be nonnegative")
    if t == 0:
        return float(r0)
    n = space.n

    def rhs(_, y):
        phi, dphi = space.phi_dphi(np.asarray(y, dtype=float))
        return phi / (n * dphi)

    def escape(_, y):
        return space.r_max - y[0]

    escape.terminal = True
    sol = solve_ivp(rhs, (0.0, float(t)), [float(r0)], method="DOP853", rtol=1e-13, atol=1e-14,
                    events=escape)
    if sol.status == 1 or not sol.success:
        raise DomainError(f"radial flow leaves the tabulated range r <= {space.r_max} before t={t}")
    return float(sol.y[0, -1])


# ------------------------------------------------------------------ runs
class _Xi:
    """Area-indexed xi with a table that grows with the flow."""

    def __init__(self, space: WarpedSpace, surface: GraphSurface, rows: int):
        self.space = space
        self.rows = rows
        lo = space.a + 0.5 * (float(np.min(surface.radii)) - space.a)
        if space.a == 0.0:
            lo = 0.5 * float(np.min(surface.radii))
        self.r_lo = lo
        self.table = self._build(min(space.r_max, space.a + 2.0 * (float(np.max(surface.radii)) - space.a)))
        self.rebuilds = 0

    def _build(self, r_hi: float) -> ProfileTable:
        return build_profile(self.space, self.r_lo, r_hi, self.rows)

    def __call__(self, area_value: float) -> float:
        lo, hi = self.table.area_range
        if area_value < lo:
            raise DomainError(f"area {area_value} below the profile table")
        while area_value > hi:
            if self.table.r_hi >= self.space.r_max:
                raise DomainError("the flow outran the largest available profile table")
            r_hi = min(self.space.r_max, self.space.a + 2.0 * (self.table.r_hi - self.space.a))
            self.table = self._build(r_hi)
            self.rebuilds += 1
            lo, hi = self.table.area_range
        return float(lookup(self.table, "xi", area_value))


def _sample(trace: FlowTrace, t: float, surface: GraphSurface, xi: _Xi, q_bhw: bool) -> None:
    n = surface.space.n
    g = surface.geometry()
    size = area(surface)
    w = quermassintegral(surface)
    row = {
        "t": t,
        "area": size,
        "W": w,
        "G": size ** (-(n - 1) / n) * (w - xi(size)),
        "H_min": float(np.min(g.H)),
        "H_max": float(np.max(g.H)),
        "umb_dev_max": float(np.max(g.umb_dev)),
        "u_min": float(np.min(g.u)),
        "r_min": float(np.min(surface.radii)),
        "r_max": float(np.max(surface.radii)),
    }
    if q_bhw:
        row["Q_bhw"] = bhw_quantity(surface)
    for key, value in row.items():
        trace.columns[key].append(float(value))
    trace.phi_h_dev.append(float(np.max(np.abs(g.phi * g.H - n * g.dphi))))


def run_flow(config: FlowConfig) -> FlowTrace:
    """Integrate to t_end, sampling diagnostics every ``cadence``."""
    _check_mode(config.mode)
    if not config.t_end > 0:
        raise DomainError("t_end must be positive")
    if not 0 < config.cadence <= config.t_end:
        raise DomainError("cadence must lie in (0, t_end]")
    space, surface = config.resolve()
    if config.mode == "imcf":
        h_min = float(np.min(surface.geometry().H))
        if not h_min > 0:
            raise PreconditionViolation(f"IMCF needs a strictly mean convex start (min H = {h_min:.3g})")
    names = list(TRACE_COLUMNS) + (["Q_bhw"] if config.q_bhw else [])
    trace = FlowTrace(columns={c: [] for c in names})
    trace.metadata = {
        "space": space_spec_string(space),
        "mode": config.mode,
        "grid": surface.count,
        "t_end": config.t_end,
        "cadence": config.cadence,
        "c_cfl": config.c_cfl,
        "tolerances": {"h_floor": config.h_floor, "v_max": config.v_max, "max_halvings": MAX_HALVINGS},
        "profile_rows": config.profile_rows,
    }
    xi = _Xi(space, surface, config.profile_rows)
    count = int(math.floor(config.t_end / config.cadence + 1e-9))
    stops = [config.cadence * k for k in range(1, count + 1)]
    if config.t_end - stops[-1] > 1e-12 * config.t_end:
        stops.append(config.t_end)
    t = 0.0
    accepted = rejected = 0
    dt_last = 0.0
    _sample(trace, t, surface, xi, config.q_bhw)
    reason = "t_end"
    try:
        for t_stop in stops:
            surface, t, acc, rej, dt_last = _integrate(
                surface, t, t_stop, config.mode, config.cadence, config.c_cfl,
                config.h_floor, config.v_max, config.max_steps - accepted,
            )
            accepted += acc
            rejected += rej
            _sample(trace, t, surface, xi, config.q_bhw)
    except (NumericalFailure, DomainError) as exc:
        reason = type(exc).__name__
        trace.metadata.update(termination=reason, error=str(exc), steps_accepted=accepted,
                              steps_rejected=rejected)
        trace.final = FlowState(t=t, surface=surface, dt_last=dt_last)
        exc.trace = trace
        raise
    trace.metadata.update(termination=reason, steps_accepted=accepted, steps_rejected=rejected,
                          profile_rebuilds=xi.rebuilds)
    trace.final = FlowState(t=t, surface=surface, dt_last=dt_last)
    return trace


def parse_mode(text: str) -> str:
    mode = text.strip().lower()
    _check_mode(mode)
    return mode


__all__ = [
    "FlowState", "FlowTrace", "FlowConfig", "imcf_rhs", "gmcf_rhs", "advance", "radial_flow_exact",
    "run_flow", "read_trace_csv", "stable_dt", "diffusion_max", "TRACE_COLUMNS", "H_FLOOR", "V_MAX",
    "C_CFL", "MAX_HALVINGS",
]
