"""Compiled inner loops for graph geometry and warp tabulations.

Everything here works on plain float64 arrays; the public modules wrap these
with validation and domain types.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def reflect_derivatives(r, h):
    """Fourth-order central first/second derivatives in theta.

    Ghost nodes use even reflection across both poles, so r_theta vanishes
    there by construction.
    """
    m = r.shape[0]
    ext = np.empty(m + 4)
    for i in range(m):
        ext[i + 2] = r[i]
    ext[1] = r[1]
    ext[0] = r[2]
    ext[m + 2] = r[m - 2]
    ext[m + 3] = r[m - 3]
    d1 = np.empty(m)
    d2 = np.empty(m)
    c1 = 1.0 / (12.0 * h)
    c2 = 1.0 / (12.0 * h * h)
    for i in range(m):
        j = i + 2
        d1[i] = (-ext[j + 2] + 8.0 * ext[j + 1] - 8.0 * ext[j - 1] + ext[j - 2]) * c1
        d2[i] = (
            -ext[j + 2] + 16.0 * ext[j + 1] - 30.0 * ext[j] + 16.0 * ext[j - 1] - ext[j - 2]
        ) * c2
    d1[0] = 0.0
    d1[m - 1] = 0.0
    return d1, d2


@njit(cache=True)
def graph_kernel(r, phi, dphi, h, n, cot):
    """Graph quantities of an axisymmetric radial graph r(theta).

    Works in the potential lam = Phi(r) with Phi' = 1/phi.  Returns
    (r_theta, v, H, k_prof, k_rot); ``cot`` holds cot(theta) and is ignored at
    the two pole nodes where the rotational term is replaced by its limit.
    """
    m = r.shape[0]
    rt, rtt = reflect_derivatives(r, h)
    v = np.empty(m)
    H = np.empty(m)
    kp = np.empty(m)
    kr = np.empty(m)
    for i in range(m):
        p = phi[i]
        lt = rt[i] / p
        ltt = rtt[i] / p - rt[i] * rt[i] * dphi[i] / (p * p)
        vi = np.sqrt(1.0 + lt * lt)
        if i == 0 or i == m - 1:
            rot = ltt
        else:
            rot = cot[i] * lt
        kp[i] = (dphi[i] / vi - ltt / (vi * vi * vi)) / p
        kr[i] = (dphi[i] - rot) / (p * vi)
        H[i] = kp[i] + (n - 1) * kr[i]
        v[i] = vi
    return rt, v, H, kp, kr


@njit(cache=True)
def quintic_uniform(x0, dx, y, d1, d2, xq):
    """Quintic Hermite evaluation on a uniform grid; NaN outside the grid."""
    nq = xq.shape[0]
    last = y.shape[0] - 1
    out = np.empty(nq)
    for q in range(nq):
        t = (xq[q] - x0) / dx
        if not np.isfinite(t) or t < -1e-9 or t > last + 1e-9:
            out[q] = np.nan
            continue
        k = int(np.floor(t))
        if k < 0:
            k = 0
        if k > last - 1:
            k = last - 1
        s = t - k
        s2 = s * s
        s3 = s2 * s
        s4 = s3 * s
        s5 = s4 * s
        h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5
        h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5
        h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5)
        h3 = 0.5 * (s3 - 2.0 * s4 + s5)
        h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5
        h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5
        out[q] = (
            h0 * y[k] + h1 * dx * d1[k] + h2 * dx * dx * d2[k]
            + h5 * y[k + 1] + h4 * dx * d1[k + 1] + h3 * dx * dx * d2[k + 1]
        )
    return out


@njit(cache=True)
def dss_reduced(z, s0, mass, n, kappa):
    """F(z) = f(s0 (1 + z)) / z and dF/dz for f(s) = 1 - m s^(1-n) + kappa s^2.

    f(s0) = 0, so F is regular at z = 0; a short series avoids cancellation
    for small z.
    """
    c = mass * s0 ** (1.0 - n)
    if z < 1e-3:
        # (1+z)^(1-n) - 1 = sum_k b_k z^k
        b = 1.0 - n
        ez = 0.0
        dez = 0.0
        zk = 1.0
        for k in range(1, 14):
            ez += b * zk
            if k >= 2:
                dez += (k - 1) * b * zk / z if z > 0.0 else 0.0
            b *= (1.0 - n - k) / (k + 1.0)
            zk *= z
        if z == 0.0:
            dez = 0.5 * (1.0 - n) * (-n)
    else:
        e = math.expm1((1.0 - n) * math.log1p(z))
        de = (1.0 - n) * (1.0 + z) ** (-n)
        ez = e / z
        dez = (de * z - e) / (z * z)
    F = -c * ez + kappa * s0 * s0 * (2.0 + z)
    dF = -c * dez + kappa * s0 * s0
    return F, dF


@njit(cache=True)
def dss_reduced_array(z, s0, mass, n, kappa):
    F = np.empty(z.shape[0])
    dF = np.empty(z.shape[0])
    for i in range(z.shape[0]):
        F[i], dF[i] = dss_reduced(z[i], s0, mass, n, kappa)
    return F, dF


@njit(cache=True)
def _int_pow(x, k):
    out = 1.0
    for _ in range(k):
        out *= x
    return out


@njit(cache=True)
def dss_phi_dphi(r, x0, dx, zeta, dzeta, d2zeta, s0, mass, n, kappa):
    """phi = s0 (1 + zeta^2) and phi' = zeta sqrt(F(zeta^2)) from the zeta(r) table."""
    m = r.shape[0]
    last = zeta.shape[0] - 1
    nn = int(n + 0.5)
    integer_n = abs(n - nn) < 1e-12
    phi = np.empty(m)
    dphi = np.empty(m)
    for i in range(m):
        t = (r[i] - x0) / dx
        if not np.isfinite(t) or t < -1e-9 or t > last + 1e-9:
            phi[i] = np.nan
            dphi[i] = np.nan
            continue
        k = int(t)
        if k > last - 1:
            k = last - 1
        if k < 0:
            k = 0
        q = t - k
        q2 = q * q
        q3 = q2 * q
        # quintic Hermite basis
        h0 = 1.0 + q3 * (-10.0 + q * (15.0 - 6.0 * q))
        h1 = q + q3 * (-6.0 + q * (8.0 - 3.0 * q))
        h2 = 0.5 * (q2 + q3 * (-3.0 + q * (3.0 - q)))
        h3 = 0.5 * q3 * (1.0 + q * (-2.0 + q))
        h4 = q3 * (-4.0 + q * (7.0 - 3.0 * q))
        h5 = q3 * (10.0 + q * (-15.0 + 6.0 * q))
        zi = (
            h0 * zeta[k] + h1 * dx * dzeta[k] + h2 * dx * dx * d2zeta[k]
            + h5 * zeta[k + 1] + h4 * dx * dzeta[k + 1] + h3 * dx * dx * d2zeta[k + 1]
        )
        if zi < 0.0:
            zi = 0.0
        z = zi * zi
        s = s0 * (1.0 + z)
        phi[i] = s
        if z > 0.25:
            # far from the horizon the direct form does not cancel
            if integer_n:
                tail = mass / _int_pow(s, nn - 1)
            else:
                tail = mass * s ** (1.0 - n)
            dphi[i] = math.sqrt(1.0 - tail + kappa * s * s)
        else:
            F, _ = dss_reduced(z, s0, mass, n, kappa)
            dphi[i] = zi * math.sqrt(F)
    return phi, dphi


# ------------------------------------------------------------------ flows
# warp kinds understood by the compiled stepper
KIND_EUCLIDEAN = 0
KIND_HYPERBOLIC = 1
KIND_DSS = 2

# step status codes
OK = 0
LOW_H = 1
NONFINITE = 2
OUT_OF_RANGE = 3
BAD_GRAPH = 4
COLLAPSE = 5
MAX_STEPS = 6

MODE_IMCF = 0
MODE_GMCF = 1


@njit(cache=True)
def warp_phi_dphi(r, kind, x0, dx, zeta, dzeta, d2zeta, s0, mass, n, kappa):
    if kind == KIND_EUCLIDEAN:
        return r.copy(), np.ones(r.shape[0])
    if kind == KIND_HYPERBOLIC:
        return np.sinh(r), np.cosh(r)
    return dss_phi_dphi(r, x0, dx, zeta, dzeta, d2zeta, s0, mass, n, kappa)


@njit(cache=True)
def flow_speed(r, mode, kind, x0, dx, zeta, dzeta, d2zeta, s0, mass, n, kappa, h, cot, h_floor):
    """Nodal dr/dt, largest diffusion coefficient, largest v, status code, offending node."""
    m = r.shape[0]
    speed = np.zeros(m)
    for i in range(m):
        if not np.isfinite(r[i]):
            return speed, 0.0, 0.0, NONFINITE, i
    phi, dphi = warp_phi_dphi(r, kind, x0, dx, zeta, dzeta, d2zeta, s0, mass, n, kappa)
    for i in range(m):
        if np.isnan(phi[i]):
            return speed, 0.0, 0.0, OUT_OF_RANGE, i
    rt, v, H, kp, kr = graph_kernel(r, phi, dphi, h, n, cot)
    dmax = 0.0
    vmax = 0.0
    for i in range(m):
        if not (np.isfinite(H[i]) and np.isfinite(v[i])):
            return speed, 0.0, 0.0, NONFINITE, i
        if mode == MODE_IMCF:
            if H[i] <= h_floor:
                return speed, 0.0, 0.0, LOW_H, i
            speed[i] = v[i] / H[i]
            d = 1.0 / (phi[i] * phi[i] * H[i] * H[i] * v[i] * v[i])
        else:
            speed[i] = v[i] * (n * dphi[i] - phi[i] / v[i] * H[i])
            d = 1.0 / (phi[i] * v[i] * v[i] * v[i])
        if d > dmax:
            dmax = d
        if v[i] > vmax:
            vmax = v[i]
    return speed, dmax, vmax, OK, -1


@njit(cache=True)
def rk4_try(r, k1, dt, mode, kind, x0, dx, zeta, dzeta, d2zeta, s0, mass, n, kappa, h, cot,
            h_floor, a, v_max):
    """One classical RK4 step.

    Returns the new radii with their speed and diffusion bound (the next
    step's first stage) and a status code; any guard violation on a stage or
    on the result is reported as a non-OK status.
    """
    k2, _, _, st, _ = flow_speed(r + 0.5 * dt * k1, mode, kind, x0, dx, zeta, dzeta, d2zeta,
                                 s0, mass, n, kappa, h, cot, h_floor)
    if st != OK:
        return r, k1, 0.0, st
    k3, _, _, st, _ = flow_speed(r + 0.5 * dt * k2, mode, kind, x0, dx, zeta, dzeta, d2zeta,
                                 s0, mass, n, kappa, h, cot, h_floor)
    if st != OK:
        return r, k1, 0.0, st
    k4, _, _, st, _ = flow_speed(r + dt * k3, mode, kind, x0, dx, zeta, dzeta, d2zeta,
                                 s0, mass, n, kappa, h, cot, h_floor)
    if st != OK:
        return r, k1, 0.0, st
    new = r + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    for i in range(new.shape[0]):
        if not np.isfinite(new[i]):
            return r, k1, 0.0, NONFINITE
        if new[i] <= a:
            return r, k1, 0.0, BAD_GRAPH
    k_new, dmax, vmax, st, _ = flow_speed(new, mode, kind, x0, dx, zeta, dzeta, d2zeta, s0, mass,
                                         n, kappa, h, cot, h_floor)
    if st != OK:
        return r, k1, 0.0, st
    if vmax > v_max:
        return r, k1, 0.0, BAD_GRAPH
    return new, k_new, dmax, OK


@njit(cache=True)
def integrate_to(r, t, t_stop, dt_target, c_cfl, max_halvings, max_steps, mode, kind, x0, dx,
                 zeta, dzeta, d2zeta, s0, mass, n, kappa, h, cot, h_floor, a, v_max):
    """Advance from t to t_stop with diffusion-limited steps and halving on rejection.

    Returns (radii, t, accepted, rejected, dt_last, status, node).
    """
    accepted = 0
    rejected = 0
    dt_last = 0.0
    k1, dmax, vmax, st, node = flow_speed(r, mode, kind, x0, dx, zeta, dzeta, d2zeta, s0, mass, n,
                                          kappa, h, cot, h_floor)
    if st != OK:
        return r, t, accepted, rejected, dt_last, st, node
    while t < t_stop:
        dt = dt_target
        if dmax > 0.0:
            dt = min(dt, c_cfl * h * h / dmax)
        remaining = t_stop - t
        last = dt >= remaining
        if last:
            dt = remaining
        tries = 0
        while True:
            new, k_new, d_new, st = rk4_try(r, k1, dt, mode, kind, x0, dx, zeta, dzeta, d2zeta,
                                            s0, mass, n, kappa, h, cot, h_floor, a, v_max)
            if st == OK:
                break
            if st == OUT_OF_RANGE:
                return r, t, accepted, rejected, dt_last, st, -1
            rejected += 1
            tries += 1
            if tries > max_halvings:
                return r, t, accepted, rejected, dt_last, COLLAPSE, -1
            dt *= 0.5
            last = False
        r = new
        k1 = k_new
        dmax = d_new
        t = t_stop if last else t + dt
        dt_last = dt
        accepted += 1
        if accepted >= max_steps:
            return r, t, accepted, rejected, dt_last, MAX_STEPS, -1
    return r, t, accepted, rejected, dt_last, OK, -1
