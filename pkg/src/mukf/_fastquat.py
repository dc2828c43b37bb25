"""Jitted batch quaternion kernels for the sigma-point hot loop.

Semantics match :mod:`mukf._quat` restricted to 2-D batches (one quaternion
per row, scalar-first); the generic broadcasting variants there remain the
reference implementation and the property tests compare the two.
"""

import math

import numpy as np
from numba import njit

_SMALL = 1e-8


@njit(cache=True)
def ref_mult_exp(q0, phi):
    """``q0 * exp(phi_i)`` for one reference quaternion and ``(m, 3)`` vectors."""
    m = phi.shape[0]
    out = np.empty((m, 4))
    w, x, y, z = q0[0], q0[1], q0[2], q0[3]
    for i in range(m):
        px, py, pz = phi[i, 0], phi[i, 1], phi[i, 2]
        a2 = px * px + py * py + pz * pz
        a = math.sqrt(a2)
        if a < _SMALL:
            k = 0.5 - a2 / 48.0
        else:
            k = math.sin(0.5 * a) / a
        ew = math.cos(0.5 * a)
        ex, ey, ez = k * px, k * py, k * pz
        out[i, 0] = w * ew - x * ex - y * ey - z * ez
        out[i, 1] = w * ex + x * ew + y * ez - z * ey
        out[i, 2] = w * ey - x * ez + y * ew + z * ex
        out[i, 3] = w * ez + x * ey - y * ex + z * ew
    return out


@njit(cache=True)
def rows_mult_exp_norm(q, phi):
    """In-place ``q_i <- normalize(q_i * exp(phi_i))`` over ``(m, 4)`` rows."""
    m = q.shape[0]
    for i in range(m):
        px, py, pz = phi[i, 0], phi[i, 1], phi[i, 2]
        a2 = px * px + py * py + pz * pz
        a = math.sqrt(a2)
        if a < _SMALL:
            k = 0.5 - a2 / 48.0
        else:
            k = math.sin(0.5 * a) / a
        ew = math.cos(0.5 * a)
        ex, ey, ez = k * px, k * py, k * pz
        w, x, y, z = q[i, 0], q[i, 1], q[i, 2], q[i, 3]
        nw = w * ew - x * ex - y * ey - z * ez
        nx = w * ex + x * ew + y * ez - z * ey
        ny = w * ey - x * ez + y * ew + z * ex
        nz = w * ez + x * ey - y * ex + z * ew
        s = 1.0 / math.sqrt(nw * nw + nx * nx + ny * ny + nz * nz)
        q[i, 0] = nw * s
        q[i, 1] = nx * s
        q[i, 2] = ny * s
        q[i, 3] = nz * s


@njit(cache=True)
def log_rel(qr, q, out):
    """Rotation vectors of ``qr^-1 * q_i`` into ``out (m, 3)`` (principal value)."""
    rw, rx, ry, rz = qr[0], -qr[1], -qr[2], -qr[3]
    m = q.shape[0]
    for i in range(m):
        w, x, y, z = q[i, 0], q[i, 1], q[i, 2], q[i, 3]
        dw = rw * w - rx * x - ry * y - rz * z
        dx = rw * x + rx * w + ry * z - rz * y
        dy = rw * y - rx * z + ry * w + rz * x
        dz = rw * z + rx * y - ry * x + rz * w
        if dw < 0.0:
            dw, dx, dy, dz = -dw, -dx, -dy, -dz
        n2 = dx * dx + dy * dy + dz * dz
        n = math.sqrt(n2)
        if n < _SMALL:
            k = 2.0 - 2.0 * n2 / 3.0
        else:
            k = 2.0 * math.atan2(n, dw) / n
        out[i, 0] = k * dx
        out[i, 1] = k * dy
        out[i, 2] = k * dz


@njit(cache=True)
def karcher(q, weights, max_iter, tol2):
    """Weighted intrinsic mean of ``(m, 4)`` unit quaternions.

    Fixed-point iteration seeded from row 0 (the sigma-point center), which
    converges in one or two sweeps for clustered inputs.
    """
    m = q.shape[0]
    d = np.empty((m, 3))
    mu = q[0].copy()
    for _ in range(max_iter):
        log_rel(mu, q, d)
        sx = sy = sz = 0.0
        for i in range(m):
            sx += weights[i] * d[i, 0]
            sy += weights[i] * d[i, 1]
            sz += weights[i] * d[i, 2]
        a2 = sx * sx + sy * sy + sz * sz
        a = math.sqrt(a2)
        if a < _SMALL:
            k = 0.5 - a2 / 48.0
        else:
            k = math.sin(0.5 * a) / a
        ew = math.cos(0.5 * a)
        ex, ey, ez = k * sx, k * sy, k * sz
        w, x, y, z = mu[0], mu[1], mu[2], mu[3]
        nw = w * ew - x * ex - y * ey - z * ez
        nx = w * ex + x * ew + y * ez - z * ey
        ny = w * ey - x * ez + y * ew + z * ex
        nz = w * ez + x * ey - y * ex + z * ew
        s = 1.0 / math.sqrt(nw * nw + nx * nx + ny * ny + nz * nz)
        mu[0], mu[1], mu[2], mu[3] = nw * s, nx * s, ny * s, nz * s
        if a2 < tol2:
            break
    return mu
