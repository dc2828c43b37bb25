"""Vectorized scalar-first quaternion kernels.

All functions broadcast over leading axes; quaternions are ``(..., 4)`` arrays
ordered ``(w, x, y, z)`` and rotation vectors are ``(..., 3)``. Unit quaternions
here always denote body-to-nav rotations. Nothing in this module normalizes its
inputs unless stated; the public wrappers in :mod:`mukf.so3` own that policy.
"""

import numpy as np

# Below this rotation angle (rad) the closed forms for exp/log are replaced by
# their second-order series to avoid 0/0.
_SMALL_ANGLE = 1e-8


def quat_mult(a, b):
    """Hamilton product ``a * b`` (composition: apply ``b`` first, then ``a``)."""
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    out = np.empty(np.broadcast(a, b).shape[:-1] + (4,), dtype=np.float64)
    out[..., 0] = aw * bw - ax * bx - ay * by - az * bz
    out[..., 1] = aw * bx + ax * bw + ay * bz - az * by
    out[..., 2] = aw * by - ax * bz + ay * bw + az * bx
    out[..., 3] = aw * bz + ax * by - ay * bx + az * bw
    return out


def quat_conj(q):
    out = q.copy()
    out[..., 1:] *= -1.0
    return out


def quat_normalize(q):
    n = np.sqrt(np.einsum("...i,...i->...", q, q))
    return q / n[..., None]


def quat_exp(phi):
    """Map rotation vectors to unit quaternions, ``exp(phi) = (cos a/2, sin(a/2) u)``."""
    phi = np.asarray(phi, dtype=np.float64)
    angle = np.sqrt(np.einsum("...i,...i->...", phi, phi))[..., None]
    half = 0.5 * angle
    # sin(a/2)/a with series fallback: 1/2 - a^2/48 + O(a^4)
    small = angle < _SMALL_ANGLE
    k = np.where(small, 0.5 - angle * angle / 48.0, np.sin(half) / np.where(small, 1.0, angle))
    out = np.empty(phi.shape[:-1] + (4,), dtype=np.float64)
    out[..., 0:1] = np.cos(half)
    out[..., 1:] = k * phi
    return out


def quat_log(q):
    """Principal rotation vector of a unit quaternion (norm <= pi).

    At exactly pi the axis sign is ambiguous; the convention here flips the
    vector part so that its first nonzero component is positive, which keeps
    the output deterministic on the cut locus.
    """
    q = np.asarray(q, dtype=np.float64)
    w = q[..., 0:1]
    v = q[..., 1:].copy()
    # Force w >= 0 so the angle is principal.
    neg = w < 0.0
    w = np.where(neg, -w, w)
    v = np.where(neg, -v, v)
    # w == 0 (angle pi): pick the sign making the first nonzero component positive.
    at_pi = w[..., 0] == 0.0
    if np.any(at_pi):
        vp = np.atleast_2d(v[at_pi])
        first = vp[np.arange(vp.shape[0]), np.argmax(vp != 0.0, axis=-1)]
        vp[first < 0.0] *= -1.0
        v[at_pi] = vp.reshape(v[at_pi].shape)
    n = np.sqrt(np.einsum("...i,...i->...", v, v))[..., None]
    angle = 2.0 * np.arctan2(n, w)
    small = n < _SMALL_ANGLE
    # angle/n -> 2/w * (1 - n^2 / (3 w^2)) as n -> 0  (w -> 1 there)
    k = np.where(small, 2.0 - 2.0 * n * n / 3.0, angle / np.where(small, 1.0, n))
    return k * v


def _cross3(ax, ay, az, bx, by, bz):
    return ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx


def quat_rotate(q, x):
    """Rotate vectors ``x`` by unit quaternions ``q`` (body -> nav for attitude)."""
    # x + w t + v x t with t = 2 v x x, spelled out (np.cross overhead dominates
    # the filter's hot loop otherwise)
    w = q[..., 0]
    vx, vy, vz = q[..., 1], q[..., 2], q[..., 3]
    xx, xy, xz = x[..., 0], x[..., 1], x[..., 2]
    tx, ty, tz = _cross3(vx, vy, vz, xx, xy, xz)
    tx, ty, tz = 2.0 * tx, 2.0 * ty, 2.0 * tz
    cx, cy, cz = _cross3(vx, vy, vz, tx, ty, tz)
    out = np.empty(np.broadcast(w, xx).shape + (3,), dtype=np.float64)
    out[..., 0] = xx + w * tx + cx
    out[..., 1] = xy + w * ty + cy
    out[..., 2] = xz + w * tz + cz
    return out


def quat_rotate_inv(q, x):
    """Rotate by the conjugate of ``q`` (nav -> body for attitude)."""
    w = q[..., 0]
    vx, vy, vz = q[..., 1], q[..., 2], q[..., 3]
    xx, xy, xz = x[..., 0], x[..., 1], x[..., 2]
    tx, ty, tz = _cross3(vx, vy, vz, xx, xy, xz)
    tx, ty, tz = -2.0 * tx, -2.0 * ty, -2.0 * tz
    cx, cy, cz = _cross3(vx, vy, vz, tx, ty, tz)
    out = np.empty(np.broadcast(w, xx).shape + (3,), dtype=np.float64)
    out[..., 0] = xx + w * tx - cx
    out[..., 1] = xy + w * ty - cy
    out[..., 2] = xz + w * tz - cz
    return out


def quat_to_matrix(q):
    """Direction cosine matrix equivalent to ``q`` (columns: body axes in nav)."""
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    m = np.empty(q.shape[:-1] + (3, 3), dtype=np.float64)
    m[..., 0, 0] = 1.0 - 2.0 * (y * y + z * z)
    m[..., 0, 1] = 2.0 * (x * y - w * z)
    m[..., 0, 2] = 2.0 * (x * z + w * y)
    m[..., 1, 0] = 2.0 * (x * y + w * z)
    m[..., 1, 1] = 1.0 - 2.0 * (x * x + z * z)
    m[..., 1, 2] = 2.0 * (y * z - w * x)
    m[..., 2, 0] = 2.0 * (x * z - w * y)
    m[..., 2, 1] = 2.0 * (y * z + w * x)
    m[..., 2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return m


def quat_from_matrix(m):
    """Unit quaternion from a rotation matrix (Shepperd's method), w >= 0."""
    m = np.asarray(m, dtype=np.float64)
    single = m.ndim == 2
    m = m.reshape((-1, 3, 3))
    q = np.empty((m.shape[0], 4), dtype=np.float64)
    tr = np.trace(m, axis1=-2, axis2=-1)
    diag = np.stack([m[:, 0, 0], m[:, 1, 1], m[:, 2, 2]], axis=-1)
    choice = np.where(tr > diag.max(axis=-1), 3, np.argmax(diag, axis=-1))
    for i in range(m.shape[0]):
        a = m[i]
        c = choice[i]
        if c == 3:
            t = 1.0 + tr[i]
            s = 0.5 / np.sqrt(t)
            q[i] = [0.5 * np.sqrt(t), (a[2, 1] - a[1, 2]) * s, (a[0, 2] - a[2, 0]) * s, (a[1, 0] - a[0, 1]) * s]
        else:
            j, k = (c + 1) % 3, (c + 2) % 3
            t = 1.0 + a[c, c] - a[j, j] - a[k, k]
            s = 0.5 / np.sqrt(t)
            qi = np.empty(4)
            qi[0] = (a[k, j] - a[j, k]) * s
            qi[1 + c] = 0.5 * np.sqrt(t)
            qi[1 + j] = (a[j, c] + a[c, j]) * s
            qi[1 + k] = (a[k, c] + a[c, k]) * s
            q[i] = qi
    q[q[:, 0] < 0.0] *= -1.0
    q = quat_normalize(q)
    return q[0] if single else q


def quat_from_rpy(roll, pitch, yaw):
    """Quaternion for intrinsic z-y'-x'' (yaw, pitch, roll) Euler angles."""
    roll, pitch, yaw = np.broadcast_arrays(
        np.asarray(roll, dtype=np.float64),
        np.asarray(pitch, dtype=np.float64),
        np.asarray(yaw, dtype=np.float64),
    )
    cr, sr = np.cos(0.5 * roll), np.sin(0.5 * roll)
    cp, sp = np.cos(0.5 * pitch), np.sin(0.5 * pitch)
    cy, sy = np.cos(0.5 * yaw), np.sin(0.5 * yaw)
    out = np.empty(np.shape(roll) + (4,), dtype=np.float64)
    out[..., 0] = cy * cp * cr + sy * sp * sr
    out[..., 1] = cy * cp * sr - sy * sp * cr
    out[..., 2] = cy * sp * cr + sy * cp * sr
    out[..., 3] = sy * cp * cr - cy * sp * sr
    return out


def quat_to_rpy(q):
    """Roll, pitch, yaw (intrinsic z-y'-x'') from unit quaternions.

    Returns an ``(..., 3)`` array ``[roll, pitch, yaw]``; pitch is clipped to
    +-pi/2 at the gimbal singularity.
    """
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    roll = np.arctan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
    sp = np.clip(2.0 * (w * y - z * x), -1.0, 1.0)
    pitch = np.arcsin(sp)
    yaw = np.arctan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))
    return np.stack([roll, pitch, yaw], axis=-1)
