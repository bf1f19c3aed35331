"""Quaternion attitude utilities.

All quaternions are Hamilton convention, scalar-first [w, x, y, z], and
represent the body-to-earth rotation: v_earth = R(q) @ v_body. Functions
accept trailing-dimension batches, so a (N, 4) array of quaternions works
everywhere a single (4,) quaternion does.

The rotation matrix uses the homogeneous quadratic form (exact for unit
quaternions, polynomial in q otherwise); the analytic partials below are
the derivatives of that same polynomial form, which keeps finite-difference
checks of filter Jacobians honest.
"""

from __future__ import annotations

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def multiply(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Hamilton product p ⊗ q.

    Parameters
    ----------
    p, q : array_like, shape (..., 4)
        Quaternions [w, x, y, z].

    Returns
    -------
    ndarray, shape (..., 4)
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pw, px, py, pz = p[..., 0], p[..., 1], p[..., 2], p[..., 3]
    qw, qx, qy, qz = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return np.stack([
        pw * qw - px * qx - py * qy - pz * qz,
        pw * qx + px * qw + py * qz - pz * qy,
        pw * qy - px * qz + py * qw + pz * qx,
        pw * qz + px * qy - py * qx + pz * qw,
    ], axis=-1)


def from_rotation_vector(rotvec: np.ndarray) -> np.ndarray:
    """Unit quaternion exp([0, r/2]) for a rotation vector r = theta * axis.

    Parameters
    ----------
    rotvec : array_like, shape (..., 3)

    Returns
    -------
    ndarray, shape (..., 4)
    """
    r = np.asarray(rotvec, dtype=float)
    theta = np.linalg.norm(r, axis=-1)
    half = 0.5 * theta
    # sin(theta/2)/theta with a series fallback near zero
    small = theta < 1e-8
    safe = np.where(small, 1.0, theta)
    k = np.where(small, 0.5 - theta ** 2 / 48.0, np.sin(half) / safe)
    out = np.empty(r.shape[:-1] + (4,))
    out[..., 0] = np.cos(half)
    out[..., 1:] = r * k[..., None]
    return out


def normalize(q: np.ndarray) -> np.ndarray:
    """Return q / ||q||."""
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def right_multiply_matrix(r: np.ndarray) -> np.ndarray:
    """Matrix Q_R(r) with p ⊗ r == Q_R(r) @ p, for a single quaternion r."""
    rw, rx, ry, rz = r
    return np.array([
        [rw, -rx, -ry, -rz],
        [rx, rw, rz, -ry],
        [ry, -rz, rw, rx],
        [rz, ry, -rx, rw],
    ])


def rotation_matrix(q: np.ndarray) -> np.ndarray:
    """Body-to-earth direction cosine matrix for a single quaternion."""
    w, x, y, z = q
    return np.array([
        [w * w + x * x - y * y - z * z, 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), w * w - x * x + y * y - z * z, 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), w * w - x * x - y * y + z * z],
    ])


def rotation_matrix_partials(q: np.ndarray) -> np.ndarray:
    """Partial derivatives dR/dq_i of :func:`rotation_matrix`.

    Returns
    -------
    ndarray, shape (4, 3, 3)
        Stacked [dR/dw, dR/dx, dR/dy, dR/dz].
    """
    w, x, y, z = q
    d_w = 2.0 * np.array([[w, -z, y], [z, w, -x], [-y, x, w]])
    d_x = 2.0 * np.array([[x, y, z], [y, -x, -w], [z, w, -x]])
    d_y = 2.0 * np.array([[-y, x, w], [x, y, z], [-w, z, -y]])
    d_z = 2.0 * np.array([[-z, -w, x], [w, -z, y], [x, y, z]])
    return np.stack([d_w, d_x, d_y, d_z])


def yaw(q: np.ndarray) -> float:
    """Yaw angle (rotation about z, ZYX convention) of a single quaternion."""
    w, x, y, z = q
    return float(np.arctan2(2.0 * (w * z + x * y), w * w + x * x - y * y - z * z))


def from_yaw(psi: float) -> np.ndarray:
    """Unit quaternion for a pure yaw rotation."""
    return np.array([np.cos(0.5 * psi), 0.0, 0.0, np.sin(0.5 * psi)])
