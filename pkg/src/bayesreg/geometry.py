"""Rigid transformations of labeled point sets in 2 and 3 dimensions.

Parameterization
----------------
A transform is a rotation followed by a translation, ``T(x) = R x + t``.
In 3D the rotation is built from Euler angles ``(phi_x, phi_y, phi_z)`` as

    R = R_z(phi_z) @ R_y(phi_y) @ R_x(phi_x)

with right-handed rotations about the fixed coordinate axes (extrinsic
X-then-Y-then-Z).  In 2D a single angle gives the standard counterclockwise
rotation.  Canonical angle ranges are ``phi_x, phi_z in [0, 2*pi)`` and
``phi_y in [-pi/2, pi/2]``; samplers move angles on the whole real line and
wrap them back with :func:`canonicalize_params` only when reporting.

All functions are pure and never mutate their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class TransformParams:
    """Rotation angles plus translation vector.

    Parameters
    ----------
    dim : int
        2 or 3.
    angles : array_like
        Length 1 for ``dim=2``, length 3 (``phi_x, phi_y, phi_z``) for
        ``dim=3``.  Radians; any real value is accepted.
    translation : array_like
        Length ``dim``, same length units as the point coordinates.
    """

    dim: int
    angles: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        angles = np.atleast_1d(np.asarray(self.angles, dtype=float))
        translation = np.atleast_1d(np.asarray(self.translation, dtype=float))
        n_ang = 1 if self.dim == 2 else 3
        if angles.shape != (n_ang,):
            raise ValueError(f"expected {n_ang} angles for dim={self.dim}, "
                             f"got shape {angles.shape}")
        if translation.shape != (self.dim,):
            raise ValueError(f"expected translation of length {self.dim}, "
                             f"got shape {translation.shape}")
        if not np.all(np.isfinite(angles)):
            raise ValueError("non-finite rotation angle")
        if not np.all(np.isfinite(translation)):
            raise ValueError("non-finite translation component")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls, dim: int) -> "TransformParams":
        n_ang = 1 if dim == 2 else 3
        return cls(dim, np.zeros(n_ang), np.zeros(dim))

    @classmethod
    def from_vector(cls, dim: int, vec: np.ndarray) -> "TransformParams":
        """Inverse of :meth:`as_vector`."""
        vec = np.asarray(vec, dtype=float)
        n_ang = 1 if dim == 2 else 3
        if vec.shape != (n_ang + dim,):
            raise ValueError(f"expected parameter vector of length {n_ang + dim}, "
                             f"got shape {vec.shape}")
        return cls(dim, vec[:n_ang], vec[n_ang:])

    @property
    def n_angles(self) -> int:
        return 1 if self.dim == 2 else 3

    def as_vector(self) -> np.ndarray:
        """Flat parameter vector, angles first then translation."""
        return np.concatenate([self.angles, self.translation])


@dataclass(frozen=True)
class PointSet:
    """Ordered collection of d-dimensional points, one per column.

    ``points`` has shape ``(dim, n)``; ``labels``, when present, is an
    integer vector of length ``n`` (atom-type identifiers).
    """

    dim: int
    points: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 2 or points.shape[0] != self.dim:
            raise ValueError(f"points must have shape ({self.dim}, n), "
                             f"got {points.shape}")
        if points.shape[1] < 1:
            raise ValueError("point set must contain at least one point")
        if not np.all(np.isfinite(points)):
            raise ValueError("non-finite point coordinate")
        object.__setattr__(self, "points", np.ascontiguousarray(points))
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=int)
            if labels.shape != (points.shape[1],):
                raise ValueError(f"labels must have length {points.shape[1]}, "
                                 f"got shape {labels.shape}")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.points.shape[1]


def _rotation_2d(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def _axis_rotations(angles) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ca, sa = math.cos(angles[0]), math.sin(angles[0])
    cb, sb = math.cos(angles[1]), math.sin(angles[1])
    cc, sc = math.cos(angles[2]), math.sin(angles[2])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, ca, -sa], [0.0, sa, ca]])
    ry = np.array([[cb, 0.0, sb], [0.0, 1.0, 0.0], [-sb, 0.0, cb]])
    rz = np.array([[cc, -sc, 0.0], [sc, cc, 0.0], [0.0, 0.0, 1.0]])
    return rx, ry, rz


def rotation_matrix_from_angles(angles, dim: int) -> np.ndarray:
    """Rotation matrix for a raw angle vector (no TransformParams needed)."""
    angles = np.asarray(angles, dtype=float)
    if not np.all(np.isfinite(angles)):
        raise ValueError("non-finite rotation angle")
    if dim == 2:
        return _rotation_2d(angles[0])
    rx, ry, rz = _axis_rotations(angles)
    return rz @ ry @ rx


def rotation_derivatives(angles, dim: int) -> np.ndarray:
    """Stack of matrices ``dR/dphi_k``, shape ``(n_angles, dim, dim)``."""
    angles = np.asarray(angles, dtype=float)
    if dim == 2:
        c, s = math.cos(angles[0]), math.sin(angles[0])
        return np.array([[[-s, -c], [c, -s]]])
    ca, sa = math.cos(angles[0]), math.sin(angles[0])
    cb, sb = math.cos(angles[1]), math.sin(angles[1])
    cc, sc = math.cos(angles[2]), math.sin(angles[2])
    rx, ry, rz = _axis_rotations(angles)
    drx = np.array([[0.0, 0.0, 0.0], [0.0, -sa, -ca], [0.0, ca, -sa]])
    dry = np.array([[-sb, 0.0, cb], [0.0, 0.0, 0.0], [-cb, 0.0, -sb]])
    drz = np.array([[-sc, -cc, 0.0], [cc, -sc, 0.0], [0.0, 0.0, 0.0]])
    return np.stack([rz @ ry @ drx, rz @ dry @ rx, drz @ ry @ rx])


def rotation_matrix(params: TransformParams) -> np.ndarray:
    """Orthogonal matrix of the transform, ``det R = +1``."""
    return rotation_matrix_from_angles(params.angles, params.dim)


def apply_transform(params: TransformParams, pts: PointSet) -> PointSet:
    """Map every point through ``x -> R x + t``; labels are carried through."""
    if params.dim != pts.dim:
        raise ValueError(f"transform dim {params.dim} != point set dim {pts.dim}")
    rot = rotation_matrix(params)
    moved = rot @ pts.points + params.translation[:, None]
    return PointSet(pts.dim, moved, pts.labels)


def pullback(params: TransformParams, pts: PointSet) -> PointSet:
    """Inverse map ``y -> R^T (y - t)``; undoes :func:`apply_transform`."""
    if params.dim != pts.dim:
        raise ValueError(f"transform dim {params.dim} != point set dim {pts.dim}")
    rot = rotation_matrix(params)
    moved = rot.T @ (pts.points - params.translation[:, None])
    return PointSet(pts.dim, moved, pts.labels)


def canonicalize_angles(angles: np.ndarray, dim: int) -> np.ndarray:
    """Map angle rows into the canonical ranges, preserving the rotation.

    Accepts a single angle vector or an array of rows ``(k, n_angles)``.
    Uses the exact identity ``(a, b, c) ~ (a + pi, pi - b, c + pi)`` to pull
    the middle angle into ``[-pi/2, pi/2]``, then wraps the outer angles
    into ``[0, 2*pi)``.
    """
    arr = np.asarray(angles, dtype=float)
    single = arr.ndim == 1
    rows = np.atleast_2d(arr).copy()
    if dim == 2:
        rows[:, 0] = np.mod(rows[:, 0], TWO_PI)
    else:
        b = np.mod(rows[:, 1] + math.pi, TWO_PI) - math.pi  # to [-pi, pi)
        high = b > HALF_PI
        low = b < -HALF_PI
        flip = high | low
        b[high] = math.pi - b[high]
        b[low] = -math.pi - b[low]
        rows[:, 1] = b
        rows[flip, 0] += math.pi
        rows[flip, 2] += math.pi
        rows[:, 0] = np.mod(rows[:, 0], TWO_PI)
        rows[:, 2] = np.mod(rows[:, 2], TWO_PI)
    return rows[0] if single else rows


def canonicalize_params(params: TransformParams) -> TransformParams:
    """Equivalent parameters with angles in the canonical ranges.

    The returned transform has an identical rotation matrix (to round-off)
    and the same translation; the operation is idempotent.
    """
    return TransformParams(params.dim,
                           canonicalize_angles(params.angles, params.dim),
                           params.translation)


def params_from_matrix(rot: np.ndarray, translation, dim: int | None = None
                       ) -> TransformParams:
    """Recover canonical Euler angles from a rotation matrix.

    At the gimbal degeneracy ``|phi_y| = pi/2`` only ``phi_x - phi_z`` (or the
    sum) is identifiable; ``phi_x = 0`` is chosen there.
    """
    rot = np.asarray(rot, dtype=float)
    translation = np.asarray(translation, dtype=float)
    if dim is None:
        dim = rot.shape[0]
    if rot.shape != (dim, dim):
        raise ValueError(f"rotation matrix must be {dim}x{dim}, got {rot.shape}")
    if (np.abs(rot.T @ rot - np.eye(dim)).max() > 1e-6
            or abs(np.linalg.det(rot) - 1.0) > 1e-6):
        raise ValueError("matrix is not a proper rotation")
    if dim == 2:
        angles = np.array([math.atan2(rot[1, 0], rot[0, 0])])
    else:
        sb = min(1.0, max(-1.0, -rot[2, 0]))
        b = math.asin(sb)
        if abs(sb) < 1.0 - 1e-12:
            a = math.atan2(rot[2, 1], rot[2, 2])
            c = math.atan2(rot[1, 0], rot[0, 0])
        elif sb > 0.0:  # phi_y = +pi/2
            a = 0.0
            c = math.atan2(-rot[0, 1], rot[0, 2])
        else:  # phi_y = -pi/2
            a = 0.0
            c = math.atan2(-rot[0, 1], -rot[0, 2])
        angles = np.array([a, b, c])
    return canonicalize_params(TransformParams(dim, angles, translation))
