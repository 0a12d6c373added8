"""3-D points, unit vectors, reflecting-element grids, and the mirror
alignment normal.

Points and directions are plain numpy arrays of shape (3,), in meters.
Everything here is pure and safe to share across threads; arrays stored on
dataclasses are frozen read-only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError

_UNIT_TOL = 1e-9


def as_vec3(v) -> np.ndarray:
    """Coerce to a float (3,) array, requiring finite entries."""
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("coordinates must be finite")
    return a


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def normalize(v) -> np.ndarray:
    """Return v / ||v||; a zero vector has no direction."""
    a = as_vec3(v)
    n = np.linalg.norm(a)
    if n <= 0.0:
        raise DegenerateGeometryError("cannot normalize a zero vector")
    return a / n


def is_unit(v, tol: float = _UNIT_TOL) -> bool:
    return abs(np.linalg.norm(as_vec3(v)) - 1.0) <= tol


def alignment_normal(led, element, pd) -> np.ndarray:
    """Mirror normal that reflects the ray from `led` off `element` into `pd`.

    The specular reflection law is satisfied exactly by the bisector of the
    two rays leaving the element, normalize(L - R) + normalize(U - R). The
    bisector degenerates when the two rays are antiparallel (grazing
    configuration), which raises DegenerateGeometryError.
    """
    to_led = normalize(as_vec3(led) - as_vec3(element))
    to_pd = normalize(as_vec3(pd) - as_vec3(element))
    s = to_led + to_pd
    if np.linalg.norm(s) < _UNIT_TOL:
        raise DegenerateGeometryError("incident and reflected rays are antiparallel")
    return s / np.linalg.norm(s)


@dataclass(frozen=True)
class OirsGrid:
    """Regular grid of square reflecting elements on a plane.

    The grid is centered on `center`; element (i, j) sits at
    center + (j - (cols-1)/2) * pitch * axis_u + (i - (rows-1)/2) * pitch * axis_v.
    The frame is right-handed: normal = axis_u x axis_v.
    """

    center: np.ndarray
    axis_u: np.ndarray
    axis_v: np.ndarray
    normal: np.ndarray
    rows: int
    cols: int
    element_size: float
    element_pitch: float
    reflectivity: float = 0.9

    def __post_init__(self):
        object.__setattr__(self, "center", _frozen(as_vec3(self.center)))
        for name in ("axis_u", "axis_v", "normal"):
            vec = as_vec3(getattr(self, name))
            if not is_unit(vec):
                raise DegenerateGeometryError(f"{name} must be a unit vector")
            object.__setattr__(self, name, _frozen(vec))
        if abs(self.axis_u @ self.axis_v) > _UNIT_TOL \
                or abs(self.axis_u @ self.normal) > _UNIT_TOL \
                or abs(self.axis_v @ self.normal) > _UNIT_TOL:
            raise DegenerateGeometryError("grid axes must be pairwise orthogonal")
        if np.linalg.norm(np.cross(self.axis_u, self.axis_v) - self.normal) > _UNIT_TOL:
            raise DegenerateGeometryError("frame must be right-handed: normal = u x v")
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be positive")
        if not 0.0 < self.element_size <= self.element_pitch:
            raise ValueError("element_size must lie in (0, element_pitch]")
        if not 0.0 < self.reflectivity <= 1.0:
            raise ValueError("reflectivity must lie in (0, 1]")

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols


def element_position(grid: OirsGrid, i: int, j: int) -> np.ndarray:
    """Center of element (i, j); i indexes rows along axis_v, j columns along axis_u."""
    if not (0 <= i < grid.rows and 0 <= j < grid.cols):
        raise IndexError(f"element index ({i}, {j}) outside {grid.rows}x{grid.cols} grid")
    ou = (j - (grid.cols - 1) / 2.0) * grid.element_pitch
    ov = (i - (grid.rows - 1) / 2.0) * grid.element_pitch
    return grid.center + ou * grid.axis_u + ov * grid.axis_v


def element_positions(grid: OirsGrid) -> np.ndarray:
    """All element centers as an (N, 3) array in row-major order (n = i*cols + j)."""
    jj, ii = np.meshgrid(np.arange(grid.cols), np.arange(grid.rows))
    ou = (jj.ravel() - (grid.cols - 1) / 2.0) * grid.element_pitch
    ov = (ii.ravel() - (grid.rows - 1) / 2.0) * grid.element_pitch
    return grid.center + np.outer(ou, grid.axis_u) + np.outer(ov, grid.axis_v)


def plane_basis_from(normal, hint=(1.0, 0.0, 0.0)):
    """Right-handed in-plane axes (u, v) for a plane with the given normal.

    u is the hint direction projected onto the plane; v completes the frame
    so that u x v equals the normal.
    """
    n = normalize(normal)
    h = as_vec3(hint)
    u = h - (h @ n) * n
    if np.linalg.norm(u) < _UNIT_TOL:
        # hint parallel to the normal; fall back to another axis
        h = np.array([0.0, 1.0, 0.0]) if abs(n[1]) < 0.9 else np.array([0.0, 0.0, 1.0])
        u = h - (h @ n) * n
    u = u / np.linalg.norm(u)
    v = np.cross(n, u)
    return u, v
