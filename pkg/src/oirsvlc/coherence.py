"""Spatial coherence of the reflected channel: growth rate of the gain under
element shifts, its second-order expansion, and the coherence distance.

The relative growth rate of a link's gain under an element shift dR is
xi(dR) = (h(R + dR) - h(R)) / h(R). Its expansion
xi = s1^T dR + dR^T S2 dR / 2 + o(|dR|^2) has

  s1 = grad h / h        (gradient of the log gain)
  S2 = hess h / h        (log-gain Hessian plus s1 s1^T)

both available in closed form from the link geometry. Along a fixed unit
direction, xi(r) = B r + A r^2 with B = s1^T e and A = e^T S2 e / 2, and the
coherence length is the spread |r2 - r1| of the two boundary points of
|xi| <= xi_c nearest the origin: sqrt(B^2/A^2 + 4 xi_c/|A|) while the
quadratic stays within the band (B^2 <= 4|A| xi_c), and the tangent-line
bound 2 xi_c / |B| otherwise. The coherence distance of a surface is the
minimum coherence length over its in-plane directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import LinkGeometry, point_gain
from .errors import (
    InfiniteCoherenceError,
    SingularGeometryError,
    ZeroGainError,
)
from .geometry import _frozen, as_vec3, is_unit

_COS_EPS = 1e-9


@dataclass(frozen=True)
class TaylorCoeffs:
    """First- and second-order coefficients of the growth rate at a link."""

    s1: np.ndarray
    S2: np.ndarray

    def __post_init__(self):
        s1 = np.asarray(self.s1, dtype=float)
        s2 = np.asarray(self.S2, dtype=float)
        if s1.shape != (3,) or s2.shape != (3, 3):
            raise ValueError("s1 must be (3,) and S2 must be (3, 3)")
        if not (np.all(np.isfinite(s1)) and np.all(np.isfinite(s2))):
            raise ValueError("coefficients must be finite")
        scale = max(np.abs(s2).max(), 1e-300)
        if np.abs(s2 - s2.T).max() > 1e-12 * scale:
            raise ValueError("S2 must be symmetric")
        object.__setattr__(self, "s1", _frozen(s1))
        object.__setattr__(self, "S2", _frozen(0.5 * (s2 + s2.T)))


def growth_rate_exact(link: LinkGeometry, shift, mode: str = "unit") -> float:
    """Exact relative gain change under an element shift.

    Both gains are evaluated for the same fixed link configuration (the
    element's mirror orientation is not re-aligned under the shift); the
    result is independent of the gain-constant mode.
    """
    h0 = point_gain(link, mode)
    if h0 <= 0.0:
        raise ZeroGainError("growth rate undefined where the gain is zero")
    return (point_gain(link.shifted(shift), mode) - h0) / h0


def taylor_coeffs(link: LinkGeometry) -> TaylorCoeffs:
    """Closed-form growth-rate coefficients at a link.

    Requires both incidence cosines strictly positive; the coefficients
    diverge as either approaches zero.
    """
    lr = link.element - link.led
    ur = link.element - link.pd
    d1 = float(np.linalg.norm(lr))
    d2 = float(np.linalg.norm(ur))
    lr = lr / d1
    ur = ur / d2
    n1 = link.led_normal
    n2 = link.pd_normal
    ct = float(n1 @ lr)
    cp = float(n2 @ ur)
    if ct <= _COS_EPS or cp <= _COS_EPS:
        raise SingularGeometryError("incidence cosine too small for a Taylor expansion")
    m = link.lambertian_order
    ds = d1 + d2

    s1 = (m / (d1 * ct)) * n1 + (1.0 / (d2 * cp)) * n2 \
        - (m / d1 + 2.0 / ds) * lr - (1.0 / d2 + 2.0 / ds) * ur

    # Hessian of the log gain; adding s1 s1^T turns it into hess(h)/h.
    hess_ln = (-m / (d1 * ct) ** 2) * np.outer(n1, n1) \
        - (1.0 / (d2 * cp) ** 2) * np.outer(n2, n2) \
        + (2.0 * m / d1**2 + 2.0 / (d1 * ds) + 2.0 / ds**2) * np.outer(lr, lr) \
        + (2.0 / d2**2 + 2.0 / (d2 * ds) + 2.0 / ds**2) * np.outer(ur, ur) \
        + (2.0 / ds**2) * (np.outer(lr, ur) + np.outer(ur, lr)) \
        - (m / d1**2 + 1.0 / d2**2 + 2.0 / (d1 * ds) + 2.0 / (d2 * ds)) * np.eye(3)
    return TaylorCoeffs(s1, hess_ln + np.outer(s1, s1))


def growth_rate_taylor(coeffs: TaylorCoeffs, shift) -> float:
    """Second-order growth-rate prediction s1^T dR + dR^T S2 dR / 2."""
    d = as_vec3(shift)
    return float(coeffs.s1 @ d + 0.5 * d @ coeffs.S2 @ d)


def coherence_length_1d(A: float, B: float, xi_c: float) -> float:
    """Spread of the two |A r^2 + B r| = xi_c boundary points nearest zero.

    Quadratic branch while the parabola's extremum stays within the band
    (B^2 <= 4 |A| xi_c); tangent-line bound 2 xi_c / |B| otherwise. A near-
    zero quadratic coefficient bypasses the quadratic branch to avoid
    dividing by A. A flat profile (A = B = 0) has no finite length and
    raises InfiniteCoherenceError.
    """
    if xi_c <= 0.0:
        raise ValueError("xi_c must be positive")
    if A == 0.0 and B == 0.0:
        raise InfiniteCoherenceError("flat gain profile along this direction")
    eps_a = 1e-12 * max(1.0, B * B / xi_c)
    if abs(A) <= eps_a:
        if B == 0.0:
            # pure quadratic with tiny A: no B/A blow-up possible
            return math.sqrt(4.0 * xi_c / abs(A))
        return 2.0 * xi_c / abs(B)
    if B * B <= 4.0 * abs(A) * xi_c:
        return math.sqrt((B / A) ** 2 + 4.0 * xi_c / abs(A))
    return 2.0 * xi_c / abs(B)


@dataclass(frozen=True)
class CoherenceReport:
    """Direction-resolved coherence lengths and their minimum."""

    d_c: float
    argmin_direction: np.ndarray
    xi_c: float
    coeffs: TaylorCoeffs
    per_direction_lengths: tuple      # ((angle_rad, length_m), ...)

    def __post_init__(self):
        object.__setattr__(self, "argmin_direction",
                           _frozen(as_vec3(self.argmin_direction)))
        lengths = [length for _, length in self.per_direction_lengths]
        if not lengths:
            raise ValueError("per_direction_lengths must not be empty")
        best = min(lengths)
        if math.isfinite(best):
            if abs(self.d_c - best) > 1e-12 * max(1.0, abs(best)):
                raise ValueError("d_c must equal the minimum per-direction length")
        elif math.isfinite(self.d_c):
            raise ValueError("d_c must equal the minimum per-direction length")


def _direction_length(coeffs: TaylorCoeffs, direction, xi_c: float) -> float:
    e = direction
    a = 0.5 * float(e @ coeffs.S2 @ e)
    b = float(coeffs.s1 @ e)
    try:
        return coherence_length_1d(a, b, xi_c)
    except InfiniteCoherenceError:
        return math.inf


def coherence_profile(coeffs: TaylorCoeffs, plane_axes, xi_c: float,
                      angular_samples: int = 360):
    """Coherence length over in-plane directions cos(a) u + sin(a) v.

    Angles sample [0, pi); opposite directions are covered by the two-sided
    length construction. Returns (angles, lengths) arrays; flat directions
    carry +inf.
    """
    u, v = (as_vec3(ax) for ax in plane_axes)
    angles = np.pi * np.arange(angular_samples) / angular_samples
    lengths = np.array([
        _direction_length(coeffs, math.cos(a) * u + math.sin(a) * v, xi_c)
        for a in angles
    ])
    return angles, lengths


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_min(f, lo: float, hi: float, tol: float = 1e-6):
    """Golden-section minimum of f on [lo, hi] to within tol."""
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = f(x2)
    mid = 0.5 * (lo + hi)
    return mid, f(mid)


def coherence_distance(link: LinkGeometry, plane_axes, xi_c: float,
                       angular_samples: int = 360) -> CoherenceReport:
    """Minimum coherence length over a surface's in-plane directions.

    plane_axes are two orthonormal in-plane directions of the reflecting
    surface. A uniform angular grid seeds a golden-section refinement around
    the best cell (1e-6 rad); the refined direction is appended to the
    reported profile.
    """
    if angular_samples < 8:
        raise ValueError("need at least 8 angular samples")
    u, v = (as_vec3(ax) for ax in plane_axes)
    if not (is_unit(u) and is_unit(v)) or abs(u @ v) > 1e-9:
        raise ValueError("plane_axes must be orthonormal")
    coeffs = taylor_coeffs(link)
    angles, lengths = coherence_profile(coeffs, (u, v), xi_c, angular_samples)
    profile = list(zip(angles.tolist(), lengths.tolist()))
    k = int(np.argmin(lengths))
    best_angle, best_len = angles[k], lengths[k]
    if math.isfinite(best_len):
        step = math.pi / angular_samples

        def f(a):
            return _direction_length(coeffs, math.cos(a) * u + math.sin(a) * v, xi_c)

        ref_angle, ref_len = _golden_min(f, best_angle - step, best_angle + step)
        if ref_len < best_len:
            best_angle, best_len = ref_angle, ref_len
        profile.append((float(best_angle), float(best_len)))
    direction = math.cos(best_angle) * u + math.sin(best_angle) * v
    normal = np.cross(u, v)
    assert abs(direction @ normal) <= 1e-9, "argmin direction left the surface plane"
    return CoherenceReport(float(best_len), direction, xi_c, coeffs, tuple(profile))
