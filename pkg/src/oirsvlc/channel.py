"""Lambertian reflected-channel model, ground-truth gain tensors, and the
block pilot signal model.

The reflected gain of one LED -> element -> PD link is
C * cos(theta)^m * cos(phi) / (d1 + d2)^2 inside the receiver field of view
and zero outside, where theta is the emission angle at the LED, phi the
incidence angle at the PD, and d1, d2 the two leg lengths. The directed
unit vectors point from the LED/PD toward the element, which makes both
cosines positive in the downlink geometry.

C = 1 in "unit" mode (coherence and NMSE results are scale invariant);
"lambertian" mode uses rho * (m + 1) * A_pd / (2 pi) for absolute gains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DegenerateGeometryError,
    IdentifiabilityError,
    ShapeError,
)
from .geometry import (
    OirsGrid,
    _frozen,
    as_vec3,
    element_position,
    element_positions,
    is_unit,
)

GAIN_MODES = ("unit", "lambertian")


def gain_constant(mode: str, m: float, reflectivity: float = 1.0, pd_side: float = 1.0) -> float:
    """Proportionality constant of the reflected-gain model."""
    if mode == "unit":
        return 1.0
    if mode == "lambertian":
        return reflectivity * (m + 1.0) * pd_side**2 / (2.0 * math.pi)
    raise ValueError(f"unknown gain mode {mode!r}")


@dataclass(frozen=True)
class LinkGeometry:
    """One LED -> reflecting element -> PD optical link."""

    led: np.ndarray
    element: np.ndarray
    pd: np.ndarray
    led_normal: np.ndarray
    pd_normal: np.ndarray
    lambertian_order: float = 1.0
    fov_semi_angle: float = math.pi / 2

    def __post_init__(self):
        for name in ("led", "element", "pd"):
            object.__setattr__(self, name, _frozen(as_vec3(getattr(self, name))))
        for name in ("led_normal", "pd_normal"):
            vec = as_vec3(getattr(self, name))
            if not is_unit(vec):
                raise DegenerateGeometryError(f"{name} must be a unit vector")
            object.__setattr__(self, name, _frozen(vec))
        if np.linalg.norm(self.element - self.led) <= 0.0:
            raise DegenerateGeometryError("LED coincides with the element")
        if np.linalg.norm(self.element - self.pd) <= 0.0:
            raise DegenerateGeometryError("PD coincides with the element")
        if self.lambertian_order < 1.0:
            raise ValueError("lambertian_order must be >= 1")
        if not 0.0 < self.fov_semi_angle <= math.pi / 2:
            raise ValueError("fov_semi_angle must lie in (0, pi/2]")

    @property
    def d1(self) -> float:
        return float(np.linalg.norm(self.element - self.led))

    @property
    def d2(self) -> float:
        return float(np.linalg.norm(self.element - self.pd))

    @property
    def cos_theta(self) -> float:
        """Emission cosine at the LED, toward the element."""
        return float(self.led_normal @ (self.element - self.led)) / self.d1

    @property
    def cos_phi(self) -> float:
        """Incidence cosine at the PD, toward the element."""
        return float(self.pd_normal @ (self.element - self.pd)) / self.d2

    def shifted(self, delta) -> "LinkGeometry":
        """Same link with the element displaced by `delta`."""
        return replace(self, element=self.element + as_vec3(delta))


def point_gain(link: LinkGeometry, mode: str = "unit", *,
               reflectivity: float = 1.0, pd_side: float = 1.0) -> float:
    """Reflected channel gain of a single link under the point-source model.

    Returns 0 when the LED faces away from the element or the arrival
    direction falls outside the PD field of view (cos phi < cos fov).
    """
    ct = link.cos_theta
    cp = link.cos_phi
    if ct <= 0.0 or cp < math.cos(link.fov_semi_angle):
        return 0.0
    c = gain_constant(mode, link.lambertian_order, reflectivity, pd_side)
    return c * ct**link.lambertian_order * cp / (link.d1 + link.d2) ** 2


def aperture_gain(link: LinkGeometry, axis_u, axis_v, size: float, order: int,
                  mode: str = "unit", *, reflectivity: float = 1.0,
                  pd_side: float = 1.0) -> float:
    """Mean point gain over a square aperture centered on the link's element.

    Midpoint rule with `order` x `order` sub-points spanning `size` along the
    two in-plane axes. order=1 degenerates to the point gain at the center.
    Serves as the finite-aperture stand-in for a full physical-optics model.
    """
    if order < 1:
        raise ValueError("quadrature order must be >= 1")
    offs = ((np.arange(order) + 0.5) / order - 0.5) * size
    u = as_vec3(axis_u)
    v = as_vec3(axis_v)
    total = 0.0
    for a in offs:
        for b in offs:
            total += point_gain(link.shifted(a * u + b * v), mode,
                                reflectivity=reflectivity, pd_side=pd_side)
    return total / order**2


def patch_gain_quadrature(grid: OirsGrid, i: int, j: int, link: LinkGeometry,
                          order: int, mode: str = "unit") -> float:
    """Aperture-averaged gain of grid element (i, j) for the given link.

    The link's element position is replaced by the grid element's center;
    sub-points span element_size along the grid's in-plane axes. The grid's
    reflectivity feeds the lambertian constant.
    """
    center = element_position(grid, i, j)
    return aperture_gain(replace(link, element=center), grid.axis_u, grid.axis_v,
                         grid.element_size, order, mode,
                         reflectivity=grid.reflectivity)


@dataclass(frozen=True)
class SceneConfig:
    """Room, LED/PD arrays, and the reflecting-element grid."""

    room: np.ndarray              # extents (x, y, z), meters; origin at (0, 0, 0)
    led_positions: np.ndarray     # (Nt, 3)
    led_normal: np.ndarray
    lambertian_order: float
    pd_positions: np.ndarray      # (Nr, 3)
    pd_normal: np.ndarray
    pd_side: float
    fov_semi_angle: float
    grid: OirsGrid
    gain_mode: str = "unit"

    def __post_init__(self):
        object.__setattr__(self, "room", _frozen(as_vec3(self.room)))
        leds = np.atleast_2d(np.asarray(self.led_positions, dtype=float))
        pds = np.atleast_2d(np.asarray(self.pd_positions, dtype=float))
        if leds.shape[1] != 3 or leds.shape[0] < 1:
            raise ShapeError("led_positions must be (Nt, 3) with Nt >= 1")
        if pds.shape[1] != 3 or pds.shape[0] < 1:
            raise ShapeError("pd_positions must be (Nr, 3) with Nr >= 1")
        object.__setattr__(self, "led_positions", _frozen(leds))
        object.__setattr__(self, "pd_positions", _frozen(pds))
        for name in ("led_normal", "pd_normal"):
            vec = as_vec3(getattr(self, name))
            if not is_unit(vec):
                raise DegenerateGeometryError(f"{name} must be a unit vector")
            object.__setattr__(self, name, _frozen(vec))
        if self.gain_mode not in GAIN_MODES:
            raise ValueError(f"gain_mode must be one of {GAIN_MODES}")
        if self.pd_side <= 0.0:
            raise ValueError("pd_side must be positive")
        for tag, pts in (("led", leds), ("pd", pds), ("grid element", element_positions(self.grid))):
            if np.any(pts < -1e-9) or np.any(pts > self.room + 1e-9):
                raise ValueError(f"{tag} positions fall outside the room extents")

    @property
    def n_leds(self) -> int:
        return self.led_positions.shape[0]

    @property
    def n_pds(self) -> int:
        return self.pd_positions.shape[0]

    def link(self, led_index: int, element_point, pd_index: int) -> LinkGeometry:
        return LinkGeometry(self.led_positions[led_index], element_point,
                            self.pd_positions[pd_index], self.led_normal,
                            self.pd_normal, self.lambertian_order,
                            self.fov_semi_angle)


def pair_column(nr: int, nt: int, n_pds: int) -> int:
    """Column of PD `nr` / LED `nt` (0-based) in the stacked CSI tensor."""
    return nt * n_pds + nr


@dataclass(frozen=True)
class CsiTensor:
    """Per-element channel gains for every (LED, PD) pair.

    gains[n, k] is the gain via element n for pair column
    k = pair_column(nr, nt, n_pds); columns run through PDs fastest.
    """

    gains: np.ndarray
    n_leds: int
    n_pds: int

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float)
        if g.ndim != 2 or g.shape[1] != self.n_leds * self.n_pds:
            raise ShapeError(f"gains must be (N, {self.n_leds * self.n_pds}), got {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError("gains must be finite")
        if np.any(g < 0.0):
            raise ValueError("gains must be nonnegative")
        object.__setattr__(self, "gains", _frozen(g))

    @property
    def n_elements(self) -> int:
        return self.gains.shape[0]

    def column(self, nr: int, nt: int) -> np.ndarray:
        return self.gains[:, pair_column(nr, nt, self.n_pds)]


def _pair_gains(points, scene: SceneConfig) -> np.ndarray:
    """Vectorized point gains: (..., 3) points -> (..., Nr, Nt)."""
    pts = np.asarray(points, dtype=float)
    to_led = pts[..., None, :] - scene.led_positions          # (..., Nt, 3)
    to_pd = pts[..., None, :] - scene.pd_positions            # (..., Nr, 3)
    d1 = np.linalg.norm(to_led, axis=-1)
    d2 = np.linalg.norm(to_pd, axis=-1)
    ct = (to_led @ scene.led_normal) / d1
    cp = (to_pd @ scene.pd_normal) / d2
    m = scene.lambertian_order
    ok_t = ct > 0.0
    ok_p = cp >= math.cos(scene.fov_semi_angle)
    num = np.where(ok_t, ct, 0.0) ** m
    num = num[..., None, :] * np.where(ok_p, cp, 0.0)[..., :, None]
    num *= (ok_t[..., None, :] & ok_p[..., :, None])
    c = gain_constant(scene.gain_mode, m, scene.grid.reflectivity, scene.pd_side)
    return c * num / (d1[..., None, :] + d2[..., :, None]) ** 2


def build_csi_tensor(scene: SceneConfig, model: str = "point",
                     quadrature_order: int = 8) -> CsiTensor:
    """Ground-truth CSI tensor for every element and (LED, PD) pair.

    model="point" evaluates each link at the element center; "quadrature"
    averages the point model over each element's square aperture with the
    given midpoint order. Each element is taken as aligned (its mirror
    normal set by the reflection law for the link being evaluated), which
    the point-source bound leaves implicit.
    """
    grid = scene.grid
    centers = element_positions(grid)
    if model == "point":
        g = _pair_gains(centers, scene)
    elif model == "quadrature":
        k = int(quadrature_order)
        if k < 1:
            raise ValueError("quadrature order must be >= 1")
        offs = ((np.arange(k) + 0.5) / k - 0.5) * grid.element_size
        du, dv = np.meshgrid(offs, offs)
        sub = centers[:, None, :] \
            + du.ravel()[None, :, None] * grid.axis_u \
            + dv.ravel()[None, :, None] * grid.axis_v
        g = _pair_gains(sub, scene).mean(axis=1)
    else:
        raise ValueError(f"unknown truth model {model!r}")
    # column k = nt * Nr + nr
    gains = g.transpose(0, 2, 1).reshape(grid.n_elements, scene.n_leds * scene.n_pds)
    return CsiTensor(gains, scene.n_leds, scene.n_pds)


@dataclass(frozen=True)
class AssociationPattern:
    """Binary LED/PD association of each element, and their composite.

    G[n, nt] = 1 when element n is aligned with LED nt, F[n, nr] likewise
    for PDs. Angle selectivity: every element serves at most one LED and at
    most one PD. The composite V[n, k] = F[n, nr] * G[n, nt] for
    k = pair_column(nr, nt, Nr).
    """

    G: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.G)
        f = np.asarray(self.F)
        if g.ndim != 2 or f.ndim != 2 or g.shape[0] != f.shape[0]:
            raise ShapeError("G and F must be 2-D with a common element count")
        for name, arr in (("G", g), ("F", f)):
            if not np.all((arr == 0) | (arr == 1)):
                raise ValueError(f"{name} must be binary")
        if np.any(g.sum(axis=1) > 1) or np.any(f.sum(axis=1) > 1):
            raise ValueError("angle selectivity violated: an element serves multiple LEDs or PDs")
        object.__setattr__(self, "G", _frozen(g.astype(float)))
        object.__setattr__(self, "F", _frozen(f.astype(float)))
        # column k = pair_column(nr, nt, Nr) = nt * Nr + nr: PDs run fastest
        v = (g[:, :, None] * f[:, None, :]).reshape(g.shape[0], -1).astype(float)
        object.__setattr__(self, "V", _frozen(v))

    @property
    def n_elements(self) -> int:
        return self.G.shape[0]

    @property
    def n_leds(self) -> int:
        return self.G.shape[1]

    @property
    def n_pds(self) -> int:
        return self.F.shape[1]


def assemble_H(csi: CsiTensor, pattern: AssociationPattern) -> np.ndarray:
    """Effective (Nr, Nt) channel: H[nr, nt] = (f_nr * g_nt)^T h_{nr,nt}."""
    if pattern.n_elements != csi.n_elements or pattern.n_leds != csi.n_leds \
            or pattern.n_pds != csi.n_pds:
        raise ShapeError("pattern dimensions do not match the CSI tensor")
    summed = (pattern.V * csi.gains).sum(axis=0)          # (Nt*Nr,)
    return summed.reshape(csi.n_leds, csi.n_pds).T


def vec_H_blkdiag(csi: CsiTensor, pattern: AssociationPattern) -> np.ndarray:
    """Column-stacked H via the block-diagonal composite-association route.

    Builds the (N*K, K) block-diagonal matrix whose k-th diagonal block is
    the k-th column of V, then applies its transpose to the column-stacked
    CSI tensor. Kept deliberately literal: this is the independent route
    against which assemble_H is cross-checked.
    """
    if pattern.n_elements != csi.n_elements or pattern.n_leds != csi.n_leds \
            or pattern.n_pds != csi.n_pds:
        raise ShapeError("pattern dimensions do not match the CSI tensor")
    n = csi.n_elements
    k = csi.n_leds * csi.n_pds
    blk = np.zeros((n * k, k))
    for col in range(k):
        blk[col * n:(col + 1) * n, col] = pattern.V[:, col]
    return blk.T @ csi.gains.reshape(-1, order="F")


@dataclass(frozen=True)
class PilotBlock:
    """One estimation block: intensity pilots, received samples, noise level."""

    X: np.ndarray       # (Nt, P), nonnegative
    Y: np.ndarray       # (Nr, P)
    sigma: float
    seed: int

    def __post_init__(self):
        x = np.asarray(self.X, dtype=float)
        y = np.asarray(self.Y, dtype=float)
        if x.ndim != 2 or y.ndim != 2 or x.shape[1] != y.shape[1]:
            raise ShapeError("X and Y must be 2-D with a common slot count")
        if np.any(x < 0.0):
            raise ValueError("intensity pilots must be nonnegative")
        if x.shape[1] < x.shape[0]:
            raise IdentifiabilityError("need at least as many pilot slots as LEDs")
        if self.sigma < 0.0:
            raise ValueError("sigma must be >= 0")
        object.__setattr__(self, "X", _frozen(x))
        object.__setattr__(self, "Y", _frozen(y))


def generate_pilots(n_leds: int, n_slots: int, power: float, seed) -> np.ndarray:
    """Nonnegative pilot matrix, i.i.d. uniform on [0, 2*power] (mean `power`).

    Uniform nonnegative entries keep X X^T well conditioned with high
    probability under the intensity-modulation constraint.
    """
    if n_slots < n_leds:
        raise IdentifiabilityError(
            f"{n_slots} pilot slots cannot identify {n_leds} LED gains")
    if power <= 0.0:
        raise ValueError("pilot power must be positive")
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 2.0 * power, size=(n_leds, n_slots))


def simulate_rx(H: np.ndarray, X: np.ndarray, sigma: float, seed) -> np.ndarray:
    """Received block Y = H X + Z with i.i.d. zero-mean Gaussian noise.

    Deterministic for a fixed seed; sigma = 0 gives Y = H X exactly.
    """
    H = np.asarray(H, dtype=float)
    X = np.asarray(X, dtype=float)
    if H.ndim != 2 or X.ndim != 2 or H.shape[1] != X.shape[0]:
        raise ShapeError(f"H {H.shape} and X {X.shape} are not conformable")
    if sigma < 0.0:
        raise ValueError("sigma must be >= 0")
    y = H @ X
    if sigma > 0.0:
        y = y + sigma * np.random.default_rng(seed).standard_normal(y.shape)
    return y
