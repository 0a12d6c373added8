"""Three-phase spatial-sampling channel estimator.

Phase I tiles the reflecting grid into spacing x spacing subarrays and aligns
one element per (LED, PD) pair inside each tile, so same-pair samples form a
regular lattice with pitch `spacing` elements. Phase II activates the tiles
one time block at a time and ridge-estimates each block's effective channel
from its pilot observations. Phase III gathers the per-pair samples and
recovers every element's gain by separable natural-cubic-spline
interpolation over the sample lattice.

spacing = 1 with more than one LED or PD is the dense baseline: no spatial
sampling, every element's gain for every pair estimated directly, one block
per element with a rotating pair assignment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline, interp1d

from .channel import AssociationPattern, CsiTensor, SceneConfig, build_csi_tensor
from .coherence import CoherenceReport
from .errors import (
    IdentifiabilityError,
    IncompleteEstimationError,
    LayoutError,
    ShapeError,
    SingularSystemError,
)
from .geometry import OirsGrid


@dataclass(frozen=True)
class SubarrayLayout:
    """Sampling geometry of the subarray tiling.

    Subarray (qv, qh) covers grid rows [qv*s, qv*s + s) and columns
    [qh*s, qh*s + s); its element at local row nr, column nt samples the
    (nr, nt) pair. Blocks are indexed row-major: q = qv * q_h + qh.
    """

    rows: int
    cols: int
    n_leds: int
    n_pds: int
    spacing: int
    q_v: int
    q_h: int
    element_pitch: float

    def __post_init__(self):
        if self.spacing < max(self.n_leds, self.n_pds):
            raise LayoutError(
                f"spacing {self.spacing} subarray cannot hold a "
                f"{self.n_pds}x{self.n_leds} aligned block")
        if self.q_v < 1 or self.q_h < 1:
            raise LayoutError("grid too small for a single subarray")
        if self.q_v * self.spacing > self.rows or self.q_h * self.spacing > self.cols:
            raise LayoutError("subarrays overrun the grid")

    @property
    def n_blocks(self) -> int:
        return self.q_v * self.q_h

    def sample_element(self, nr: int, nt: int, qv: int, qh: int) -> int:
        """Flat index of the (nr, nt)-aligned element of subarray (qv, qh)."""
        return (qv * self.spacing + nr) * self.cols + (qh * self.spacing + nt)

    def omega(self, nr: int, nt: int) -> np.ndarray:
        """Aligned-element indices of pair (nr, nt) over all blocks, in block order."""
        qv, qh = np.divmod(np.arange(self.n_blocks), self.q_h)
        return (qv * self.spacing + nr) * self.cols + (qh * self.spacing + nt)

    def sample_row_indices(self, nr: int) -> np.ndarray:
        return nr + self.spacing * np.arange(self.q_v)

    def sample_col_indices(self, nt: int) -> np.ndarray:
        return nt + self.spacing * np.arange(self.q_h)

    def row_coord(self, i) -> np.ndarray:
        """Plane coordinate along the grid's v axis of row index i, meters."""
        return (np.asarray(i, dtype=float) - (self.rows - 1) / 2.0) * self.element_pitch

    def col_coord(self, j) -> np.ndarray:
        return (np.asarray(j, dtype=float) - (self.cols - 1) / 2.0) * self.element_pitch


def design_layout(grid: OirsGrid, n_leds: int, n_pds: int, spacing: int) -> SubarrayLayout:
    """Subarray tiling of a grid for the given array sizes and spacing."""
    if spacing < 1:
        raise LayoutError("spacing must be >= 1")
    return SubarrayLayout(grid.rows, grid.cols, n_leds, n_pds, spacing,
                          grid.rows // spacing, grid.cols // spacing,
                          grid.element_pitch)


def design_pattern(grid: OirsGrid, n_leds: int, n_pds: int, spacing: int,
                   coherence: CoherenceReport | None = None):
    """Phase-I association design.

    Returns (pattern, block_patterns, layout): the full sampling association,
    the per-block associations (equal to the full pattern on each block's
    rows, zero elsewhere), and the layout. When a coherence report is given,
    the sample lattice pitch must not exceed its coherence distance.
    """
    layout = design_layout(grid, n_leds, n_pds, spacing)
    if coherence is not None and spacing * grid.element_pitch > coherence.d_c:
        raise LayoutError(
            f"sample pitch {spacing * grid.element_pitch:.3f} m exceeds the "
            f"coherence distance {coherence.d_c:.3f} m")
    n = grid.n_elements
    g_full = np.zeros((n, n_leds), dtype=np.int8)
    f_full = np.zeros((n, n_pds), dtype=np.int8)
    blocks = []
    for qv in range(layout.q_v):
        for qh in range(layout.q_h):
            g_blk = np.zeros_like(g_full)
            f_blk = np.zeros_like(f_full)
            for nr in range(n_pds):
                for nt in range(n_leds):
                    e = layout.sample_element(nr, nt, qv, qh)
                    g_blk[e, nt] = f_blk[e, nr] = 1
            g_full |= g_blk
            f_full |= f_blk
            blocks.append(AssociationPattern(g_blk, f_blk))
    return AssociationPattern(g_full, f_full), blocks, layout


def design_dense_pattern(grid: OirsGrid, n_leds: int, n_pds: int):
    """Baseline association schedule covering every (element, pair) once.

    One block per element: block q aligns element (q + k) mod N with pair
    column k, so each element serves every pair in exactly one block while
    every block stays angle selective. Returns (block_patterns, assignment)
    with assignment[q, k] the element sampling pair k in block q.
    """
    n = grid.n_elements
    k = n_leds * n_pds
    if n < k:
        raise LayoutError("fewer elements than (LED, PD) pairs")
    assignment = (np.arange(n)[:, None] + np.arange(k)[None, :]) % n
    blocks = []
    for q in range(n):
        g_blk = np.zeros((n, n_leds), dtype=np.int8)
        f_blk = np.zeros((n, n_pds), dtype=np.int8)
        for col in range(k):
            nt, nr = divmod(col, n_pds)
            g_blk[assignment[q, col], nt] = 1
            f_blk[assignment[q, col], nr] = 1
        blocks.append(AssociationPattern(g_blk, f_blk))
    return blocks, assignment


def mmse_estimate(Y: np.ndarray, X: np.ndarray, sigma: float) -> np.ndarray:
    """Per-block ridge estimate Y X^T (X X^T + sigma^2 I)^-1 via a linear solve."""
    Y = np.asarray(Y, dtype=float)
    X = np.asarray(X, dtype=float)
    if Y.ndim != 2 or X.ndim != 2 or Y.shape[1] != X.shape[1]:
        raise ShapeError(f"Y {Y.shape} and X {X.shape} are not conformable")
    gram = X @ X.T + sigma**2 * np.eye(X.shape[0])
    try:
        return np.linalg.solve(gram, X @ Y.T).T
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("pilot Gram matrix is singular") from exc


def gather_samples(block_estimates, layout: SubarrayLayout, nr: int, nt: int) -> np.ndarray:
    """(q_v, q_h) sample grid of pair (nr, nt) from the per-block estimates."""
    if len(block_estimates) != layout.n_blocks or any(b is None for b in block_estimates):
        raise IncompleteEstimationError(
            f"need {layout.n_blocks} block estimates, got {len(block_estimates)}")
    vals = np.array([np.asarray(b)[nr, nt] for b in block_estimates])
    return vals.reshape(layout.q_v, layout.q_h)


def _interp_axis(sample_pos, values, target_pos, axis):
    """1-D interpolation along one lattice axis, method chosen by sample count.

    Natural cubic spline with >= 4 samples, straight-line (extrapolating)
    with 2 or 3, constant extension with 1.
    """
    n = len(sample_pos)
    if n >= 4:
        return CubicSpline(sample_pos, values, axis=axis, bc_type="natural")(target_pos)
    if n >= 2:
        f = interp1d(sample_pos, values, axis=axis, kind="linear",
                     fill_value="extrapolate")
        return f(target_pos)
    reps = [1, 1]
    reps[axis] = len(target_pos)
    return np.repeat(values, reps[axis], axis=axis)


def interpolate_full(sample_grid: np.ndarray, layout: SubarrayLayout,
                     grid: OirsGrid, nr: int, nt: int) -> np.ndarray:
    """Recover the full (rows, cols) gain field of one pair from its samples.

    Separable interpolation on the regular sample lattice, evaluated at every
    element's plane coordinates; exact at the sample points.
    """
    sample_grid = np.asarray(sample_grid, dtype=float)
    if sample_grid.shape != (layout.q_v, layout.q_h):
        raise ShapeError(f"sample grid must be {(layout.q_v, layout.q_h)}, "
                         f"got {sample_grid.shape}")
    rows_t = layout.row_coord(np.arange(layout.rows))
    cols_t = layout.col_coord(np.arange(layout.cols))
    part = _interp_axis(layout.row_coord(layout.sample_row_indices(nr)),
                        sample_grid, rows_t, axis=0)
    return _interp_axis(layout.col_coord(layout.sample_col_indices(nt)),
                        part, cols_t, axis=1)


def flops_estimate(n_leds: int, n_pds: int, pilot_slots: int, blocks: int) -> int:
    """Order-of-magnitude flop count of the per-block ridge estimates.

    Per block the solve costs on the order of P Nt^2 (Nt + 2 Nr) operations;
    the estimate is that order times the block count with unit constant.
    """
    if min(n_leds, n_pds, pilot_slots, blocks) < 1:
        raise ValueError("arguments must be positive")
    return blocks * pilot_slots * n_leds**2 * (n_leds + 2 * n_pds)


@dataclass(frozen=True)
class EstimationResult:
    """Output of one estimation run.

    `gains` has the ground-truth tensor's shape; entries may be slightly
    negative under noise (estimates are not clamped before the NMSE, which
    would bias the comparison). `clamped_tensor()` projects onto the
    nonnegative orthant for downstream use.
    """

    gains: np.ndarray
    block_estimates: np.ndarray     # (Q, Nr, Nt)
    nmse: float
    csi_parameter_count: int
    flops_estimate: int
    block_count: int
    pilot_slots_per_block: int
    n_leds: int
    n_pds: int

    def clamped_tensor(self) -> CsiTensor:
        return CsiTensor(np.maximum(self.gains, 0.0), self.n_leds, self.n_pds)


def _batched_mmse(Y: np.ndarray, X: np.ndarray, sigma: float) -> np.ndarray:
    """mmse_estimate over a stack of blocks: (Q,Nr,P), (Q,Nt,P) -> (Q,Nr,Nt)."""
    gram = X @ X.transpose(0, 2, 1) + sigma**2 * np.eye(X.shape[1])
    rhs = X @ Y.transpose(0, 2, 1)
    try:
        return np.linalg.solve(gram, rhs).transpose(0, 2, 1)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("pilot Gram matrix is singular") from exc


def run_algorithm1(scene: SceneConfig, spacing: int, pilot_slots: int = 100,
                   sigma: float = 0.0, pilot_power: float = 1.0, seed=0,
                   truth_model: str = "quadrature", quadrature_order: int = 8,
                   truth: CsiTensor | None = None) -> EstimationResult:
    """Full estimation pass: design, per-block estimation, recovery, NMSE.

    Deterministic for a fixed seed; pilots and per-block noise are drawn
    from a seed-keyed stream, block q consuming slice q. sigma = 0 with
    spacing 1 and the point-model truth recovers the tensor exactly up to
    round-off. A precomputed `truth` tensor (matching the scene) skips the
    per-call ground-truth build, which dominates repeated-trial sweeps.
    """
    nt, nr = scene.n_leds, scene.n_pds
    n_pair = nt * nr
    if pilot_slots < nt:
        raise IdentifiabilityError(
            f"{pilot_slots} pilot slots cannot identify {nt} LED gains")
    if truth is None:
        truth = build_csi_tensor(scene, truth_model, quadrature_order)
    n = truth.n_elements
    dense = spacing == 1 and max(nt, nr) > 1
    if dense:
        layout = None
        q_blocks = n
        assignment = (np.arange(n)[:, None] + np.arange(n_pair)[None, :]) % n
        h_blocks = truth.gains[assignment, np.arange(n_pair)[None, :]]
        h_blocks = h_blocks.reshape(q_blocks, nt, nr).transpose(0, 2, 1)
    else:
        layout = design_layout(scene.grid, nt, nr, spacing)
        q_blocks = layout.n_blocks
        h_blocks = np.empty((q_blocks, nr, nt))
        for pr in range(nr):
            for pt in range(nt):
                h_blocks[:, pr, pt] = truth.gains[layout.omega(pr, pt), pt * nr + pr]

    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 2.0 * pilot_power, size=(q_blocks, nt, pilot_slots))
    y = h_blocks @ x
    if sigma > 0.0:
        y = y + sigma * rng.standard_normal(y.shape)
    h_est = _batched_mmse(y, x, sigma)

    est = np.zeros_like(truth.gains)
    if dense:
        est[assignment, np.arange(n_pair)[None, :]] = \
            h_est.transpose(0, 2, 1).reshape(q_blocks, n_pair)
    else:
        for pr in range(nr):
            for pt in range(nt):
                samples = h_est[:, pr, pt].reshape(layout.q_v, layout.q_h)
                field = interpolate_full(samples, layout, scene.grid, pr, pt)
                est[:, pt * nr + pr] = field.reshape(-1)

    err = float(np.sum((est - truth.gains) ** 2) / np.sum(truth.gains**2))
    return EstimationResult(
        gains=est,
        block_estimates=h_est,
        nmse=err,
        csi_parameter_count=q_blocks * n_pair,
        flops_estimate=flops_estimate(nt, nr, pilot_slots, q_blocks),
        block_count=q_blocks,
        pilot_slots_per_block=pilot_slots,
        n_leds=nt,
        n_pds=nr,
    )
