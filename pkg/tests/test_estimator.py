import numpy as np
import pytest
from numpy.testing import assert_allclose

from oirsvlc import (
    CoherenceReport,
    IdentifiabilityError,
    IncompleteEstimationError,
    LayoutError,
    OirsGrid,
    SceneConfig,
    ShapeError,
    SingularSystemError,
    TaylorCoeffs,
    assemble_H,
    build_csi_tensor,
    design_dense_pattern,
    design_layout,
    design_pattern,
    flops_estimate,
    gather_samples,
    interpolate_full,
    mmse_estimate,
    pair_column,
    run_algorithm1,
    vec_H_blkdiag,
)


def wall_grid(rows=24, cols=24):
    return OirsGrid(center=(2, 0, 1.5), axis_u=(1, 0, 0), axis_v=(0, 0, 1),
                    normal=(0, -1, 0), rows=rows, cols=cols,
                    element_size=0.05, element_pitch=0.1)


def desk_scene(rows=24, cols=24):
    return SceneConfig(room=(4, 4, 3),
                       led_positions=[(1.9, 2, 3), (2.1, 2, 3)],
                       led_normal=(0, 0, -1), lambertian_order=1.0,
                       pd_positions=[(1.8, 2, 0), (2.2, 2, 0)],
                       pd_normal=(0, 0, 1), pd_side=0.05,
                       fov_semi_angle=np.pi / 2, grid=wall_grid(rows, cols))


@pytest.mark.parametrize("spacing,expected_q", [(2, 144), (3, 64), (4, 36)])
def test_design_pattern_subarray_counts(spacing, expected_q):
    pattern, blocks, layout = design_pattern(wall_grid(), 2, 2, spacing)
    assert (layout.q_v, layout.q_h) == (24 // spacing, 24 // spacing)
    assert layout.n_blocks == expected_q
    assert len(blocks) == expected_q


def test_design_pattern_degenerate_full_sampling():
    # one LED, one PD, spacing 1: every element is its own sample
    grid = wall_grid(4, 4)
    pattern, blocks, layout = design_pattern(grid, 1, 1, 1)
    assert layout.n_blocks == 16
    assert_allclose(np.sort(layout.omega(0, 0)), np.arange(16))
    assert pattern.V.sum() == 16


def test_design_pattern_layout_errors():
    with pytest.raises(LayoutError):
        design_pattern(wall_grid(), 2, 2, 1)       # block larger than subarray
    with pytest.raises(LayoutError):
        design_pattern(wall_grid(3, 3), 2, 2, 4)   # grid smaller than one subarray
    with pytest.raises(LayoutError):
        design_pattern(wall_grid(), 2, 2, 0)


def test_design_pattern_respects_coherence_distance():
    report = CoherenceReport(d_c=0.25, argmin_direction=[1, 0, 0], xi_c=0.04,
                             coeffs=TaylorCoeffs([1, 0, 0], np.zeros((3, 3))),
                             per_direction_lengths=((0.0, 0.25),))
    design_pattern(wall_grid(), 2, 2, 2, coherence=report)   # 0.2 m <= 0.25 m
    with pytest.raises(LayoutError):
        design_pattern(wall_grid(), 2, 2, 3, coherence=report)


def test_design_pattern_angle_selective_and_blockdiag_identity():
    pattern, blocks, layout = design_pattern(wall_grid(6, 6), 2, 2, 3)
    assert np.all(pattern.G.sum(axis=1) <= 1) and np.all(pattern.F.sum(axis=1) <= 1)
    scene = desk_scene(6, 6)
    tensor = build_csi_tensor(scene, "point")
    for blk in blocks:
        direct = assemble_H(tensor, blk)
        stacked = vec_H_blkdiag(tensor, blk)
        assert_allclose(stacked, direct.reshape(-1, order="F"), rtol=1e-12)


def test_design_pattern_sample_lattice():
    _, _, layout = design_pattern(wall_grid(), 2, 2, 2)
    omega = layout.omega(1, 0)            # PD row 1, LED column 0
    assert len(omega) == 144 and len(set(omega.tolist())) == 144
    rows, cols = np.divmod(omega, 24)
    assert set(rows.tolist()) == set(range(1, 24, 2))
    assert set(cols.tolist()) == set(range(0, 24, 2))


def test_design_dense_pattern_covers_every_pair_once():
    grid = wall_grid(3, 3)
    blocks, assignment = design_dense_pattern(grid, 2, 2)
    assert assignment.shape == (9, 4)
    for k in range(4):
        assert sorted(assignment[:, k].tolist()) == list(range(9))
    for blk in blocks:
        assert np.all(blk.G.sum(axis=1) <= 1) and np.all(blk.F.sum(axis=1) <= 1)
        assert blk.V.sum() == 4


def test_mmse_noiseless_orthogonal_pilots():
    X = np.array([[1.0, 1, 0, 0], [0, 0, 1, 1.0]])
    H = np.array([[0.5, -0.2], [0.1, 0.9]])
    est = mmse_estimate(H @ X, X, 0.0)
    assert_allclose(est, H, rtol=1e-12)


def test_mmse_scalar_shrinkage():
    # Y X^T (X X^T + sigma^2)^-1 = 8 / (4 + 1)
    est = mmse_estimate(np.array([[2.0, 2, 2, 2]]), np.array([[1.0, 1, 1, 1]]), 1.0)
    assert est[0, 0] == pytest.approx(1.6, rel=1e-14)


def test_mmse_large_noise_shrinks_to_zero():
    rng = np.random.default_rng(0)
    X = rng.uniform(0, 2, (2, 50))
    Y = rng.uniform(0, 1, (2, 50))
    est = mmse_estimate(Y, X, 1e6)
    assert np.max(np.abs(est)) < 1e-9


def test_mmse_singular_system():
    X = np.ones((2, 4))          # duplicated pilot rows, sigma = 0
    with pytest.raises(SingularSystemError):
        mmse_estimate(np.ones((1, 4)), X, 0.0)


def test_mmse_shape_mismatch():
    with pytest.raises(ShapeError):
        mmse_estimate(np.ones((1, 4)), np.ones((2, 5)), 0.1)


def test_gather_samples_trivial_and_incomplete():
    _, _, layout = design_pattern(wall_grid(2, 2), 2, 2, 2)
    assert layout.n_blocks == 1
    grid_vals = gather_samples([np.array([[1.0, 2], [3, 4]])], layout, 1, 0)
    assert_allclose(grid_vals, [[3.0]])
    with pytest.raises(IncompleteEstimationError):
        gather_samples([], layout, 0, 0)
    with pytest.raises(IncompleteEstimationError):
        gather_samples([None], layout, 0, 0)


def test_gather_samples_noiseless_equals_truth():
    scene = desk_scene(8, 8)
    _, _, layout = design_pattern(scene.grid, 2, 2, 2)
    tensor = build_csi_tensor(scene, "point")
    result = run_algorithm1(scene, 2, pilot_slots=16, sigma=0.0, seed=4,
                            truth_model="point")
    for nr in range(2):
        for nt in range(2):
            grid_vals = gather_samples(list(result.block_estimates), layout, nr, nt)
            truth_vals = tensor.gains[layout.omega(nr, nt),
                                      pair_column(nr, nt, 2)].reshape(4, 4)
            assert_allclose(grid_vals, truth_vals, atol=1e-9)


def _layout(rows=24, cols=24, spacing=2):
    return design_layout(wall_grid(rows, cols), 2, 2, spacing)


def test_interpolate_constant_field():
    layout = _layout()
    field = interpolate_full(np.full((12, 12), 3.7), layout, wall_grid(), 0, 1)
    assert_allclose(field, np.full((24, 24), 3.7), atol=1e-12)


def test_interpolate_exact_at_sample_points():
    rng = np.random.default_rng(8)
    layout = _layout()
    samples = rng.uniform(0, 1, (12, 12))
    field = interpolate_full(samples, layout, wall_grid(), 1, 1)
    assert_allclose(field[1::2, 1::2], samples, atol=1e-12)


def test_interpolate_reproduces_affine_fields():
    layout = _layout()
    rows = layout.row_coord(layout.sample_row_indices(0))
    cols = layout.col_coord(layout.sample_col_indices(1))
    samples = 0.3 + 1.7 * rows[:, None] - 0.6 * cols[None, :]
    field = interpolate_full(samples, layout, wall_grid(), 0, 1)
    rr = layout.row_coord(np.arange(24))[:, None]
    cc = layout.col_coord(np.arange(24))[None, :]
    assert_allclose(field, 0.3 + 1.7 * rr - 0.6 * cc, atol=1e-10)


def test_interpolate_linear_fallback_few_samples():
    # 3 samples per axis: straight-line interpolation, still exact on affine data
    layout = _layout(rows=6, cols=6, spacing=2)
    rows = layout.row_coord(layout.sample_row_indices(0))
    cols = layout.col_coord(layout.sample_col_indices(0))
    samples = 1.0 + 2.0 * rows[:, None] + 0.5 * cols[None, :]
    field = interpolate_full(samples, layout, wall_grid(6, 6), 0, 0)
    rr = layout.row_coord(np.arange(6))[:, None]
    cc = layout.col_coord(np.arange(6))[None, :]
    assert_allclose(field, 1.0 + 2.0 * rr + 0.5 * cc, atol=1e-10)


def test_interpolate_shape_check():
    layout = _layout()
    with pytest.raises(ShapeError):
        interpolate_full(np.zeros((3, 3)), layout, wall_grid(), 0, 0)


def test_flops_estimate_values():
    assert flops_estimate(2, 2, 100, 144) == 345600
    assert flops_estimate(1, 1, 1, 1) == 3
    assert flops_estimate(2, 2, 100, 288) == 2 * flops_estimate(2, 2, 100, 144)
    with pytest.raises(ValueError):
        flops_estimate(0, 1, 1, 1)


def test_run_algorithm1_exact_recovery_dense():
    scene = desk_scene(8, 8)
    result = run_algorithm1(scene, 1, pilot_slots=20, sigma=0.0, seed=3,
                            truth_model="point")
    assert result.nmse <= 1e-18
    assert result.block_count == 64
    assert result.csi_parameter_count == 64 * 4


def test_run_algorithm1_noiseless_sampling_hits_samples():
    scene = desk_scene(8, 8)
    result = run_algorithm1(scene, 2, pilot_slots=16, sigma=0.0, seed=9,
                            truth_model="point")
    tensor = build_csi_tensor(scene, "point")
    layout = design_layout(scene.grid, 2, 2, 2)
    for nr in range(2):
        for nt in range(2):
            k = pair_column(nr, nt, 2)
            idx = layout.omega(nr, nt)
            assert_allclose(result.gains[idx, k], tensor.gains[idx, k], atol=1e-9)
    assert result.csi_parameter_count == 16 * 4


def test_run_algorithm1_deterministic():
    scene = desk_scene(8, 8)
    a = run_algorithm1(scene, 2, pilot_slots=16, sigma=1e-4, seed=(5, 1))
    b = run_algorithm1(scene, 2, pilot_slots=16, sigma=1e-4, seed=(5, 1))
    assert np.array_equal(a.gains, b.gains)
    assert a.nmse == b.nmse
    c = run_algorithm1(scene, 2, pilot_slots=16, sigma=1e-4, seed=(5, 2))
    assert not np.array_equal(a.gains, c.gains)


def test_run_algorithm1_identifiability():
    with pytest.raises(IdentifiabilityError):
        run_algorithm1(desk_scene(8, 8), 2, pilot_slots=1, sigma=0.0, seed=0)


def test_run_algorithm1_clamped_tensor():
    scene = desk_scene(8, 8)
    result = run_algorithm1(scene, 2, pilot_slots=16, sigma=3e-3, seed=12)
    clamped = result.clamped_tensor()
    assert np.all(clamped.gains >= 0.0)


def test_noise_monotonicity_smoke():
    # averaged NMSE grows with sigma (30 trials, two well-separated levels)
    scene = desk_scene()
    levels = []
    for sigma in (1e-4, 1e-3):
        vals = [run_algorithm1(scene, 2, pilot_slots=100, sigma=sigma,
                               seed=(77, trial)).nmse for trial in range(30)]
        levels.append(np.mean(vals))
    assert levels[0] < levels[1]
