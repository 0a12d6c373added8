import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from oirsvlc import (
    AssociationPattern,
    CsiTensor,
    IdentifiabilityError,
    LinkGeometry,
    OirsGrid,
    PilotBlock,
    SceneConfig,
    ShapeError,
    aperture_gain,
    assemble_H,
    build_csi_tensor,
    generate_pilots,
    pair_column,
    patch_gain_quadrature,
    point_gain,
    simulate_rx,
    vec_H_blkdiag,
)

STUDY_LED = np.array([1.0, 2.0, 3.0])
STUDY_ELEM = np.array([1.0, 2.0, 1.5])
STUDY_PD = np.array([2.0, 2.0, 0.0])
DOWN = (0.0, 0.0, -1.0)
UP = (0.0, 0.0, 1.0)


def study_link(**kw):
    return LinkGeometry(STUDY_LED, STUDY_ELEM, STUDY_PD, DOWN, UP, **kw)


def test_point_gain_symmetric_link():
    # cos(theta) = cos(phi) = 1, d1 = d2 = 1  ->  1 / (1 + 1)^2
    link = LinkGeometry([0, 0, 1], [0, 0, 0], [0, 0, 1], DOWN, DOWN)
    assert point_gain(link) == pytest.approx(0.25, abs=1e-15)


def test_point_gain_outside_fov_is_zero():
    # arrival 45 degrees off the PD normal, field of view narrower than that
    link = LinkGeometry([0, 0, 2], [0, 0, 1], [1, 0, 0], DOWN, UP,
                        fov_semi_angle=math.radians(30))
    assert point_gain(link) == 0.0


def test_point_gain_study_geometry():
    # hand evaluation: cos(phi) = 1.5/sqrt(3.25), distances 1.5 and sqrt(3.25)
    d2 = math.sqrt(3.25)
    expected = (1.5 / d2) / (1.5 + d2) ** 2
    g = point_gain(study_link())
    assert g == pytest.approx(expected, rel=1e-12)
    assert g == pytest.approx(0.07628, abs=5e-5)


def test_point_gain_decreases_with_pd_distance():
    # slide the PD away along the fixed arrival ray: angles constant, d2 grows
    direction = np.array([1.0, 0, -1.5]) / math.sqrt(3.25)
    gains = []
    for t in (1.0, 1.5, 2.0, 2.5):
        pd = STUDY_ELEM + t * direction
        link = LinkGeometry(STUDY_LED, STUDY_ELEM, pd, DOWN, -direction)
        gains.append(point_gain(link))
    assert all(a > b for a, b in zip(gains, gains[1:]))


def test_point_gain_lambertian_constant():
    link = study_link()
    unit = point_gain(link, "unit")
    lamb = point_gain(link, "lambertian", reflectivity=0.9, pd_side=0.05)
    assert lamb == pytest.approx(unit * 0.9 * 2.0 * 0.05**2 / (2 * math.pi), rel=1e-12)


def study_grid(rows=1, cols=1):
    # single-element surface oriented to the aligned mirror normal
    from oirsvlc import alignment_normal, plane_basis_from
    n = alignment_normal(STUDY_LED, STUDY_ELEM, STUDY_PD)
    u, v = plane_basis_from(n)
    return OirsGrid(center=STUDY_ELEM, axis_u=u, axis_v=v, normal=n,
                    rows=rows, cols=cols, element_size=0.05, element_pitch=0.1)


def test_patch_gain_order_one_is_point_gain():
    grid = study_grid()
    link = study_link()
    assert patch_gain_quadrature(grid, 0, 0, link, 1) == \
        pytest.approx(point_gain(link, reflectivity=grid.reflectivity), rel=0, abs=0)


def test_patch_gain_constant_integrand():
    # identically-zero field over the aperture: exact for every order
    dead = LinkGeometry([0, 0, 2], [0, 0, 1], [1, 0, 0], DOWN, UP,
                        fov_semi_angle=math.radians(10))
    grid = OirsGrid(center=(0, 0, 1), axis_u=(1, 0, 0), axis_v=(0, 1, 0),
                    normal=(0, 0, 1), rows=1, cols=1, element_size=0.05,
                    element_pitch=0.1, reflectivity=1.0)
    vals = [patch_gain_quadrature(grid, 0, 0, dead, k) for k in (1, 2, 5)]
    assert vals == [0.0, 0.0, 0.0]


def test_patch_gain_quadrature_self_convergence():
    grid = study_grid()
    link = study_link()
    g8 = patch_gain_quadrature(grid, 0, 0, link, 8)
    g16 = patch_gain_quadrature(grid, 0, 0, link, 16)
    assert abs(g8 - g16) / g16 <= 1e-4


def test_aperture_gain_approaches_point_gain():
    # averaging error shrinks at least linearly as the aperture shrinks
    link = study_link()
    grid = study_grid()
    p = point_gain(link)
    errs = [abs(aperture_gain(link, grid.axis_u, grid.axis_v, s, 6) - p)
            for s in (0.08, 0.04, 0.02)]
    assert errs[0] >= 2 * errs[1] and errs[1] >= 2 * errs[2]


def _scene(led_positions, pd_positions, grid, fov=math.pi / 2, mode="unit"):
    return SceneConfig(room=(4, 4, 3), led_positions=led_positions,
                       led_normal=DOWN, lambertian_order=1.0,
                       pd_positions=pd_positions, pd_normal=UP, pd_side=0.05,
                       fov_semi_angle=fov, grid=grid, gain_mode=mode)


def wall_grid(rows, cols, center=(2, 0, 1.5)):
    return OirsGrid(center=center, axis_u=(1, 0, 0), axis_v=(0, 0, 1),
                    normal=(0, -1, 0), rows=rows, cols=cols,
                    element_size=0.05, element_pitch=0.1)


def test_build_csi_tensor_single_link():
    grid = wall_grid(1, 1)
    scene = _scene([(1, 2, 3)], [(2, 2, 0)], grid)
    tensor = build_csi_tensor(scene, "point")
    link = scene.link(0, grid.center, 0)
    assert tensor.gains.shape == (1, 1)
    assert tensor.gains[0, 0] == pytest.approx(point_gain(link), rel=1e-14)


def test_build_csi_tensor_fov_zero_row():
    # two elements, one of them outside the PD field of view
    grid = wall_grid(2, 1, center=(2, 0, 1.5))
    scene = _scene([(2, 2, 3)], [(2, 2, 0)], grid, fov=math.radians(53))
    tensor = build_csi_tensor(scene, "point")
    assert tensor.gains.shape == (2, 1)
    # lower element (z = 1.45): arrival angle ~54.1 deg > fov; upper ~52.2 deg
    assert tensor.gains[0, 0] == 0.0
    assert tensor.gains[1, 0] > 0.0


@pytest.mark.parametrize("model,order", [("point", 1), ("quadrature", 4)])
def test_build_csi_tensor_against_per_link_loop(model, order):
    grid = wall_grid(2, 2)
    scene = _scene([(1.9, 2, 3), (2.1, 2, 3)], [(1.8, 2, 0), (2.2, 2, 0)], grid)
    tensor = build_csi_tensor(scene, model, quadrature_order=order)
    from oirsvlc import element_position
    for nt in range(2):
        for nr in range(2):
            for i in range(2):
                for j in range(2):
                    link = scene.link(nt, element_position(grid, i, j), nr)
                    if model == "point":
                        want = point_gain(link)
                    else:
                        want = aperture_gain(link, grid.axis_u, grid.axis_v,
                                             grid.element_size, order)
                    got = tensor.gains[i * 2 + j, pair_column(nr, nt, 2)]
                    assert got == pytest.approx(want, rel=1e-12)


def test_csi_tensor_rejects_negative_and_bad_shape():
    with pytest.raises(ValueError):
        CsiTensor(np.array([[-1.0]]), 1, 1)
    with pytest.raises(ShapeError):
        CsiTensor(np.zeros((4, 3)), 2, 2)


def test_association_pattern_angle_selectivity():
    with pytest.raises(ValueError):
        AssociationPattern(G=np.array([[1, 1]]), F=np.array([[1]]))
    pat = AssociationPattern(G=np.array([[1, 0], [0, 1]]),
                             F=np.array([[0, 1], [1, 0]]))
    # composite consistency with the elementwise product
    for n in range(2):
        for nr in range(2):
            for nt in range(2):
                assert pat.V[n, pair_column(nr, nt, 2)] == pat.F[n, nr] * pat.G[n, nt]


def _random_instance(rng, n, nt, nr):
    gains = rng.uniform(0, 1, size=(n, nt * nr))
    tensor = CsiTensor(gains, nt, nr)
    g = np.zeros((n, nt), dtype=int)
    f = np.zeros((n, nr), dtype=int)
    for e in range(n):
        if rng.random() < 0.8:
            g[e, rng.integers(nt)] = 1
        if rng.random() < 0.8:
            f[e, rng.integers(nr)] = 1
    return tensor, AssociationPattern(g, f)


def test_assemble_zero_pattern():
    tensor = CsiTensor(np.ones((3, 4)), 2, 2)
    pat = AssociationPattern(np.zeros((3, 2), int), np.zeros((3, 2), int))
    assert_allclose(assemble_H(tensor, pat), np.zeros((2, 2)))


def test_assemble_single_aligned_element():
    tensor = CsiTensor(np.arange(1.0, 5.0).reshape(1, 4), 2, 2)
    pat = AssociationPattern(np.array([[1, 0]]), np.array([[1, 0]]))
    h = assemble_H(tensor, pat)
    expected = np.zeros((2, 2))
    expected[0, 0] = tensor.gains[0, pair_column(0, 0, 2)]
    assert_allclose(h, expected)


def test_assemble_matches_bruteforce_loop():
    rng = np.random.default_rng(5)
    tensor, pat = _random_instance(rng, 8, 2, 3)
    h = assemble_H(tensor, pat)
    assert h.shape == (3, 2)
    for nr in range(3):
        for nt in range(2):
            want = sum(pat.F[n, nr] * pat.G[n, nt]
                       * tensor.gains[n, pair_column(nr, nt, 3)] for n in range(8))
            assert h[nr, nt] == pytest.approx(want, rel=1e-13, abs=1e-300)


def test_direct_assembly_matches_blockdiag_route():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(1, 17))
        nt = int(rng.integers(1, 4))
        nr = int(rng.integers(1, 4))
        tensor, pat = _random_instance(rng, n, nt, nr)
        direct = assemble_H(tensor, pat)
        stacked = vec_H_blkdiag(tensor, pat)
        assert_allclose(stacked, direct.reshape(-1, order="F"),
                        rtol=1e-12, atol=1e-300)


def test_blockdiag_shape_mismatch():
    tensor = CsiTensor(np.ones((3, 4)), 2, 2)
    pat = AssociationPattern(np.zeros((4, 2), int), np.zeros((4, 2), int))
    with pytest.raises(ShapeError):
        vec_H_blkdiag(tensor, pat)
    with pytest.raises(ShapeError):
        assemble_H(tensor, pat)


def test_simulate_rx_noiseless_and_deterministic():
    H = np.array([[1.0, 2.0], [3.0, 4.0]])
    X = np.arange(8.0).reshape(2, 4)
    assert_allclose(simulate_rx(H, X, 0.0, seed=1), H @ X)
    y1 = simulate_rx(H, X, 0.3, seed=42)
    y2 = simulate_rx(H, X, 0.3, seed=42)
    assert np.array_equal(y1, y2)
    assert not np.array_equal(y1, simulate_rx(H, X, 0.3, seed=43))


def test_simulate_rx_noise_variance():
    y = simulate_rx(np.zeros((1, 2)), np.ones((2, 100000)), 0.7, seed=123)
    assert abs(y.var() - 0.49) / 0.49 <= 0.02


def test_generate_pilots_range_and_mean():
    x = generate_pilots(1, 4, 0.5, seed=0)
    assert x.shape == (1, 4)
    assert np.all(x >= 0) and np.all(x <= 1.0)
    big = generate_pilots(1, 100000, 0.5, seed=7)
    assert abs(big.mean() - 0.5) / 0.5 <= 0.02


def test_generate_pilots_full_rank():
    for seed in range(1000):
        x = generate_pilots(4, 100, 1.0, seed=seed)
        assert np.linalg.matrix_rank(x) == 4


def test_generate_pilots_identifiability():
    with pytest.raises(IdentifiabilityError):
        generate_pilots(3, 2, 1.0, seed=0)


def test_pilot_block_validation():
    with pytest.raises(ValueError):
        PilotBlock(X=-np.ones((1, 2)), Y=np.ones((1, 2)), sigma=0.1, seed=0)
    with pytest.raises(IdentifiabilityError):
        PilotBlock(X=np.ones((3, 2)), Y=np.ones((1, 2)), sigma=0.1, seed=0)
    blk = PilotBlock(X=np.ones((2, 4)), Y=np.zeros((1, 4)), sigma=0.0, seed=3)
    assert blk.X.shape == (2, 4)


def test_scene_rejects_positions_outside_room():
    grid = wall_grid(2, 2)
    with pytest.raises(ValueError):
        _scene([(1, 2, 3.5)], [(2, 2, 0)], grid)
