import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rsma_dfrc.radar import pattern_values
from rsma_dfrc.scenario import (
    PAPER_TARGETS,
    AngleGrid,
    ArrayGeometry,
    DesiredBeampattern,
    build_scenario,
    dbm_to_linear,
    generate_channels,
    load_config,
    rectangular_template,
    scenario_from_config,
    steering_matrix,
    steering_vector,
    synthesize_desired_beampattern,
)

angles = st.floats(-90, 90, allow_nan=False)
geometries = st.builds(ArrayGeometry, st.integers(1, 16), st.floats(0.05, 2.0))


def test_steering_vector_examples():
    assert np.allclose(steering_vector(0, ArrayGeometry(4, 0.5)), [1, 1, 1, 1])
    assert np.allclose(steering_vector(90, ArrayGeometry(2, 0.5)), [1, -1])
    assert np.allclose(steering_vector(30, ArrayGeometry(2, 0.5)), [1, 1j])


@given(angles, geometries)
def test_steering_unit_modulus(theta, geom):
    assert np.allclose(np.abs(steering_vector(theta, geom)), 1.0, atol=1e-12)


@given(angles, geometries)
def test_steering_mirror_is_conjugate(theta, geom):
    assert np.allclose(steering_vector(-theta, geom), steering_vector(theta, geom).conj(),
                       atol=1e-12)


def test_steering_matrix_rows_match_vectors():
    geom = ArrayGeometry(5, 0.4)
    thetas = [-70.0, -3.0, 12.5, 88.0]
    A = steering_matrix(thetas, geom)
    for row, th in zip(A, thetas):
        assert np.allclose(row, steering_vector(th, geom))


def test_geometry_and_grid_validation():
    with pytest.raises(ValueError):
        ArrayGeometry(0)
    with pytest.raises(ValueError):
        ArrayGeometry(4, 0.0)
    with pytest.raises(ValueError):
        AngleGrid(np.array([0.0, 0.0]))
    with pytest.raises(ValueError):
        AngleGrid(np.array([]))
    with pytest.raises(ValueError):
        AngleGrid(np.array([-95.0, 0.0]))
    assert len(AngleGrid.uniform()) == 181


def test_channels_deterministic_and_shaped():
    geom = ArrayGeometry(8)
    a = generate_channels(4, geom, seed=7)
    b = generate_channels(4, geom, seed=7)
    assert a.H.shape == (4, 8)
    assert np.array_equal(a.H, b.H)
    assert a.noise_power == 1.0
    assert not np.array_equal(a.H, generate_channels(4, geom, seed=8).H)


def test_channels_unit_variance():
    H = generate_channels(10**5, ArrayGeometry(1), seed=3).H
    assert abs(np.mean(np.abs(H) ** 2) - 1.0) < 0.02
    assert abs(np.var(H.real) - 0.5) < 0.01
    assert abs(np.mean(H)) < 0.01


def test_dbm_to_linear():
    assert dbm_to_linear(20) == pytest.approx(100.0)
    assert dbm_to_linear(0) == pytest.approx(1.0)
    assert dbm_to_linear(3) == pytest.approx(1.9953, abs=1e-4)


def test_desired_levels_validated():
    with pytest.raises(ValueError):
        DesiredBeampattern(np.array([1.0, -1.0]))


def test_rectangular_template():
    grid = AngleGrid.uniform(-10, 10, 1)
    t = rectangular_template(grid, [(-2, 2)])
    assert t.sum() == 5
    assert np.all(t[(grid.angles >= -2) & (grid.angles <= 2)] == 1)


def test_synthesis_single_antenna_is_flat():
    grid = AngleGrid.uniform(-90, 90, 10)
    d = synthesize_desired_beampattern([(-90, 90)], grid, ArrayGeometry(1), 5.0)
    assert np.allclose(d.levels, 5.0, atol=1e-12)
    assert d.template_scale == pytest.approx(5.0)


def test_synthesis_scale_identity():
    # with the achieved pattern as template the least-squares scale is 1
    grid = AngleGrid.uniform(-90, 90, 2)
    geom = ArrayGeometry(4)
    d = synthesize_desired_beampattern([(-10, 10)], grid, geom, 4.0)
    b = pattern_values(d.radar_precoder, steering_matrix(grid.angles, geom))
    assert float(b @ d.levels / (b @ b)) == pytest.approx(1.0, abs=1e-12)


def test_synthesis_levels_achieved_and_feasible(paper):
    d = paper.desired
    P = d.radar_precoder
    assert np.allclose(np.sum(np.abs(P) ** 2, axis=1), paper.power_budget / paper.n_tx,
                       atol=1e-12)
    assert np.allclose(pattern_values(P, paper.steering()), d.levels, atol=1e-9)
    assert np.all(d.levels >= 0)


def test_paper_mainlobe_level_near_heuristic_and_sdp(paper):
    cp = pytest.importorskip("cvxpy")
    t = rectangular_template(paper.grid, PAPER_TARGETS)
    heuristic = paper.n_tx * paper.power_budget / len(PAPER_TARGETS)
    mainlobe = float(paper.desired.levels @ t / t.sum())
    assert abs(10 * np.log10(mainlobe / heuristic)) <= 1.0

    # independent oracle: covariance-domain matching with a free scale
    A = paper.steering()
    n = paper.n_tx
    R = cp.Variable((n, n), hermitian=True)
    alpha = cp.Variable()
    pattern = cp.hstack([cp.real(A[m].conj() @ R @ A[m]) for m in range(len(t))])
    prob = cp.Problem(cp.Minimize(cp.sum_squares(alpha * t - pattern)),
                      [R >> 0, cp.real(cp.diag(R)) == paper.power_budget / n])
    prob.solve(solver=cp.CLARABEL)
    sdp_mainlobe = float(np.asarray(pattern.value) @ t / t.sum())
    assert abs(10 * np.log10(sdp_mainlobe / heuristic)) <= 1.0
    assert abs(10 * np.log10(mainlobe / sdp_mainlobe)) <= 0.1
    ours = np.sqrt(np.sum((paper.desired.template_scale * t - paper.desired.levels) ** 2))
    assert ours <= 1.05 * np.sqrt(prob.value)


def test_synthesis_rejects_bad_targets():
    grid = AngleGrid.uniform(-30, 30, 1)
    with pytest.raises(ValueError):
        synthesize_desired_beampattern([], grid, ArrayGeometry(2), 1.0)
    with pytest.raises(ValueError):
        synthesize_desired_beampattern([(-60, 0)], grid, ArrayGeometry(2), 1.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.integers(1, 8), st.integers(0, 2**31))
def test_channels_pure_function(k, n, seed):
    a = generate_channels(k, ArrayGeometry(n), seed)
    b = generate_channels(k, ArrayGeometry(n), seed)
    assert np.array_equal(a.H, b.H)


def test_scenario_config_roundtrip(tmp_path, paper):
    cfg = load_config("paper")
    cfg.pop("solver")
    sc = scenario_from_config(cfg)
    assert sc.power_budget == pytest.approx(100.0)
    assert np.array_equal(sc.channels.H, paper.channels.H)
    assert np.array_equal(sc.desired.levels, paper.desired.levels)

    # explicit [re, im] channels pin the scenario
    cfg["channels"] = np.stack([paper.channels.H.real, paper.channels.H.imag], -1).tolist()
    cfg["seed"] = 99
    path = tmp_path / "s.json"
    path.write_text(json.dumps(cfg))
    sc2 = scenario_from_config(load_config(path))
    assert np.allclose(sc2.channels.H, paper.channels.H)


def test_user_subset_and_weights(paper):
    sub = paper.with_users([1, 3])
    assert sub.k_users == 2
    assert np.array_equal(sub.channels.H, paper.channels.H[[1, 3]])
    sc = build_scenario(users=[1, 3], rate_weights=[2.0, 1.0])
    assert np.array_equal(sc.rate_weights, [2.0, 1.0])
    with pytest.raises(ValueError):
        build_scenario(rate_weights=[1.0, -1.0, 1.0, 1.0])
