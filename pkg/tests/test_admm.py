import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_solution, small_scenario
from rsma_dfrc import comms, mm, radar, wmmse
from rsma_dfrc.admm import (
    AdmmConfig,
    AdmmError,
    SolveReport,
    dual_update,
    initial_point,
    run_admm,
)
from rsma_dfrc.solution import ALL_MODES, ModeConfig, PrecoderSolution, stack, unstack

NO_RS = ModeConfig.from_label("rsmaxno-rs")
SIC = ModeConfig.from_label("rsmaxrs-sic")
SDMA = ModeConfig.from_label("sdmaxno-rs")


def cvec(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def test_dual_update_examples(rng):
    K, n = 2, 8
    d = cvec(rng, n)
    v = np.concatenate([[0.5, 0.1], cvec(rng, n)])
    assert np.array_equal(dual_update(d, v, v), d)

    u = np.concatenate([[0.0, 0.0], cvec(rng, n)])
    gap = v[K:] - u[K:]
    assert np.allclose(dual_update(np.zeros(n, complex), v, u), gap)

    v2, u2 = np.concatenate([[0, 0], cvec(rng, n)]), np.concatenate([[0, 0], cvec(rng, n)])
    twice = dual_update(dual_update(d, v, u), v2, u2)
    assert np.allclose(twice, d + gap + (v2 - u2)[K:])


def test_stack_layout_and_roundtrip(rng):
    sol = PrecoderSolution.from_parts([1, 2], [[3, 4]], [5, 6], common_split=[0.7])
    x = stack(sol)
    assert np.array_equal(x, [0.7, 1, 2, 3, 4, 5, 6])
    for k, n in [(1, 2), (3, 4), (4, 8)]:
        s = random_solution(rng, k, n, split=rng.random(k))
        back = unstack(stack(s), k, n)
        assert np.array_equal(back.precoders, s.precoders)
        assert np.array_equal(back.common_split, s.common_split)
    with pytest.raises(ValueError):
        unstack(x, 2, 2)
    pinned = unstack(stack(random_solution(rng, 2, 3, split=[1, 1]).pinned(SDMA)), 2, 3)
    assert np.all(pinned.p_common == 0) and np.all(pinned.common_split == 0)


@pytest.mark.parametrize("mode", ALL_MODES, ids=str)
def test_initial_point(rng, mode):
    sc = small_scenario(rng, k=3, n=4)
    v, u, d = initial_point(sc, mode, seed=5)
    K, N = 3, 4
    vs, us = unstack(v, K, N), unstack(u, K, N)
    assert np.sum(np.abs(vs.precoders) ** 2) == pytest.approx(sc.power_budget)
    assert np.allclose(us.antenna_powers(), sc.power_budget / N, atol=1e-12)
    assert np.array_equal(vs.common_split, np.ones(K) if mode.common_enabled else np.zeros(K))
    D = d.reshape((N, K + 2), order="F")
    off = [c for c in range(K + 2) if c not in mode.active_columns(K)]
    for M in (vs.precoders, us.precoders, D):
        assert np.all(M[:, off] == 0)
    # private columns follow the channels
    h = sc.channels.H
    for k in range(K):
        cos = abs(np.vdot(h[k], vs.precoders[:, k + 1]))
        assert cos == pytest.approx(np.linalg.norm(h[k]) * np.linalg.norm(vs.precoders[:, k + 1]))


def test_initial_point_shares_draws_across_modes(rng):
    sc = small_scenario(rng)
    _, _, d_sic = initial_point(sc, SIC, seed=3)
    _, _, d_nors = initial_point(sc, NO_RS, seed=3)
    D1, D2 = d_sic.reshape((4, 4), order="F"), d_nors.reshape((4, 4), order="F")
    assert np.array_equal(D1[:, :3], D2[:, :3])


@pytest.fixture(scope="module")
def small_runs():
    out = {}
    for mode in ALL_MODES:
        sc = small_scenario(np.random.default_rng(11), k=2, n=4)
        seen = []
        rep = run_admm(sc, mode, 0.01, AdmmConfig(seed=2), callback=lambda s: seen.append(s.iteration))
        out[mode] = (sc, rep, seen)
    return out


@pytest.mark.parametrize("mode", ALL_MODES, ids=str)
def test_small_run_report_invariants(small_runs, mode):
    sc, rep, seen = small_runs[mode]
    eps0, _ = AdmmConfig().resolved(sc.power_budget)
    assert rep.converged
    assert seen == list(range(1, rep.iterations + 1))
    assert len(rep.objective_trace) == len(rep.residual_trace) == rep.iterations
    assert max(rep.residual_trace[-1]) <= eps0

    sol = rep.solution
    assert np.allclose(sol.antenna_powers(), sc.power_budget / sc.n_tx, atol=1e-12)
    off = [c for c in range(4) if c not in mode.active_columns(2)]
    assert np.all(sol.precoders[:, off] == 0)
    if mode.common_enabled:
        assert sol.common_split.sum() <= comms.achievable_common_rate(sol, sc.channels, mode) + 1e-12
    else:
        assert np.all(sol.common_split == 0)

    wsr = comms.wsr(sol, sc.channels, mode, sc.rate_weights)
    mse = radar.beampattern_mse(sol, sc)
    assert rep.wsr == pytest.approx(wsr, abs=1e-12)
    assert rep.rmse == pytest.approx(np.sqrt(mse), rel=1e-12)
    assert rep.objective_trace[-1] == pytest.approx(0.99 * wsr - 0.01 * mse, abs=1e-6)


def test_report_json_roundtrip(small_runs):
    _, rep, _ = small_runs[SIC]
    back = SolveReport.from_dict(rep.to_dict())
    assert np.array_equal(back.solution.precoders, rep.solution.precoders)
    assert np.array_equal(back.solution.common_split, rep.solution.common_split)
    assert back.objective_trace == rep.objective_trace
    assert (back.wsr, back.rmse, back.iterations, back.converged) == (
        rep.wsr, rep.rmse, rep.iterations, rep.converged)
    doc = rep.to_dict()
    assert {"wsr", "mse", "rmse", "iterations", "converged", "objective_trace",
            "residual_trace", "precoders", "common_split"} <= set(doc)


def test_run_is_deterministic(small_runs):
    sc, rep, _ = small_runs[NO_RS]
    again = run_admm(sc, NO_RS, 0.01, AdmmConfig(seed=2))
    assert again.objective_trace == rep.objective_trace
    assert np.array_equal(again.solution.precoders, rep.solution.precoders)


@pytest.mark.parametrize("mode", [SIC, NO_RS], ids=str)
def test_pure_radar_weight_matches_direct_mm(mode):
    # with lambda = 1 the communication terms vanish and ADMM should land on
    # the radar-only MM solution started from the same point
    sc = small_scenario(np.random.default_rng(0), k=2, n=4)
    cfg = AdmmConfig(seed=0, eps0=1e-6, eps2=1e-8, max_iter=300, mm_max_iter=5000)
    rep = run_admm(sc, mode, 1.0, cfg)
    _, u, _ = initial_point(sc, mode, 0)
    cols = mode.active_columns(2)
    state = mm.MmWorkState.build(sc.steering(), sc.desired.levels, len(cols), sc.power_budget)
    res = mm.minimize(unstack(u, 2, 4).precoders[:, cols], state, 1.0, 0.0, tol=1e-12,
                      max_iter=20000)
    P = np.zeros((4, 4), complex)
    P[:, cols] = res.P
    direct = radar.beampattern_rmse(PrecoderSolution(P, np.zeros(2)), sc)
    assert rep.rmse == pytest.approx(direct, abs=1e-6)


def test_sub_solver_failure_names_iteration(monkeypatch, rng):
    sc = small_scenario(rng)
    calls = []

    def failing(*args, **kwargs):
        calls.append(1)
        if len(calls) == 2:
            raise FloatingPointError("boom")
        return original(*args, **kwargs)

    original = wmmse.v_update
    monkeypatch.setattr(wmmse, "v_update", failing)
    with pytest.raises(AdmmError, match="iteration 2"):
        run_admm(sc, NO_RS, 0.1, AdmmConfig(max_iter=5, eps0=0.0))


def test_non_convergence_is_flagged(rng):
    sc = small_scenario(rng)
    rep = run_admm(sc, SIC, 1e-3, AdmmConfig(max_iter=2, eps0=0.0))
    assert not rep.converged and rep.iterations == 2
    assert len(rep.objective_trace) == 2


def test_config_validation(rng):
    with pytest.raises(ValueError):
        AdmmConfig.from_dict({"rho": 1.0, "gamma": 2})
    cfg = AdmmConfig.from_dict({"rho": 2.0, "eps1": 1e-5})
    assert (cfg.rho, cfg.eps1) == (2.0, 1e-5)
    assert cfg.resolved(100.0) == pytest.approx((1e-2, 1e-4))
    with pytest.raises(ValueError):
        run_admm(small_scenario(rng), SIC, 1.5)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 5))
def test_dual_update_is_affine(seed, k, n):
    rng = np.random.default_rng(seed)
    m = (k + 2) * n
    d, a, b = cvec(rng, m), cvec(rng, m), cvec(rng, m)
    v = np.concatenate([rng.random(k), a])
    u = np.concatenate([rng.random(k), b])
    assert np.allclose(dual_update(d, v, u) - d, a - b)
    assert np.allclose(dual_update(d, u, v) - d, -(a - b))
