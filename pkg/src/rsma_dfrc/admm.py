"""ADMM orchestration of the joint WSR / beampattern-matching design.

Two copies of the variables are kept: ``v`` lives in the communication set
(decodable split, total power at most P_t) and ``u`` in the radar set
(per-antenna power exactly P_t / N_t).  Each iteration runs

    v <- WMMSE v-update with anchor ``u - d``
    u <- MM u-update with anchor ``v + d``
    d <- d + (v - u)

on the precoder parts, until the primal residual ``||v - u||`` and the dual
residual ``||u_new - u_old||`` both drop below ``eps0``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import comms, mm, radar, wmmse
from .solution import PrecoderSolution, stack, unstack

__all__ = [
    "AdmmConfig",
    "AdmmState",
    "AdmmError",
    "SolveReport",
    "initial_point",
    "dual_update",
    "run_admm",
    "stack",
    "unstack",
]

log = logging.getLogger(__name__)


class AdmmError(RuntimeError):
    pass


@dataclass
class AdmmConfig:
    """Solver settings; ``None`` tolerances scale with sqrt(P_t)."""

    rho: float = 1.0
    eps0: float | None = None
    eps1: float = 1e-4
    eps2: float | None = None
    max_iter: int = 200
    seed: int = 0
    wmmse_max_iter: int = 50
    mm_max_iter: int = 500
    qcqp_tol: float = 1e-7
    qcqp_max_iter: int = 100

    def resolved(self, power_budget):
        root = float(np.sqrt(power_budget))
        eps0 = 1e-3 * root if self.eps0 is None else float(self.eps0)
        eps2 = 1e-5 * root if self.eps2 is None else float(self.eps2)
        return eps0, eps2

    @classmethod
    def from_dict(cls, cfg):
        cfg = dict(cfg or {})
        known = set(cls.__dataclass_fields__)
        unknown = set(cfg) - known
        if unknown:
            raise ValueError(f"unknown solver options: {sorted(unknown)}")
        return cls(**cfg)


@dataclass
class AdmmState:
    v: np.ndarray
    u: np.ndarray
    d: np.ndarray
    iteration: int = 0
    residual_trace: list = field(default_factory=list)  # (||r||, ||q||)


@dataclass
class SolveReport:
    solution: PrecoderSolution
    wsr: float
    mse: float
    rmse: float
    objective_trace: list
    converged: bool
    iterations: int
    residual_trace: list = field(default_factory=list)
    lambda_reg: float = 0.0
    mode: str = ""

    def to_dict(self):
        P = self.solution.precoders
        return {
            "wsr": self.wsr,
            "mse": self.mse,
            "rmse": self.rmse,
            "iterations": self.iterations,
            "converged": self.converged,
            "lambda": self.lambda_reg,
            "mode": self.mode,
            "objective_trace": list(map(float, self.objective_trace)),
            "residual_trace": [[float(r), float(q)] for r, q in self.residual_trace],
            "precoders": {"re": P.real.tolist(), "im": P.imag.tolist()},
            "common_split": self.solution.common_split.tolist(),
        }

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, doc):
        P = np.asarray(doc["precoders"]["re"]) + 1j * np.asarray(doc["precoders"]["im"])
        sol = PrecoderSolution(P, np.asarray(doc["common_split"], dtype=float))
        return cls(sol, doc["wsr"], doc["mse"], doc["rmse"], list(doc["objective_trace"]),
                   bool(doc["converged"]), int(doc["iterations"]),
                   [tuple(x) for x in doc.get("residual_trace", [])],
                   float(doc.get("lambda", 0.0)), doc.get("mode", ""))


def _precoder_part(x, k_users):
    return np.asarray(x)[k_users:]


def dual_update(d, v, u):
    """``d + (v - u)`` on the precoder part; ``v`` and ``u`` are stacked vectors."""
    d = np.asarray(d)
    K = np.asarray(v).size - d.size
    return d + (_precoder_part(v, K) - _precoder_part(u, K))


def initial_point(scenario, mode, seed=0):
    """Starting ``(v, u, d)``.

    Private precoders follow the user channels (MRC), the common precoder
    the dominant eigenvector of ``sum_k h_k h_k^H`` and the radar precoder
    is random.  Every active column gets an equal share of P_t; ``u`` is the
    per-antenna normalisation of ``v``.  The common split starts at one bit
    per user and ``d`` is small and random.  The random draws do not depend
    on ``mode``, so different modes share the same starting data.
    """
    K, N = scenario.k_users, scenario.n_tx
    H = scenario.channels.H
    rng = np.random.default_rng(seed)
    radar_dir = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    d = 1e-2 * (rng.standard_normal((N, K + 2)) + 1j * rng.standard_normal((N, K + 2)))

    P = np.zeros((N, K + 2), complex)
    _, vecs = np.linalg.eigh(H.T @ H.conj())  # sum_k h_k h_k^H
    P[:, 0] = vecs[:, -1]
    P[:, 1:K + 1] = (H / np.linalg.norm(H, axis=1, keepdims=True)).T
    P[:, -1] = radar_dir / np.linalg.norm(radar_dir)
    cols = mode.active_columns(K)
    P *= np.sqrt(scenario.power_budget / len(cols))
    sol = PrecoderSolution(P, np.ones(K)).pinned(mode)
    d[:, [c for c in range(K + 2) if c not in cols]] = 0

    v = stack(sol)
    u_sol = PrecoderSolution(np.zeros_like(P), sol.common_split)
    u_sol.precoders[:, cols] = mm.per_antenna_minimizer(sol.precoders[:, cols],
                                                        scenario.power_budget)
    return v, stack(u_sol), d.reshape(-1, order="F")


def _feasible_solution(u, v, scenario, mode):
    """u-side precoders with v's split pulled back to the decodable region."""
    K, N = scenario.k_users, scenario.n_tx
    sol = unstack(u, K, N).pinned(mode)
    split = unstack(v, K, N).common_split
    sol.common_split = comms.feasible_split(split, sol, scenario.channels, mode)
    return sol


def _objective(sol, scenario, mode, lambda_reg):
    """(1 - lam) * WSR - lam * MSE."""
    value = comms.wsr(sol, scenario.channels, mode, scenario.rate_weights)
    return (1.0 - lambda_reg) * value - lambda_reg * radar.beampattern_mse(sol, scenario)


def run_admm(scenario, mode, lambda_reg, config=None, *, callback=None):
    """Jointly design the split and the precoders for a weighting ``lambda_reg``.

    Parameters
    ----------
    scenario : Scenario
    mode : ModeConfig
    lambda_reg : float
        Weight of the beampattern MSE, in [0, 1].
    config : AdmmConfig, optional
    callback : callable, optional
        Called as ``callback(state)`` after every iteration.

    Returns
    -------
    SolveReport
        Built from the u-side precoders, which meet the per-antenna power
        constraint exactly, and the v-side split rescaled to be decodable.

    Raises
    ------
    AdmmError
        If a sub-solver fails; the message names the ADMM iteration.
    """
    if not 0.0 <= lambda_reg <= 1.0:
        raise ValueError("lambda_reg must lie in [0, 1]")
    config = config or AdmmConfig()
    eps0, eps2 = config.resolved(scenario.power_budget)
    K, N = scenario.k_users, scenario.n_tx
    rho = config.rho

    v, u, d = initial_point(scenario, mode, config.seed)
    state = AdmmState(v, u, d)
    objective_trace = []
    converged = False

    for it in range(1, config.max_iter + 1):
        try:
            v, _ = wmmse.v_update(state.u, state.d, scenario, mode, lambda_reg, rho,
                                  tol=config.eps1, max_outer=config.wmmse_max_iter,
                                  qcqp_tol=config.qcqp_tol,
                                  qcqp_max_iter=config.qcqp_max_iter)
        except Exception as exc:
            raise AdmmError(f"v-update failed at ADMM iteration {it}: {exc}") from exc
        try:
            u, _ = mm.u_update(v, state.d, scenario, mode, lambda_reg, rho, tol=eps2,
                               max_iter=config.mm_max_iter, u_prev=state.u)
        except Exception as exc:
            raise AdmmError(f"u-update failed at ADMM iteration {it}: {exc}") from exc

        d = dual_update(state.d, v, u)
        r = float(np.linalg.norm(_precoder_part(v, K) - _precoder_part(u, K)))
        q = float(np.linalg.norm(_precoder_part(u, K) - _precoder_part(state.u, K)))
        state.v, state.u, state.d = v, u, d
        state.iteration = it
        state.residual_trace.append((r, q))

        sol = _feasible_solution(u, v, scenario, mode)
        objective_trace.append(_objective(sol, scenario, mode, lambda_reg))
        log.debug("ADMM %d: objective %.6g, r %.3e, q %.3e", it, objective_trace[-1], r, q)
        if callback is not None:
            callback(state)
        if r <= eps0 and q <= eps0:
            converged = True
            break

    sol = _feasible_solution(state.u, state.v, scenario, mode)
    mse = radar.beampattern_mse(sol, scenario)
    return SolveReport(
        solution=sol,
        wsr=comms.wsr(sol, scenario.channels, mode, scenario.rate_weights),
        mse=mse,
        rmse=float(np.sqrt(mse)),
        objective_trace=objective_trace,
        converged=converged,
        iterations=state.iteration,
        residual_trace=list(state.residual_trace),
        lambda_reg=float(lambda_reg),
        mode=mode.label,
    )

