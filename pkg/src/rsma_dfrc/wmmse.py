"""WMMSE v-update: alternate MMSE equalizers/weights with a convex QCQP.

The augmented WMSE inside the QCQP uses natural logarithms,
``xi = w * eps - ln(w)``, for which ``w = 1/eps`` is the exact minimiser and
``min xi = 1 - R`` in nats.  Rates and the common split stay in bits; the
conversion factor ``ln 2`` is folded into the assembled problem.  With this
choice every outer iteration is an exact block-coordinate step and the
v-update objective cannot increase.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import comms, qcqp
from .solution import PrecoderSolution, stack, unstack

__all__ = [
    "EqualizerWeights",
    "interference_terms",
    "mmse_step",
    "stream_mses",
    "augmented_wmse",
    "VUpdateProblem",
    "assemble_vupdate_qcqp",
    "vupdate_objective",
    "VUpdateInfo",
    "v_update",
]

log = logging.getLogger(__name__)
LN2 = np.log(2.0)


@dataclass
class EqualizerWeights:
    g_common: np.ndarray
    g_private: np.ndarray
    w_common: np.ndarray
    w_private: np.ndarray
    # MMSE values the weights were derived from
    eps_common: np.ndarray
    eps_private: np.ndarray


def _all_terms(sol, channels, mode):
    G = comms.effective_gains(sol, channels)
    G2 = np.abs(G) ** 2
    t_private = G2[:, 1:-1].sum(axis=1) + mode.delta_c * G2[:, -1] + channels.noise_power
    t_common = t_private + G2[:, 0]
    return G, t_common, t_private


def interference_terms(sol, channels, k, mode):
    """Received power terms (T_common, T_private) at user ``k``."""
    _, tc, tp = _all_terms(sol, channels, mode)
    return float(tc[k]), float(tp[k])


def mmse_step(sol, channels, mode):
    """MMSE equalizers and weights ``w = 1/eps_mmse`` at the current precoders."""
    G, tc, tp = _all_terms(sol, channels, mode)
    k = np.arange(G.shape[0])
    own_c = G[:, 0]
    own_p = G[k, k + 1]
    g_c = np.conj(own_c) / tc
    g_p = np.conj(own_p) / tp
    eps_c = (tc - np.abs(own_c) ** 2) / tc
    eps_p = (tp - np.abs(own_p) ** 2) / tp
    return EqualizerWeights(g_c, g_p, 1.0 / eps_c, 1.0 / eps_p, eps_c, eps_p)


def stream_mses(sol, channels, mode, g_common, g_private):
    """MSE of common and private estimates for arbitrary equalizers."""
    G, tc, tp = _all_terms(sol, channels, mode)
    k = np.arange(G.shape[0])
    eps_c = np.abs(g_common) ** 2 * tc - 2 * np.real(g_common * G[:, 0]) + 1
    eps_p = np.abs(g_private) ** 2 * tp - 2 * np.real(g_private * G[k, k + 1]) + 1
    return eps_c, eps_p


def augmented_wmse(w, eps, base=2.0):
    """``w * eps - log_base(w)``; at ``w = 1/eps`` this equals ``1 - R`` (same base)."""
    return w * eps - np.log(w) / np.log(base)


@dataclass
class VUpdateProblem:
    """Assembled QCQP plus the bookkeeping to map its solution back."""

    problem: qcqp.ConvexQcqp
    columns: list
    n_tx: int
    k_users: int

    def unpack(self, x, y):
        P = np.zeros((self.n_tx, self.k_users + 2), complex)
        P[:, self.columns] = x.reshape((self.n_tx, len(self.columns)), order="F")
        c = np.maximum(y, 0.0) if y.size else np.zeros(self.k_users)
        return PrecoderSolution(P, c)

    def pack(self, sol):
        x = sol.precoders[:, self.columns].reshape(-1, order="F")
        y = sol.common_split.copy() if self.problem.n_real else np.zeros(0)
        return x, y


def assemble_vupdate_qcqp(eqw, channels, mode, lambda_reg, rho, anchor,
                          rate_weights, power_budget):
    """Convex QCQP of the v-update for fixed equalizers and weights.

    Minimises ``(1-lam) sum_k mu_k (xi_k / ln2 - 1/ln2 - C_k)
    + (rho/2) ||p - anchor||^2`` subject to the common-rate constraints
    ``sum C + (xi_c,k - 1)/ln2 <= 0``, ``||p||^2 <= P_t`` and ``C >= 0``.
    Columns switched off by ``mode`` are eliminated, as is the split for SDMA.

    ``anchor`` is the n_tx x (K+2) matrix ``D_p u - d``.
    """
    H = channels.H
    n_tx = H.shape[1]
    K = H.shape[0]
    cols = mode.active_columns(K)
    pos = {col: i for i, col in enumerate(cols)}
    L = len(cols)
    n_c = n_tx * L
    mu = np.asarray(rate_weights, dtype=float)
    weight = 1.0 - lambda_reg
    radar_col = K + 1
    use_radar = mode.delta_c == 1 and radar_col in pos
    outer = [np.outer(H[k], H[k].conj()) for k in range(K)]  # h_k h_k^H

    def block(col):
        i = pos[col]
        return slice(i * n_tx, (i + 1) * n_tx)

    def mse_quadratic(k, g, common):
        """eps as a quadratic of the stacked free precoders."""
        hess = np.zeros((n_c, n_c), complex)
        lin = np.zeros(n_c, complex)
        g2 = abs(g) ** 2
        terms = [col for col in range(1, K + 1)]
        if common:
            terms.append(0)
        if use_radar:
            terms.append(radar_col)
        for col in terms:
            b = block(col)
            hess[b, b] += g2 * outer[k]
        own = 0 if common else k + 1
        lin[block(own)] += -2 * np.conj(g) * H[k]
        return hess, lin, g2 * channels.noise_power + 1.0

    n_r = K if mode.common_enabled else 0

    hess0 = np.zeros((n_c, n_c), complex)
    lin0 = np.zeros(n_c, complex)
    const0 = 0.0
    for k in range(K):
        h, l, c0 = mse_quadratic(k, eqw.g_private[k], common=False)
        scale = weight * mu[k] * eqw.w_private[k] / LN2
        hess0 += scale * h
        lin0 += scale * l
        const0 += scale * c0 - weight * mu[k] * (np.log(eqw.w_private[k]) + 1.0) / LN2
    a = anchor[:, cols].reshape(-1, order="F")
    hess0 += 0.5 * rho * np.eye(n_c)
    lin0 += -rho * a
    const0 += 0.5 * rho * float(np.vdot(anchor, anchor).real)
    lin_r0 = -weight * mu if n_r else None
    objective = qcqp.Quadratic(hess0, lin0, None, lin_r0, const0)

    constraints = []
    if mode.common_enabled:
        for k in range(K):
            h, l, c0 = mse_quadratic(k, eqw.g_common[k], common=True)
            w = eqw.w_common[k]
            constraints.append(qcqp.Quadratic(
                w * h / LN2, w * l / LN2, None, np.ones(K),
                (w * c0 - np.log(w) - 1.0) / LN2))
    constraints.append(qcqp.Quadratic(np.eye(n_c), None, None, None, -float(power_budget)))

    problem = qcqp.ConvexQcqp(n_c, n_r, objective, constraints,
                              nonneg=np.ones(n_r, dtype=bool))
    return VUpdateProblem(problem, cols, n_tx, K)


def vupdate_objective(sol, channels, mode, lambda_reg, rho, anchor, rate_weights):
    """True v-update objective: -(1-lam) WSR + (rho/2)||p - anchor||^2."""
    value = comms.wsr(sol, channels, mode, rate_weights)
    prox = float(np.sum(np.abs(sol.precoders - anchor) ** 2))
    return -(1.0 - lambda_reg) * value + 0.5 * rho * prox


@dataclass
class VUpdateInfo:
    wsr_trace: list = field(default_factory=list)
    objective_trace: list = field(default_factory=list)
    kkt_residuals: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0


def v_update(u, d, scenario, mode, lambda_reg, rho, tol=1e-4, max_outer=50,
             qcqp_tol=1e-7, qcqp_max_iter=100):
    """WMMSE solution of the v-update, started from the precoders in ``u``.

    Parameters
    ----------
    u : ndarray
        Stacked ``[c; vec(P)]`` consensus variable.
    d : ndarray
        Scaled dual variable over ``vec(P)``.
    tol : float
        Stop once successive WSR values differ by at most ``tol`` (bps/Hz).

    Returns
    -------
    v : ndarray
        Stacked vector of the last iterate.
    info : VUpdateInfo
    """
    K, N = scenario.k_users, scenario.n_tx
    channels = scenario.channels
    mu = scenario.rate_weights
    start = unstack(u, K, N).pinned(mode)
    anchor = start.precoders - np.asarray(d).reshape((N, K + 2), order="F")
    # initial split from u, pulled back inside the decodable region
    sol = PrecoderSolution(start.precoders,
                           comms.feasible_split(start.common_split, start, channels, mode))

    info = VUpdateInfo()
    info.wsr_trace.append(comms.wsr(sol, channels, mode, mu))
    info.objective_trace.append(
        vupdate_objective(sol, channels, mode, lambda_reg, rho, anchor, mu))

    for it in range(1, max_outer + 1):
        eqw = mmse_step(sol, channels, mode)
        vp = assemble_vupdate_qcqp(eqw, channels, mode, lambda_reg, rho, anchor,
                                   mu, scenario.power_budget)
        x0, y0 = vp.pack(sol)
        res = qcqp.solve(vp.problem, tol=qcqp_tol, max_iter=qcqp_max_iter, x0=0.9 * x0,
                         y0=0.5 * y0 + 1e-3)
        info.kkt_residuals.append(res.kkt_residual)
        if res.status is qcqp.Status.INFEASIBLE:
            raise RuntimeError(f"v-update QCQP infeasible at WMMSE iteration {it}")
        if res.status is not qcqp.Status.OPTIMAL:
            log.debug("v-update QCQP stopped at %s (kkt %.2e)", res.status, res.kkt_residual)
        cand = vp.unpack(res.x, res.y)
        # interior-point output sits within tol of the boundary; clean it up
        pw = float(np.sum(np.abs(cand.precoders) ** 2))
        if pw > scenario.power_budget:
            cand.precoders *= np.sqrt(scenario.power_budget / pw)
        cand.common_split = comms.feasible_split(cand.common_split, cand, channels, mode)
        new_obj = vupdate_objective(cand, channels, mode, lambda_reg, rho, anchor, mu)
        sol = cand
        info.objective_trace.append(new_obj)
        info.wsr_trace.append(comms.wsr(sol, channels, mode, mu))
        info.iterations = it
        if abs(info.wsr_trace[-1] - info.wsr_trace[-2]) <= tol:
            info.converged = True
            break

    return stack(sol), info
