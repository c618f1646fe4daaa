"""Communication metrics: SINRs, common/private rates, WSR and radar interference power."""

from __future__ import annotations

import numpy as np

__all__ = [
    "FeasibilityError",
    "FEASIBILITY_TOL",
    "effective_gains",
    "sinrs",
    "sinr_common",
    "sinr_private",
    "common_rates",
    "private_rates",
    "achievable_common_rate",
    "wsr",
    "feasible_split",
    "ipr",
]

FEASIBILITY_TOL = 1e-9


class FeasibilityError(ValueError):
    """Common-rate split exceeds the common rate decodable by every user."""

    def __init__(self, gap):
        self.gap = float(gap)
        super().__init__(f"common split exceeds the common rate by {self.gap:.3e} bps/Hz")


def effective_gains(sol, channels):
    """Matrix G with G[k, j] = h_k^H p_j over all K + 2 columns."""
    return channels.H.conj() @ sol.precoders


def sinrs(sol, channels, mode):
    """Return (gamma_common, gamma_private), each of length K."""
    G2 = np.abs(effective_gains(sol, channels)) ** 2
    signal_c = G2[:, 0]
    private = G2[:, 1:-1]
    radar = mode.delta_c * G2[:, -1]
    noise = channels.noise_power
    total_private = private.sum(axis=1)
    gamma_c = signal_c / (total_private + radar + noise)
    own = np.diag(private)
    gamma_p = own / (total_private - own + radar + noise)
    return gamma_c, gamma_p


def sinr_common(sol, channels, k, mode):
    return float(sinrs(sol, channels, mode)[0][k])


def sinr_private(sol, channels, k, mode):
    return float(sinrs(sol, channels, mode)[1][k])


def common_rates(sol, channels, mode):
    return np.log2(1.0 + sinrs(sol, channels, mode)[0])


def private_rates(sol, channels, mode):
    return np.log2(1.0 + sinrs(sol, channels, mode)[1])


def achievable_common_rate(sol, channels, mode):
    """Rate at which every user can decode the common stream (min over users)."""
    return float(np.min(common_rates(sol, channels, mode)))


def wsr(sol, channels, mode, rate_weights):
    """Weighted sum rate in bps/Hz.

    Raises
    ------
    FeasibilityError
        If the common split is not decodable, i.e. ``sum(c) > R_c + 1e-9``.
    """
    mu = np.asarray(rate_weights, dtype=float)
    c = sol.common_split if mode.common_enabled else np.zeros_like(sol.common_split)
    if mode.common_enabled:
        gap = c.sum() - achievable_common_rate(sol, channels, mode)
        if gap > FEASIBILITY_TOL:
            raise FeasibilityError(gap)
    return float(mu @ (c + private_rates(sol, channels, mode)))


def feasible_split(split, sol, channels, mode):
    """Scale ``split`` down uniformly so its sum does not exceed the common rate."""
    split = np.maximum(np.asarray(split, dtype=float), 0.0)
    if not mode.common_enabled:
        return np.zeros_like(split)
    rc = achievable_common_rate(sol, channels, mode)
    total = split.sum()
    if total > rc and total > 0:
        split = split * (rc / total)
    return split


def ipr(sol, channels):
    """Total radar-sequence interference at the users, sum_k |h_k^H p_r|."""
    return float(np.sum(np.abs(channels.H.conj() @ sol.p_radar)))
