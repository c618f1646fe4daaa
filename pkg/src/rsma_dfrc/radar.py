"""Radar metrics: transmit beampattern, matching MSE, IBR and its lower bound."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import steering_matrix, steering_vector

__all__ = [
    "BeampatternTrace",
    "UndefinedIbrError",
    "IBR_DENOMINATOR_GUARD",
    "beampattern",
    "pattern_values",
    "beampattern_mse",
    "beampattern_rmse",
    "ibr",
    "lb_ibr",
]

IBR_DENOMINATOR_GUARD = 1e-12


class UndefinedIbrError(ZeroDivisionError):
    pass


@dataclass
class BeampatternTrace:
    theta_deg: np.ndarray
    values: np.ndarray
    common: np.ndarray
    private_sum: np.ndarray
    radar: np.ndarray

    def rows(self):
        """Rows for CSV export: theta_deg, total, common, private_sum, radar."""
        return list(zip(self.theta_deg, self.values, self.common,
                        self.private_sum, self.radar))


def pattern_values(P, steer):
    """a(theta_m)^H P P^H a(theta_m) for every row of ``steer``."""
    return np.sum(np.abs(steer.conj() @ P) ** 2, axis=1)


def beampattern(sol, scenario):
    steer = scenario.steering()
    contrib = np.abs(steer.conj() @ sol.precoders) ** 2
    return BeampatternTrace(
        theta_deg=np.asarray(scenario.grid.angles),
        values=contrib.sum(axis=1),
        common=contrib[:, 0],
        private_sum=contrib[:, 1:-1].sum(axis=1),
        radar=contrib[:, -1],
    )


def beampattern_mse(sol, scenario):
    """Sum over the grid of squared deviation from the desired pattern."""
    achieved = pattern_values(sol.precoders, scenario.steering())
    return float(np.sum((scenario.desired.levels - achieved) ** 2))


def beampattern_rmse(sol, scenario):
    return float(np.sqrt(beampattern_mse(sol, scenario)))


def ibr(sol, channels, theta, geometry):
    """Interference-to-beampattern ratio of the private streams at ``theta`` (deg).

    Numerator: total leakage of each private stream onto the other users.
    Denominator: private-stream beampattern at ``theta``.
    """
    Pp = sol.p_private
    G2 = np.abs(channels.H.conj() @ Pp) ** 2  # [j, k] = |h_j^H p_k|^2
    leakage = G2.sum() - np.trace(G2)
    a = steering_vector(theta, geometry)
    denom = float(np.sum(np.abs(a.conj() @ Pp) ** 2))
    if denom < IBR_DENOMINATOR_GUARD:
        raise UndefinedIbrError(f"private beampattern vanishes at {theta} deg")
    return float(leakage / denom)


def lb_ibr(channels, theta, geometry):
    """Precoder-free lower bound on the IBR.

    (1/N_t^2) min_k sum_{j != k} |a(theta)^H h_j|^2; vectorised over ``theta``.
    """
    scalar = np.ndim(theta) == 0
    A = steering_matrix(theta, geometry)  # (M, N)
    proj = np.abs(A.conj() @ channels.H.T) ** 2  # [m, j] = |a_m^H h_j|^2
    total = proj.sum(axis=1, keepdims=True)
    value = np.min(total - proj, axis=1) / geometry.n_tx ** 2
    return float(value[0]) if scalar else value
