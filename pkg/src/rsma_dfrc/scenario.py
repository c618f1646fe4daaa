"""Physical scenario: ULA geometry, angle grid, user channels, desired beampattern.

All powers are normalised to the user noise power, so a 20 dBm budget with
0 dBm noise becomes ``power_budget = 100``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

__all__ = [
    "ArrayGeometry",
    "AngleGrid",
    "ChannelSet",
    "DesiredBeampattern",
    "Scenario",
    "steering_vector",
    "steering_matrix",
    "generate_channels",
    "rectangular_template",
    "synthesize_desired_beampattern",
    "dbm_to_linear",
    "linear_to_db",
    "build_scenario",
    "paper_scenario",
    "scenario_from_config",
    "load_config",
    "PAPER_TARGETS",
]

PAPER_TARGETS = ((-6.0, 6.0), (-56.0, -44.0), (44.0, 56.0))


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array with ``n_tx`` elements spaced ``spacing`` wavelengths."""

    n_tx: int
    spacing: float = 0.5

    def __post_init__(self):
        if int(self.n_tx) < 1:
            raise ValueError(f"n_tx must be >= 1, got {self.n_tx}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be > 0, got {self.spacing}")


@dataclass(frozen=True)
class AngleGrid:
    """Strictly increasing azimuth grid in degrees within [-90, 90]."""

    angles: np.ndarray

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float).ravel()
        if angles.size == 0:
            raise ValueError("angle grid is empty")
        if np.any(np.diff(angles) <= 0):
            raise ValueError("angle grid must be strictly increasing")
        if angles[0] < -90 - 1e-12 or angles[-1] > 90 + 1e-12:
            raise ValueError("angles must lie in [-90, 90] degrees")
        angles.setflags(write=False)
        object.__setattr__(self, "angles", angles)

    @classmethod
    def uniform(cls, start=-90.0, stop=90.0, step=1.0):
        n = int(round((stop - start) / step)) + 1
        return cls(np.linspace(start, start + (n - 1) * step, n))

    def __len__(self):
        return self.angles.size


@dataclass(frozen=True)
class ChannelSet:
    """User channels stored row-wise: ``H[k]`` is h_k (length n_tx)."""

    H: np.ndarray
    noise_power: float = 1.0

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=complex)).copy()
        H.setflags(write=False)
        object.__setattr__(self, "H", H)

    @property
    def k_users(self):
        return self.H.shape[0]

    @property
    def n_tx(self):
        return self.H.shape[1]

    def subset(self, users):
        return ChannelSet(self.H[list(users)], self.noise_power)


@dataclass(frozen=True)
class DesiredBeampattern:
    levels: np.ndarray
    template_scale: float = 1.0
    # radar-only precoder that achieves ``levels`` (None when supplied directly)
    radar_precoder: np.ndarray | None = None
    converged: bool = True

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float).copy()
        if np.any(levels < 0):
            raise ValueError("desired beampattern levels must be non-negative")
        levels.setflags(write=False)
        object.__setattr__(self, "levels", levels)


@dataclass(frozen=True)
class Scenario:
    geometry: ArrayGeometry
    grid: AngleGrid
    channels: ChannelSet
    desired: DesiredBeampattern
    power_budget: float
    rate_weights: np.ndarray
    targets: tuple = field(default=())

    def __post_init__(self):
        if not self.power_budget > 0:
            raise ValueError("power_budget must be positive")
        mu = np.asarray(self.rate_weights, dtype=float).copy()
        if mu.shape != (self.channels.k_users,):
            raise ValueError("need one rate weight per user")
        if np.any(mu <= 0):
            raise ValueError("rate weights must be positive")
        mu.setflags(write=False)
        object.__setattr__(self, "rate_weights", mu)
        if self.channels.n_tx != self.geometry.n_tx:
            raise ValueError("channel length does not match the array size")
        if len(self.desired.levels) != len(self.grid):
            raise ValueError("desired beampattern does not match the angle grid")

    @property
    def n_tx(self):
        return self.geometry.n_tx

    @property
    def k_users(self):
        return self.channels.k_users

    def steering(self):
        """Steering matrix, one row a(theta_m)^T per grid angle."""
        return steering_matrix(self.grid.angles, self.geometry)

    def with_users(self, users):
        """Same radar setup serving only the listed (0-based) users."""
        users = list(users)
        return replace(
            self,
            channels=self.channels.subset(users),
            rate_weights=np.asarray(self.rate_weights)[users],
        )


def steering_vector(theta, geometry):
    """ULA steering vector a(theta) = exp(j 2 pi spacing i sin(theta)), theta in degrees."""
    i = np.arange(geometry.n_tx)
    return np.exp(2j * np.pi * geometry.spacing * i * np.sin(np.deg2rad(theta)))


def steering_matrix(thetas, geometry):
    """Rows are ``steering_vector(theta)`` for each theta in ``thetas``."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    i = np.arange(geometry.n_tx)
    phase = 2 * np.pi * geometry.spacing * np.outer(np.sin(np.deg2rad(thetas)), i)
    return np.exp(1j * phase)


def generate_channels(k_users, geometry, seed):
    """i.i.d. CN(0, 1) channels, a pure function of ``(k_users, n_tx, seed)``."""
    if k_users < 1:
        raise ValueError("k_users must be >= 1")
    rng = np.random.default_rng(seed)
    shape = (k_users, geometry.n_tx)
    H = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    return ChannelSet(H, noise_power=1.0)


def dbm_to_linear(p_dbm):
    return 10.0 ** (np.asarray(p_dbm, dtype=float) / 10.0)


def linear_to_db(value):
    return 10.0 * np.log10(value)


def rectangular_template(grid, targets):
    """0/1 indicator of the grid angles covered by any target interval."""
    angles = grid.angles
    t = np.zeros(angles.size)
    for lo, hi in targets:
        if lo > hi:
            raise ValueError(f"bad interval [{lo}, {hi}]")
        t[(angles >= lo - 1e-9) & (angles <= hi + 1e-9)] = 1.0
    return t


def synthesize_desired_beampattern(targets, grid, geometry, power_budget, *,
                                   tol=1e-6, max_outer=30, mm_tol=None,
                                   mm_max_iter=1000, initial=None):
    """Radar-only beampattern matching against a scaled rectangular template.

    Alternates a least-squares fit of the template scale with an MM run of
    the radar-only problem (``n_tx`` columns, per-antenna power budget).
    The returned levels are the pattern actually achieved by that design.

    Parameters
    ----------
    targets : sequence of (lo, hi)
        Angular intervals in degrees.
    grid : AngleGrid
    geometry : ArrayGeometry
    power_budget : float
        Linear transmit power (noise-normalised).
    tol : float
        Stop once the template scale changes by less than this.
    max_outer, mm_max_iter : int
        Budget of scale fits and of MM steps per fit.  The matching loss is
        very flat in the scale, so the default budget usually ends before
        ``tol`` is met; ``converged`` then reports False, but the returned
        levels are still exactly achievable by ``radar_precoder``.
    mm_tol : float, optional
        MM step tolerance, default ``1e-9 * sqrt(power_budget)``.
    initial : ndarray, optional
        Starting radar precoder (``n_tx`` x ``n_tx``).

    Returns
    -------
    DesiredBeampattern
    """
    from . import mm

    targets = [tuple(map(float, t)) for t in targets]
    if not targets:
        raise ValueError("at least one target interval is required")
    for lo, hi in targets:
        if lo < grid.angles[0] - 1e-9 or hi > grid.angles[-1] + 1e-9:
            raise ValueError(f"interval [{lo}, {hi}] outside the grid")

    t = rectangular_template(grid, targets)
    steer = steering_matrix(grid.angles, geometry)
    n = geometry.n_tx
    if mm_tol is None:
        mm_tol = 1e-9 * np.sqrt(power_budget)

    if initial is None:
        # beams steered at the template angles give a sensible start
        centres = [0.5 * (lo + hi) for lo, hi in targets]
        cols = [steering_vector(centres[i % len(centres)], geometry) for i in range(n)]
        P = np.array(cols).T
        P = mm.per_antenna_minimizer(P + 1e-3, power_budget)
    else:
        P = np.asarray(initial, dtype=complex)

    def achieved(P):
        return np.sum(np.abs(steer.conj() @ P) ** 2, axis=1)

    b = achieved(P)
    scale = float(t @ b / (t @ t))
    converged = False
    for _ in range(max_outer):
        state = mm.MmWorkState.build(steer, scale * t, n, power_budget)
        res = mm.minimize(P, state, lambda_reg=1.0, rho=0.0, tol=mm_tol,
                          max_iter=mm_max_iter)
        P = res.P
        b = achieved(P)
        new_scale = float(t @ b / (t @ t))
        if abs(new_scale - scale) < tol:
            scale = new_scale
            converged = True
            break
        scale = new_scale

    return DesiredBeampattern(levels=np.maximum(b, 0.0), template_scale=scale,
                              radar_precoder=P, converged=converged)


def build_scenario(*, n_tx=8, spacing=0.5, grid=None, k_users=4, seed=0,
                   channels=None, targets=PAPER_TARGETS, p_t_dbm=20.0,
                   noise_dbm=0.0, rate_weights=None, users=None, desired=None,
                   synth_options=None):
    """Assemble a :class:`Scenario`, synthesising the desired pattern if needed.

    ``users`` selects a subset (0-based) of the generated channels after
    the desired pattern is built, so subsets share one radar design.
    """
    geometry = ArrayGeometry(int(n_tx), float(spacing))
    grid = grid if grid is not None else AngleGrid.uniform()
    if channels is None:
        chans = generate_channels(int(k_users), geometry, seed)
    elif isinstance(channels, ChannelSet):
        chans = channels
    else:
        chans = ChannelSet(np.asarray(channels, dtype=complex))
    power = float(dbm_to_linear(p_t_dbm - noise_dbm))
    if desired is None:
        desired = _cached_desired(tuple(map(tuple, targets)), tuple(grid.angles),
                                  geometry, power, tuple(sorted((synth_options or {}).items())))
    elif not isinstance(desired, DesiredBeampattern):
        desired = DesiredBeampattern(np.asarray(desired, dtype=float))
    mu = np.ones(chans.k_users) if rate_weights is None else np.asarray(rate_weights, float)
    # weights may be given for the selected users only
    subset_mu = users is not None and mu.shape == (len(users),) and len(users) != chans.k_users
    full_mu = np.ones(chans.k_users) if subset_mu else mu
    scen = Scenario(geometry, grid, chans, desired, power, full_mu, tuple(map(tuple, targets)))
    if users is not None:
        scen = scen.with_users(users)
        if subset_mu:
            scen = replace(scen, rate_weights=mu)
    return scen


_DESIRED_CACHE = {}


def _cached_desired(targets, angles, geometry, power, options):
    key = (targets, angles, geometry, power, options)
    if key not in _DESIRED_CACHE:
        _DESIRED_CACHE[key] = synthesize_desired_beampattern(
            targets, AngleGrid(np.array(angles)), geometry, power, **dict(options))
    return _DESIRED_CACHE[key]


PAPER_CONFIG = Path(__file__).with_name("configs") / "paper.json"


def paper_scenario(seed=0, users=None, targets=PAPER_TARGETS):
    """N_t = 8 half-wavelength ULA, four seeded users, P_t = 20 dBm, noise 0 dBm.

    ``users`` picks a subset (0-based), e.g. ``[1, 3]`` for users 2 and 4.
    """
    return build_scenario(n_tx=8, spacing=0.5, k_users=4, seed=seed,
                          targets=targets, p_t_dbm=20.0, noise_dbm=0.0, users=users)


def load_config(path):
    """Read a JSON config; ``paper`` and other bundled names resolve to package files."""
    bundled = PAPER_CONFIG.parent / f"{path}.json"
    path = bundled if not Path(path).exists() and bundled.exists() else Path(path)
    try:
        with path.open() as fh:
            return json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc


def scenario_from_config(cfg):
    """Build a Scenario from the JSON scenario document (dict form)."""
    cfg = dict(cfg)
    g = cfg.get("grid") or {}
    grid = AngleGrid.uniform(g.get("start", -90.0), g.get("stop", 90.0), g.get("step", 1.0))
    channels = None
    if cfg.get("channels") is not None:
        arr = np.asarray(cfg["channels"], dtype=float)
        if arr.ndim != 3 or arr.shape[-1] != 2:
            raise ValueError("channels must be a K x n_tx list of [re, im] pairs")
        channels = arr[..., 0] + 1j * arr[..., 1]
    return build_scenario(
        n_tx=cfg.get("n_tx", 8),
        spacing=cfg.get("spacing", 0.5),
        grid=grid,
        k_users=cfg.get("k_users", 4),
        seed=cfg.get("seed", 0),
        channels=channels,
        targets=[tuple(t) for t in cfg.get("targets", PAPER_TARGETS)],
        p_t_dbm=cfg.get("p_t_dbm", 20.0),
        noise_dbm=cfg.get("noise_dbm", 0.0),
        rate_weights=cfg.get("rate_weights"),
        users=cfg.get("users"),
    )
