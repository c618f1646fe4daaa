"""Tradeoff sweeps, time/frequency-division baselines and result export."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import comms, radar, wmmse
from .admm import AdmmConfig, initial_point, run_admm
from .scenario import linear_to_db
from .solution import ModeConfig, PrecoderSolution, unstack

__all__ = [
    "SweepSpec",
    "TradeoffPoint",
    "DEFAULT_LAMBDAS",
    "run_tradeoff_sweep",
    "comm_only_design",
    "tdrc_curve",
    "fdrc_curve",
    "radar_band_precoder",
    "matched_rmse_wsr",
    "export",
    "load_results",
    "export_beampattern",
    "export_lbibr",
    "TRADEOFF_COLUMNS",
]

log = logging.getLogger(__name__)

DEFAULT_LAMBDAS = tuple(10.0 ** np.arange(-7, -2.5, 0.5))
TRADEOFF_COLUMNS = ("lambda", "mode", "wsr_bps_hz", "rmse", "converged", "iterations")
COMM_MODE = ModeConfig.from_label("rsmaxno-rs")


@dataclass
class SweepSpec:
    lambdas: list
    modes: list
    scenario: object
    seeds: list = field(default_factory=lambda: [0])
    config: AdmmConfig = field(default_factory=AdmmConfig)
    workers: int = 1

    def __post_init__(self):
        self.lambdas = [float(x) for x in self.lambdas]
        if not self.lambdas or not self.modes or not self.seeds:
            raise ValueError("lambdas, modes and seeds must be non-empty")
        if any(not 0.0 <= x <= 1.0 for x in self.lambdas):
            raise ValueError("lambdas must lie in [0, 1]")
        self.lambdas.sort()
        self.modes = [m if isinstance(m, ModeConfig) else ModeConfig.from_label(m)
                      for m in self.modes]


@dataclass
class TradeoffPoint:
    """One operating point.

    For the baselines ``lambda_reg`` carries the curve parameter (time share
    for TDRC, communication power share for FDRC) and ``mode`` is ``tdrc`` or
    ``fdrc``.  ``rmse`` is NaN where it does not apply.
    """

    lambda_reg: float
    mode: str
    wsr: float
    rmse: float
    converged: bool = True
    iterations: int = 0
    seed: int = 0
    error: str | None = None

    def __post_init__(self):
        if self.rmse < 0:
            raise ValueError("rmse must be non-negative")


def _solve_point(args):
    scenario, mode, lam, seed, config = args
    cfg = AdmmConfig(**{**asdict(config), "seed": seed})
    try:
        rep = run_admm(scenario, mode, lam, cfg)
    except Exception as exc:  # recorded, the sweep goes on
        log.warning("point lambda=%g mode=%s failed: %s", lam, mode.label, exc)
        return TradeoffPoint(lam, mode.label, math.nan, math.nan, False, 0, seed, str(exc))
    return TradeoffPoint(lam, mode.label, rep.wsr, rep.rmse, rep.converged,
                         rep.iterations, seed)


def run_tradeoff_sweep(spec):
    """Run ADMM for every (seed, mode, lambda) of ``spec``; failures become NaN points."""
    jobs = [(spec.scenario, mode, lam, seed, spec.config)
            for seed in spec.seeds for mode in spec.modes for lam in spec.lambdas]
    if spec.workers > 1:
        with ProcessPoolExecutor(spec.workers) as pool:
            return list(pool.map(_solve_point, jobs))
    return [_solve_point(job) for job in jobs]


def comm_only_design(scenario, power=None, *, tol=1e-4, max_outer=200):
    """RSMA precoders maximising the WSR under a total power budget, no radar term.

    Started from MRC private precoders and the dominant common direction.
    """
    K, N = scenario.k_users, scenario.n_tx
    power = scenario.power_budget if power is None else float(power)
    if power <= 0:
        return PrecoderSolution.zeros(N, K), 0.0
    sc = scenario if power == scenario.power_budget else replace(scenario, power_budget=power)
    v0, _, _ = initial_point(sc, COMM_MODE)
    v, _ = wmmse.v_update(v0, np.zeros(N * (K + 2), complex), sc, COMM_MODE,
                          lambda_reg=0.0, rho=0.0, tol=tol, max_outer=max_outer)
    sol = unstack(v, K, N)
    return sol, comms.wsr(sol, scenario.channels, COMM_MODE, scenario.rate_weights)


def radar_band_precoder(scenario, power_share=1.0):
    """Radar-only precoder scaled to ``power_share * P_t``."""
    P0 = scenario.desired.radar_precoder
    if P0 is None:
        raise ValueError("scenario carries no radar-only precoder")
    return np.sqrt(power_share) * np.asarray(P0)


def _pattern_rmse(P, scenario):
    achieved = radar.pattern_values(P, scenario.steering())
    return float(np.sqrt(np.sum((scenario.desired.levels - achieved) ** 2)))


def tdrc_curve(scenario, alphas, comm=None):
    """Time division: a fraction ``alpha`` of time for communication at full power.

    ``comm`` may pass a precomputed ``(solution, wsr)`` from
    :func:`comm_only_design`.  At ``alpha = 1`` there is no radar slot and the
    reported RMSE is that of the communication design (``error`` flags it).
    """
    sol, wsr_comm = comm if comm is not None else comm_only_design(scenario)
    rmse_radar = _pattern_rmse(radar_band_precoder(scenario), scenario)
    rmse_comm = _pattern_rmse(sol.precoders, scenario)
    out = []
    for a in alphas:
        a = float(a)
        if not 0.0 <= a <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if a == 1.0:
            out.append(TradeoffPoint(a, "tdrc", wsr_comm, rmse_comm,
                                     error="no radar slot; rmse of the communication design"))
        else:
            out.append(TradeoffPoint(a, "tdrc", a * wsr_comm, rmse_radar))
    return out


def fdrc_curve(scenario, power_splits):
    """Frequency division: communication on ``P_C = s * P_t``, radar on the rest.

    The radar band reuses the full-power radar-only design scaled by
    ``sqrt(P_R / P_t)``; communication sees no radar interference.
    """
    out = []
    pt = scenario.power_budget
    for s in power_splits:
        s = float(s)
        if not 0.0 <= s <= 1.0:
            raise ValueError("power split must lie in [0, 1]")
        _, w = comm_only_design(scenario, s * pt)
        P = radar_band_precoder(scenario, 1.0 - s)
        out.append(TradeoffPoint(s, "fdrc", w, _pattern_rmse(P, scenario)))
    return out


def matched_rmse_wsr(points, rmse_grid):
    """WSR of a curve at the given RMSE values by linear interpolation.

    Only the non-dominated points (no other point has both lower RMSE and
    higher WSR) are used, so a sweep point stuck in a poor local optimum does
    not bend the curve.  Points with NaN values are dropped; RMSE values
    outside the sampled range give NaN.
    """
    pts = sorted((p.rmse, -p.wsr) for p in points
                 if np.isfinite(p.rmse) and np.isfinite(p.wsr))
    front, best = [], -math.inf
    for r, neg_w in pts:
        if -neg_w > best:
            front.append((r, -neg_w))
            best = -neg_w
    pts = front
    if not pts:
        return np.full(len(np.atleast_1d(rmse_grid)), np.nan)
    r = np.array([p[0] for p in pts])
    w = np.array([p[1] for p in pts])
    return np.interp(np.atleast_1d(rmse_grid), r, w, left=np.nan, right=np.nan)


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def _round12(x):
    x = float(x)
    return float(f"{x:.12g}") if math.isfinite(x) else None


def export(results, path, format="csv"):
    """Write tradeoff points as CSV (documented columns) or JSON.

    Numbers carry 12 significant digits so output is bit-stable.
    """
    path = Path(path)
    try:
        if format == "csv":
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(TRADEOFF_COLUMNS)
                for p in results:
                    w.writerow([_fmt(p.lambda_reg), p.mode, _fmt(p.wsr), _fmt(p.rmse),
                                _fmt(bool(p.converged)), _fmt(p.iterations)])
        elif format == "json":
            doc = [{"lambda": _round12(p.lambda_reg), "mode": p.mode,
                    "wsr_bps_hz": _round12(p.wsr), "rmse": _round12(p.rmse),
                    "converged": bool(p.converged), "iterations": int(p.iterations),
                    "seed": int(p.seed), "error": p.error} for p in results]
            path.write_text(json.dumps(doc, indent=2) + "\n")
        else:
            raise ValueError(f"unknown export format {format!r}")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path


def load_results(path):
    """Read back a CSV or JSON file written by :func:`export`."""
    path = Path(path)
    nan = lambda x: math.nan if x is None else float(x)  # noqa: E731
    if path.suffix == ".json":
        doc = json.loads(path.read_text())
        return [TradeoffPoint(nan(d["lambda"]), d["mode"], nan(d["wsr_bps_hz"]),
                              nan(d["rmse"]), d["converged"], d["iterations"],
                              d.get("seed", 0), d.get("error")) for d in doc]
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [TradeoffPoint(float(r["lambda"]), r["mode"], float(r["wsr_bps_hz"]),
                          float(r["rmse"]), r["converged"] == "true", int(r["iterations"]))
            for r in rows]


def export_beampattern(sol, scenario, path):
    """CSV of the achieved pattern split by stream next to the desired levels."""
    trace = radar.beampattern(sol, scenario)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta_deg", "total", "common", "private_sum", "radar", "desired"])
        for row, desired in zip(trace.rows(), scenario.desired.levels):
            w.writerow([_fmt(float(x)) for x in (*row, desired)])
    return path


def export_lbibr(scenario, path):
    """CSV of the IBR lower bound over the scenario grid (linear and dB)."""
    values = radar.lb_ibr(scenario.channels, scenario.grid.angles, scenario.geometry)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta_deg", "lb_ibr", "lb_ibr_db"])
        for th, val in zip(scenario.grid.angles, values):
            db = linear_to_db(val) if val > 0 else -math.inf
            w.writerow([_fmt(float(th)), _fmt(float(val)), _fmt(float(db))])
    return path
