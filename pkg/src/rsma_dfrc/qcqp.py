"""Dense convex QCQP solver (primal-dual interior point, Mehrotra predictor-corrector).

Problems are stated over a complex vector ``x`` and a real vector ``y``.
Every function is a :class:`Quadratic`

    f(x, y) = x^H Hc x + Re{gc^H x} + y^T Hr y + gr^T y + const

and the solver minimises the objective subject to ``f_i(x, y) <= 0`` and
optional ``y_j >= 0``.  Internally the complex part is embedded as real and
imaginary blocks.

The method is a feasible one: a phase-1 problem ``min t s.t. f_i <= t``
produces a strictly feasible start, after which every iterate keeps all
constraints strictly satisfied and steps backtrack on the centred KKT
residual.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

__all__ = ["Quadratic", "ConvexQcqp", "QcqpSolution", "Status", "solve"]


class Status(enum.Enum):
    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    INFEASIBLE = "infeasible"


@dataclass
class Quadratic:
    hess_c: np.ndarray | None = None
    lin_c: np.ndarray | None = None
    hess_r: np.ndarray | None = None
    lin_r: np.ndarray | None = None
    const: float = 0.0

    def value(self, x, y):
        v = float(self.const)
        if self.hess_c is not None:
            v += float(np.real(np.vdot(x, self.hess_c @ x)))
        if self.lin_c is not None:
            v += float(np.real(np.vdot(self.lin_c, x)))
        if self.hess_r is not None:
            v += float(y @ self.hess_r @ y)
        if self.lin_r is not None:
            v += float(self.lin_r @ y)
        return v

    def embed(self, n_c, n_r):
        """Real form ``(P, q, r)`` with ``f = z^T P z / 2 + q^T z + r``."""
        n = 2 * n_c + n_r
        P = np.zeros((n, n))
        q = np.zeros(n)
        if self.hess_c is not None:
            H = np.asarray(self.hess_c, dtype=complex)
            A, B = H.real, H.imag
            P[:n_c, :n_c] = 2 * A
            P[:n_c, n_c:2 * n_c] = -2 * B
            P[n_c:2 * n_c, :n_c] = 2 * B
            P[n_c:2 * n_c, n_c:2 * n_c] = 2 * A
        if self.lin_c is not None:
            g = np.asarray(self.lin_c, dtype=complex)
            q[:n_c] = g.real
            q[n_c:2 * n_c] = g.imag
        if self.hess_r is not None:
            P[2 * n_c:, 2 * n_c:] = 2 * np.asarray(self.hess_r, dtype=float)
        if self.lin_r is not None:
            q[2 * n_c:] = self.lin_r
        return 0.5 * (P + P.T), q, float(self.const)


@dataclass
class ConvexQcqp:
    n_complex: int
    n_real: int
    objective: Quadratic
    constraints: list = field(default_factory=list)
    nonneg: np.ndarray | None = None  # boolean mask over the real variables

    def __post_init__(self):
        if self.nonneg is None:
            self.nonneg = np.zeros(self.n_real, dtype=bool)
        self.nonneg = np.asarray(self.nonneg, dtype=bool)
        if self.nonneg.shape != (self.n_real,):
            raise ValueError("nonneg mask must cover the real variables")
        for f in [self.objective, *self.constraints]:
            P, _, _ = f.embed(self.n_complex, self.n_real)
            if P.size and np.linalg.eigvalsh(P)[0] < -1e-9 * max(1.0, np.abs(P).max()):
                raise ValueError("quadratic term is not positive semidefinite")

    def split(self, z):
        n_c = self.n_complex
        return z[:n_c] + 1j * z[n_c:2 * n_c], z[2 * n_c:].copy()


@dataclass
class QcqpSolution:
    x: np.ndarray
    y: np.ndarray
    objective_value: float
    kkt_residual: float
    status: Status
    iterations: int
    multipliers: np.ndarray
    objective_trace: list = field(default_factory=list)

    @property
    def point(self):
        return np.concatenate([self.x, self.y.astype(complex)])


_NEIGHBOURHOOD = 1e-2


def _fraction_to_boundary(v, dv, frac):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return min(1.0, frac * float(np.min(-v[neg] / dv[neg])))


class _Funcs:
    """Real embedded objective and constraints, vectorised over constraints."""

    def __init__(self, P0, q0, r0, Ps, qs, rs):
        self.P0, self.q0, self.r0 = P0, q0, r0
        self.Ps, self.qs, self.rs = Ps, qs, rs
        self.quad = np.array([np.any(Pi) for Pi in Ps], dtype=bool)

    @property
    def m(self):
        return len(self.rs)

    def objective(self, z):
        return float(0.5 * z @ self.P0 @ z + self.q0 @ z + self.r0)

    def cons(self, z):
        Pz = self.Ps @ z
        return 0.5 * (Pz @ z) + self.qs @ z + self.rs, Pz + self.qs

    def hessian(self, lam):
        if np.any(self.quad):
            return self.P0 + np.tensordot(lam[self.quad], self.Ps[self.quad], axes=1)
        return self.P0.copy()


def _kkt(funcs, z, lam):
    f, J = funcs.cons(z)
    r_d = funcs.P0 @ z + funcs.q0 + J.T @ lam
    return max(float(np.max(np.abs(r_d))) if len(z) else 0.0,
               float(np.max(np.maximum(f, 0.0))),
               float(np.max(np.abs(lam * f))))


def _interior_point(funcs, z, tol, max_iter, stop=None):
    """Primal-dual iterations from a strictly feasible ``z``.

    Returns ``(z, lam, status, iterations, trace, best)`` where ``best`` is
    the ``(kkt, z, lam)`` triple with the smallest residual seen.
    """
    n, m = len(z), funcs.m
    f, _ = funcs.cons(z)
    lam = 1.0 / np.maximum(-f, 1e-12)
    eye = np.eye(n)
    trace = []
    best = None
    status = Status.MAX_ITER
    it = 0
    for it in range(1, max_iter + 1):
        f, J = funcs.cons(z)
        s = -f
        g0 = funcs.P0 @ z + funcs.q0
        r_d = g0 + J.T @ lam
        mu = float(s @ lam) / m
        trace.append(funcs.objective(z))
        res = _kkt(funcs, z, lam)
        if best is None or res < best[0]:
            best = (res, z.copy(), lam.copy())
        if res <= tol or (stop is not None and stop(z, s @ lam)):
            status = Status.OPTIMAL
            break

        D = lam / s
        K = funcs.hessian(lam) + (J.T * D) @ J
        reg = 1e-14 * max(1.0, float(np.max(np.abs(np.diag(K))))) if n else 0.0
        try:
            factor = linalg.cho_factor(K + reg * eye, check_finite=False)
            lin_solve = lambda b: linalg.cho_solve(factor, b, check_finite=False)  # noqa: E731
        except linalg.LinAlgError:
            lin_solve = lambda b: np.linalg.lstsq(K, b, rcond=None)[0]  # noqa: E731

        def direction(r_c):
            # linearised: -lam*(J dz) + s*dlam = -r_c
            dz = lin_solve(-r_d + J.T @ (r_c / s))
            dlam = D * (J @ dz) - r_c / s
            return dz, dlam

        # predictor gives the centring weight, corrector adds the cross term
        dz_a, dlam_a = direction(s * lam)
        ds_a = -J @ dz_a
        a_aff = min(_fraction_to_boundary(s, ds_a, 1.0),
                    _fraction_to_boundary(lam, dlam_a, 1.0))
        mu_aff = float((s + a_aff * ds_a) @ (lam + a_aff * dlam_a)) / m
        sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0

        def centred(z_, lam_):
            # strictly feasible and inside a wide neighbourhood of the central path
            s_ = -funcs.cons(z_)[0]
            if np.min(s_) <= 0:
                return False
            prod = s_ * lam_
            return float(np.min(prod)) >= _NEIGHBOURHOOD * float(np.mean(prod))

        def merit(z_, lam_):
            f_, J_ = funcs.cons(z_)
            rd = funcs.P0 @ z_ + funcs.q0 + J_.T @ lam_
            return float(np.linalg.norm(rd)) - float(lam_ @ f_)

        # the aggressive Mehrotra target can leave the neighbourhood when the
        # constraints curve, so more conservative centring weights are tried
        # on the same factorisation and the best accepted step is kept
        candidates = [(sigma, ds_a * dlam_a), (sigma, 0.0),
                      (max(sigma, 0.1), 0.0), (max(sigma, 0.5), 0.0)]
        step, best_merit = None, np.inf
        for sig, cross in candidates:
            target = sig * mu
            dz, dlam = direction(s * lam - target + cross)

            def residual(z_, lam_):
                f_, J_ = funcs.cons(z_)
                rd = funcs.P0 @ z_ + funcs.q0 + J_.T @ lam_
                return np.sqrt(rd @ rd + np.sum((-lam_ * f_ - target) ** 2))

            r0 = residual(z, lam)
            alpha = _fraction_to_boundary(lam, dlam, 0.99)
            while alpha > 1e-12 and not centred(z + alpha * dz, lam + alpha * dlam):
                alpha *= 0.5
            while alpha > 1e-12 and residual(z + alpha * dz, lam + alpha * dlam) > (
                    1 - 0.01 * alpha) * r0:
                alpha *= 0.5
            if alpha <= 1e-12:
                continue
            value = merit(z + alpha * dz, lam + alpha * dlam)
            if value < best_merit:
                step, best_merit = (alpha, dz, dlam), value
            if alpha >= 0.5:
                break
        if step is None:
            break  # no progress possible at working precision
        alpha, dz, dlam = step
        z = z + alpha * dz
        lam = lam + alpha * dlam
    else:
        res = _kkt(funcs, z, lam)
        if res <= tol:
            status = Status.OPTIMAL
        if res < best[0]:
            best = (res, z.copy(), lam.copy())
    return z, lam, status, it, trace, best


def solve(problem, tol=1e-7, max_iter=100, x0=None, y0=None):
    """Minimise ``problem`` with a primal-dual interior-point method.

    Parameters
    ----------
    problem : ConvexQcqp
    tol : float
        Bound on the KKT residual (stationarity, constraint violation and
        complementarity, all absolute, infinity norm).
    max_iter : int
        Iteration budget, shared by the feasibility phase and the main phase.
    x0, y0 : ndarray, optional
        Initial point hint; it need not be feasible.

    Returns
    -------
    QcqpSolution
        ``status`` is OPTIMAL, MAX_ITER (best iterate) or INFEASIBLE when no
        strictly feasible point was found.
    """
    n_c, n_r = problem.n_complex, problem.n_real
    n = 2 * n_c + n_r
    P0, q0, r0 = problem.objective.embed(n_c, n_r)

    Ps, qs, rs = [], [], []
    for f in problem.constraints:
        P, q, r = f.embed(n_c, n_r)
        Ps.append(P)
        qs.append(q)
        rs.append(r)
    for j in np.flatnonzero(problem.nonneg):
        q = np.zeros(n)
        q[2 * n_c + j] = -1.0
        Ps.append(np.zeros((n, n)))
        qs.append(q)
        rs.append(0.0)
    m = len(qs)
    Ps = np.array(Ps).reshape(m, n, n)
    qs = np.array(qs).reshape(m, n)
    rs = np.array(rs, dtype=float)
    funcs = _Funcs(P0, q0, r0, Ps, qs, rs)

    z = np.zeros(n)
    if x0 is not None:
        x0 = np.asarray(x0, dtype=complex)
        z[:n_c], z[n_c:2 * n_c] = x0.real, x0.imag
    if y0 is not None:
        z[2 * n_c:] = y0

    if m == 0:
        # unconstrained: one Newton step on the quadratic
        z = z - np.linalg.lstsq(P0, P0 @ z + q0, rcond=None)[0]
        res = float(np.max(np.abs(P0 @ z + q0))) if n else 0.0
        x, y = problem.split(z)
        obj = funcs.objective(z)
        status = Status.OPTIMAL if res <= tol else Status.MAX_ITER
        return QcqpSolution(x, y, obj, res, status, 1, np.zeros(0), [obj])

    # phase 1 over (z, t): min t + (delta/2)||z - z0||^2 s.t. f_i(z) - t <= 0.
    # Its duality gap ``eta`` bounds t - t*, so once max f <= -eta the point is
    # at least half as deep inside the feasible set as the deepest one; a
    # feasible but near-boundary start is recentred this way too.  The small
    # proximal term keeps the Newton systems nonsingular in directions no
    # constraint sees.
    f, _ = funcs.cons(z)
    t0 = max(float(np.max(f)), 0.0) + 1.0
    delta = 1e-8
    P1 = np.zeros((n + 1, n + 1))
    P1[:n, :n] = delta * np.eye(n)
    q1 = np.zeros(n + 1)
    q1[:n] = -delta * z
    q1[n] = 1.0
    Ps1 = np.zeros((m, n + 1, n + 1))
    Ps1[:, :n, :n] = Ps
    qs1 = np.concatenate([qs, -np.ones((m, 1))], axis=1)
    phase1 = _Funcs(P1, q1, 0.5 * delta * float(z @ z), Ps1, qs1, rs)
    margin = 1e-12 * max(1.0, float(np.max(np.abs(rs))))

    def deep_enough(w, eta):
        worst = float(np.max(funcs.cons(w[:n])[0]))
        return worst < -margin and worst <= -eta

    w, _, _, used, _, best1 = _interior_point(
        phase1, np.append(z, t0), tol=0.0, max_iter=max_iter, stop=deep_enough)
    z = w[:n]
    f, _ = funcs.cons(z)
    if np.max(f) >= -margin:
        z = best1[1][:n]
        f, _ = funcs.cons(z)
    if np.max(f) >= 0:
        x, y = problem.split(z)
        lam = np.zeros(m)
        return QcqpSolution(x, y, funcs.objective(z), _kkt(funcs, z, lam),
                            Status.INFEASIBLE, used, lam, [])

    z, lam, status, it, trace, best = _interior_point(
        funcs, z, tol, max(1, max_iter - used))
    res = _kkt(funcs, z, lam)
    if status is not Status.OPTIMAL and best[0] < res:
        res, z, lam = best
    x, y = problem.split(z)
    return QcqpSolution(x, y, funcs.objective(z), res, status, used + it, lam, trace)
