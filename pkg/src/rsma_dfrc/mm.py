"""MM u-update: two-stage quadratic majorization of the quartic pattern-matching loss.

The precoder variable is handled as an ``n_tx x L`` matrix ``P`` whose
column-major vectorisation is the stacked vector ``p``.  The per-antenna
sub-vectors of ``p`` are then simply the rows of ``P``.

With ``q_m(p) = p^H Z_m p`` the beampattern at grid angle m and
``Z_m = I_L kron a_m a_m^H``, the loss is

    f(p) = lam * sum_m (a_m - q_m(p))^2 - rho * Re{p^H d_hat}.

Each iteration replaces f by a linear surrogate ``C' - Re{p^H k_hat}`` that
touches f at the current point, and maximises ``Re{p^H k_hat}`` on the
per-antenna power set in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .solution import stack, unstack

__all__ = [
    "MmWorkState",
    "Majorizer",
    "MmResult",
    "largest_eigenvalue",
    "surrogate_objective",
    "majorize",
    "per_antenna_minimizer",
    "minimize",
    "u_update",
    "vec",
    "unvec",
]


def vec(P):
    return np.asarray(P).reshape(-1, order="F")


def unvec(p, n_tx):
    return np.asarray(p).reshape((n_tx, -1), order="F")


@dataclass
class MmWorkState:
    """Fixed data of one MM problem.

    ``steering`` holds a(theta_m)^T row-wise; ``levels`` are the desired
    pattern values a_m; ``anchor`` is d_hat as an n_tx x L matrix.
    """

    steering: np.ndarray
    levels: np.ndarray
    n_cols: int
    power_budget: float
    anchor: np.ndarray
    zm_fro_sq: np.ndarray = field(init=False)

    def __post_init__(self):
        n_tx = self.steering.shape[1]
        # ||Z_m||_F^2 = L * ||a_m a_m^H||_F^2 = L * ||a_m||^4
        self.zm_fro_sq = self.n_cols * np.sum(np.abs(self.steering) ** 2, axis=1) ** 2
        self.anchor = np.asarray(self.anchor, dtype=complex).reshape((n_tx, self.n_cols), order="F")

    @classmethod
    def build(cls, steering, levels, n_cols, power_budget, anchor=None):
        n_tx = steering.shape[1]
        if anchor is None:
            anchor = np.zeros((n_tx, n_cols), complex)
        return cls(np.asarray(steering, complex), np.asarray(levels, float), int(n_cols),
                   float(power_budget), anchor)

    @property
    def n_tx(self):
        return self.steering.shape[1]

    def z_matrix(self, m):
        a = self.steering[m]
        return np.kron(np.eye(self.n_cols), np.outer(a, a.conj()))

    def pattern(self, P):
        return np.sum(np.abs(self.steering.conj() @ P) ** 2, axis=1)


def largest_eigenvalue(H, tol=1e-10, max_iter=20000, x0=None, return_vector=False):
    """Largest algebraic eigenvalue of a Hermitian matrix by shifted power iteration.

    The iteration runs on ``S = H + ||H||_F I``, which is positive
    semidefinite, so the dominant eigenvalue is the algebraic maximum even
    when ``H`` is indefinite.  It stops once ``||H x - mu x|| <= tol * ||H||_F``.

    Rather than applying ``S`` one step at a time, ``S`` is squared
    repeatedly (with rescaling), so that after ``k`` rounds one product
    advances the iteration by ``2**k`` steps.  ``max_iter`` bounds the
    number of power steps taken.

    Returns
    -------
    lam : float
    x : ndarray, only if ``return_vector``
    resid : float, only if ``return_vector``; ``||H x - lam x||``
    """
    H = np.asarray(H)
    n = H.shape[0]
    fro = float(np.linalg.norm(H))
    if fro == 0.0:
        x = np.zeros(n, complex)
        x[0] = 1.0
        return (0.0, x, 0.0) if return_vector else 0.0
    if n == 1:
        lam = float(H[0, 0].real)
        return (lam, np.ones(1, complex), 0.0) if return_vector else lam
    if x0 is None:
        rng = np.random.default_rng(20200607)
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    else:
        x = np.asarray(x0, dtype=complex).copy()
    x = x / np.sqrt(np.vdot(x, x).real)
    shifted = H + fro * np.eye(n)
    power = shifted / (2.0 * fro)
    steps = 1
    while True:
        y = power @ x
        ny = np.sqrt(np.vdot(y, y).real)
        if ny == 0.0:
            # x sits in the null space of the shift; restart off it
            y = power @ np.roll(x, 1) + power[:, 0]
            ny = np.sqrt(np.vdot(y, y).real)
        x = y / ny
        Hx = H @ x
        lam = float(np.vdot(x, Hx).real)
        r = Hx - lam * x
        resid = float(np.sqrt(np.vdot(r, r).real))
        if resid <= tol * fro or steps >= max_iter:
            break
        power = power @ power
        power /= np.linalg.norm(power)
        steps *= 2
    return (lam, x, resid) if return_vector else lam


def surrogate_objective(P, state, lambda_reg, rho):
    """f(p) = lam * sum_m (a_m - q_m)^2 - rho * Re{p^H d_hat}."""
    q = state.pattern(P)
    lin = float(np.real(np.vdot(P, state.anchor)))
    return float(lambda_reg * np.sum((state.levels - q) ** 2) - rho * lin)


@dataclass
class Majorizer:
    """Both majorizers of f at ``P_k``.

    ``f1(p) = C_u + p^H Q' p - rho Re{p^H d_hat}``
    ``f2(p) = C_u' - Re{p^H k_hat}``

    ``Q' = I_L kron B - beta p_k p_k^H`` is kept in factored form; the dense
    matrix is only formed on request.
    """

    P_k: np.ndarray
    B: np.ndarray
    beta: float
    lam_max: float
    c_u: float
    c_u2: float
    k_hat: np.ndarray  # n_tx x L
    rho: float
    anchor: np.ndarray
    eigvec: np.ndarray | None = None

    @property
    def q_prime(self):
        p_k = vec(self.P_k)
        L = self.P_k.shape[1]
        return np.kron(np.eye(L), self.B) - self.beta * np.outer(p_k, p_k.conj())

    def apply_q_prime(self, P):
        return self.B @ P - self.beta * self.P_k * np.vdot(self.P_k, P)

    def f1(self, P):
        return float(self.c_u + np.real(np.vdot(P, self.apply_q_prime(P)))
                     - self.rho * np.real(np.vdot(P, self.anchor)))

    def f2(self, P):
        return float(self.c_u2 - np.real(np.vdot(P, self.k_hat)))


def majorize(P_k, state, lambda_reg, rho, eig_tol=1e-12, eig_start=None):
    """Linear coefficient ``k_hat`` of the second-stage majorizer at ``P_k``.

    ``k_hat = -2 (Q' - lam_max(Q') I) p_k + rho * d_hat`` with
    ``Q' = lam * sum_m [2 (q_m(p_k) - a_m) Z_m - 2 ||Z_m||_F^2 p_k p_k^H]``.
    The bounds use ``||p||^2 = P_t``, which holds on the per-antenna set.

    For ``L >= 2`` columns the top eigenvalue of ``I_L kron B`` has
    multiplicity ``L`` and the rank-one downdate can lower only one copy, so
    ``lam_max(Q') = lam_max(B)`` and the power iteration runs on the
    ``n_tx x n_tx`` matrix ``B``.
    """
    P_k = np.asarray(P_k, dtype=complex)
    n_tx, L = P_k.shape
    A = state.steering
    q = state.pattern(P_k)
    wts = 2.0 * (q - state.levels)
    # B = lam * sum_m w_m a_m a_m^H
    B = lambda_reg * ((A.T * wts) @ A.conj())
    B = 0.5 * (B + B.conj().T)
    beta = 2.0 * lambda_reg * float(np.sum(state.zm_fro_sq))
    if L >= 2:
        target = B
    else:
        p_k = P_k[:, 0]
        target = B - beta * np.outer(p_k, p_k.conj())
    lam_max, eigvec, resid = largest_eigenvalue(target, tol=eig_tol, x0=eig_start,
                                                return_vector=True)
    # the residual bounds the distance to the nearest eigenvalue; adding it
    # keeps lam_max I >= Q' when the iteration stopped short
    lam_max += resid
    pt = state.power_budget
    c_u = float(lambda_reg * np.sum(2 * state.zm_fro_sq * pt ** 2 - q ** 2 + state.levels ** 2))
    qp = B @ P_k - beta * P_k * float(np.vdot(P_k, P_k).real)
    pk2 = float(np.vdot(P_k, P_k).real)
    c_u2 = c_u + lam_max * pt + lam_max * pk2 - float(np.real(np.vdot(P_k, qp)))
    k_hat = -2.0 * (qp - lam_max * P_k) + rho * state.anchor
    return Majorizer(P_k, B, beta, lam_max, c_u, c_u2, k_hat, rho, state.anchor, eigvec)


def per_antenna_minimizer(k_hat, power_budget):
    """Maximise Re{p^H k_hat} subject to every antenna row having power P_t / N_t.

    Accepts the n_tx x L matrix form; row j of the result is
    ``sqrt(P_t/N_t) * k_j / ||k_j||``.  A zero row gets the full antenna
    power in its first slot.
    """
    K = np.asarray(k_hat, dtype=complex)
    n_tx = K.shape[0]
    amp = np.sqrt(power_budget / n_tx)
    norms = np.linalg.norm(K, axis=1)
    out = np.zeros_like(K)
    ok = norms > 0
    out[ok] = amp * K[ok] / norms[ok, None]
    out[~ok, 0] = amp
    return out


@dataclass
class MmResult:
    P: np.ndarray
    objective_trace: list
    converged: bool
    iterations: int


def minimize(P0, state, lambda_reg, rho, tol=None, max_iter=500):
    """Run MM from ``P0`` until the iterate moves by at most ``tol``.

    ``P0`` is first projected onto the per-antenna power set.
    """
    if tol is None:
        tol = 1e-5 * np.sqrt(state.power_budget)
    P = per_antenna_minimizer(P0, state.power_budget)
    trace = [surrogate_objective(P, state, lambda_reg, rho)]
    eig_start = None
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        maj = majorize(P, state, lambda_reg, rho, eig_start=eig_start)
        eig_start = maj.eigvec
        P_new = per_antenna_minimizer(maj.k_hat, state.power_budget)
        step = float(np.linalg.norm(P_new - P))
        P = P_new
        trace.append(surrogate_objective(P, state, lambda_reg, rho))
        if step <= tol:
            converged = True
            break
    return MmResult(P, trace, converged, it)


def u_update(v, d, scenario, mode, lambda_reg, rho, tol=None, max_iter=500, u_prev=None):
    """MM solution of the u-update.

    The MM loop starts from the precoders of ``u_prev`` (or ``v``) and
    works on the columns left free by ``mode``.  The first K entries (the
    common split) are copied from ``v``.

    Returns
    -------
    u : ndarray
        Stacked vector satisfying the per-antenna power constraint.
    result : MmResult
    """
    K, N = scenario.k_users, scenario.n_tx
    cols = mode.active_columns(K)
    v_sol = unstack(v, K, N)
    D = np.asarray(d).reshape((N, K + 2), order="F")
    d_hat = (v_sol.precoders + D)[:, cols]
    start = unstack(u_prev if u_prev is not None else v, K, N).precoders[:, cols]
    state = MmWorkState.build(scenario.steering(), scenario.desired.levels, len(cols),
                              scenario.power_budget, d_hat)
    res = minimize(start, state, lambda_reg, rho, tol=tol, max_iter=max_iter)
    P = np.zeros((N, K + 2), complex)
    P[:, cols] = res.P
    out = unstack(v, K, N)
    out.precoders = P
    return stack(out), res
