"""Discrete optimal transport for small problems.

Exact Monge assignment by enumeration, plans and their costs, entropy and
KL divergence, Sinkhorn scaling (plain and log-domain), Wasserstein-p
distances between atomic measures, and entropic barycenters.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

MONGE_MAX_N = 9
DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITERS = 10_000


class SinkhornError(RuntimeError):
    pass


class KernelUnderflowWarning(RuntimeWarning):
    pass


def as_histogram(w, name: str = "histogram") -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] == 0:
        raise ValueError(f"{name} must be a nonempty vector")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError(f"{name} has negative or non-finite weights")
    if abs(w.sum() - 1.0) > 1e-12 * max(1, w.shape[0]):
        raise ValueError(f"{name} does not sum to 1 (sum={w.sum()!r})")
    return w


def uniform(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


@dataclass
class TransportPlan:
    gamma: np.ndarray
    row_marginal_error: float = 0.0
    col_marginal_error: float = 0.0


@dataclass
class SinkhornState:
    u: np.ndarray
    v: np.ndarray
    iterations_run: int = 0
    converged: bool = False
    residual_history: list[tuple[float, float]] = field(default_factory=list)
    log_u: np.ndarray | None = None
    log_v: np.ndarray | None = None


def product_plan(mu, nu) -> TransportPlan:
    mu, nu = as_histogram(mu, "mu"), as_histogram(nu, "nu")
    gamma = np.outer(mu, nu)
    return TransportPlan(gamma, *marginal_residuals(gamma, mu, nu))


def transport_cost(plan, c) -> float:
    gamma = plan.gamma if isinstance(plan, TransportPlan) else np.asarray(plan, float)
    c = np.asarray(c, dtype=np.float64)
    if gamma.shape != c.shape:
        raise ValueError(f"plan {gamma.shape} and cost {c.shape} differ in shape")
    return float(np.sum(c * gamma))


def marginal_residuals(plan, mu, nu) -> tuple[float, float]:
    """L1 distances of the plan's row and column sums to ``mu`` and ``nu``."""
    gamma = plan.gamma if isinstance(plan, TransportPlan) else np.asarray(plan, float)
    mu, nu = np.asarray(mu, float), np.asarray(nu, float)
    if gamma.shape != (mu.shape[0], nu.shape[0]):
        raise ValueError("plan shape does not match marginals")
    return (float(np.abs(gamma.sum(axis=1) - mu).sum()),
            float(np.abs(gamma.sum(axis=0) - nu).sum()))


def monge_bruteforce(c) -> tuple[tuple[int, ...], float]:
    """Cheapest bijection ``x -> perm[x]`` by enumerating all permutations.

    Permutations are visited in lexicographic order and only a strictly lower
    cost replaces the incumbent, so ties resolve to the smallest permutation.
    """
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("Monge problem needs a square cost matrix")
    n = c.shape[0]
    if n > MONGE_MAX_N:
        raise ValueError(f"enumeration limited to N <= {MONGE_MAX_N}, got {n}")
    rows = list(range(n))
    cl = c.tolist()
    best, best_cost = None, math.inf
    for perm in itertools.permutations(rows):
        cost = 0.0
        for x in rows:
            cost += cl[x][perm[x]]
        if cost < best_cost:
            best, best_cost = perm, cost
    return best, best_cost


def permutation_plan(perm) -> np.ndarray:
    n = len(perm)
    gamma = np.zeros((n, n))
    gamma[np.arange(n), list(perm)] = 1.0 / n
    return gamma


def entropy(p) -> float:
    """Shannon entropy in nats, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=np.float64)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def kl_divergence(p, q) -> float:
    """sum p log(p/q); ``inf`` when some p_i > 0 has q_i = 0."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError("histograms differ in length")
    support = p > 0
    if np.any(q[support] == 0):
        return math.inf
    ps, qs = p[support], q[support]
    return float(np.sum(ps * (np.log(ps) - np.log(qs))))


def gibbs_kernel(c, epsilon: float) -> np.ndarray:
    """exp(-c / epsilon). Warns when an entry underflows to exactly zero."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    K = np.exp(-np.asarray(c, dtype=np.float64) / epsilon)
    if np.any(K == 0):
        warnings.warn("Gibbs kernel underflowed to zero; use sinkhorn_log",
                      KernelUnderflowWarning, stacklevel=2)
    return K


def kernel_underflows(c, epsilon: float) -> bool:
    with np.errstate(under="ignore"):
        return bool(np.any(np.exp(-np.asarray(c, float) / epsilon) == 0))


def sinkhorn(mu, nu, K, max_iters: int = DEFAULT_MAX_ITERS,
             tol: float = DEFAULT_TOL) -> tuple[SinkhornState, TransportPlan]:
    """Alternate ``u = mu / (K v)`` and ``v = nu / (K^T u)`` from ``v = 1``.

    Stops once both L1 marginal residuals of ``diag(u) K diag(v)`` are at
    most ``tol``, or after ``max_iters`` sweeps.
    """
    mu, nu = as_histogram(mu, "mu"), as_histogram(nu, "nu")
    K = np.asarray(K, dtype=np.float64)
    if K.shape != (mu.shape[0], nu.shape[0]):
        raise ValueError("kernel shape does not match marginals")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if np.any(K < 0):
        raise ValueError("kernel has negative entries")
    if np.any(~(K > 0).any(axis=1) & (mu > 0)) or np.any(~(K > 0).any(axis=0) & (nu > 0)):
        raise SinkhornError("kernel has an all-zero row or column carrying mass")
    v = np.ones(nu.shape[0])
    u = np.ones(mu.shape[0])
    state = SinkhornState(u, v)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for it in range(1, max_iters + 1):
            u = mu / (K @ v)
            v = nu / (K.T @ u)
            if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
                raise SinkhornError("numerical blowup in scalings; use sinkhorn_log")
            gamma = u[:, None] * K * v[None, :]
            res = marginal_residuals(gamma, mu, nu)
            state.residual_history.append(res)
            if res[0] <= tol and res[1] <= tol:
                state.converged = True
                break
    state.u, state.v, state.iterations_run = u, v, it
    return state, TransportPlan(gamma, *res)


def _lse(a: np.ndarray, axis: int) -> np.ndarray:
    m = a.max(axis=axis, keepdims=True)
    m[~np.isfinite(m)] = 0.0
    return (m + np.log(np.exp(a - m).sum(axis=axis, keepdims=True))).squeeze(axis)


def sinkhorn_log(mu, nu, c, epsilon: float, max_iters: int = DEFAULT_MAX_ITERS,
                 tol: float = DEFAULT_TOL, *, eps_scaling: bool = True,
                 anderson: int = 8) -> tuple[SinkhornState, TransportPlan]:
    """Sinkhorn in the log domain, on ``f = log u`` and ``g = log v``.

    One iteration is the map ``g -> g'`` with ``f = log mu - lse(g - c/eps)``
    and ``g' = log nu - lse(f - c/eps)``, i.e. the plain Sinkhorn sweep with
    every kernel product replaced by a log-sum-exp, so nothing underflows at
    small ``epsilon``. Two accelerations keep that map's fixed point:

    * ``eps_scaling``: anneal the regularization geometrically from the cost
      spread down to ``epsilon``, warm-starting each stage. Intermediate
      stages stop at residual 1e-6 or 200 iterations.
    * ``anderson``: Anderson extrapolation over the last ``anderson``
      iterates (0 disables it). A candidate is kept only if it lowers the
      marginal residual; otherwise the plain step is taken and the history
      reset.

    Without them, costs with near-tied assignments leave blocks of the plan
    coupled only through tiny entries, and the residual then shrinks by a
    factor close to 1 per sweep. ``iterations_run`` counts every evaluation
    of the map, candidates included.
    """
    mu, nu = as_histogram(mu, "mu"), as_histogram(nu, "nu")
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (mu.shape[0], nu.shape[0]):
        raise ValueError("cost shape does not match marginals")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not tol > 0:
        raise ValueError("tol must be positive")
    with np.errstate(divide="ignore"):
        log_mu, log_nu = np.log(mu), np.log(nu)

    schedule = []
    if eps_scaling:
        e = float(c.max() - c.min())
        while e > 2 * epsilon:
            schedule.append(e)
            e *= 0.5
    schedule.append(float(epsilon))

    history: list[tuple[float, float]] = []
    it = 0
    G = np.zeros(nu.shape[0])  # potential eps * log v, carried across stages

    for stage, eps in enumerate(schedule):
        last = stage == len(schedule) - 1
        stage_tol = tol if last else max(tol, 1e-6)
        neg = -c / eps

        def sweep(g):
            f = log_mu - _lse(neg + g[None, :], 1)
            g2 = log_nu - _lse(neg + f[:, None], 0)
            gamma = np.exp(f[:, None] + neg + g2[None, :])
            return f, g2, gamma, marginal_residuals(gamma, mu, nu)

        g = G / eps
        f, g_next, gamma, res = sweep(g)
        it += 1
        history.append(res)
        past_g: list[np.ndarray] = []
        past_r: list[np.ndarray] = []
        k = 1
        while max(res) > stage_tol and it < max_iters and (last or k < 200):
            step = g_next - g
            past_g.append(g_next)
            past_r.append(step)
            if len(past_g) > anderson + 1:
                past_g.pop(0)
                past_r.pop(0)
            g = g_next
            if anderson and len(past_r) >= 2:
                dR = np.diff(np.array(past_r), axis=0).T
                dG = np.diff(np.array(past_g), axis=0).T
                coef = np.linalg.lstsq(dR, step, rcond=None)[0]
                cand = g_next - dG @ coef
                if np.all(np.isfinite(cand)):
                    trial = sweep(cand)
                    it += 1
                    k += 1
                    if max(trial[3]) < max(res):
                        g = cand
                        f, g_next, gamma, res = trial
                        history.append(res)
                        continue
                past_g, past_r = [], []
                if it >= max_iters:
                    break
            f, g_next, gamma, res = sweep(g)
            it += 1
            k += 1
            history.append(res)
        g = g_next
        G = eps * g

    converged = max(res) <= tol
    with np.errstate(over="ignore", under="ignore"):
        state = SinkhornState(np.exp(f), np.exp(g), it, converged, history, f, g)
    return state, TransportPlan(gamma, *res)


@dataclass(frozen=True)
class WassersteinResult:
    value: float
    exact: bool  # False: entropic approximation at the given epsilon

    def __float__(self):
        return self.value


def wasserstein_p(X, Y, mu, nu, p: float = 2.0, epsilon: float | None = None,
                  tol: float = DEFAULT_TOL,
                  max_iters: int = DEFAULT_MAX_ITERS) -> WassersteinResult:
    """W_p between atomic measures on point clouds ``X`` (N, d) and ``Y`` (M, d).

    Uniform weights on equally many points (N <= 9) are solved exactly by
    enumeration. Otherwise the optimal cost is approximated with log-domain
    Sinkhorn at ``epsilon`` (default 1e-3 of the largest cost), and the result
    is marked inexact.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    mu, nu = as_histogram(mu, "mu"), as_histogram(nu, "nu")
    if X.shape[0] != mu.shape[0] or Y.shape[0] != nu.shape[0]:
        raise ValueError("support sizes do not match histogram lengths")
    if X.shape[1] != Y.shape[1]:
        raise ValueError("point clouds live in different dimensions")
    c = np.linalg.norm(X[:, None, :] - Y[None, :, :], axis=2) ** p
    n = mu.shape[0]
    if (n == nu.shape[0] and n <= MONGE_MAX_N
            and np.allclose(mu, 1.0 / n, rtol=0, atol=1e-15)
            and np.allclose(nu, 1.0 / n, rtol=0, atol=1e-15)):
        _, total = monge_bruteforce(c)
        return WassersteinResult(max(total / n, 0.0) ** (1.0 / p), True)
    cmax = float(c.max())
    if cmax == 0:
        return WassersteinResult(0.0, True)
    eps = 1e-3 * cmax if epsilon is None else epsilon
    _, plan = sinkhorn_log(mu, nu, c, eps, max_iters, tol)
    return WassersteinResult(max(transport_cost(plan, c), 0.0) ** (1.0 / p), False)


def barycenter(histograms, weights, K, max_iters: int = DEFAULT_MAX_ITERS,
               tol: float = DEFAULT_TOL) -> np.ndarray:
    """Entropic Wasserstein barycenter by iterative Bregman projections.

    Each round sets ``u_k = a_k / (K v_k)``, takes ``b`` as the weighted
    geometric mean of the current second marginals ``v_k * K^T u_k``, then
    rescales ``v_k = b / (K^T u_k)``. Stops when ``b`` moves less than ``tol``
    in L1.
    """
    A = np.array([as_histogram(a, f"histogram {k}") for k, a in enumerate(histograms)])
    w = np.asarray(weights, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("histograms must share one support size")
    R, n = A.shape
    if w.shape != (R,) or np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
        raise ValueError("weights must be positive and sum to 1")
    K = np.asarray(K, dtype=np.float64)
    if K.shape != (n, n):
        raise ValueError("kernel shape does not match the support")
    if not np.all(K > 0):
        raise ValueError("kernel must be strictly positive")
    V = np.ones((R, n))
    b = np.full(n, 1.0 / n)
    for _ in range(max_iters):
        U = A / (V @ K.T)           # row k: a_k / (K v_k)
        KtU = U @ K                 # row k: K^T u_k
        with np.errstate(divide="ignore"):
            log_marg = np.log(V * KtU)
        b_new = np.exp(w @ log_marg)
        V = b_new[None, :] / KtU
        done = np.abs(b_new - b).sum() <= tol
        b = b_new
        if done:
            break
    return b / b.sum()
