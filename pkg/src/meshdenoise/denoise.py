"""Iterative filtering, explicit heat diffusion and Sobolev regularization.

Signals are (n, 3) vertex matrices multiplied on the left by the operator.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .cholesky import CholeskyFactor, cholesky_solve, sparse_cholesky
from .graph import CSRMatrix, spmm


class HeatStabilityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class FilterParams:
    iterations: int

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")


@dataclass(frozen=True)
class HeatParams:
    tau: float
    iterations: int

    def __post_init__(self):
        if not math.isfinite(self.tau):
            raise ValueError("tau must be finite")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")

    @property
    def unstable(self) -> bool:
        """Outside [0, 1] a step is no longer a convex combination."""
        return not 0.0 <= self.tau <= 1.0

    @property
    def time(self) -> float:
        return self.tau * self.iterations


@dataclass(frozen=True)
class SobolevParams:
    mu: float

    def __post_init__(self):
        if not self.mu >= 0:
            raise ValueError("mu must be >= 0")


def _check_signal(X, A: CSRMatrix) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != A.n_cols:
        raise ValueError(f"signal of shape {X.shape} does not match operator {A.shape}")
    return X


def filter_denoise(X, W_tilde: CSRMatrix, params: FilterParams | int) -> np.ndarray:
    """Apply the averaging operator ``iterations`` times."""
    if isinstance(params, int):
        params = FilterParams(params)
    Y = _check_signal(X, W_tilde).copy()
    for _ in range(params.iterations):
        Y = spmm(W_tilde, Y)
    return Y


def heat_step(X: np.ndarray, W_tilde: CSRMatrix, tau: float) -> np.ndarray:
    return (1.0 - tau) * X + tau * spmm(W_tilde, X)


def heat_denoise(X, W_tilde: CSRMatrix, params: HeatParams) -> np.ndarray:
    """Explicit Euler steps of dX/dt = -(I - W~) X.

    With ``tau == 1`` each step is exactly one filtering step.
    """
    if params.unstable:
        warnings.warn(f"tau={params.tau} outside [0, 1]: steps are not convex combinations",
                      HeatStabilityWarning, stacklevel=2)
    Y = _check_signal(X, W_tilde).copy()
    for _ in range(params.iterations):
        Y = heat_step(Y, W_tilde, params.tau)
    return Y


class SobolevSolver:
    """Solves ``(I + mu L) Y = X`` with one cached factorization per ``mu``.

    ``factorizations`` counts numeric factorizations performed, so callers can
    check that repeated solves reuse the factor.
    """

    def __init__(self, L: CSRMatrix, ordering: str | None = None):
        if L.n_rows != L.n_cols:
            raise ValueError("Laplacian must be square")
        self.L = L
        self.ordering = ordering
        self.factorizations = 0
        self._factors: dict[float, CholeskyFactor] = {}

    def factor(self, mu: float) -> CholeskyFactor:
        mu = float(mu)
        f = self._factors.get(mu)
        if f is None:
            A = self.L.add_scaled_identity(1.0, scale=mu)
            f = sparse_cholesky(A, self.ordering)
            self.factorizations += 1
            self._factors[mu] = f
        return f

    def solve(self, X, mu: float) -> np.ndarray:
        X = _check_signal(X, self.L)
        if mu == 0:
            return X.copy()
        return cholesky_solve(self.factor(mu), X)

    def clear(self) -> None:
        self._factors.clear()


def sobolev_denoise(X, L: CSRMatrix, params: SobolevParams | float,
                    solver: SobolevSolver | None = None) -> np.ndarray:
    """Minimizer of ||Y - X||^2 + mu * trace(Y^T L Y).

    Pass a :class:`SobolevSolver` to reuse its factorization across calls.
    """
    mu = params.mu if isinstance(params, SobolevParams) else float(params)
    SobolevParams(mu)
    if solver is None:
        solver = SobolevSolver(L)
    elif solver.L is not L:
        raise ValueError("solver was built for a different Laplacian")
    return solver.solve(X, mu)


def centroid(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("need at least one vertex")
    return X.mean(axis=0)
