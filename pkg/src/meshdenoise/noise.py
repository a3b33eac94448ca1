"""Gaussian displacement along vertex normals, and the SNR quality measure."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .mesh import Mesh, NormalField, vertex_normals


@dataclass(frozen=True)
class NoiseParams:
    rho: float
    seed: int = 0

    def __post_init__(self):
        if not self.rho >= 0:
            raise ValueError("rho must be >= 0")


def standard_normals(n: int, seed: int) -> np.ndarray:
    """``n`` standard normal variates from PCG64(seed), one raw draw each.

    The top 53 bits of each 64-bit output give a uniform ``(k + 0.5) / 2**53``
    in the open interval (0, 1), which the inverse normal CDF maps to a
    variate. The sequence depends only on the seed.
    """
    bits = np.random.PCG64(seed).random_raw(n)
    if n == 0:
        return np.empty(0)
    u = ((np.asarray(bits, np.uint64) >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    return ndtri(u)


def add_normal_noise(mesh: Mesh, normals: NormalField | None = None,
                     params: NoiseParams | None = None, *, rho: float | None = None,
                     seed: int = 0) -> Mesh:
    """Move vertex i by ``rho * eps_i * N_i``; degenerate normals are zero rows."""
    if params is None:
        params = NoiseParams(0.0 if rho is None else rho, seed)
    if normals is None:
        normals = vertex_normals(mesh)
    if params.rho == 0:
        return mesh.with_vertices(mesh.vertices)
    eps = standard_normals(mesh.n_vertices, params.seed)
    return mesh.with_vertices(mesh.vertices + params.rho * eps[:, None] * normals.normals)


def snr(X, Y) -> float:
    """``-20 log10(||X - Y||_F / ||Y||_F)`` in dB, with ``Y`` the reference.

    Returns ``inf`` when the two matrices are equal.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape != Y.shape:
        raise ValueError(f"shape mismatch {X.shape} vs {Y.shape}")
    ref = np.linalg.norm(Y)
    if ref == 0:
        raise ValueError("reference signal has zero norm")
    err = np.linalg.norm(X - Y)
    if err == 0:
        return math.inf
    return -20.0 * math.log10(err / ref)
