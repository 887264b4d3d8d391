"""Legendre-Gauss-Lobatto collocation grid: nodes, weights, differentiation."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


def legendre(N: int, x):
    """Return ``(P_N(x), P_{N-1}(x))`` by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    if N == 0:
        return p_prev, np.zeros_like(x)
    p = x.copy()
    for k in range(2, N + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    return p, p_prev


def legendre_derivative(N: int, x):
    """``P_N'(x)`` for |x| <= 1, endpoints handled analytically."""
    x = np.asarray(x, dtype=float)
    pn, pn1 = legendre(N, x)
    out = np.empty_like(x)
    interior = np.abs(x) < 1.0
    xi = x[interior]
    out[interior] = N * (xi * pn[interior] - pn1[interior]) / (xi * xi - 1.0)
    edge = ~interior
    out[edge] = np.sign(x[edge]) ** (N + 1) * N * (N + 1) / 2.0
    return out


@dataclass(frozen=True)
class CollocationGrid:
    N: int
    nodes: np.ndarray
    weights: np.ndarray
    D: np.ndarray
    bary: np.ndarray

    @property
    def size(self) -> int:
        return self.N + 1

    def times(self, t0: float, tf: float) -> np.ndarray:
        return t0 + 0.5 * (tf - t0) * (self.nodes + 1.0)

    def interpolate(self, values, tau):
        """Barycentric Lagrange interpolation of nodal ``values`` at ``tau``.

        ``values`` has the node index first; any trailing shape is carried.
        """
        values = np.asarray(values, dtype=float)
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        diff = tau[:, None] - self.nodes[None, :]
        exact = np.isclose(diff, 0.0, atol=1e-14, rtol=0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            kern = self.bary[None, :] / diff
        hit = exact.any(axis=1)
        kern[hit] = exact[hit].astype(float)
        kern /= kern.sum(axis=1, keepdims=True)
        return np.tensordot(kern, values, axes=(1, 0))


def _lgl_nodes(N: int, tol: float = 1e-14, max_iter: int = 100) -> np.ndarray:
    # Newton on (1 - x^2) P_N'(x) written as x P_N - P_{N-1} = 0, Chebyshev start
    x = np.cos(np.pi * np.arange(N + 1) / N)
    for _ in range(max_iter):
        pn, pn1 = legendre(N, x)
        dx = (x * pn - pn1) / ((N + 1) * pn)
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    x = np.sort(x)
    x[0], x[-1] = -1.0, 1.0
    # enforce exact symmetry
    return 0.5 * (x - x[::-1])


def _barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / np.prod(diff, axis=1)
    return w / np.max(np.abs(w))


@lru_cache(maxsize=None)
def lgl_grid(N: int) -> CollocationGrid:
    """LGL grid of polynomial degree ``N`` (``N + 1`` nodes)."""
    if N < 1:
        raise ValueError("LGL grid needs N >= 1")
    tau = _lgl_nodes(N)
    pn, _ = legendre(N, tau)
    w = 2.0 / (N * (N + 1) * pn**2)
    w = 0.5 * (w + w[::-1])

    diff = tau[:, None] - tau[None, :]
    np.fill_diagonal(diff, 1.0)
    D = (pn[:, None] / pn[None, :]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))

    for arr in (tau, w, D):
        arr.setflags(write=False)
    bary = _barycentric_weights(tau)
    bary.setflags(write=False)
    return CollocationGrid(N=N, nodes=tau, weights=w, D=D, bary=bary)


def differentiate(grid: CollocationGrid, values, t0: float | None = None,
                  tf: float | None = None):
    """Derivative at the nodes; pass ``t0, tf`` to get d/dt instead of d/dtau."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] != grid.size:
        raise ValueError(f"expected {grid.size} nodal values, got {values.shape[0]}")
    out = np.tensordot(grid.D, values, axes=(1, 0))
    if t0 is not None or tf is not None:
        if t0 is None or tf is None or tf <= t0:
            raise ValueError("need t0 < tf for time scaling")
        out = out * (2.0 / (tf - t0))
    return out


def quadrature(grid: CollocationGrid, values, t0: float | None = None,
               tf: float | None = None):
    """Gauss-Lobatto quadrature of nodal ``values``; ``t0, tf`` maps to physical time."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] != grid.size:
        raise ValueError(f"expected {grid.size} nodal values, got {values.shape[0]}")
    out = np.tensordot(grid.weights, values, axes=(0, 0))
    if t0 is not None or tf is not None:
        if t0 is None or tf is None or tf <= t0:
            raise ValueError("need t0 < tf for time scaling")
        out = out * (0.5 * (tf - t0))
    return out
