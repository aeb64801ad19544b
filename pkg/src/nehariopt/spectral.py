"""Sine pseudospectral machinery on a square box with homogeneous Dirichlet data.

Fields live on the interior nodes of a uniform grid over (-L, L)^2; the
boundary values are identically zero and are never stored.  In the sine basis
the (negative) Laplacian is diagonal, which makes Poisson solves and the
energy inner product cheap once the multiplier table is in hand.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.fft import dstn

__all__ = [
    "Grid",
    "make_grid",
    "dst2",
    "idst2",
    "neg_laplacian",
    "poisson_solve",
    "sobolev_inner",
    "sobolev_norm",
    "first_dirichlet_eigenvalue",
]

WORKERS_ENV_VAR = "NEHARIOPT_WORKERS"


def _workers() -> int:
    """Thread count for batched transforms, taken from the environment."""
    raw = os.environ.get(WORKERS_ENV_VAR, "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


@dataclass(frozen=True)
class Grid:
    """Uniform grid on (-L, L)^2 with implicit zero Dirichlet boundary.

    Parameters
    ----------
    half_width : float
        Half-width L of the square domain (-L, L)^2.
    subdivisions : int
        Number of subintervals M per axis; must be even and >= 4.  Fields are
        sampled at the (M-1) x (M-1) interior nodes.
    """

    half_width: float
    subdivisions: int

    def __post_init__(self) -> None:
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        m = self.subdivisions
        if m < 4 or m % 2 != 0:
            raise ValueError(f"subdivisions must be even and >= 4, got {m}")

        spacing = 2.0 * self.half_width / m
        nodes = -self.half_width + spacing * np.arange(1, m)
        freq = np.arange(1, m) * np.pi / (2.0 * self.half_width)
        # Diagonal symbol of -Laplacian in the sine basis.
        symbol = freq[:, None] ** 2 + freq[None, :] ** 2
        for name, arr in (("x", nodes), ("y", nodes), ("laplacian_symbol", symbol)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "spacing", spacing)

    @property
    def interior_shape(self) -> tuple[int, int]:
        n = self.subdivisions - 1
        return (n, n)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """Interior node coordinates as 2D arrays (ij indexing)."""
        return np.meshgrid(self.x, self.y, indexing="ij")


def make_grid(half_width: float, subdivisions: int) -> Grid:
    """Build a grid; rejects nonpositive widths and odd or too-small subdivisions."""
    return Grid(half_width, subdivisions)


def first_dirichlet_eigenvalue(grid: Grid) -> float:
    """Smallest eigenvalue of -Laplacian on the box, 2*(pi/2L)^2."""
    return 2.0 * (np.pi / (2.0 * grid.half_width)) ** 2


def _check_shape(arr: np.ndarray, grid: Grid, name: str) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.shape[-2:] != grid.interior_shape:
        raise ValueError(
            f"{name} has interior shape {arr.shape[-2:]}, expected {grid.interior_shape}"
        )
    return arr


def dst2(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Forward 2D sine transform of interior samples.

    Returns coefficients c[p-1, q-1] = (4/M^2) * sum_{k,l} f[k,l]
    sin(p k pi / M) sin(q l pi / M); acts on the trailing two axes so stacked
    component arrays transform in one call.
    """
    values = _check_shape(values, grid, "values")
    m = grid.subdivisions
    return dstn(values, type=1, axes=(-2, -1), workers=_workers()) / (m * m)


def idst2(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    """Inverse of :func:`dst2`: synthesize interior samples from coefficients."""
    coeffs = _check_shape(coeffs, grid, "coeffs")
    return dstn(coeffs, type=1, axes=(-2, -1), workers=_workers()) / 4.0


def neg_laplacian(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Apply -Laplacian spectrally (exact on the sine interpolant)."""
    return idst2(grid.laplacian_symbol * dst2(values, grid), grid)


def poisson_solve(rhs: np.ndarray, eps: float, grid: Grid) -> np.ndarray:
    """Solve -eps * Laplacian(psi) = rhs with zero Dirichlet data.

    The sine symbol is strictly positive, so the solve is a plain division in
    coefficient space.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return idst2(dst2(rhs, grid) / (eps * grid.laplacian_symbol), grid)


def _as_eps_column(eps, m: int) -> np.ndarray:
    eps = np.atleast_1d(np.asarray(eps, dtype=np.float64))
    if eps.shape == (1,):
        eps = np.full(m, eps[0])
    if eps.shape != (m,):
        raise ValueError(f"expected {m} diffusion coefficients, got shape {eps.shape}")
    if not np.all(eps > 0):
        raise ValueError("diffusion coefficients must be positive")
    return eps.reshape(m, 1, 1)


def sobolev_inner_coeffs(uc: np.ndarray, vc: np.ndarray, grid: Grid, eps) -> float:
    """Energy inner product evaluated from sine coefficients.

    Parseval form of h^2 * sum_i eps_i * sum_{k,l} (-Lap u_i) v_i; the h^2 and
    the transform normalization combine into a single L^2 factor.
    """
    if uc.shape != vc.shape:
        raise ValueError(f"component shapes differ: {uc.shape} vs {vc.shape}")
    weights = _as_eps_column(eps, uc.shape[0])
    scale = grid.half_width**2
    return scale * float(np.sum(weights * grid.laplacian_symbol * uc * vc))


def sobolev_inner(u: np.ndarray, v: np.ndarray, grid: Grid, eps) -> float:
    """Discrete energy (H) inner product of two m-component fields."""
    u = _check_shape(u, grid, "u")
    v = _check_shape(v, grid, "v")
    if u.ndim != 3 or v.ndim != 3:
        raise ValueError("fields must be stacked as (components, nx, ny)")
    return sobolev_inner_coeffs(dst2(u, grid), dst2(v, grid), grid, eps)


def sobolev_norm(u: np.ndarray, grid: Grid, eps) -> float:
    """Norm induced by :func:`sobolev_inner`."""
    return float(np.sqrt(sobolev_inner(u, u, grid, eps)))
