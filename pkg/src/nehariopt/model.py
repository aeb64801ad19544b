"""Variational structure of the coupled cubic elliptic system.

The state is an m-component field u on a shared grid, stored as an array of
shape (m, M-1, M-1).  This module provides the discrete energy functionals,
the constraint that defines the Nehari manifold, the scaling map onto the
manifold and the retraction built from it, the metric gradients obtained from
2m spectral Poisson solves, the projected descent direction, and the pointwise
PDE residual used as the stopping criterion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConstraintGradient, DegenerateInteraction, ZeroField
from .spectral import (
    Grid,
    _as_eps_column,
    _check_shape,
    dst2,
    first_dirichlet_eigenvalue,
    idst2,
    sobolev_inner_coeffs,
)

__all__ = [
    "CouplingMatrix",
    "Problem",
    "validate_problem",
    "interaction_density",
    "quadratic_energy",
    "interaction_energy",
    "energy",
    "nehari_constraint",
    "nehari_scale",
    "pullback",
    "retract",
    "gradients",
    "descent_direction",
    "residual",
]

ZERO_FIELD_THRESHOLD = 1e-14


@dataclass(frozen=True)
class CouplingMatrix:
    """Symmetric matrix of interaction strengths between components.

    Admissible matrices are either fully cooperative (every entry strictly
    positive) or positive definite; either regime keeps the quartic
    interaction term positive on nonzero states.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        g = np.array(self.values, dtype=np.float64)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError(f"coupling matrix must be square, got shape {g.shape}")
        if not np.array_equal(g, g.T):
            raise ValueError("coupling matrix must be exactly symmetric")
        g.setflags(write=False)
        object.__setattr__(self, "values", g)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def is_fully_cooperative(self) -> bool:
        return bool(np.all(self.values > 0))

    def is_positive_definite(self) -> bool:
        return bool(np.min(np.linalg.eigvalsh(self.values)) > 0)

    def satisfies_assumption(self) -> bool:
        return self.is_fully_cooperative() or self.is_positive_definite()


@dataclass(frozen=True)
class Problem:
    """A concrete discretized instance of the coupled system.

    Parameters
    ----------
    grid : Grid
        Spatial discretization.
    diffusion : array, shape (m,)
        Positive diffusion coefficients, one per component.
    potentials : array, shape (m, M-1, M-1)
        Potentials sampled at the interior nodes.
    coupling : CouplingMatrix
        Interaction strengths.
    unscaled_interaction : bool
        Compatibility switch dropping the h^2 quadrature weight from the
        quartic term.  Off by default; see ``docs`` in the README for why the
        weighted form is the self-consistent one.
    """

    grid: Grid
    diffusion: np.ndarray
    potentials: np.ndarray
    coupling: CouplingMatrix
    unscaled_interaction: bool = field(default=False)

    def __post_init__(self) -> None:
        m = self.coupling.m
        eps = _as_eps_column(self.diffusion, m).reshape(m)
        eps.setflags(write=False)
        object.__setattr__(self, "diffusion", eps)
        pots = _check_shape(self.potentials, self.grid, "potentials")
        if pots.ndim != 3 or pots.shape[0] != m:
            raise ValueError(
                f"expected potentials of shape ({m}, *interior*), got {pots.shape}"
            )
        pots = pots.copy()
        pots.setflags(write=False)
        object.__setattr__(self, "potentials", pots)

    @property
    def m(self) -> int:
        return self.coupling.m

    def eps_column(self) -> np.ndarray:
        return self.diffusion.reshape(self.m, 1, 1)


def validate_problem(problem: Problem) -> list[str]:
    """Check the admissibility conditions; returns violations (empty if ok)."""
    violations = []
    g = problem.coupling
    if not g.satisfies_assumption():
        violations.append(
            "coupling matrix is neither fully cooperative (all entries > 0) "
            "nor positive definite"
        )
    if not np.all(problem.diffusion > 0):
        violations.append("diffusion coefficients must all be positive")
    lam1 = first_dirichlet_eigenvalue(problem.grid)
    floor = float(problem.potentials.min())
    if floor <= -lam1:
        violations.append(
            f"potential minimum {floor:.6g} must exceed -lambda_1 = {-lam1:.6g}"
        )
    return violations


def _field(u: np.ndarray, problem: Problem) -> np.ndarray:
    u = _check_shape(u, problem.grid, "field")
    if u.ndim != 3 or u.shape[0] != problem.m:
        raise ValueError(f"expected field of shape ({problem.m}, *interior*), got {u.shape}")
    return u


def interaction_density(u: np.ndarray, coupling: CouplingMatrix) -> np.ndarray:
    """Pointwise coupling density b_i = sum_j g_ij u_j^2, shared by both gradients."""
    return np.einsum("ij,jkl->ikl", coupling.values, u * u)


# -- coefficient-space internals ------------------------------------------------
#
# The iteration loop keeps each iterate as a (values, coeffs) pair so that no
# forward transform of the state itself is ever repeated.  The public
# functions below wrap these internals and transform at the boundary.


def _quadratic(u: np.ndarray, uc: np.ndarray, problem: Problem) -> float:
    grid = problem.grid
    lap_part = grid.half_width**2 * float(
        np.sum(problem.eps_column() * grid.laplacian_symbol * uc * uc)
    )
    pot_part = grid.spacing**2 * float(np.sum(problem.potentials * u * u))
    return lap_part + pot_part


def _interaction(u: np.ndarray, problem: Problem) -> float:
    raw = float(np.sum(interaction_density(u, problem.coupling) * u * u))
    if problem.unscaled_interaction:
        return raw
    return problem.grid.spacing**2 * raw


def _scale_from(quad: float, inter: float) -> float:
    if inter <= 1e-300 * max(abs(quad), 1.0):
        raise DegenerateInteraction(
            f"interaction term {inter:.3g} too small to define the manifold scaling"
        )
    return float(np.sqrt(quad / inter))


def _gradient_coeffs(
    u: np.ndarray, uc: np.ndarray, problem: Problem
) -> tuple[np.ndarray, np.ndarray]:
    """Sine coefficients of the two metric gradients.

    One batched forward transform of (a*u - b*u, b*u) feeds both Poisson
    solves; psi_c = uc + s_c/(eps*sym), phi_c = 2*uc + (2*s_c - 2*t_c)/(eps*sym)
    since the second right-hand side is 2*a*u - 4*b*u = 2*s - 2*t.
    """
    b = interaction_density(u, problem.coupling)
    s = problem.potentials * u - b * u
    both = dst2(np.concatenate([s, b * u]), problem.grid)
    sc, tc = both[: problem.m], both[problem.m :]
    denom = problem.eps_column() * problem.grid.laplacian_symbol
    psic = uc + sc / denom
    phic = 2.0 * uc + (2.0 * sc - 2.0 * tc) / denom
    return psic, phic


def _descent_coeffs(
    psic: np.ndarray, phic: np.ndarray, problem: Problem
) -> tuple[np.ndarray, float]:
    """Projected descent direction (coefficients) and its squared norm."""
    grid, eps = problem.grid, problem.diffusion
    phi_sq = sobolev_inner_coeffs(phic, phic, grid, eps)
    if not np.isfinite(phi_sq) or phi_sq <= 1e-300:
        raise DegenerateConstraintGradient(
            f"constraint gradient norm^2 = {phi_sq:.3g}; tangent projection undefined"
        )
    mix = sobolev_inner_coeffs(psic, phic, grid, eps) / phi_sq
    etac = -psic + mix * phic
    eta_sq = sobolev_inner_coeffs(etac, etac, grid, eps)
    return etac, eta_sq


def _residual(u: np.ndarray, uc: np.ndarray, problem: Problem) -> float:
    lap = idst2(problem.grid.laplacian_symbol * uc, problem.grid)
    b = interaction_density(u, problem.coupling)
    res = problem.eps_column() * lap + problem.potentials * u - b * u
    return float(np.max(np.abs(res)))


# -- public operations ----------------------------------------------------------


def quadratic_energy(u: np.ndarray, problem: Problem) -> float:
    """Quadratic (diffusion + potential) part of the energy."""
    u = _field(u, problem)
    return _quadratic(u, dst2(u, problem.grid), problem)


def interaction_energy(u: np.ndarray, problem: Problem) -> float:
    """Quartic interaction part of the energy."""
    return _interaction(_field(u, problem), problem)


def energy(u: np.ndarray, problem: Problem) -> float:
    """Total energy: quadratic/2 - interaction/4."""
    u = _field(u, problem)
    return 0.5 * _quadratic(u, dst2(u, problem.grid), problem) - 0.25 * _interaction(
        u, problem
    )


def nehari_constraint(u: np.ndarray, problem: Problem) -> float:
    """Constraint value quadratic - interaction; zero characterizes the manifold."""
    u = _field(u, problem)
    return _quadratic(u, dst2(u, problem.grid), problem) - _interaction(u, problem)


def nehari_scale(v: np.ndarray, problem: Problem) -> float:
    """Unique positive factor s with s*v on the manifold: sqrt(quadratic/interaction)."""
    v = _field(v, problem)
    if float(np.max(np.abs(v))) <= ZERO_FIELD_THRESHOLD:
        raise ZeroField("cannot scale an (effectively) zero field onto the manifold")
    quad = _quadratic(v, dst2(v, problem.grid), problem)
    return _scale_from(quad, _interaction(v, problem))


def pullback(v: np.ndarray, problem: Problem) -> np.ndarray:
    """Scale a nonzero field onto the manifold."""
    return nehari_scale(v, problem) * _field(v, problem)


def retract(u: np.ndarray, xi: np.ndarray, problem: Problem) -> np.ndarray:
    """Retraction: pull the shifted point u + xi back onto the manifold."""
    return pullback(_field(u, problem) + _field(xi, problem), problem)


def gradients(u: np.ndarray, problem: Problem) -> tuple[np.ndarray, np.ndarray]:
    """Metric gradients of the energy and of the constraint, as physical fields.

    Each component solves one Poisson problem; with zero potentials the two
    gradients satisfy grad_constraint = 4*grad_energy - 2*u identically.
    """
    u = _field(u, problem)
    psic, phic = _gradient_coeffs(u, dst2(u, problem.grid), problem)
    both = idst2(np.concatenate([psic, phic]), problem.grid)
    return both[: problem.m], both[problem.m :]


def descent_direction(u: np.ndarray, problem: Problem) -> np.ndarray:
    """Steepest-descent direction tangent to the manifold at u.

    The energy gradient is projected so the result is orthogonal to the
    constraint gradient in the energy inner product.
    """
    u = _field(u, problem)
    psic, phic = _gradient_coeffs(u, dst2(u, problem.grid), problem)
    etac, _ = _descent_coeffs(psic, phic, problem)
    return idst2(etac, problem.grid)


def residual(u: np.ndarray, problem: Problem) -> float:
    """Sup-norm of the pointwise PDE residual over all components."""
    u = _field(u, problem)
    return _residual(u, dst2(u, problem.grid), problem)
