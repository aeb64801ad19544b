"""Iteration schemes on the Nehari manifold.

Three schemes share one run loop: plain steepest descent with a fixed step
(``rsd``), the accelerated scheme that extrapolates through the two latest
iterates before descending (``rag``), and its safeguarded variant that races
the accelerated candidate against a nonmonotone backtracking step and keeps
whichever has lower energy (``nmrag``).

The loop keeps every iterate as a (values, coefficients) pair so the state is
never re-transformed, and recomputes the recorded energies fresh from the
pulled-back point so the history reflects honest round-off rather than cached
algebra.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import model
from .errors import ConfigError, LineSearchFailed
from .model import Problem
from .spectral import dst2, idst2

__all__ = [
    "SolverOptions",
    "MomentumState",
    "NonmonotoneState",
    "IterationRecord",
    "SolveResult",
    "momentum_next",
    "extrapolate",
    "rsd_step",
    "rag_step",
    "armijo_search",
    "nonmonotone_update",
    "nmrag_step",
    "run",
]

ALGORITHMS = ("rsd", "rag", "nmrag")

# Divergence guards: hard blow-up caps plus a stagnation detector that fires
# when the residual sits above a multiple of its best value for a sustained
# stretch (the accelerated scheme can stall at O(1) residual without ever
# blowing up).
DIVERGENCE_RESIDUAL_CAP = 1e6
DIVERGENCE_ENERGY_FACTOR = 1e3
STAGNATION_FACTOR = 10.0
STAGNATION_WINDOW = 500


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for :func:`run`.

    ``alpha`` is the fixed step of the descent update; ``alpha0``, ``sigma``,
    ``varrho`` and ``beta`` only matter for the safeguarded scheme (initial
    trial step, slope of the decrease condition, averaging weight, and
    backtracking factor).
    """

    algorithm: str = "rag"
    alpha: float = 0.1
    alpha0: float = 0.1
    sigma: float = 1e-3
    varrho: float = 0.85
    beta: float = 0.25
    tol: float = 1e-6
    max_iter: int = 20000
    max_backtracks: int = 50
    rng_seed: int | None = None
    restart_momentum: bool = False

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        for name in ("alpha", "alpha0", "tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("sigma", "varrho", "beta"):
            val = getattr(self, name)
            if not 0 < val < 1:
                raise ConfigError(f"{name} must lie in (0, 1), got {val}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.max_backtracks < 1:
            raise ConfigError(f"max_backtracks must be >= 1, got {self.max_backtracks}")


@dataclass(frozen=True)
class MomentumState:
    """Two consecutive schedule values and the extrapolation weight they induce."""

    theta_prev: float = 0.0
    theta: float = 0.0
    t: float = 0.0


def momentum_next(state: MomentumState) -> MomentumState:
    """Advance the extrapolation schedule one step.

    theta grows roughly like n/2 and the weight t = (theta_prev - 1)/theta
    climbs toward 1; the first two weights are -1 and 0, both of which leave
    the extrapolated point equal to the current iterate at startup.
    """
    theta_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * state.theta * state.theta))
    return MomentumState(
        theta_prev=state.theta,
        theta=theta_new,
        t=(state.theta - 1.0) / theta_new,
    )


@dataclass(frozen=True)
class NonmonotoneState:
    """Weighted running average of past energies used as the decrease reference."""

    C: float
    Q: float = 1.0


def nonmonotone_update(state: NonmonotoneState, energy_new: float, varrho: float) -> NonmonotoneState:
    """Fold one more energy value into the running reference."""
    q_new = varrho * state.Q + 1.0
    c_new = (varrho * state.Q * state.C + energy_new) / q_new
    return NonmonotoneState(C=c_new, Q=q_new)


@dataclass(frozen=True)
class IterationRecord:
    """One row of the solve history; index 0 is the initial point."""

    n: int
    energy: float
    quad_energy: float
    residual: float
    step_kind: str
    alpha_used: float | None = None
    backtracks: int | None = None
    ref_energy: float | None = None
    momentum: float | None = None


@dataclass
class SolveResult:
    final: np.ndarray
    history: list[IterationRecord]
    converged: bool
    diverged: bool
    iterations: int
    wall_time: float

    @property
    def residuals(self) -> np.ndarray:
        return np.array([rec.residual for rec in self.history])

    @property
    def energies(self) -> np.ndarray:
        return np.array([rec.energy for rec in self.history])


# -- iterate bookkeeping ----------------------------------------------------------


@dataclass(frozen=True)
class _Iterate:
    """A manifold point with its transform and freshly recomputed functionals."""

    u: np.ndarray
    uc: np.ndarray
    quad: float
    inter: float

    @property
    def energy(self) -> float:
        return 0.5 * self.quad - 0.25 * self.inter


def _lift(u: np.ndarray, problem: Problem) -> _Iterate:
    uc = dst2(u, problem.grid)
    return _Iterate(u, uc, model._quadratic(u, uc, problem), model._interaction(u, problem))


def _pull(v: np.ndarray, vc: np.ndarray, problem: Problem) -> _Iterate:
    """Scale (v, vc) onto the manifold and recompute the functionals fresh."""
    rho = model._scale_from(
        model._quadratic(v, vc, problem), model._interaction(v, problem)
    )
    u, uc = rho * v, rho * vc
    return _Iterate(u, uc, model._quadratic(u, uc, problem), model._interaction(u, problem))


def _extrapolate_pair(
    cur: _Iterate, prev: _Iterate, t: float, problem: Problem
) -> _Iterate:
    """Manifold extrapolation through the two latest iterates.

    Short-circuits when the weight or the difference vanishes so the result is
    then the current iterate bit for bit.
    """
    if t == 0.0 or cur.u is prev.u or not np.any(cur.u != prev.u):
        return cur
    wh = cur.u + t * (cur.u - prev.u)
    whc = cur.uc + t * (cur.uc - prev.uc)
    return _pull(wh, whc, problem)


def _descend_from(point: _Iterate, alpha: float, problem: Problem) -> _Iterate:
    """One projected-gradient descent step of size alpha, retracted back."""
    psic, phic = model._gradient_coeffs(point.u, point.uc, problem)
    etac, _ = model._descent_coeffs(psic, phic, problem)
    vc = point.uc + alpha * etac
    return _pull(idst2(vc, problem.grid), vc, problem)


# -- public single-step operations ------------------------------------------------


def extrapolate(u_n: np.ndarray, u_prev: np.ndarray, t: float, problem: Problem) -> np.ndarray:
    """Extrapolate along the manifold curve through the two latest iterates.

    Returns u_n unchanged (exactly) when t is zero or the iterates coincide.
    """
    return _extrapolate_pair(_lift(u_n, problem), _lift(u_prev, problem), t, problem).u


def rsd_step(u: np.ndarray, alpha: float, problem: Problem) -> np.ndarray:
    """Fixed-step steepest-descent update retracted onto the manifold."""
    return _descend_from(_lift(u, problem), alpha, problem).u


def rag_step(
    u_n: np.ndarray,
    u_prev: np.ndarray,
    mom: MomentumState,
    alpha: float,
    problem: Problem,
) -> tuple[np.ndarray, MomentumState]:
    """One accelerated update: advance the schedule, extrapolate, descend."""
    mom = momentum_next(mom)
    w = _extrapolate_pair(_lift(u_n, problem), _lift(u_prev, problem), mom.t, problem)
    return _descend_from(w, alpha, problem).u, mom


def armijo_search(
    u: np.ndarray, c_ref: float, opts: SolverOptions, problem: Problem
) -> tuple[np.ndarray, float, int]:
    """Backtrack from alpha0 until the nonmonotone decrease condition holds.

    Returns the accepted point, the accepted step, and the number of
    backtracks.  The descent direction is computed once and reused across
    trials; only the energies of trial points are recomputed.
    """
    point = _lift(u, problem)
    v, alpha_used, backtracks, _ = _armijo_from(point, c_ref, opts, problem)
    return v.u, alpha_used, backtracks


def _armijo_from(
    point: _Iterate, c_ref: float, opts: SolverOptions, problem: Problem
) -> tuple[_Iterate, float, int, float]:
    psic, phic = model._gradient_coeffs(point.u, point.uc, problem)
    etac, eta_sq = model._descent_coeffs(psic, phic, problem)
    alpha_n = opts.alpha0
    for j in range(opts.max_backtracks + 1):
        vc = point.uc + alpha_n * etac
        trial = _pull(idst2(vc, problem.grid), vc, problem)
        if trial.energy <= c_ref - opts.sigma * alpha_n * eta_sq:
            return trial, alpha_n, j, eta_sq
        alpha_n *= opts.beta
    raise LineSearchFailed(
        f"no step in {opts.max_backtracks} backtracks satisfied the decrease condition",
        diagnostics={
            "ref_energy": c_ref,
            "energy": point.energy,
            "grad_norm_sq": eta_sq,
            "last_alpha": alpha_n / opts.beta,
        },
    )


def nmrag_step(
    u_n: np.ndarray,
    u_prev: np.ndarray,
    mom: MomentumState,
    nm: NonmonotoneState,
    opts: SolverOptions,
    problem: Problem,
) -> tuple[np.ndarray, MomentumState, NonmonotoneState, IterationRecord]:
    """One safeguarded accelerated update.

    Computes the accelerated candidate, refreshes the energy reference with
    the current energy, backtracks the safeguarded candidate against it, and
    keeps whichever candidate has lower energy.
    """
    cur, prev = _lift(u_n, problem), _lift(u_prev, problem)
    mom = momentum_next(mom)
    w = _extrapolate_pair(cur, prev, mom.t, problem)
    z = _descend_from(w, opts.alpha, problem)
    nm = nonmonotone_update(nm, cur.energy, opts.varrho)
    v, alpha_used, backtracks, _ = _armijo_from(cur, nm.C, opts, problem)
    if z.energy <= v.energy:
        chosen, kind, alpha_rec = z, "rag_extrapolated", opts.alpha
    else:
        chosen, kind, alpha_rec = v, "armijo_fallback", alpha_used
    record = IterationRecord(
        n=-1,  # caller assigns the index
        energy=chosen.energy,
        quad_energy=chosen.quad,
        residual=math.nan,
        step_kind=kind,
        alpha_used=alpha_rec,
        backtracks=backtracks,
        ref_energy=nm.C,
        momentum=mom.t,
    )
    return chosen.u, mom, nm, record


# -- run loop ----------------------------------------------------------------------


def run(problem: Problem, u0: np.ndarray, opts: SolverOptions) -> SolveResult:
    """Iterate from a manifold point u0 until the residual meets the tolerance.

    The caller is responsible for pulling u0 back onto the manifold (the
    scenario builders do).  Non-convergence at the iteration cap is reported
    as a result state, not an error; a failed backtracking search raises
    :class:`LineSearchFailed` with the partial history attached.
    """
    violations = model.validate_problem(problem)
    if violations:
        raise ConfigError("; ".join(violations))
    u0 = np.asarray(u0, dtype=np.float64)

    start = time.perf_counter()
    cur = _lift(u0, problem)
    prev = cur
    mom = MomentumState()
    nm = NonmonotoneState(C=cur.energy)
    e0 = abs(cur.energy)

    r = model._residual(cur.u, cur.uc, problem)
    history = [
        IterationRecord(0, cur.energy, cur.quad, r, "init")
    ]
    best_r = r
    stall = 0
    converged = r <= opts.tol
    diverged = False
    n = 0

    try:
        while not converged and not diverged and n < opts.max_iter:
            if opts.algorithm == "rsd":
                new = _descend_from(cur, opts.alpha, problem)
                rec = IterationRecord(
                    n + 1, new.energy, new.quad, math.nan, "rsd", alpha_used=opts.alpha
                )
            elif opts.algorithm == "rag":
                mom = momentum_next(mom)
                w = _extrapolate_pair(cur, prev, mom.t, problem)
                new = _descend_from(w, opts.alpha, problem)
                rec = IterationRecord(
                    n + 1, new.energy, new.quad, math.nan, "rag_extrapolated",
                    alpha_used=opts.alpha, momentum=mom.t,
                )
            else:
                mom = momentum_next(mom)
                w = _extrapolate_pair(cur, prev, mom.t, problem)
                z = _descend_from(w, opts.alpha, problem)
                nm = nonmonotone_update(nm, cur.energy, opts.varrho)
                v, alpha_used, backtracks, _ = _armijo_from(cur, nm.C, opts, problem)
                if z.energy <= v.energy:
                    new, kind, alpha_rec = z, "rag_extrapolated", opts.alpha
                else:
                    new, kind, alpha_rec = v, "armijo_fallback", alpha_used
                rec = IterationRecord(
                    n + 1, new.energy, new.quad, math.nan, kind,
                    alpha_used=alpha_rec, backtracks=backtracks,
                    ref_energy=nm.C, momentum=mom.t,
                )

            if opts.restart_momentum and new.energy > cur.energy:
                mom = MomentumState()

            prev, cur = cur, new
            n += 1
            r = model._residual(cur.u, cur.uc, problem)
            history.append(replace(rec, residual=r))

            if r <= opts.tol:
                converged = True
            elif not math.isfinite(r) or not math.isfinite(cur.energy):
                diverged = True
            elif r > DIVERGENCE_RESIDUAL_CAP or cur.energy > DIVERGENCE_ENERGY_FACTOR * e0:
                diverged = True
            else:
                if r < best_r:
                    best_r = r
                    stall = 0
                elif r > STAGNATION_FACTOR * best_r:
                    stall += 1
                    if stall >= STAGNATION_WINDOW:
                        diverged = True
                else:
                    stall = 0
    except LineSearchFailed as exc:
        exc.diagnostics["history"] = history
        exc.diagnostics["iterations"] = n
        raise

    return SolveResult(
        final=cur.u,
        history=history,
        converged=converged,
        diverged=diverged,
        iterations=n,
        wall_time=time.perf_counter() - start,
    )
