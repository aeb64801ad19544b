"""Reproducible problem builders, initial guesses, sweeps, and classification.

The named builders cover the standard benchmark systems (three- and
four-component harmonic-potential problems, two-component constant-potential
standing-wave systems, and Gaussian-stirrer potentials).  Randomized initial
guesses use a counter-based generator so that sweep rows are reproducible
individually.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import model
from .errors import NehariError
from .model import CouplingMatrix, Problem
from .solvers import SolveResult, SolverOptions, run
from .spectral import Grid, make_grid

__all__ = [
    "PotentialSpec",
    "ScenarioSpec",
    "build_problem",
    "gaussian_initial",
    "randomized_initial",
    "initial_field",
    "example1",
    "example2",
    "example3",
    "two_component_semitrivial",
    "stirrer_pair",
    "Classification",
    "classify_solution",
    "SweepRow",
    "sweep_coupling",
    "symmetry_defect",
]

POTENTIAL_KINDS = ("constant", "harmonic", "harmonic_plus_one", "gaussian_stirrer", "custom")


@dataclass(frozen=True)
class PotentialSpec:
    """A samplable potential family.

    ``gaussian_stirrer`` places a Gaussian bump of height ``height`` and decay
    rate ``width`` at ``center`` on top of the harmonic bowl x^2 + y^2; the
    other kinds are self-explanatory.  ``scale`` multiplies the whole profile.
    """

    kind: str = "harmonic_plus_one"
    omega: float = 0.0
    height: float = 0.0
    width: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)
    scale: float = 1.0
    samples: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def __post_init__(self) -> None:
        if self.kind not in POTENTIAL_KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}; choose from {POTENTIAL_KINDS}")
        if self.kind == "gaussian_stirrer" and not self.width > 0:
            raise ValueError("stirrer width must be positive")
        if self.kind == "custom" and self.samples is None:
            raise ValueError("custom potentials need a samples callable")

    def sample(self, grid: Grid) -> np.ndarray:
        xx, yy = grid.meshgrid()
        if self.kind == "constant":
            values = np.full(grid.interior_shape, self.omega)
        elif self.kind == "harmonic":
            values = xx**2 + yy**2
        elif self.kind == "harmonic_plus_one":
            values = xx**2 + yy**2 + 1.0
        elif self.kind == "gaussian_stirrer":
            cx, cy = self.center
            bump = self.height * np.exp(-self.width * ((xx - cx) ** 2 + (yy - cy) ** 2))
            values = xx**2 + yy**2 + bump
        else:
            values = np.asarray(self.samples(xx, yy), dtype=np.float64)
        return self.scale * values

    def to_config(self) -> dict:
        if self.kind == "custom":
            raise ValueError("custom potentials cannot be serialized")
        cfg = {"kind": self.kind, "scale": self.scale}
        if self.kind == "constant":
            cfg["omega"] = self.omega
        elif self.kind == "gaussian_stirrer":
            cfg.update(height=self.height, width=self.width, center=list(self.center))
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "PotentialSpec":
        cfg = dict(cfg)
        if "center" in cfg:
            cfg["center"] = tuple(cfg["center"])
        return cls(**cfg)


@dataclass(frozen=True)
class ScenarioSpec:
    """Everything needed to reproduce one problem instance."""

    name: str
    diffusion: tuple[float, ...]
    potentials: tuple[PotentialSpec, ...]
    coupling: tuple[tuple[float, ...], ...]
    half_width: float = 1.0
    subdivisions: int = 64
    initial: str = "gaussian"  # "gaussian" | "random"
    seed: int | None = None

    def __post_init__(self) -> None:
        m = len(self.diffusion)
        if len(self.potentials) != m or len(self.coupling) != m:
            raise ValueError("diffusion, potentials and coupling must agree on the component count")
        if self.initial not in ("gaussian", "random"):
            raise ValueError(f"initial must be 'gaussian' or 'random', got {self.initial!r}")

    @property
    def m(self) -> int:
        return len(self.diffusion)

    def to_config(self) -> dict:
        return {
            "name": self.name,
            "diffusion": list(self.diffusion),
            "potentials": [p.to_config() for p in self.potentials],
            "coupling": [list(row) for row in self.coupling],
            "half_width": self.half_width,
            "subdivisions": self.subdivisions,
            "initial": self.initial,
            "seed": self.seed,
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "ScenarioSpec":
        cfg = dict(cfg)
        cfg["diffusion"] = tuple(cfg["diffusion"])
        cfg["potentials"] = tuple(PotentialSpec.from_config(p) for p in cfg["potentials"])
        cfg["coupling"] = tuple(tuple(row) for row in cfg["coupling"])
        return cls(**cfg)


def build_problem(
    spec: ScenarioSpec,
    subdivisions: int | None = None,
    half_width: float | None = None,
    unscaled_interaction: bool = False,
) -> Problem:
    """Materialize a scenario on a grid; every built problem is validated."""
    grid = make_grid(
        half_width if half_width is not None else spec.half_width,
        subdivisions if subdivisions is not None else spec.subdivisions,
    )
    potentials = np.stack([p.sample(grid) for p in spec.potentials])
    problem = Problem(
        grid=grid,
        diffusion=np.asarray(spec.diffusion, dtype=np.float64),
        potentials=potentials,
        coupling=CouplingMatrix(np.asarray(spec.coupling, dtype=np.float64)),
        unscaled_interaction=unscaled_interaction,
    )
    violations = model.validate_problem(problem)
    if violations:
        raise ValueError(f"scenario {spec.name!r} violates admissibility: " + "; ".join(violations))
    return problem


# -- initial guesses ---------------------------------------------------------------


def _gaussian_bump(grid: Grid) -> np.ndarray:
    xx, yy = grid.meshgrid()
    return np.exp(-16.0 * (xx**2 + yy**2))


def gaussian_initial(problem: Problem) -> np.ndarray:
    """Identical centered Gaussian bumps in every component, pulled back."""
    bump = _gaussian_bump(problem.grid)
    return model.pullback(np.broadcast_to(bump, (problem.m, *bump.shape)).copy(), problem)


def randomized_initial(problem: Problem, seed: int) -> np.ndarray:
    """Gaussian bump modulated by i.i.d. uniform(0,1) noise at every node.

    Uses the counter-based Philox generator so the same seed always produces
    the same field, independent of draw order elsewhere.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    bump = _gaussian_bump(problem.grid)
    noise = rng.random((problem.m, *bump.shape))
    return model.pullback(bump * noise, problem)


def initial_field(spec: ScenarioSpec, problem: Problem, seed: int | None = None) -> np.ndarray:
    """Initial guess according to the scenario's declared kind."""
    if spec.initial == "gaussian":
        return gaussian_initial(problem)
    use = seed if seed is not None else (spec.seed if spec.seed is not None else 0)
    return randomized_initial(problem, use)


# -- named scenarios ----------------------------------------------------------------


def _harmonic2(m: int) -> tuple[PotentialSpec, ...]:
    return tuple(PotentialSpec(kind="harmonic_plus_one", scale=2.0) for _ in range(m))


def example1(g23: float = 6.0) -> ScenarioSpec:
    """Three components, potentials 2(x^2+y^2+1), adjustable 2-3 coupling."""
    coupling = (
        (2.0, 4.0, 4.0),
        (4.0, 4.0, g23),
        (4.0, g23, 6.0),
    )
    return ScenarioSpec(
        name="example1", diffusion=(1.0, 1.0, 1.0), potentials=_harmonic2(3),
        coupling=coupling,
    )


def example2(g34: float = 8.0) -> ScenarioSpec:
    """Four components, potentials 2(x^2+y^2+1), adjustable 3-4 coupling."""
    coupling = (
        (2.0, 4.0, 4.0, 4.0),
        (4.0, 4.0, 4.0, 4.0),
        (4.0, 4.0, 6.0, g34),
        (4.0, 4.0, g34, 8.0),
    )
    return ScenarioSpec(
        name="example2", diffusion=(1.0,) * 4, potentials=_harmonic2(4),
        coupling=coupling,
    )


def example3() -> ScenarioSpec:
    """Four components with weakened 1-3/1-4 links and a strong 3-4 link."""
    coupling = (
        (2.0, 4.0, 2.0, 2.0),
        (4.0, 4.0, 4.0, 4.0),
        (2.0, 4.0, 6.0, 8.0),
        (2.0, 4.0, 8.0, 8.0),
    )
    return ScenarioSpec(
        name="example3", diffusion=(1.0,) * 4, potentials=_harmonic2(4),
        coupling=coupling,
    )


def two_component_semitrivial(
    omega1: float, omega2: float, g11: float, g22: float, g12: float
) -> ScenarioSpec:
    """Two components with constant potentials; the standing-wave study setup."""
    return ScenarioSpec(
        name="two_component_semitrivial",
        diffusion=(1.0, 1.0),
        potentials=(
            PotentialSpec(kind="constant", omega=omega1),
            PotentialSpec(kind="constant", omega=omega2),
        ),
        coupling=((g11, g12), (g12, g22)),
        initial="random",
    )


def stirrer_pair(
    height1: float,
    height2: float,
    width1: float = 1.0,
    width2: float = 1.0,
    centers: tuple[tuple[float, float], tuple[float, float]] = ((0.5, 0.5), (-0.5, -0.5)),
) -> ScenarioSpec:
    """Two components trapped by harmonic bowls with Gaussian stirrer bumps."""
    return ScenarioSpec(
        name="stirrer_pair",
        diffusion=(1.0, 1.0),
        potentials=(
            PotentialSpec(kind="gaussian_stirrer", height=height1, width=width1, center=centers[0]),
            PotentialSpec(kind="gaussian_stirrer", height=height2, width=width2, center=centers[1]),
        ),
        coupling=((1.0, 10.0), (10.0, 3.0)),
        initial="random",
    )


NAMED_SCENARIOS: dict[str, Callable[..., ScenarioSpec]] = {
    "example1": example1,
    "example2": example2,
    "example3": example3,
    "two_component_semitrivial": two_component_semitrivial,
    "stirrer_pair": stirrer_pair,
}


# -- classification and sweeps -------------------------------------------------------


@dataclass(frozen=True)
class Classification:
    components: tuple[str, ...]
    overall: str


def classify_solution(u: np.ndarray, rel_threshold: float = 1e-4) -> Classification:
    """Label components as trivial/nontrivial by relative sup-norm.

    A component is trivial when its sup-norm falls below ``rel_threshold``
    times the largest component sup-norm; the state is semi-trivial when some
    but not all components are trivial, and degenerate (a solver failure) when
    all are.
    """
    sups = np.max(np.abs(u), axis=(-2, -1))
    top = float(np.max(sups))
    if top == 0.0:
        return Classification(("trivial",) * u.shape[0], "degenerate")
    labels = tuple("trivial" if s < rel_threshold * top else "nontrivial" for s in sups)
    if all(lab == "nontrivial" for lab in labels):
        overall = "fully-nontrivial"
    elif all(lab == "trivial" for lab in labels):
        overall = "degenerate"
    else:
        overall = "semi-trivial"
    return Classification(labels, overall)


@dataclass(frozen=True)
class SweepRow:
    parameter: float
    classification: str | None
    energy: float | None
    iterations: int | None
    converged: bool | None
    error: str | None = None


def sweep_coupling(
    spec_builder: Callable[[float], ScenarioSpec],
    parameters: Sequence[float],
    opts: SolverOptions,
    subdivisions: int | None = None,
    seed: int = 0,
    rel_threshold: float = 1e-4,
) -> list[SweepRow]:
    """Solve one problem per parameter value; failures are recorded, not raised.

    Rows are independent; row i draws its randomized initial guess (when the
    scenario asks for one) from the stream keyed by (seed, i), so any row can
    be reproduced on its own.
    """
    rows: list[SweepRow] = []
    for i, value in enumerate(parameters):
        try:
            spec = spec_builder(value)
            problem = build_problem(spec, subdivisions=subdivisions)
            if spec.initial == "random":
                row_seed = int(np.random.SeedSequence((seed, i)).generate_state(1)[0])
                u0 = randomized_initial(problem, row_seed)
            else:
                u0 = gaussian_initial(problem)
            result = run(problem, u0, opts)
            label = classify_solution(result.final, rel_threshold).overall
            rows.append(
                SweepRow(value, label, result.history[-1].energy,
                         result.iterations, result.converged)
            )
        except (NehariError, ValueError) as exc:
            rows.append(SweepRow(value, None, None, None, None, error=str(exc)))
    return rows


def symmetry_defect(u: np.ndarray) -> dict[str, float]:
    """Sup-norm defects of the axis and diagonal reflections (diagnostic only)."""
    return {
        "x_reflection": float(np.max(np.abs(u - u[:, ::-1, :]))),
        "y_reflection": float(np.max(np.abs(u - u[:, :, ::-1]))),
        "diagonal": float(np.max(np.abs(u - np.swapaxes(u, -2, -1)))),
    }
