"""
Ground states of the lattice energy functional under the unit-norm constraint.

``ground_state`` runs a projected descent on the unit sphere: every step
moves along a descent direction tangent to the sphere, renormalizes, clamps
negative amplitudes to a tiny positive floor and renormalizes again, and a
backtracking (Armijo) line search keeps the energy monotone.

The search direction is the tangential gradient preconditioned by the
tridiagonal Hessian of the Lagrangian,

    A = 2(-Laplacian + V + 3 c phi^2 - mu) + s,

where mu is the current chemical potential and s >= 0 a Levenberg shift.
A is factorized by a banded Cholesky solve; when the factorization fails
(A indefinite, typically far from the minimizer) the shift grows until it
succeeds, and it shrinks again after accepted steps. Large shifts reduce the
direction to a scaled steepest descent; s = 0 near the minimizer gives the
projected Newton step and fast local convergence.

Two independent oracles back the solver:
    - ``linear_ground_state``: exact smallest eigenpair of -Laplacian + V
      (bisection + inverse iteration on the tridiagonal matrix), the g = 0
      answer.
    - ``brute_force_minimum``: grid search on the nonnegative part of the
      unit sphere for lattices of at most six sites.
"""

from dataclasses import dataclass, field
from typing import Any, Literal, Optional
import logging
import math

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal, solveh_banded
from scipy.optimize import minimize

from .lattice_disorder import PotentialRealization
from .lattice_energy import (
    EnergyBreakdown,
    PotentialLike,
    WaveFunction,
    apply_hamiltonian,
    coupling_constant,
    energy_terms,
    potential_values,
)
from .lattice_errors import InvalidParameter, check_count, check_positive

InitialState = Literal["uniform", "linear_ground_state", "supplied"]

AMPLITUDE_FLOOR = 1e-300
BRUTE_FORCE_MAX_SITES = 6
_SHIFT_FLOOR = 1e-8
_SHIFT_CEILING = 1e14
_MIN_STEP = 1e-12


@dataclass(slots=True)
class SolverConfig:
    """
    Stopping rules and start policy of ``ground_state``.

    Attributes
    ----------
    tol_gradient : float
        Threshold on the tangential gradient norm.
    tol_energy : float
        Threshold on the energy decrease of the last step.
    max_iterations : int
        Iteration budget; exhausting it returns a partial result.
    initial_state : InitialState or None
        Starting point. ``None`` picks ``linear_ground_state`` when the
        interaction coefficient g_rho * L is at most 1 and ``uniform``
        otherwise.
    line_search_shrink : float
        Backtracking factor in (0, 1).
    initial_amplitudes : np.ndarray or None
        Starting vector for ``initial_state="supplied"``.
    armijo : float
        Sufficient-decrease constant of the line search.
    """
    tol_gradient: float = 1e-10
    tol_energy: float = 1e-14
    max_iterations: int = 1_000_000
    initial_state: Optional[InitialState] = None
    line_search_shrink: float = 0.5
    initial_amplitudes: Optional[np.ndarray] = field(default=None, repr=False)
    armijo: float = 1e-4

    def __post_init__(self) -> None:
        check_positive("tol_gradient", self.tol_gradient, where="SolverConfig")
        check_positive("tol_energy", self.tol_energy, where="SolverConfig")
        check_count("max_iterations", self.max_iterations)
        if not 0.0 < self.line_search_shrink < 1.0:
            raise InvalidParameter(f"line_search_shrink={self.line_search_shrink!r} must lie in (0, 1)")
        if self.initial_state not in (None, "uniform", "linear_ground_state", "supplied"):
            raise InvalidParameter(f"Unknown initial_state: {self.initial_state!r}")
        if self.initial_state == "supplied" and self.initial_amplitudes is None:
            raise InvalidParameter("initial_state='supplied' requires initial_amplitudes.")

    def resolve_initial_state(self, coupling: float) -> InitialState:
        if self.initial_state is not None:
            return self.initial_state
        return "linear_ground_state" if coupling <= 1.0 else "uniform"


@dataclass(frozen=True, slots=True, eq=False)
class GroundStateResult:
    """
    Output of ``ground_state``.

    Attributes
    ----------
    state : WaveFunction
        Normalized, nonnegative minimizer (or last iterate).
    energy : EnergyBreakdown
        Energy of ``state``.
    iterations : int
        Number of accepted descent steps.
    residual : float
        Final tangential gradient norm.
    converged : bool
        Whether both stopping rules were met.
    seed : int or None
        Seed of the realization, when known.
    chemical_potential : float
        phi . H[phi] phi at the final state.
    initial_state : str
        Start policy that was used.
    """
    state: WaveFunction
    energy: EnergyBreakdown
    iterations: int
    residual: float
    converged: bool
    seed: Optional[int] = None
    chemical_potential: float = float("nan")
    initial_state: str = "uniform"

    def to_dict(self, *, include_state: bool = True) -> dict[str, Any]:
        out: dict[str, Any] = {
            "energy": self.energy.to_dict(),
            "iterations": self.iterations,
            "residual": self.residual,
            "converged": self.converged,
            "seed": self.seed,
            "chemical_potential": self.chemical_potential,
            "initial_state": self.initial_state,
        }
        if include_state:
            out["state"] = self.state.amplitudes.tolist()
        return out


# -------------------------------------------------------
# |                  Linear oracle                      |
# -------------------------------------------------------

def linear_ground_state(potential: PotentialLike) -> tuple[float, WaveFunction]:
    """
    Smallest eigenpair of the Dirichlet operator -Laplacian + V.

    Parameters
    ----------
    potential : PotentialRealization or np.ndarray
        Site potentials.

    Returns
    -------
    tuple[float, WaveFunction]
        Eigenvalue and its eigenvector, normalized with nonnegative sign.
    """
    values = potential_values(potential)
    if values.size == 1:
        return 2.0 + float(values[0]), WaveFunction(np.ones(1))

    w, v = eigh_tridiagonal(
        2.0 + values,
        -np.ones(values.size - 1),
        select="i",
        select_range=(0, 0),
        lapack_driver="stebz",
    )
    vec = v[:, 0]
    if vec.sum() < 0.0:
        vec = -vec
    return float(w[0]), WaveFunction.from_amplitudes(np.abs(vec))


# -------------------------------------------------------
# |                  Projected descent                  |
# -------------------------------------------------------

def _project(raw: np.ndarray) -> np.ndarray:
    """Back onto the nonnegative part of the unit sphere."""
    phi = raw / np.linalg.norm(raw)
    phi = np.maximum(phi, AMPLITUDE_FLOOR)
    return phi / np.linalg.norm(phi)


def _total(phi: np.ndarray, values: np.ndarray, coupling: float) -> float:
    return sum(energy_terms(phi, values, coupling))


def _initial_amplitudes(start: InitialState, values: np.ndarray, config: SolverConfig) -> np.ndarray:
    if start == "uniform":
        raw = np.ones(values.size)
    elif start == "linear_ground_state":
        raw = linear_ground_state(values)[1].amplitudes.copy()
    else:
        raw = np.abs(np.asarray(config.initial_amplitudes, dtype=np.float64).ravel())
        if raw.size != values.size:
            raise InvalidParameter(
                f"initial_amplitudes has {raw.size} sites but the potential has {values.size}."
            )
        if not np.any(raw > 0.0):
            raw = np.ones(values.size)
    return _project(raw)


def _newton_direction(
    phi: np.ndarray,
    g_t: np.ndarray,
    mu: float,
    values: np.ndarray,
    coupling: float,
    shift: float,
) -> np.ndarray:
    """
    Tangent direction solving the shifted projected Newton system.

    Raises ``LinAlgError`` when the shifted Hessian is not positive definite.
    """
    ab = np.empty((2, phi.size))
    ab[0, 0] = 0.0
    ab[0, 1:] = -2.0
    ab[1] = 2.0 * (2.0 + values + 3.0 * coupling * phi * phi - mu) + shift
    y = solveh_banded(ab, np.column_stack((g_t, phi)), check_finite=False)
    y_grad, y_phi = y[:, 0], y[:, 1]
    return -y_grad + (float(np.dot(phi, y_grad)) / float(np.dot(phi, y_phi))) * y_phi


def _descent_step(
    phi: np.ndarray,
    energy: float,
    g_t: np.ndarray,
    mu: float,
    values: np.ndarray,
    coupling: float,
    shift: float,
    config: SolverConfig,
) -> Optional[tuple[np.ndarray, float, float]]:
    """
    One accepted step, or None when no shift yields sufficient decrease.

    Returns
    -------
    tuple or None
        (new state, new energy, shift to start from next time).
    """
    slack = 16.0 * np.finfo(float).eps * max(1.0, abs(energy))

    while shift <= _SHIFT_CEILING:
        try:
            d = _newton_direction(phi, g_t, mu, values, coupling, shift)
        except LinAlgError:
            shift = max(10.0 * shift, _SHIFT_FLOOR)
            continue

        slope = float(np.dot(g_t, d))
        if not np.isfinite(slope) or slope >= 0.0:
            shift = max(10.0 * shift, _SHIFT_FLOOR)
            continue

        alpha = 1.0
        while alpha >= _MIN_STEP:
            trial = _project(phi + alpha * d)
            e_trial = _total(trial, values, coupling)
            if e_trial <= energy + config.armijo * alpha * slope + slack:
                next_shift = shift / 10.0 if shift > _SHIFT_FLOOR else 0.0
                return trial, e_trial, next_shift
            alpha *= config.line_search_shrink

        shift = max(10.0 * shift, _SHIFT_FLOOR)

    return None


def ground_state(
    potential: PotentialLike,
    g_rho: float,
    config: Optional[SolverConfig] = None,
    *,
    logger: Optional[logging.Logger] = None,
) -> GroundStateResult:
    """
    Minimize the energy functional over normalized nonnegative states.

    Parameters
    ----------
    potential : PotentialRealization or np.ndarray
        Site potentials.
    g_rho : float
        Density coupling; the interaction coefficient is g_rho * L.
    config : SolverConfig, optional
        Tolerances and start policy. Defaults to ``SolverConfig()``.
    logger : logging.Logger, optional
        Receives a warning when the solve does not converge.

    Returns
    -------
    GroundStateResult
        The minimizer with its diagnostics. Non-convergence is reported via
        ``converged=False``; the last iterate is returned.
    """
    config = config or SolverConfig()
    values = potential_values(potential)
    coupling = coupling_constant(g_rho, values.size)
    start = config.resolve_initial_state(coupling)

    phi = _initial_amplitudes(start, values, config)
    energy = _total(phi, values, coupling)
    last_decrease = math.inf
    shift = 0.0
    iterations = 0
    converged = False

    while True:
        grad = 2.0 * apply_hamiltonian(phi, values, coupling)
        mu = 0.5 * float(np.dot(phi, grad))
        g_t = grad - 2.0 * mu * phi
        residual = float(np.linalg.norm(g_t))

        if residual <= config.tol_gradient and (iterations == 0 or last_decrease <= config.tol_energy):
            converged = True
            break
        if iterations >= config.max_iterations:
            break

        step = _descent_step(phi, energy, g_t, mu, values, coupling, shift, config)
        if step is None:
            break

        phi, e_new, shift = step
        last_decrease = energy - e_new
        energy = e_new
        iterations += 1

    if not converged and logger is not None:
        logger.warning(
            "Ground state did not converge after %d iterations (residual=%.3e, L=%d, g_rho=%g)",
            iterations, residual, values.size, g_rho,
        )

    state = WaveFunction(phi)
    seed = potential.seed if isinstance(potential, PotentialRealization) else None
    return GroundStateResult(
        state=state,
        energy=EnergyBreakdown.from_terms(*energy_terms(state.amplitudes, values, coupling)),
        iterations=iterations,
        residual=residual,
        converged=converged,
        seed=seed,
        chemical_potential=mu,
        initial_state=start,
    )


# -------------------------------------------------------
# |                 Brute-force oracle                  |
# -------------------------------------------------------

def _angles_to_states(angles: np.ndarray) -> np.ndarray:
    """
    Hyperspherical angles in [0, pi/2]^(L-1) to unit vectors with nonnegative entries.
    """
    m = angles.shape[0]
    ones = np.ones((m, 1))
    prefix = np.concatenate((ones, np.cumprod(np.sin(angles), axis=1)), axis=1)
    return prefix * np.concatenate((np.cos(angles), ones), axis=1)


def _batch_energy(states: np.ndarray, values: np.ndarray, coupling: float) -> np.ndarray:
    padded = np.pad(states, ((0, 0), (1, 1)))
    bonds = np.diff(padded, axis=1)
    sq = states * states
    return (bonds * bonds).sum(axis=1) + sq @ values + 0.5 * coupling * (sq * sq).sum(axis=1)


def brute_force_minimum(
    potential: PotentialLike,
    g_rho: float,
    grid_points_per_axis: int = 24,
) -> float:
    """
    Grid-search minimum of the functional on the nonnegative unit hemisphere.

    The best point of a uniform angular grid is refined by one bounded
    L-BFGS-B polish in angle space.

    Parameters
    ----------
    potential : PotentialRealization or np.ndarray
        Site potentials, at most six sites.
    g_rho : float
        Density coupling; the interaction coefficient is g_rho * L.
    grid_points_per_axis : int
        Grid resolution per angle, at least 2.

    Returns
    -------
    float
        An upper bound on the true minimum that converges to it as the grid
        refines.
    """
    values = potential_values(potential)
    L = values.size
    if L > BRUTE_FORCE_MAX_SITES:
        raise InvalidParameter(
            f"brute_force_minimum supports at most {BRUTE_FORCE_MAX_SITES} sites, got {L}."
        )
    n = check_count("grid_points_per_axis", grid_points_per_axis, minimum=2)
    coupling = coupling_constant(g_rho, L)

    if L == 1:
        return 2.0 + float(values[0]) + 0.5 * coupling

    theta = np.linspace(0.0, 0.5 * np.pi, n)
    best = math.inf
    best_angles = np.zeros(L - 1)

    # one chunk per value of the first angle
    for i0 in range(n):
        axes = [theta[i0:i0 + 1]] + [theta] * (L - 2)
        grids = np.meshgrid(*axes, indexing="ij")
        angles = np.stack([g.ravel() for g in grids], axis=1)
        energies = _batch_energy(_angles_to_states(angles), values, coupling)
        k = int(np.argmin(energies))
        if energies[k] < best:
            best = float(energies[k])
            best_angles = angles[k].copy()

    polish = minimize(
        lambda a: float(_batch_energy(_angles_to_states(a[None, :]), values, coupling)[0]),
        best_angles,
        method="L-BFGS-B",
        bounds=[(0.0, 0.5 * np.pi)] * (L - 1),
    )
    return min(best, float(polish.fun))
