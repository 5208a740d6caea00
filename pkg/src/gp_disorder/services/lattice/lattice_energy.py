"""
The per-particle Gross-Pitaevskii energy on the 1D lattice.

For interior amplitudes phi(1..L) with Dirichlet walls phi(0) = phi(L+1) = 0:

    E[phi] = sum_{j=0}^{L} (phi(j+1) - phi(j))^2          kinetic, one term per bond
           + sum_x V(x) phi(x)^2                          potential
           + (c/2) sum_x phi(x)^4                         interaction

with c = g_rho * L the interaction coefficient. Sums are accumulated with
numpy's pairwise summation.
"""

from dataclasses import dataclass
from typing import Any, Union

import numpy as np

from .lattice_disorder import PotentialRealization
from .lattice_errors import DimensionMismatch, NotNormalized, check_count, check_nonnegative

NORM_TOLERANCE = 1e-12

PotentialLike = Union[PotentialRealization, np.ndarray]


@dataclass(frozen=True, slots=True, eq=False)
class WaveFunction:
    """
    A normalized real state on the interior sites 1..L.

    Unnormalized vectors are plain arrays; they become a ``WaveFunction``
    only through ``from_amplitudes``, which normalizes.

    Attributes
    ----------
    amplitudes : np.ndarray
        Read-only amplitudes with Euclidean norm 1 (within 1e-12).
    """
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=np.float64).ravel()
        if amps.size < 1:
            raise DimensionMismatch("A wave function needs at least one site.")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise NotNormalized(f"Wave function norm is {norm!r}, expected 1 within {NORM_TOLERANCE}.")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, raw: Any) -> "WaveFunction":
        raw = np.asarray(raw, dtype=np.float64).ravel()
        norm = float(np.linalg.norm(raw))
        if norm == 0.0:
            raise NotNormalized("Cannot normalize the zero vector.")
        return cls(raw / norm)

    @classmethod
    def uniform(cls, size: int) -> "WaveFunction":
        size = check_count("size", size)
        return cls.from_amplitudes(np.ones(size))

    @classmethod
    def half_sine(cls, size: int) -> "WaveFunction":
        """Lowest Dirichlet mode sqrt(2/(L+1)) sin(pi x/(L+1)) of an empty box."""
        size = check_count("size", size)
        x = np.arange(1, size + 1)
        return cls.from_amplitudes(np.sin(np.pi * x / (size + 1)))

    @property
    def size(self) -> int:
        return int(self.amplitudes.size)

    def __len__(self) -> int:
        return self.size

    def is_nonnegative(self) -> bool:
        return bool(np.all(self.amplitudes >= 0.0))

    def abs(self) -> "WaveFunction":
        return WaveFunction(np.abs(self.amplitudes))


@dataclass(frozen=True, slots=True)
class EnergyBreakdown:
    """
    Kinetic, potential and interaction parts of the per-particle energy.
    """
    kinetic: float
    potential: float
    interaction: float
    total: float

    @classmethod
    def from_terms(cls, kinetic: float, potential: float, interaction: float) -> "EnergyBreakdown":
        return cls(
            kinetic=float(kinetic),
            potential=float(potential),
            interaction=float(interaction),
            total=float(kinetic + potential + interaction),
        )

    def to_dict(self) -> dict[str, float]:
        return {
            "kinetic": self.kinetic,
            "potential": self.potential,
            "interaction": self.interaction,
            "total": self.total,
        }


def potential_values(potential: PotentialLike) -> np.ndarray:
    if isinstance(potential, PotentialRealization):
        return potential.values
    return np.asarray(potential, dtype=np.float64).ravel()


def coupling_constant(g_rho: float, size: int) -> float:
    """Interaction coefficient c = g_rho * L of a lattice with ``size`` sites."""
    return check_nonnegative("g_rho", g_rho) * size


def _check_dims(phi_size: int, values: np.ndarray) -> None:
    if phi_size != values.size:
        raise DimensionMismatch(f"State has {phi_size} sites but the potential has {values.size}.")


def _padded(amplitudes: np.ndarray) -> np.ndarray:
    return np.concatenate(([0.0], amplitudes, [0.0]))


def energy_terms(amplitudes: np.ndarray, values: np.ndarray, coupling: float) -> tuple[float, float, float]:
    """Raw (kinetic, potential, interaction) for an arbitrary amplitude vector."""
    bonds = np.diff(_padded(amplitudes))
    sq = amplitudes * amplitudes
    return (
        float(np.sum(bonds * bonds)),
        float(np.sum(values * sq)),
        0.5 * coupling * float(np.sum(sq * sq)),
    )


def apply_hamiltonian(amplitudes: np.ndarray, values: np.ndarray, coupling: float) -> np.ndarray:
    """(-Laplacian + V + c phi^2) phi with Dirichlet neighbours."""
    padded = _padded(amplitudes)
    laplacian = 2.0 * amplitudes - padded[:-2] - padded[2:]
    return laplacian + (values + coupling * amplitudes * amplitudes) * amplitudes


def evaluate_energy(phi: WaveFunction, potential: PotentialLike, g_rho: float) -> EnergyBreakdown:
    """
    Evaluate the energy functional on a normalized state.

    Parameters
    ----------
    phi : WaveFunction
        Normalized state with the same number of sites as the potential.
    potential : PotentialRealization or np.ndarray
        Site potentials.
    g_rho : float
        Density coupling; the interaction coefficient is g_rho * L.

    Returns
    -------
    EnergyBreakdown
        Kinetic (all L+1 bonds), potential and interaction parts.
    """
    if not isinstance(phi, WaveFunction):
        phi = WaveFunction(phi)
    values = potential_values(potential)
    _check_dims(phi.size, values)
    c = coupling_constant(g_rho, values.size)
    return EnergyBreakdown.from_terms(*energy_terms(phi.amplitudes, values, c))


def energy_gradient(phi: WaveFunction, potential: PotentialLike, g_rho: float) -> np.ndarray:
    """
    Euclidean gradient of the energy: 2[(-Laplacian phi) + V phi + c phi^3].
    """
    amps = phi.amplitudes if isinstance(phi, WaveFunction) else np.asarray(phi, dtype=np.float64)
    values = potential_values(potential)
    _check_dims(amps.size, values)
    c = coupling_constant(g_rho, values.size)
    return 2.0 * apply_hamiltonian(amps, values, c)


def tangential_gradient(amplitudes: np.ndarray, gradient: np.ndarray) -> np.ndarray:
    """Component of the gradient orthogonal to the (unit) state."""
    return gradient - float(np.dot(amplitudes, gradient)) * amplitudes


def interaction_minimum(norm_sq: float, site_count: int, g_N: float) -> float:
    """
    Least interaction energy (g_N/2) sum phi^4 of mass ``norm_sq`` on ``site_count`` sites.

    By Cauchy-Schwarz the minimum is (g_N/2) norm_sq^2 / site_count, attained
    by the uniform spread.
    """
    site_count = check_count("site_count", site_count)
    return 0.5 * g_N * norm_sq * norm_sq / site_count
