"""
Explicit test functions and energy bounds for the small-coupling regime.

Upper side: a half-sine on every lake longer than the logarithmic cutoff

    l* = log_p(g_rho) + log_p(log_p(g_rho)),

with lake masses proportional to lake lengths. Its energy is bounded by

    3 g_rho L / (4 S) + pi^2 / (l* + 1)^2,      S = sum of lengths above l*.

Lower side: the Lagrange (water-filling) allocation of mass to lakes that
minimizes  sum_i (c/2) m_i^4 / L_i + m_i^2 kappa^2 pi^2 / L_i^2  at fixed
total mass, with c = g_rho L and kappa = 1 - 1/sqrt(2), and the
interaction-only lower bound on the contributing sites.
"""

from dataclasses import dataclass, field
from typing import Any
import math

import numpy as np

from .lattice_disorder import LakeDecomposition
from .lattice_energy import WaveFunction
from .lattice_errors import (
    InvalidParameter,
    OutOfRegime,
    WaterFillError,
    check_nonnegative,
    check_positive,
    check_probability,
)

KAPPA = 1.0 - 1.0 / math.sqrt(2.0)
_KAPPA_PI_SQ = (KAPPA * math.pi) ** 2


@dataclass(frozen=True, slots=True, eq=False)
class MassAllocation:
    """
    Water-filling allocation of mass to lakes.

    Attributes
    ----------
    masses : np.ndarray
        m_i^2 per lake in lattice order; zero on lakes not longer than ``cutoff``.
    lambda_ : float
        Lagrange multiplier.
    cutoff : float
        kappa pi / sqrt(lambda), the shortest length that receives mass.
    active : np.ndarray
        Boolean mask of lakes with positive allocation.
    """
    masses: np.ndarray
    lambda_: float
    cutoff: float
    active: np.ndarray = field(repr=False)

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    def to_dict(self) -> dict[str, Any]:
        return {
            "masses": self.masses.tolist(),
            "lambda": self.lambda_,
            "cutoff": self.cutoff,
            "active_lakes": int(self.active.sum()),
        }


# -------------------------------------------------------
# |                   Cutoff and regime                 |
# -------------------------------------------------------

def log_p(y: float, p: float) -> float:
    """Logarithm of y in base p."""
    return math.log(y) / math.log(p)


def regime_log(g_rho: float, p: float) -> float:
    """
    log_p(g_rho), required to exceed 1 strictly.

    Raises
    ------
    OutOfRegime
        If g_rho is not small enough for the logarithmic cutoff to exist.
    """
    p = check_probability(p)
    g_rho = check_positive("g_rho", g_rho)
    lp = log_p(g_rho, p)
    if not lp > 1.0:
        raise OutOfRegime(f"log_p(g_rho) = {lp:.6g} must exceed 1 (p={p}, g_rho={g_rho:g}).")
    return lp


def cutoff_length(g_rho: float, p: float) -> float:
    """
    Logarithmic cutoff l* = log_p(g_rho) + log_p(log_p(g_rho)).

    Parameters
    ----------
    g_rho : float
        Density coupling in (0, 1).
    p : float
        Probability of a zero site, in (0, 1).

    Returns
    -------
    float
        The real-valued cutoff; lakes strictly longer than it contribute.
    """
    lp = regime_log(g_rho, p)
    return lp + log_p(lp, p)


def lambda_asymptotic(g_rho: float, p: float) -> float:
    """Leading-order multiplier (kappa pi / l*)^2 with the O(1) correction set to 0."""
    return (KAPPA * math.pi / cutoff_length(g_rho, p)) ** 2


def asymptotic_upper_constant(p: float) -> float:
    """C' = 3/(4q) + pi^2."""
    p = check_probability(p)
    return 3.0 / (4.0 * (1.0 - p)) + math.pi ** 2


def asymptotic_upper_bound(g_rho: float, p: float) -> float:
    """Leading-order upper bound C' / log_p(g_rho)^2 on the expected ground-state energy."""
    lp = regime_log(g_rho, p)
    return asymptotic_upper_constant(p) / (lp * lp)


# -------------------------------------------------------
# |                 Sine test function                  |
# -------------------------------------------------------

def sine_quartic_sum(length: int) -> float:
    """
    Exact sum_{x=1}^{L} sin^4(pi x/(L+1)).

    Equals 3(L+1)/8 for L >= 2 and 1 for L = 1.
    """
    if length < 1:
        raise InvalidParameter(f"length={length!r} must be >= 1")
    return 1.0 if length == 1 else 3.0 * (length + 1) / 8.0


def _contributing(decomposition: LakeDecomposition, g_rho: float, p: float) -> tuple[np.ndarray, float]:
    """Mask of lakes strictly longer than l*, and the cutoff."""
    ell = cutoff_length(g_rho, p)
    mask = decomposition.lake_lengths > ell
    if not mask.any():
        raise OutOfRegime(
            f"No lake is longer than the cutoff {ell:.4f} "
            f"(longest lake: {int(decomposition.lake_lengths.max(initial=0))})."
        )
    return mask, ell


def contributing_length(decomposition: LakeDecomposition, g_rho: float, p: float) -> int:
    """S = total length of the lakes strictly longer than l*."""
    mask, _ = _contributing(decomposition, g_rho, p)
    return int(decomposition.lake_lengths[mask].sum())


def build_test_function(decomposition: LakeDecomposition, g_rho: float, p: float) -> WaveFunction:
    """
    Half-sine test state on the lakes longer than the cutoff.

    Lake i receives m_i sqrt(2/(L_i+1)) sin(pi x/(L_i+1)) with
    m_i^2 = L_i / S; every other site is zero.

    Raises
    ------
    OutOfRegime
        If log_p(g_rho) <= 1 or no lake is longer than the cutoff.
    """
    mask, _ = _contributing(decomposition, g_rho, p)
    lengths = decomposition.lake_lengths
    S = float(lengths[mask].sum())

    amps = np.zeros(decomposition.total_length)
    for lake, use in zip(decomposition.lakes, mask):
        if not use:
            continue
        n = lake.length
        x = np.arange(1, n + 1)
        m = math.sqrt(n / S)
        amps[lake.start:lake.stop] = m * math.sqrt(2.0 / (n + 1)) * np.sin(np.pi * x / (n + 1))
    return WaveFunction.from_amplitudes(amps)


def upper_bound_energy(decomposition: LakeDecomposition, g_rho: float, p: float) -> float:
    """
    3 g_rho L / (4 S) + pi^2 / (l* + 1)^2 on the given realization.

    Dominates the energy of ``build_test_function`` and hence the ground-state energy.
    """
    mask, ell = _contributing(decomposition, g_rho, p)
    S = float(decomposition.lake_lengths[mask].sum())
    return 3.0 * g_rho * decomposition.total_length / (4.0 * S) + math.pi ** 2 / (ell + 1.0) ** 2


def upper_bound_energy_sharp(decomposition: LakeDecomposition, g_rho: float, p: float) -> float:
    """
    Exact energy of the sine test function, summed lake by lake.

    Kinetic m_i^2 4 sin^2(pi/(2(L_i+1))) plus interaction
    (g_rho L/2) m_i^4 (4/(L_i+1)^2) sum sin^4.
    """
    mask, _ = _contributing(decomposition, g_rho, p)
    lengths = decomposition.lake_lengths[mask]
    S = float(lengths.sum())
    coupling = g_rho * decomposition.total_length

    total = 0.0
    for n in lengths.tolist():
        m_sq = n / S
        kinetic = m_sq * 4.0 * math.sin(math.pi / (2.0 * (n + 1))) ** 2
        interaction = 0.5 * coupling * m_sq * m_sq * 4.0 / (n + 1) ** 2 * sine_quartic_sum(n)
        total += kinetic + interaction
    return total


# -------------------------------------------------------
# |                Lagrange allocation                  |
# -------------------------------------------------------

def water_fill(
    decomposition: LakeDecomposition,
    g_rho: float,
    total_length: int,
    norm_target: float = 1.0,
) -> MassAllocation:
    """
    Allocate ``norm_target`` of mass to lakes by water-filling.

    m_i^2 = max(0, (L_i/c)(lambda - kappa^2 pi^2 / L_i^2)) with c = g_rho * total_length,
    lambda chosen so that the masses sum to ``norm_target``.

    The mass function is piecewise linear and nondecreasing in lambda with
    breakpoints kappa^2 pi^2 / L_i^2. A binary search over the breakpoints
    isolates the active set; lambda is then solved in closed form on it.

    Parameters
    ----------
    decomposition : LakeDecomposition
        Lakes of the realization, at least one.
    g_rho : float
        Density coupling, positive.
    total_length : int
        Number of sites L entering c = g_rho L.
    norm_target : float
        Total mass in (0, 1].

    Returns
    -------
    MassAllocation

    Raises
    ------
    WaterFillError
        If the closed-form multiplier falls outside its bracketing breakpoints.
    """
    g_rho = check_positive("g_rho", g_rho, where="water_fill")
    if not 0.0 < norm_target <= 1.0:
        raise InvalidParameter(f"water_fill: norm_target={norm_target!r} must lie in (0, 1]")
    if decomposition.n_lakes == 0:
        raise OutOfRegime("water_fill needs at least one lake.")

    c = g_rho * total_length
    lengths = decomposition.lake_lengths.astype(np.float64)
    breakpoints = _KAPPA_PI_SQ / lengths**2

    order = np.argsort(breakpoints, kind="stable")
    t = breakpoints[order]
    cum_len = np.cumsum(lengths[order])
    cum_inv = np.cumsum(1.0 / lengths[order])

    # mass at each breakpoint uses only the lakes strictly before it
    before_len = np.concatenate(([0.0], cum_len[:-1]))
    before_inv = np.concatenate(([0.0], cum_inv[:-1]))
    mass_at = (t * before_len - _KAPPA_PI_SQ * before_inv) / c

    k = int(np.searchsorted(mass_at, norm_target, side="left")) - 1
    k = max(k, 0)
    lam = (c * norm_target + _KAPPA_PI_SQ * cum_inv[k]) / cum_len[k]

    lo = float(t[k])
    hi = float(t[k + 1]) if k + 1 < t.size else math.inf
    slack = 1e-12 * max(1.0, abs(lam))
    if not (math.isfinite(lam) and lo - slack <= lam <= hi + slack):
        raise WaterFillError(
            "Multiplier left its bracket",
            lo=lo, hi=hi,
            sum_lo=float(mass_at[k]),
            sum_hi=float(mass_at[k + 1]) if k + 1 < t.size else math.inf,
            target=norm_target,
        )

    active = np.zeros(lengths.size, dtype=bool)
    active[order[: k + 1]] = True
    masses = np.where(active, lengths / c * (lam - breakpoints), 0.0)
    masses = np.maximum(masses, 0.0)
    active &= masses > 0.0
    masses.setflags(write=False)
    active.setflags(write=False)

    return MassAllocation(
        masses=masses,
        lambda_=float(lam),
        cutoff=KAPPA * math.pi / math.sqrt(lam),
        active=active,
    )


def allocation_objective(masses: np.ndarray, lengths: np.ndarray, coupling: float) -> float:
    """sum_i (c/2) m_i^4 / L_i + m_i^2 kappa^2 pi^2 / L_i^2, with ``masses`` holding m_i^2."""
    masses = np.asarray(masses, dtype=np.float64)
    lengths = np.asarray(lengths, dtype=np.float64)
    return float(np.sum(0.5 * coupling * masses**2 / lengths + masses * _KAPPA_PI_SQ / lengths**2))


def lower_bound_energy(
    decomposition: LakeDecomposition,
    g_rho: float,
    p: float,
    norm_target: float = 1.0,
) -> float:
    """
    Interaction-only lower bound norm_target^2 g_rho L / (2 S).

    S is the realization's own count of sites on lakes longer than l*.

    Raises
    ------
    OutOfRegime
        If S = 0 or log_p(g_rho) <= 1.
    """
    norm_target = check_nonnegative("norm_target", norm_target, where="lower_bound_energy")
    S = contributing_length(decomposition, g_rho, p)
    return norm_target * norm_target * g_rho * decomposition.total_length / (2.0 * S)
