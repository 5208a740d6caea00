"""
Diagnostics of ground states and the disorder-averaged studies.

- occupation sets and the delocalization lower bound on their size
- classification of lakes as long / heavy / light and the matching norm
  decomposition, with the kinetic lower bound on heavy lakes
- subadditivity of the unnormalized minima under a Dirichlet split
- convergence (thermodynamic limit) and coupling-scaling studies, run as
  plans of independent work items
"""

from dataclasses import dataclass, replace
from typing import Any, Iterable, Literal, Optional, Sequence
import logging
import math

import numpy as np
import pandas as pd

from .lattice_disorder import (
    Interval,
    LakeDecomposition,
    decompose_lakes,
    expected_lake_count,
    expected_mass_above,
    sample_fixed_interval_count,
    sample_fixed_length,
)
from .lattice_energy import PotentialLike, WaveFunction, potential_values
from .lattice_errors import (
    DimensionMismatch,
    InvalidParameter,
    OutOfRegime,
    WaterFillError,
    check_count,
    check_nonnegative,
    check_positive,
    check_probability,
)
from .lattice_exec import StudyExecutionEngine
from .lattice_planner import (
    WorkItem,
    build_convergence_plan,
    build_scaling_plan,
    build_subadditivity_plan,
)
from .lattice_serialization import SOFTWARE_VERSION
from .lattice_solver import SolverConfig, ground_state
from .lattice_variational import (
    KAPPA,
    asymptotic_upper_constant,
    cutoff_length,
    lambda_asymptotic,
    log_p,
    lower_bound_energy,
    upper_bound_energy,
    upper_bound_energy_sharp,
    water_fill,
)

DEFAULT_EPSILONS: tuple[float, ...] = (0.1, 0.5, 0.9)
SUBADDITIVITY_TOLERANCE = 1e-9

LakeClass = Literal["long", "heavy", "light"]


def _amplitudes(phi: WaveFunction | np.ndarray) -> np.ndarray:
    if isinstance(phi, WaveFunction):
        return phi.amplitudes
    return WaveFunction(phi).amplitudes


def _check_epsilon(epsilon: float) -> float:
    epsilon = float(epsilon)
    if not 0.0 < epsilon < 1.0:
        raise InvalidParameter(f"epsilon={epsilon!r} must lie in (0, 1)")
    return epsilon


# -------------------------------------------------------
# |                 Occupation and bound                |
# -------------------------------------------------------

@dataclass(frozen=True, slots=True)
class OccupationReport:
    """
    Size of the occupation set {x : |phi(x)| > epsilon / sqrt(L)}.

    ``bound`` and ``satisfied`` stay None until the report is paired with
    an energy through ``with_bound``.
    """
    epsilon: float
    threshold: float
    occupied_count: int
    bound: Optional[float] = None
    satisfied: Optional[bool] = None

    def with_bound(self, bound: float) -> "OccupationReport":
        return replace(self, bound=float(bound), satisfied=bool(self.occupied_count >= bound))

    def to_dict(self) -> dict[str, Any]:
        return {
            "epsilon": self.epsilon,
            "threshold": self.threshold,
            "occupied_count": self.occupied_count,
            "bound": self.bound,
            "satisfied": self.satisfied,
        }


def occupation_set(phi: WaveFunction, epsilon: float) -> OccupationReport:
    """
    Count the sites where |phi(x)| exceeds epsilon / sqrt(L).

    Parameters
    ----------
    phi : WaveFunction
        Normalized state.
    epsilon : float
        Level in (0, 1).

    Returns
    -------
    OccupationReport
        Exact count, bound unset.
    """
    epsilon = _check_epsilon(epsilon)
    amps = _amplitudes(phi)
    threshold = epsilon / math.sqrt(amps.size)
    count = int(np.count_nonzero(np.abs(amps) > threshold))
    return OccupationReport(epsilon=epsilon, threshold=threshold, occupied_count=count)


def delocalization_bound(g_N: float, epsilon: float, energy: float, v_min: float = 0.0) -> float:
    """
    Lower bound g_N (1 - epsilon^2)^2 / (2 (E - v_min)) on the occupation count.

    Raises
    ------
    InvalidParameter
        If energy <= v_min.
    """
    g_N = check_nonnegative("g_N", g_N, where="delocalization_bound")
    epsilon = _check_epsilon(epsilon)
    if not energy > v_min:
        raise InvalidParameter(f"delocalization_bound: energy={energy!r} must exceed v_min={v_min!r}")
    return g_N * (1.0 - epsilon * epsilon) ** 2 / (2.0 * (energy - v_min))


def delocalization_report(
    phi: WaveFunction,
    energy: float,
    g_N: float,
    epsilons: Iterable[float] = DEFAULT_EPSILONS,
    v_min: float = 0.0,
) -> list[OccupationReport]:
    """Occupation reports with their bound, one per epsilon."""
    return [
        occupation_set(phi, eps).with_bound(delocalization_bound(g_N, eps, energy, v_min))
        for eps in epsilons
    ]


# -------------------------------------------------------
# |                 Lake classification                 |
# -------------------------------------------------------

@dataclass(frozen=True, slots=True)
class LakeRecord:
    """
    Attributes
    ----------
    lake_index : int
        Position of the lake among the lakes, in lattice order.
    start, length : int
        Location of the lake.
    m : float
        Norm of the state restricted to the lake.
    delta_left, delta_right : float
        Amplitude on the adjacent barrier site divided by ``m``; 0 against a
        wall, NaN when ``m`` is 0.
    kind : LakeClass
    """
    lake_index: int
    start: int
    length: int
    m: float
    delta_left: float
    delta_right: float
    kind: LakeClass

    @property
    def m_sq(self) -> float:
        return self.m * self.m


@dataclass(frozen=True, slots=True)
class IntervalClassification:
    records: tuple[LakeRecord, ...]
    barrier_norm_sq: float
    long_threshold: float

    def count(self, kind: LakeClass) -> int:
        return sum(1 for r in self.records if r.kind == kind)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "lake_index": r.lake_index,
                    "start": r.start,
                    "length": r.length,
                    "m_sq": r.m_sq,
                    "delta_left": r.delta_left,
                    "delta_right": r.delta_right,
                    "kind": r.kind,
                }
                for r in self.records
            ],
            columns=["lake_index", "start", "length", "m_sq", "delta_left", "delta_right", "kind"],
        )


def classify_intervals(
    phi: WaveFunction,
    decomposition: LakeDecomposition,
    g_rho: float,
    p: float,
) -> IntervalClassification:
    """
    Split the lakes into long, heavy and light ones.

    A lake is long when L_i > log_p(g_rho). Otherwise it is heavy when
    max(delta_L, delta_R) <= 1/(2 sqrt(L_i)) and light when not. A lake
    carrying no mass is heavy. A barrier site between two lakes counts for
    both neighbours.

    Raises
    ------
    DimensionMismatch
        If the state and the decomposition disagree on L.
    """
    amps = np.abs(_amplitudes(phi))
    if amps.size != decomposition.total_length:
        raise DimensionMismatch(
            f"State has {amps.size} sites but the decomposition covers {decomposition.total_length}."
        )
    p = check_probability(p, where="classify_intervals")
    g_rho = check_positive("g_rho", g_rho, where="classify_intervals")
    long_threshold = log_p(g_rho, p)
    L = amps.size

    records = []
    for i, lake in enumerate(decomposition.lakes):
        m = float(np.linalg.norm(amps[lake.start:lake.stop]))
        left = float(amps[lake.start - 1]) if lake.start > 0 else 0.0
        right = float(amps[lake.stop]) if lake.stop < L else 0.0

        if m > 0.0:
            delta_left, delta_right = left / m, right / m
        else:
            delta_left = delta_right = math.nan

        if lake.length > long_threshold:
            kind: LakeClass = "long"
        elif m == 0.0 or max(delta_left, delta_right) <= 0.5 / math.sqrt(lake.length):
            kind = "heavy"
        else:
            kind = "light"

        records.append(LakeRecord(i, lake.start, lake.length, m, delta_left, delta_right, kind))

    barrier_norm_sq = float(sum(np.sum(amps[bar.start:bar.stop] ** 2) for bar in decomposition.barriers))
    return IntervalClassification(tuple(records), barrier_norm_sq, long_threshold)


def heavy_kinetic_lower_bound(m_sq: float, lake_length: int) -> float:
    """m^2 kappa^2 pi^2 / (L_i + 1)^2, with kappa = 1 - 1/sqrt(2)."""
    m_sq = check_nonnegative("m_sq", m_sq, where="heavy_kinetic_lower_bound")
    lake_length = check_count("lake_length", lake_length, where="heavy_kinetic_lower_bound")
    return m_sq * (KAPPA * math.pi) ** 2 / (lake_length + 1) ** 2


def lake_kinetic_energy(phi: WaveFunction, lake: Interval) -> float:
    """Kinetic energy of the bonds touching a lake, both boundary bonds included."""
    amps = _amplitudes(phi)
    padded = np.concatenate(([0.0], amps, [0.0]))
    bonds = np.diff(padded[lake.start:lake.stop + 2])
    return float(np.sum(bonds * bonds))


@dataclass(frozen=True, slots=True)
class NormDecomposition:
    barrier: float
    long: float
    light: float
    heavy: float

    @property
    def total(self) -> float:
        return self.barrier + self.long + self.light + self.heavy

    def to_dict(self) -> dict[str, float]:
        return {"barrier": self.barrier, "long": self.long, "light": self.light, "heavy": self.heavy}


def norm_decomposition(phi: WaveFunction, classification: IntervalClassification) -> NormDecomposition:
    """Squared norms on barriers, long, light and heavy lakes; they sum to 1."""
    amps = _amplitudes(phi)
    parts = {"long": 0.0, "light": 0.0, "heavy": 0.0}
    lake_total = 0.0
    for r in classification.records:
        mass = float(np.sum(amps[r.start:r.start + r.length] ** 2))
        parts[r.kind] += mass
        lake_total += mass
    barrier = float(np.sum(amps * amps)) - lake_total
    return NormDecomposition(barrier=max(barrier, 0.0), **parts)


def barrier_bound_coefficient(barrier_norm_sq: float, b: float, g_rho: float, p: float) -> float:
    """Measured coefficient C+ = ||phi on barriers||^2 b log_p(g_rho)^2."""
    lp = log_p(g_rho, p)
    return barrier_norm_sq * b * lp * lp


def lake_summary(decomposition: LakeDecomposition, p: float) -> dict[str, Any]:
    """Counts and lengths of a decomposition next to their expectations."""
    lengths = decomposition.lake_lengths
    q = 1.0 - p
    return {
        "total_length": decomposition.total_length,
        "n_lakes": decomposition.n_lakes,
        "n_barriers": len(decomposition.barriers),
        "zero_sites": int(lengths.sum()),
        "mean_lake_length": float(lengths.mean()) if lengths.size else math.nan,
        "max_lake_length": int(lengths.max(initial=0)),
        "expected_mean_lake_length": 1.0 / q if q > 0.0 else math.inf,
        "expected_lake_count": expected_lake_count(decomposition.total_length, p),
    }


# -------------------------------------------------------
# |                   Subadditivity                     |
# -------------------------------------------------------

@dataclass(frozen=True, slots=True)
class SubadditivityCheck:
    x_0L: float
    x_0M: float
    x_ML: float
    holds: bool

    def to_dict(self) -> dict[str, Any]:
        return {"x_0L": self.x_0L, "x_0M": self.x_0M, "x_ML": self.x_ML, "holds": self.holds}


def unnormalized_minimum(potential: PotentialLike, g_rho: float, config: Optional[SolverConfig] = None) -> tuple[float, bool]:
    """
    X = min over ||phi|| = sqrt(M) of the functional with fixed coupling g_rho.

    Rescaling phi = sqrt(M) psi gives X = M E_0^(M)(g_rho).
    """
    values = potential_values(potential)
    result = ground_state(values, g_rho, config)
    return values.size * result.energy.total, result.converged


def check_subadditivity(
    potential: PotentialLike,
    split: int,
    g_rho: float,
    config: Optional[SolverConfig] = None,
) -> SubadditivityCheck:
    """
    Compare X on [0, L) with X on [0, split) plus X on [split, L).

    Raises
    ------
    InvalidParameter
        If ``split`` is not in [1, L).
    """
    values = potential_values(potential)
    L = values.size
    if isinstance(split, bool) or int(split) != split or not 1 <= split < L:
        raise InvalidParameter(f"split={split!r} must be an integer in [1, {L})")
    split = int(split)

    x_0L, _ = unnormalized_minimum(values, g_rho, config)
    x_0M, _ = unnormalized_minimum(values[:split], g_rho, config)
    x_ML, _ = unnormalized_minimum(values[split:], g_rho, config)
    return SubadditivityCheck(
        x_0L=x_0L,
        x_0M=x_0M,
        x_ML=x_ML,
        holds=bool(x_0M + x_ML >= x_0L - SUBADDITIVITY_TOLERANCE),
    )


# -------------------------------------------------------
# |                 Study row workers                   |
# -------------------------------------------------------

def convergence_row(item: WorkItem) -> dict[str, Any]:
    prm = item.params
    potential = sample_fixed_length(prm["L"], prm["p"], prm["b"], item.seed)
    result = ground_state(potential, prm["g_rho"], prm["solver"])
    return {
        "p": prm["p"],
        "b": prm["b"],
        "g_rho": prm["g_rho"],
        "L": potential.size,
        "seed": item.seed,
        "energy": result.energy.total,
        "kinetic": result.energy.kinetic,
        "potential": result.energy.potential,
        "interaction": result.energy.interaction,
        "iterations": result.iterations,
        "residual": result.residual,
        "converged": result.converged,
        "version": SOFTWARE_VERSION,
    }


def _regime_columns(
    decomposition: LakeDecomposition,
    g_rho: float,
    p: float,
    norm_target: float,
) -> dict[str, Any]:
    """Bounds and multipliers of one realization, NaN outside the asymptotic regime."""
    nan_row = {
        "in_regime": False,
        "cutoff": math.nan,
        "upper_bound": math.nan,
        "upper_bound_sharp": math.nan,
        "lower_bound": math.nan,
        "lambda_water_fill": math.nan,
        "lambda_asymptotic": math.nan,
    }
    try:
        return {
            "in_regime": True,
            "cutoff": cutoff_length(g_rho, p),
            "upper_bound": upper_bound_energy(decomposition, g_rho, p),
            "upper_bound_sharp": upper_bound_energy_sharp(decomposition, g_rho, p),
            "lower_bound": lower_bound_energy(decomposition, g_rho, p, norm_target),
            "lambda_water_fill": water_fill(decomposition, g_rho, decomposition.total_length, norm_target).lambda_,
            "lambda_asymptotic": lambda_asymptotic(g_rho, p),
        }
    except (OutOfRegime, WaterFillError):
        return nan_row


def scaling_row(item: WorkItem) -> dict[str, Any]:
    prm = item.params
    p, b, g_rho = prm["p"], prm["b"], prm["g_rho"]
    potential = sample_fixed_interval_count(prm["n"], p, b, item.seed)
    decomposition = decompose_lakes(potential)
    result = ground_state(potential, g_rho, prm["solver"])
    L = potential.size
    energy = result.energy.total

    lp = log_p(g_rho, p)
    log_sq = lp * lp
    regime = _regime_columns(decomposition, g_rho, p, prm["norm_target"])

    classification = classify_intervals(result.state, decomposition, g_rho, p)
    norms = norm_decomposition(result.state, classification)
    reports = delocalization_report(result.state, energy, g_rho * L, prm["epsilons"])

    return {
        "p": p,
        "b": b,
        "g_rho": g_rho,
        "n": prm["n"],
        "seed": item.seed,
        "L": L,
        "energy": energy,
        "log_p_sq": log_sq,
        "energy_scaled": energy * log_sq,
        **regime,
        "upper_scaled": regime["upper_bound"] * log_sq,
        "lower_scaled": regime["lower_bound"] * log_sq,
        "norm_barrier": norms.barrier,
        "norm_long": norms.long,
        "norm_light": norms.light,
        "norm_heavy": norms.heavy,
        "barrier_coefficient": barrier_bound_coefficient(norms.barrier, b, g_rho, p),
        "delocalization_ok": all(r.satisfied for r in reports),
        "iterations": result.iterations,
        "residual": result.residual,
        "converged": result.converged,
        "version": SOFTWARE_VERSION,
    }


def subadditivity_row(item: WorkItem) -> dict[str, Any]:
    prm = item.params
    potential = sample_fixed_length(prm["L"], prm["p"], prm["b"], item.seed)
    check = check_subadditivity(potential, prm["split"], prm["g_rho"], prm["solver"])
    return {
        "p": prm["p"],
        "b": prm["b"],
        "g_rho": prm["g_rho"],
        "L": potential.size,
        "seed": item.seed,
        "split": prm["split"],
        **check.to_dict(),
        "version": SOFTWARE_VERSION,
    }


STUDY_WORKERS = {
    "converge": convergence_row,
    "scale": scaling_row,
    "subadd": subadditivity_row,
}


# -------------------------------------------------------
# |                       Studies                       |
# -------------------------------------------------------

@dataclass(frozen=True, slots=True, eq=False)
class StudyResult:
    """
    Attributes
    ----------
    rows : pd.DataFrame
        One row per work item, in canonical order, with provenance columns.
    summary : pd.DataFrame
        One row per parameter point.
    """
    rows: pd.DataFrame
    summary: pd.DataFrame


def _engine(n_jobs: int, logger: Optional[logging.Logger]) -> StudyExecutionEngine:
    return StudyExecutionEngine(STUDY_WORKERS, n_jobs=n_jobs, logger=logger)


def convergence_study(
    p: float,
    b: float,
    g_rho: float,
    sizes: Sequence[int],
    seeds_per_size: int,
    *,
    base_seed: int = 0,
    config: Optional[SolverConfig] = None,
    n_jobs: int = 1,
    logger: Optional[logging.Logger] = None,
) -> StudyResult:
    """
    Ground-state energy statistics across system sizes.

    Parameters
    ----------
    p, b : float
        Disorder parameters; p = 1 gives the disorder-free lattice.
    g_rho : float
        Density coupling.
    sizes : Sequence[int]
        Strictly increasing system sizes.
    seeds_per_size : int
        Realizations per size, seeded ``base_seed + k``.

    Returns
    -------
    StudyResult
        ``summary`` holds mean and sample standard deviation of E_0 per L
        and ``mean_change``, the distance to the previous size's mean.
    """
    check_probability(p, allow_one=True, where="convergence_study")
    check_positive("b", b, where="convergence_study")
    check_nonnegative("g_rho", g_rho, where="convergence_study")
    seeds_per_size = check_count("seeds_per_size", seeds_per_size)
    sizes = [check_count("L", L) for L in sizes]
    if not sizes or any(a >= c for a, c in zip(sizes, sizes[1:])):
        raise InvalidParameter(f"sizes={sizes!r} must be a non-empty strictly increasing list")

    plan = build_convergence_plan(
        sizes=sizes, seeds_per_size=seeds_per_size, base_seed=base_seed,
        p=p, b=b, g_rho=g_rho, solver=config or SolverConfig(),
    )
    rows = pd.DataFrame(_engine(n_jobs, logger).execute(plan))

    summary = (
        rows.groupby("L", sort=True)
        .agg(
            mean_energy=("energy", "mean"),
            std_energy=("energy", "std"),
            seeds=("seed", "count"),
            all_converged=("converged", "all"),
        )
        .reset_index()
    )
    summary["mean_change"] = summary["mean_energy"].diff().abs()
    summary.insert(0, "g_rho", g_rho)
    summary.insert(0, "b", b)
    summary.insert(0, "p", p)
    return StudyResult(rows=rows, summary=summary)


def scaling_sweep(
    p: float,
    b: float,
    g_rho_values: Sequence[float],
    n: int,
    seeds: int,
    *,
    base_seed: int = 0,
    norm_target: float = 1.0,
    epsilons: Iterable[float] = DEFAULT_EPSILONS,
    config: Optional[SolverConfig] = None,
    n_jobs: int = 1,
    logger: Optional[logging.Logger] = None,
) -> StudyResult:
    """
    Ground-state energy and its bounds along a sweep of couplings.

    Every row carries E_0, the upper and lower bounds, and each multiplied
    by log_p(g_rho)^2. Couplings outside the asymptotic regime are kept with
    ``in_regime=False`` and NaN bounds.

    Returns
    -------
    StudyResult
        ``summary`` holds per-g_rho means next to the constant 3/(4q) + pi^2.
    """
    check_probability(p, where="scaling_sweep")
    check_positive("b", b, where="scaling_sweep")
    n = check_count("n", n)
    seeds = check_count("seeds", seeds)
    g_rho_values = [check_positive("g_rho", g, where="scaling_sweep") for g in g_rho_values]
    if not g_rho_values:
        raise InvalidParameter("scaling_sweep needs at least one g_rho value")
    epsilons = tuple(_check_epsilon(e) for e in epsilons)

    plan = build_scaling_plan(
        g_rho_values=g_rho_values, seeds=seeds, base_seed=base_seed, n=n, p=p, b=b,
        norm_target=norm_target, epsilons=epsilons, solver=config or SolverConfig(),
    )
    rows = pd.DataFrame(_engine(n_jobs, logger).execute(plan))

    if logger is not None:
        for g in sorted(set(rows.loc[~rows["in_regime"], "g_rho"]), reverse=True):
            logger.warning("g_rho=%g is outside the asymptotic regime for p=%g; bounds left empty", g, p)

    summary = (
        rows.groupby("g_rho", sort=False)
        .agg(
            log_p_sq=("log_p_sq", "first"),
            mean_energy=("energy", "mean"),
            std_energy=("energy", "std"),
            mean_energy_scaled=("energy_scaled", "mean"),
            mean_upper_scaled=("upper_scaled", "mean"),
            mean_lower_scaled=("lower_scaled", "mean"),
            mean_norm_heavy=("norm_heavy", "mean"),
            in_regime=("in_regime", "all"),
            all_converged=("converged", "all"),
        )
        .reset_index()
    )
    summary["asymptotic_constant"] = asymptotic_upper_constant(p)
    summary["expected_mass_above_cutoff"] = [
        expected_mass_above(cutoff_length(g, p), p, n) if ok else math.nan
        for g, ok in zip(summary["g_rho"], summary["in_regime"])
    ]
    summary.insert(0, "b", b)
    summary.insert(0, "p", p)
    return StudyResult(rows=rows, summary=summary)


def subadditivity_study(
    p: float,
    b: float,
    g_rho: float,
    L: int,
    seeds: int,
    *,
    split: Optional[int] = None,
    base_seed: int = 0,
    config: Optional[SolverConfig] = None,
    n_jobs: int = 1,
    logger: Optional[logging.Logger] = None,
) -> StudyResult:
    """``check_subadditivity`` over ``seeds`` fixed-length realizations."""
    check_probability(p, allow_one=True, where="subadditivity_study")
    check_positive("b", b, where="subadditivity_study")
    check_nonnegative("g_rho", g_rho, where="subadditivity_study")
    L = check_count("L", L, minimum=2)
    seeds = check_count("seeds", seeds)
    if split is not None and not 1 <= split < L:
        raise InvalidParameter(f"split={split!r} must be an integer in [1, {L})")

    plan = build_subadditivity_plan(
        L=L, seeds=seeds, base_seed=base_seed, p=p, b=b, g_rho=g_rho,
        split=split, solver=config or SolverConfig(),
    )
    rows = pd.DataFrame(_engine(n_jobs, logger).execute(plan))
    summary = pd.DataFrame(
        [{
            "p": p, "b": b, "g_rho": g_rho, "L": L,
            "pairs": len(rows),
            "holds": int(rows["holds"].sum()),
            "min_gap": float((rows["x_0M"] + rows["x_ML"] - rows["x_0L"]).min()),
        }]
    )
    return StudyResult(rows=rows, summary=summary)
