from typing import Any, Dict, Literal, Optional, Sequence, Tuple, Union
from rich.console import Console
from pathlib import Path
import pandas as pd
import numpy as np

from .lattice_analysis import (
    DEFAULT_EPSILONS,
    StudyResult,
    classify_intervals,
    convergence_study,
    delocalization_report,
    lake_summary,
    norm_decomposition,
    scaling_sweep,
    subadditivity_study,
)
from .lattice_disorder import (
    LakeDecomposition,
    PotentialRealization,
    decompose_lakes,
    sample_fixed_interval_count,
    sample_fixed_length,
)
from .lattice_energy import evaluate_energy
from .lattice_errors import InvalidParameter, OutOfRegime, WaterFillError, check_positive, check_probability
from .lattice_serialization import (
    SOFTWARE_VERSION,
    TABLE_FORMATS,
    infer_table_format,
    realization_to_csv_bytes,
    realization_to_json_bytes,
    result_to_json_bytes,
    serialize_table,
    state_to_npy_bytes,
    write_payload,
)
from .lattice_solver import GroundStateResult, InitialState, SolverConfig, ground_state
from .lattice_tree import render_decomposition, render_table
from .lattice_variational import (
    build_test_function,
    cutoff_length,
    lambda_asymptotic,
    log_p,
    lower_bound_energy,
    upper_bound_energy,
    upper_bound_energy_sharp,
    water_fill,
)

OutputFormat = Literal["csv", "jsonl", "json", "parquet"]
Saveable = Union[pd.DataFrame, StudyResult, GroundStateResult, PotentialRealization, dict]


class Lattice:
    """
    Class responsible for lattice experiments on Bernoulli random potentials.

    It provides the following methods:
    - sample: Draw a realization (fixed length or fixed interval count).
    - decompose: Split a realization into lakes and barriers.
    - solve: Compute the ground state of a realization.
    - bounds: Ground state next to its variational bounds and diagnostics.
    - sweep: Coupling-scaling study.
    - converge: Thermodynamic-limit study.
    - subadd: Subadditivity study.
    - lakes: Interval table of a realization, optionally printed as a tree.
    - save: Write a table, result or realization to disk.
    """

    def __init__(self, gp):
        self.gp = gp
        self.logger = gp.logger.getChild("lattice")
        self.p = None
        self.b = None
        self.base_seed = None
        self.epsilons = None
        self.norm_target = None
        self.output_format = None
        self.solver_config_cache = None
        self.config()

    # --------------------------------------------------------
    # |                  Internal Helpers                    |
    # --------------------------------------------------------

    def _resolve_p(self, p: Optional[float], *, allow_one: bool = False) -> float:
        return check_probability(self.p if p is None else p, allow_one=allow_one)

    def _resolve_b(self, b: Optional[float]) -> float:
        return check_positive("b", self.b if b is None else b)

    def _solver(self, config: Optional[SolverConfig]) -> SolverConfig:
        return config if config is not None else self.solver_config_cache

    def _print(self, renderable: Any) -> None:
        if self.gp.verbose:
            Console(stderr=True).print(renderable)

    # --------------------------------------------------------
    # |                   Exposed Methods                    |
    # --------------------------------------------------------

    def config(
        self,
        p: float = 0.5,
        b: float = 1.0,
        *,
        base_seed: int = 0,
        tol_gradient: float = 1e-10,
        tol_energy: float = 1e-14,
        max_iterations: int = 1_000_000,
        initial_state: Optional[InitialState] = None,
        line_search_shrink: float = 0.5,
        epsilons: Sequence[float] = DEFAULT_EPSILONS,
        norm_target: float = 1.0,
        output_format: OutputFormat = "csv",
    ) -> None:
        """
        Set default parameters for lattice experiments.

        Parameters:
        -----------
        p: float
            Probability that a site has zero potential.
        b: float
            Barrier height.
        base_seed: int
            Seed of the first realization of a study; realization k uses base_seed + k.
        tol_gradient, tol_energy, max_iterations, initial_state, line_search_shrink:
            Solver settings forwarded to SolverConfig.
        epsilons: Sequence[float]
            Occupation levels checked against the delocalization bound.
        norm_target: float
            Total mass allocated by the water-filling lower bound.
        output_format: OutputFormat
            Default table format used by ``save``.
        """
        if output_format not in TABLE_FORMATS:
            raise InvalidParameter(f"Unsupported output format: {output_format!r}")
        self.p = p
        self.b = b
        self.base_seed = base_seed
        self.epsilons = tuple(epsilons)
        self.norm_target = norm_target
        self.output_format = output_format
        self.solver_config_cache = SolverConfig(
            tol_gradient=tol_gradient,
            tol_energy=tol_energy,
            max_iterations=max_iterations,
            initial_state=initial_state,
            line_search_shrink=line_search_shrink,
        )

        self.gp.info(
            "Lattice configured with p=%s, b=%s, base_seed=%s, output_format=%s",
            p, b, base_seed, output_format,
        )

    def sample(
        self,
        L: Optional[int] = None,
        n: Optional[int] = None,
        *,
        p: Optional[float] = None,
        b: Optional[float] = None,
        seed: Optional[int] = None,
    ) -> PotentialRealization:
        """
        Draw one realization: L IID sites, or n lakes alternating with n barriers.

        Exactly one of ``L`` and ``n`` must be given.
        """
        if (L is None) == (n is None):
            raise InvalidParameter("Provide exactly one of L (fixed length) or n (fixed interval count).")
        seed = self.base_seed if seed is None else seed
        if L is not None:
            potential = sample_fixed_length(L, self._resolve_p(p, allow_one=True), self._resolve_b(b), seed)
        else:
            potential = sample_fixed_interval_count(n, self._resolve_p(p), self._resolve_b(b), seed)
        self.gp.info("Sampled %s realization: L=%d, seed=%d", potential.mode, potential.size, seed)
        return potential

    def decompose(self, potential: PotentialRealization) -> LakeDecomposition:
        return decompose_lakes(potential)

    def solve(
        self,
        potential: PotentialRealization,
        g_rho: float,
        *,
        config: Optional[SolverConfig] = None,
    ) -> GroundStateResult:
        """
        Compute the ground state of a realization.

        Returns
        -------
        GroundStateResult
            Non-convergence is logged as a warning and flagged on the result.
        """
        result = ground_state(potential, g_rho, self._solver(config), logger=self.logger)
        self.gp.info(
            "Ground state: E=%.12g after %d iterations (residual=%.3e, converged=%s)",
            result.energy.total, result.iterations, result.residual, result.converged,
        )
        return result

    def bounds(
        self,
        potential: PotentialRealization,
        g_rho: float,
        *,
        result: Optional[GroundStateResult] = None,
        norm_target: Optional[float] = None,
        config: Optional[SolverConfig] = None,
    ) -> Dict[str, Any]:
        """
        Ground-state energy of one realization next to its bounds and diagnostics.

        Outside the asymptotic regime the bound entries are NaN and
        ``in_regime`` is False.

        Returns
        -------
        dict
            One flat row with provenance, energies, bounds, norm fractions and
            the delocalization check for every configured epsilon.
        """
        p = potential.p
        norm_target = self.norm_target if norm_target is None else norm_target
        result = result if result is not None else self.solve(potential, g_rho, config=config)
        decomposition = decompose_lakes(potential)
        energy = result.energy.total
        classifiable = g_rho > 0.0 and p < 1.0
        lp = log_p(g_rho, p) if classifiable else np.nan

        row: Dict[str, Any] = {
            "p": p,
            "b": potential.b,
            "g_rho": g_rho,
            "L": potential.size,
            "seed": potential.seed,
            "mode": potential.mode,
            "energy": energy,
            "log_p_sq": lp * lp,
            "energy_scaled": energy * lp * lp,
            "converged": result.converged,
        }

        try:
            if not classifiable:
                raise OutOfRegime(f"g_rho={g_rho!r} and p={p!r} admit no logarithmic cutoff.")
            test_state = build_test_function(decomposition, g_rho, p)
            allocation = water_fill(decomposition, g_rho, potential.size, norm_target)
            row.update(
                in_regime=True,
                cutoff=cutoff_length(g_rho, p),
                lower_bound=lower_bound_energy(decomposition, g_rho, p, norm_target),
                test_energy=evaluate_energy(test_state, potential, g_rho).total,
                upper_bound=upper_bound_energy(decomposition, g_rho, p),
                upper_bound_sharp=upper_bound_energy_sharp(decomposition, g_rho, p),
                lambda_water_fill=allocation.lambda_,
                lambda_asymptotic=lambda_asymptotic(g_rho, p),
            )
        except (OutOfRegime, WaterFillError) as e:
            self.logger.warning("Bounds unavailable: %s", e)
            row.update(
                in_regime=False,
                cutoff=np.nan, lower_bound=np.nan, test_energy=np.nan,
                upper_bound=np.nan, upper_bound_sharp=np.nan,
                lambda_water_fill=np.nan, lambda_asymptotic=np.nan,
            )

        if classifiable:
            classification = classify_intervals(result.state, decomposition, g_rho, p)
            norms = norm_decomposition(result.state, classification)
            row.update({f"norm_{k}": v for k, v in norms.to_dict().items()})

        for report in delocalization_report(result.state, energy, g_rho * potential.size, self.epsilons):
            row[f"occupied_eps_{report.epsilon:g}"] = report.occupied_count
            row[f"bound_eps_{report.epsilon:g}"] = report.bound
        row["delocalization_ok"] = all(
            row[f"occupied_eps_{e:g}"] >= row[f"bound_eps_{e:g}"] for e in self.epsilons
        )
        row["version"] = SOFTWARE_VERSION
        return row

    def sweep(
        self,
        g_rho_values: Sequence[float],
        n: int,
        seeds: int,
        *,
        p: Optional[float] = None,
        b: Optional[float] = None,
        norm_target: Optional[float] = None,
        config: Optional[SolverConfig] = None,
    ) -> StudyResult:
        """Coupling-scaling study over fixed-interval-count realizations."""
        study = scaling_sweep(
            self._resolve_p(p), self._resolve_b(b), g_rho_values, n, seeds,
            base_seed=self.base_seed,
            norm_target=self.norm_target if norm_target is None else norm_target,
            epsilons=self.epsilons,
            config=self._solver(config),
            n_jobs=self.gp.threads,
            logger=self.logger,
        )
        self.gp.info("Sweep finished: %d rows over %d couplings", len(study.rows), len(study.summary))
        self._print(render_table(study.summary, title="scaling sweep"))
        return study

    def converge(
        self,
        g_rho: float,
        sizes: Sequence[int],
        seeds_per_size: int,
        *,
        p: Optional[float] = None,
        b: Optional[float] = None,
        config: Optional[SolverConfig] = None,
    ) -> StudyResult:
        """Thermodynamic-limit study over fixed-length realizations."""
        study = convergence_study(
            self._resolve_p(p, allow_one=True), self._resolve_b(b), g_rho, sizes, seeds_per_size,
            base_seed=self.base_seed,
            config=self._solver(config),
            n_jobs=self.gp.threads,
            logger=self.logger,
        )
        self.gp.info("Convergence study finished: %d rows over %d sizes", len(study.rows), len(study.summary))
        self._print(render_table(study.summary, title="convergence study"))
        return study

    def subadd(
        self,
        L: int,
        g_rho: float,
        seeds: int,
        *,
        split: Optional[int] = None,
        p: Optional[float] = None,
        b: Optional[float] = None,
        config: Optional[SolverConfig] = None,
    ) -> StudyResult:
        """Subadditivity of the unnormalized minima over ``seeds`` realizations."""
        study = subadditivity_study(
            self._resolve_p(p, allow_one=True), self._resolve_b(b), g_rho, L, seeds,
            split=split,
            base_seed=self.base_seed,
            config=self._solver(config),
            n_jobs=self.gp.threads,
            logger=self.logger,
        )
        failures = int((~study.rows["holds"]).sum())
        if failures:
            self.logger.warning("Subadditivity failed on %d of %d pairs", failures, len(study.rows))
        self._print(render_table(study.summary, title="subadditivity"))
        return study

    def lakes(
        self,
        potential: PotentialRealization,
        *,
        result: Optional[GroundStateResult] = None,
        tree: bool = False,
        max_children: Optional[int] = 20,
    ) -> Tuple[pd.DataFrame, Dict[str, Any]]:
        """
        Interval table and summary statistics of a realization.

        Parameters
        ----------
        potential : PotentialRealization
            Realization to decompose.
        result : GroundStateResult, optional
            When given, every interval also carries the mass of the state on it.
        tree : bool
            Print the decomposition as a rich tree on standard error.
        max_children : Optional[int]
            Intervals shown per group in the tree.

        Returns
        -------
        tuple[pd.DataFrame, dict]
            One row per interval in lattice order, and the summary.
        """
        decomposition = decompose_lakes(potential)
        state = result.state if result is not None else None
        sq = state.amplitudes ** 2 if state is not None else None

        rows = []
        for kind, iv in decomposition.intervals():
            row = {
                "kind": kind,
                "start": iv.start,
                "length": iv.length,
                "p": potential.p,
                "b": potential.b,
                "L": potential.size,
                "seed": potential.seed,
                "version": SOFTWARE_VERSION,
            }
            if sq is not None:
                row["mass"] = float(sq[iv.start:iv.stop].sum())
            rows.append(row)

        table = pd.DataFrame(rows)
        summary = {**lake_summary(decomposition, potential.p), "seed": potential.seed, "version": SOFTWARE_VERSION}

        if tree:
            Console(stderr=True).print(render_decomposition(decomposition, state=state, max_children=max_children))
        return table, summary

    def save(self, obj: Saveable, path: Union[str, Path, None] = None, *, fmt: Optional[str] = None) -> Optional[Path]:
        """
        Serialize an object and write it to ``path`` (standard output when None).

        Tables use ``fmt``, else the path suffix, else the configured default.
        Ground-state results go to JSON, or to a float64 ``.npy`` state when the
        path ends in ``.npy``. Realizations go to run-length JSON, or to CSV
        site values when the path ends in ``.csv``.
        """
        suffix = Path(path).suffix.lower() if path is not None else ""

        if isinstance(obj, StudyResult):
            obj = obj.rows
        if isinstance(obj, dict):
            obj = pd.DataFrame([obj])

        if isinstance(obj, pd.DataFrame):
            table_fmt = fmt or (infer_table_format(path, default=self.output_format) if path else self.output_format)
            payload = serialize_table(obj, table_fmt)
        elif isinstance(obj, GroundStateResult):
            payload = state_to_npy_bytes(obj.state) if suffix == ".npy" else result_to_json_bytes(obj) + b"\n"
        elif isinstance(obj, PotentialRealization):
            payload = realization_to_csv_bytes(obj) if suffix == ".csv" else realization_to_json_bytes(obj) + b"\n"
        else:
            raise TypeError(f"Unsupported object type for save: {type(obj)!r}")

        dst = write_payload(payload, path)
        if dst is not None:
            self.gp.info("Wrote %s", dst)
        return dst
