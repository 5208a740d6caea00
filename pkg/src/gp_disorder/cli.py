"""
Command-line harness: ``gp-disorder <command> [options]``.

Commands
--------
- ``solve``     ground state of one realization (JSON result)
- ``bounds``    ground state next to its variational bounds (one-row table)
- ``sweep``     coupling-scaling study (table, one row per (g_rho, seed))
- ``converge``  thermodynamic-limit study (table, one row per (L, seed))
- ``subadd``    subadditivity study (table, one row per (realization, split))
- ``lakes``     interval table of one realization, optional rich tree

A JSON config file (``--config``) is read first; flags given on the command
line override its values. Data goes to standard output or ``--output``;
logs and rich renderings go to standard error.
"""

from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, List, Optional, Sequence
from pathlib import Path
import argparse
import json
import sys

import pandas as pd

from .gp_wrapper import GPDisorder
from .services.lattice.lattice_errors import ConfigError, GPDisorderError, InvalidParameter
from .services.lattice.lattice_serialization import SOFTWARE_VERSION, result_to_json_bytes, write_payload
from .services.lattice.lattice_values import parse_float_values, parse_int_values, parse_number

COMMANDS = ("solve", "bounds", "sweep", "converge", "subadd", "lakes")
FORMATS = ("csv", "jsonl", "json")
INITIAL_STATES = ("uniform", "linear_ground_state")

_FLOAT_FIELDS = ("p", "b", "g", "rho", "norm_target", "tol_gradient", "tol_energy")
_INT_FIELDS = ("L", "n", "seed", "seeds", "split", "max_iterations", "threads")
_TEXT_FIELDS = ("command", "initial_state", "output", "summary_output", "state_output", "format")


@dataclass
class ExperimentConfig:
    """
    Complete, serializable description of one CLI run.

    Exactly one of ``g_rho`` or the pair (``g``, ``rho``) is given; the
    latter means g_rho = g * rho.
    """
    command: str
    p: float = 0.5
    b: float = 1.0
    g_rho: Optional[tuple[float, ...]] = None
    g: Optional[float] = None
    rho: Optional[float] = None
    L: Optional[int] = None
    n: Optional[int] = None
    sizes: Optional[tuple[int, ...]] = None
    seed: int = 0
    seeds: int = 1
    split: Optional[int] = None
    epsilons: tuple[float, ...] = (0.1, 0.5, 0.9)
    norm_target: float = 1.0
    tol_gradient: float = 1e-10
    tol_energy: float = 1e-14
    max_iterations: int = 1_000_000
    initial_state: Optional[str] = None
    output: Optional[str] = None
    summary_output: Optional[str] = None
    state_output: Optional[str] = None
    format: Optional[str] = None
    threads: Optional[int] = None
    tree: bool = False

    # --------------------------------------------------------
    # |                     Round trip                       |
    # --------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in out.items()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(unknown[0], "unknown configuration field")
        if "command" not in data:
            raise ConfigError("command", "missing")

        values = dict(data)
        required = {f.name for f in fields(cls) if f.default is not None}
        for name, value in data.items():
            if value is None:
                if name in required:
                    raise ConfigError(name, "must not be null")
            elif name in _FLOAT_FIELDS:
                values[name] = _as_float(name, value)
            elif name in _INT_FIELDS:
                values[name] = _as_int(name, value)
            elif name in _TEXT_FIELDS and not isinstance(value, str):
                raise ConfigError(name, f"expected a string, got {value!r}")
            elif name == "tree" and not isinstance(value, bool):
                raise ConfigError(name, f"expected true or false, got {value!r}")

        for name in ("g_rho", "epsilons"):
            if values.get(name) is not None:
                values[name] = _as_float_tuple(name, values[name])
        if values.get("sizes") is not None:
            values["sizes"] = _as_int_tuple("sizes", values["sizes"])
        return cls(**values)

    # --------------------------------------------------------
    # |                     Validation                       |
    # --------------------------------------------------------

    @property
    def couplings(self) -> List[float]:
        if self.g_rho is not None:
            return list(self.g_rho)
        return [float(self.g) * float(self.rho)]

    @property
    def table_format(self) -> str:
        return self.format or ("json" if self.command == "solve" else "csv")

    def validate(self) -> "ExperimentConfig":
        """
        Check every field against the preconditions of its command.

        Raises
        ------
        ConfigError
            Naming the first offending field.
        """
        if self.command not in COMMANDS:
            raise ConfigError("command", f"must be one of {COMMANDS}, got {self.command!r}")

        needs_coupling = self.command != "lakes"
        has_pair = self.g is not None or self.rho is not None
        if self.g_rho is not None and has_pair:
            raise ConfigError("g_rho", "give either g_rho or g and rho, not both")
        if has_pair and (self.g is None or self.rho is None):
            raise ConfigError("rho" if self.rho is None else "g", "g and rho must be given together")
        if needs_coupling and self.g_rho is None and not has_pair:
            raise ConfigError("g_rho", "required (or g and rho)")
        if self.g_rho is not None and not self.g_rho:
            raise ConfigError("g_rho", "empty value list")
        if self.g_rho is not None or has_pair:
            if any(not v >= 0.0 for v in self.couplings):
                raise ConfigError("g_rho", "values must be nonnegative")
            if self.command in ("solve", "bounds", "converge", "subadd", "lakes") and len(self.couplings) != 1:
                raise ConfigError("g_rho", f"command {self.command!r} takes a single value")
            if self.command == "sweep" and any(v <= 0.0 for v in self.couplings):
                raise ConfigError("g_rho", "sweep values must be positive")

        fixed_count = self.command == "sweep"
        p_max_ok = self.p < 1.0 or (self.p == 1.0 and not fixed_count and self.n is None)
        if not (self.p > 0.0 and p_max_ok):
            raise ConfigError("p", f"must lie in (0, 1) (p = 1 allowed for fixed-length runs), got {self.p!r}")
        if not self.b > 0.0:
            raise ConfigError("b", f"must be positive, got {self.b!r}")

        if self.command in ("solve", "bounds", "lakes") and (self.L is None) == (self.n is None):
            raise ConfigError("L", "give exactly one of L or n")
        if self.command == "sweep" and self.n is None:
            raise ConfigError("n", "required for sweep")
        if self.command == "subadd" and (self.L is None or self.L < 2):
            raise ConfigError("L", "subadd needs L >= 2")
        if self.command == "converge":
            if not self.sizes:
                raise ConfigError("sizes", "required for converge")
            if any(s < 1 for s in self.sizes) or any(a >= c for a, c in zip(self.sizes, self.sizes[1:])):
                raise ConfigError("sizes", "must be positive and strictly increasing")
        for name in ("L", "n"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ConfigError(name, f"must be >= 1, got {value!r}")
        if self.split is not None and (self.L is None or not 1 <= self.split < self.L):
            raise ConfigError("split", f"must lie in [1, L), got {self.split!r}")

        if self.seed < 0:
            raise ConfigError("seed", f"must be >= 0, got {self.seed!r}")
        if self.seeds < 1:
            raise ConfigError("seeds", f"must be >= 1, got {self.seeds!r}")
        if not self.epsilons or any(not 0.0 < e < 1.0 for e in self.epsilons):
            raise ConfigError("epsilons", "values must lie in (0, 1)")
        if not 0.0 < self.norm_target <= 1.0:
            raise ConfigError("norm_target", f"must lie in (0, 1], got {self.norm_target!r}")
        if not self.tol_gradient > 0.0:
            raise ConfigError("tol_gradient", "must be positive")
        if not self.tol_energy > 0.0:
            raise ConfigError("tol_energy", "must be positive")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations", "must be >= 1")
        if self.initial_state is not None and self.initial_state not in INITIAL_STATES:
            raise ConfigError("initial_state", f"must be one of {INITIAL_STATES}")
        if self.format is not None and self.format not in FORMATS:
            raise ConfigError("format", f"must be one of {FORMATS}, got {self.format!r}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads", "must be >= 1")
        return self


def _as_float(name: str, value: Any) -> float:
    if isinstance(value, bool):
        raise ConfigError(name, f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return parse_number(value)
        except InvalidParameter as e:
            raise ConfigError(name, str(e)) from None
    raise ConfigError(name, f"expected a number, got {value!r}")


def _as_int(name: str, value: Any) -> int:
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    number = _as_float(name, value)
    if not number.is_integer():
        raise ConfigError(name, f"expected an integer, got {value!r}")
    return int(number)


def _as_float_tuple(name: str, value: Any) -> tuple[float, ...]:
    try:
        if isinstance(value, str):
            return tuple(parse_float_values(value))
        if isinstance(value, (int, float)):
            return (float(value),)
        return tuple(float(v) for v in value)
    except (InvalidParameter, TypeError, ValueError) as e:
        raise ConfigError(name, str(e)) from None


def _as_int_tuple(name: str, value: Any) -> tuple[int, ...]:
    try:
        if isinstance(value, str):
            return tuple(parse_int_values(value))
        if isinstance(value, int):
            return (value,)
        return tuple(int(v) for v in value)
    except (InvalidParameter, TypeError, ValueError) as e:
        raise ConfigError(name, str(e)) from None


# --------------------------------------------------------
# |                   Argument parsing                   |
# --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON config file; flags override its values.")
    common.add_argument("--p", type=float, help="Probability of a zero site (default: 0.5).")
    common.add_argument("--b", type=float, help="Barrier height (default: 1).")
    common.add_argument("--g-rho", dest="g_rho", help="Density coupling: value, list a,b,c or range start:stop:factor.")
    common.add_argument("--g", type=float, help="Coupling g; used with --rho instead of --g-rho.")
    common.add_argument("--rho", type=float, help="Density rho; used with --g instead of --g-rho.")
    common.add_argument("--L", dest="L", type=int, help="Number of sites (fixed-length model).")
    common.add_argument("--n", type=int, help="Number of lakes (fixed-interval-count model).")
    common.add_argument("--sizes", help="System sizes for converge: list or range start:stop:factor.")
    common.add_argument("--seed", type=int, help="Base seed; realization k uses seed + k (default: 0).")
    common.add_argument("--seeds", type=int, help="Realizations per parameter point (default: 1).")
    common.add_argument("--split", type=int, help="Fixed split point for subadd (default: drawn per seed).")
    common.add_argument("--epsilon", dest="epsilons", help="Occupation levels, e.g. 0.1,0.5,0.9.")
    common.add_argument("--norm-target", dest="norm_target", type=float, help="Mass allocated by the lower bound.")
    common.add_argument("--tol-gradient", dest="tol_gradient", type=float, help="Tangential gradient tolerance.")
    common.add_argument("--tol-energy", dest="tol_energy", type=float, help="Per-step energy decrease tolerance.")
    common.add_argument("--max-iterations", dest="max_iterations", type=int, help="Solver iteration budget.")
    common.add_argument("--initial-state", dest="initial_state", choices=INITIAL_STATES, help="Solver start.")
    common.add_argument("--output", "-o", help="Output path (default: standard output).")
    common.add_argument("--summary-output", dest="summary_output", help="Path for the per-parameter summary table.")
    common.add_argument("--state-output", dest="state_output", help="solve: write the state as float64 .npy.")
    common.add_argument("--format", choices=FORMATS, help="Output format.")
    common.add_argument("--threads", type=int, help="Worker count (default: GP_DISORDER_THREADS or 1).")
    common.add_argument("--tree", action="store_true", help="lakes: print the decomposition tree on stderr.")
    common.add_argument("--verbose", "-v", action="store_true", help="Log progress to standard error.")
    common.add_argument("--env-file", dest="env_file", help="Env file read for GP_DISORDER_THREADS.")

    parser = argparse.ArgumentParser(
        prog="gp-disorder",
        description="Ground states of the discrete Gross-Pitaevskii functional in Bernoulli random potentials.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {SOFTWARE_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=f"run the {name} command")
    return parser


def _load_config_file(path: str) -> Dict[str, Any]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError("config", f"invalid JSON in {path}: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be an object")
    return data


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """
    Merge the config file (if any) with the flags given on the command line.
    """
    flags = dict(vars(args))
    command = flags.pop("command")
    path = flags.pop("config", None)
    flags.pop("verbose", None)
    flags.pop("env_file", None)

    data: Dict[str, Any] = _load_config_file(path) if path else {}
    if data.get("command", command) != command:
        raise ConfigError("command", f"config file is for {data['command']!r}, not {command!r}")
    data.update(flags)
    data["command"] = command
    return ExperimentConfig.from_dict(data).validate()


# --------------------------------------------------------
# |                        Runner                        |
# --------------------------------------------------------

def _emit_table(gp: GPDisorder, df: pd.DataFrame, config: ExperimentConfig, path: Optional[str] = None) -> None:
    gp.lattice.save(df, path if path is not None else config.output, fmt=config.table_format)


def run(config: ExperimentConfig, gp: Optional[GPDisorder] = None) -> int:
    """
    Execute a validated configuration.

    Returns
    -------
    int
        Exit status: 0 on success.
    """
    gp = gp or GPDisorder(threads=config.threads)
    lat = gp.lattice
    lat.config(
        config.p,
        config.b,
        base_seed=config.seed,
        tol_gradient=config.tol_gradient,
        tol_energy=config.tol_energy,
        max_iterations=config.max_iterations,
        initial_state=config.initial_state,
        epsilons=config.epsilons,
        norm_target=config.norm_target,
        output_format=config.table_format,
    )

    cmd = config.command
    coupling = config.couplings[0] if (config.g_rho is not None or config.g is not None) else None

    if cmd in ("solve", "bounds", "lakes"):
        potential = lat.sample(L=config.L, n=config.n, seed=config.seed)

        if cmd == "solve":
            result = lat.solve(potential, coupling)
            provenance = {
                "p": potential.p, "b": potential.b, "g_rho": coupling, "L": potential.size,
                "n": config.n, "seed": potential.seed, "mode": potential.mode, "version": SOFTWARE_VERSION,
            }
            if config.table_format == "csv":
                row = {**provenance, **result.to_dict(include_state=False)}
                energy = row.pop("energy")
                _emit_table(gp, pd.DataFrame([{**row, **energy}]), config)
            else:
                write_payload(result_to_json_bytes(result, provenance=provenance) + b"\n", config.output)
            if config.state_output:
                lat.save(result, config.state_output if config.state_output.endswith(".npy") else config.state_output + ".npy")
            return 0

        if cmd == "bounds":
            _emit_table(gp, pd.DataFrame([lat.bounds(potential, coupling)]), config)
            return 0

        result = lat.solve(potential, coupling) if coupling is not None else None
        table, summary = lat.lakes(potential, result=result, tree=config.tree)
        _emit_table(gp, table, config)
        if config.summary_output:
            _emit_table(gp, pd.DataFrame([summary]), config, config.summary_output)
        return 0

    if cmd == "sweep":
        study = lat.sweep(config.couplings, config.n, config.seeds)
    elif cmd == "converge":
        study = lat.converge(coupling, config.sizes, config.seeds)
    else:
        study = lat.subadd(config.L, coupling, config.seeds, split=config.split)

    _emit_table(gp, study.rows, config)
    if config.summary_output:
        _emit_table(gp, study.summary, config, config.summary_output)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    verbose = getattr(args, "verbose", False)
    env_file = getattr(args, "env_file", None)

    try:
        config = config_from_args(args)
        gp = GPDisorder(verbose=verbose, threads=config.threads, env_file=env_file)
    except ConfigError as e:
        print(f"gp-disorder: invalid configuration: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"gp-disorder: invalid configuration: threads: {e}", file=sys.stderr)
        return 2

    try:
        return run(config, gp)
    except GPDisorderError as e:
        gp.logger.error("gp-disorder: %s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
