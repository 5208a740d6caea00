"""
Serialization utilities for realizations, solver results and study tables.

This module centralizes all format-related logic used by the public API:
- run-length encoding of site potentials, the canonical on-disk form of a realization
- realization JSON / CSV, ground-state JSON and binary float64 states
- study tables as CSV, JSON-lines, JSON or parquet
- writing payloads to a path or to standard output

Everything here is deterministic: no timestamps, fixed column order, and
pandas' shortest round-trip float formatting.
"""

from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Literal, Optional
import json
import sys
import io

import numpy as np
import pandas as pd

from .lattice_disorder import PotentialRealization
from .lattice_energy import WaveFunction
from .lattice_errors import InvalidParameter
from .lattice_solver import GroundStateResult

try:
    SOFTWARE_VERSION = version("gp-disorder")
except PackageNotFoundError:
    SOFTWARE_VERSION = "0.1.0"

TableFormat = Literal["csv", "jsonl", "json", "parquet"]
TABLE_FORMATS: tuple[str, ...] = ("csv", "jsonl", "json", "parquet")


def normalize_extension(value: str | None, *, default: str | None = None) -> str | None:
    """
    Normalize a file extension.

    Returns
    -------
    str | None
        Normalized extension including the leading dot, or None.
    """
    ext = value or default
    if not ext:
        return None
    ext = str(ext).strip().lower()
    if not ext:
        return None
    if not ext.startswith("."):
        ext = "." + ext
    return ext


def infer_table_format(path: str | Path | None, *, default: str = "csv") -> str:
    """Table format from a path suffix (``.jsonl``, ``.json``, ``.parquet``, ``.csv``)."""
    if path is None:
        return default
    ext = normalize_extension(Path(path).suffix)
    return {".jsonl": "jsonl", ".json": "json", ".parquet": "parquet", ".csv": "csv"}.get(ext or "", default)


# -------------------------------------------------------
# |                  Run-length codec                   |
# -------------------------------------------------------

def encode_runs(values: np.ndarray) -> list[list[float | int]]:
    """
    Run-length encode a vector as ``[[value, count], ...]``.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        return []
    change = np.flatnonzero(values[1:] != values[:-1]) + 1
    starts = np.concatenate(([0], change))
    counts = np.diff(np.concatenate((starts, [values.size])))
    return [[float(values[s]), int(c)] for s, c in zip(starts, counts)]


def decode_runs(runs: list[list[float | int]]) -> np.ndarray:
    """Inverse of ``encode_runs``."""
    if not runs:
        return np.zeros(0, dtype=np.float64)
    levels = np.array([float(v) for v, _ in runs], dtype=np.float64)
    counts = np.array([int(c) for _, c in runs], dtype=np.int64)
    if np.any(counts < 1):
        raise InvalidParameter("Run-length counts must be >= 1.")
    return np.repeat(levels, counts)


# -------------------------------------------------------
# |                    Realizations                     |
# -------------------------------------------------------

def realization_to_dict(potential: PotentialRealization) -> dict[str, Any]:
    out: dict[str, Any] = {
        "mode": potential.mode,
        "p": potential.p,
        "b": potential.b,
        "seed": potential.seed,
        "values": encode_runs(potential.values),
    }
    if potential.mode == "fixed_interval_count":
        out["phase"] = "lake_first"
    return out


def realization_from_dict(data: dict[str, Any]) -> PotentialRealization:
    try:
        return PotentialRealization(
            values=decode_runs(data["values"]),
            b=float(data["b"]),
            p=float(data["p"]),
            seed=int(data["seed"]),
            mode=data.get("mode", "fixed_length"),
        )
    except KeyError as e:
        raise InvalidParameter(f"Realization JSON is missing field {e.args[0]!r}.") from None


def realization_to_json_bytes(potential: PotentialRealization, *, encoding: str = "utf-8") -> bytes:
    return json.dumps(realization_to_dict(potential)).encode(encoding)


def realization_from_json_bytes(payload: bytes, *, encoding: str = "utf-8") -> PotentialRealization:
    return realization_from_dict(json.loads(payload.decode(encoding)))


def realization_to_csv_bytes(potential: PotentialRealization) -> bytes:
    """Raw site values, one row per site."""
    df = pd.DataFrame({"site": np.arange(1, potential.size + 1), "value": potential.values})
    return df.to_csv(index=False).encode("utf-8")


# -------------------------------------------------------
# |                  Solver outputs                     |
# -------------------------------------------------------

def result_to_json_bytes(
    result: GroundStateResult,
    *,
    provenance: Optional[dict[str, Any]] = None,
    include_state: bool = True,
    encoding: str = "utf-8",
) -> bytes:
    payload = result.to_dict(include_state=include_state)
    if provenance:
        payload = {**provenance, **payload}
    return json.dumps(payload).encode(encoding)


def state_to_npy_bytes(state: WaveFunction) -> bytes:
    """Binary float64 ``.npy`` payload of the amplitudes."""
    bio = io.BytesIO()
    np.save(bio, np.ascontiguousarray(state.amplitudes, dtype=np.float64), allow_pickle=False)
    return bio.getvalue()


def state_from_npy_bytes(payload: bytes) -> WaveFunction:
    return WaveFunction(np.load(io.BytesIO(payload), allow_pickle=False))


# -------------------------------------------------------
# |                       Tables                        |
# -------------------------------------------------------

def serialize_table(df: pd.DataFrame, fmt: str) -> bytes:
    """
    Serialize a study table.

    Parameters
    ----------
    df:
        Table to serialize; its column order is kept.
    fmt:
        One of ``csv``, ``jsonl``, ``json``, ``parquet``.

    Returns
    -------
    bytes
        Serialized payload. CSV carries a header row.
    """
    if fmt == "csv":
        return df.to_csv(index=False).encode("utf-8")
    if fmt == "jsonl":
        if df.empty:
            return b""
        text = df.to_json(orient="records", lines=True, double_precision=15)
        return (text if text.endswith("\n") else text + "\n").encode("utf-8")
    if fmt == "json":
        return df.to_json(orient="records", double_precision=15).encode("utf-8") + b"\n"
    if fmt == "parquet":
        bio = io.BytesIO()
        df.to_parquet(bio, index=False, engine="pyarrow")
        return bio.getvalue()
    raise InvalidParameter(f"Unsupported table format: {fmt!r}; expected one of {TABLE_FORMATS}.")


def deserialize_table(payload: bytes, fmt: str) -> pd.DataFrame:
    if fmt == "csv":
        return pd.read_csv(io.BytesIO(payload))
    if fmt == "jsonl":
        return pd.read_json(io.BytesIO(payload), orient="records", lines=True)
    if fmt == "json":
        return pd.read_json(io.BytesIO(payload), orient="records")
    if fmt == "parquet":
        return pd.read_parquet(io.BytesIO(payload), engine="pyarrow")
    raise InvalidParameter(f"Unsupported table format: {fmt!r}; expected one of {TABLE_FORMATS}.")


def write_payload(payload: bytes, path: str | Path | None = None) -> Optional[Path]:
    """
    Write bytes to ``path``, or to standard output when ``path`` is None.

    Parent directories are created automatically.
    """
    if path is None:
        sys.stdout.buffer.write(payload)
        sys.stdout.buffer.flush()
        return None

    dst = Path(path)
    dst.parent.mkdir(parents=True, exist_ok=True)
    dst.write_bytes(payload)
    return dst
