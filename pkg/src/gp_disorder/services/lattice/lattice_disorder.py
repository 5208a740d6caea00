"""
Bernoulli disorder: sampling, lake decomposition, and interval statistics.

A realization assigns every lattice site 1..L a potential value 0 (with
probability p) or b (with probability q = 1 - p). Two sampling models are
provided:

- ``fixed_length``: L independent sites.
- ``fixed_interval_count``: n lakes alternating with n barriers, the lake
  lengths geometric with success probability q and the barrier lengths
  geometric with success probability p. The total length is random with
  expectation n/(pq). Realizations always start with a lake and end with a
  barrier.

Every realization owns its own counter-based Philox stream keyed by its
seed, so a realization depends only on (mode, parameters, seed) and never
on how many workers sample concurrently.
"""

from dataclasses import dataclass, field
from typing import Literal
import math

import numpy as np

from .lattice_errors import (
    InvalidParameter,
    check_count,
    check_nonnegative,
    check_positive,
    check_probability,
)

SamplingMode = Literal["fixed_length", "fixed_interval_count"]


@dataclass(frozen=True, slots=True, eq=False)
class PotentialRealization:
    """
    One realization of the Bernoulli potential.

    Attributes
    ----------
    values : np.ndarray
        Site potentials for the interior sites 1..L, each exactly 0 or b.
        The array is read-only.
    b : float
        Barrier height.
    p : float
        Probability that a site has zero potential.
    seed : int
        Seed of the Philox stream the realization was drawn from.
    mode : SamplingMode
        Sampling model that produced the realization.
    """
    values: np.ndarray
    b: float
    p: float
    seed: int
    mode: SamplingMode = "fixed_length"

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64).ravel()
        if values.size < 1:
            raise InvalidParameter("A potential realization needs at least one site.")
        check_positive("b", self.b, where="PotentialRealization")
        if not np.all((values == 0.0) | (values == self.b)):
            raise InvalidParameter("Every site potential must be exactly 0 or b.")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def size(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.size

    def segment(self, start: int, stop: int) -> "PotentialRealization":
        """Sub-realization on sites [start, stop) with its own Dirichlet walls."""
        return PotentialRealization(
            values=self.values[start:stop],
            b=self.b,
            p=self.p,
            seed=self.seed,
            mode=self.mode,
        )


@dataclass(frozen=True, slots=True)
class Interval:
    start: int
    length: int

    @property
    def stop(self) -> int:
        return self.start + self.length


@dataclass(frozen=True, slots=True)
class LakeDecomposition:
    """
    Maximal runs of zero sites (lakes) and of b-sites (barriers).

    Attributes
    ----------
    lakes : tuple[Interval, ...]
        Lakes in lattice order, as (start index, length).
    barriers : tuple[Interval, ...]
        Barriers in lattice order.
    total_length : int
        Number of sites L; lakes and barriers tile [0, L) exactly.
    """
    lakes: tuple[Interval, ...]
    barriers: tuple[Interval, ...]
    total_length: int
    _lengths: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        lengths = np.array([lake.length for lake in self.lakes], dtype=np.int64)
        lengths.setflags(write=False)
        object.__setattr__(self, "_lengths", lengths)

    @property
    def lake_lengths(self) -> np.ndarray:
        return self._lengths

    @property
    def barrier_lengths(self) -> np.ndarray:
        return np.array([bar.length for bar in self.barriers], dtype=np.int64)

    @property
    def n_lakes(self) -> int:
        return len(self.lakes)

    def intervals(self) -> list[tuple[str, Interval]]:
        """All intervals in lattice order, tagged ``"lake"`` or ``"barrier"``."""
        tagged = [("lake", x) for x in self.lakes] + [("barrier", x) for x in self.barriers]
        return sorted(tagged, key=lambda item: item[1].start)


# -------------------------------------------------------
# |                      Sampling                       |
# -------------------------------------------------------

def _stream(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def _geometric_lengths(u: np.ndarray, stay: float) -> np.ndarray:
    """
    Inverse-CDF geometric draws on {1, 2, ...} with P[X > x] = stay**x.

    ``u`` holds uniforms in [0, 1); 1 - u is used so that the logarithm never
    sees zero.
    """
    return 1 + np.floor(np.log1p(-u) / math.log(stay)).astype(np.int64)


def sample_fixed_length(L: int, p: float, b: float, seed: int) -> PotentialRealization:
    """
    Sample L independent Bernoulli sites.

    Parameters
    ----------
    L : int
        Number of sites, at least 1.
    p : float
        Probability of a zero site, in (0, 1]. p = 1 gives the disorder-free
        zero potential.
    b : float
        Barrier height, positive.
    seed : int
        Seed of the realization's Philox stream.

    Returns
    -------
    PotentialRealization
        Deterministic in (L, p, b, seed).
    """
    L = check_count("L", L)
    p = check_probability(p, allow_one=True, where="sample_fixed_length")
    b = check_positive("b", b, where="sample_fixed_length")

    u = _stream(seed).random(L)
    values = np.where(u < p, 0.0, b)
    return PotentialRealization(values=values, b=b, p=p, seed=int(seed), mode="fixed_length")


def sample_interval_lengths(n: int, p: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Draw the n lake lengths and n barrier lengths of the fixed-interval-count model.

    Returns
    -------
    tuple[np.ndarray, np.ndarray]
        (lake lengths with P[L_i = x] = q p^(x-1),
         barrier lengths with P[L~_i = x] = p q^(x-1)).
    """
    n = check_count("n", n)
    p = check_probability(p, where="sample_fixed_interval_count")
    u = _stream(seed).random(2 * n)
    lakes = _geometric_lengths(u[:n], p)
    barriers = _geometric_lengths(u[n:], 1.0 - p)
    return lakes, barriers


def sample_fixed_interval_count(n: int, p: float, b: float, seed: int) -> PotentialRealization:
    """
    Sample n geometric lakes alternating with n geometric barriers.

    The realization starts with a lake and ends with a barrier.

    Parameters
    ----------
    n : int
        Number of lakes (and of barriers), at least 1.
    p : float
        Probability of a zero site, in (0, 1).
    b : float
        Barrier height, positive.
    seed : int
        Seed of the realization's Philox stream.

    Returns
    -------
    PotentialRealization
        Realization of random total length.
    """
    b = check_positive("b", b, where="sample_fixed_interval_count")
    lakes, barriers = sample_interval_lengths(n, p, seed)

    runs = np.empty(2 * lakes.size, dtype=np.int64)
    runs[0::2] = lakes
    runs[1::2] = barriers
    levels = np.tile(np.array([0.0, b]), lakes.size)
    values = np.repeat(levels, runs)
    return PotentialRealization(values=values, b=b, p=float(p), seed=int(seed), mode="fixed_interval_count")


# -------------------------------------------------------
# |                   Decomposition                     |
# -------------------------------------------------------

def _runs(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Start indices and lengths of the maximal True runs of ``mask``."""
    padded = np.concatenate(([False], mask, [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    starts = edges[0::2]
    return starts, edges[1::2] - starts


def decompose_lakes(potential: PotentialRealization) -> LakeDecomposition:
    """
    Split a realization into lakes (zero runs) and barriers (b runs).

    Runs touching a wall are still lakes/barriers; the walls only terminate
    them.
    """
    zero = potential.values == 0.0
    lake_starts, lake_lengths = _runs(zero)
    bar_starts, bar_lengths = _runs(~zero)
    return LakeDecomposition(
        lakes=tuple(Interval(int(s), int(n)) for s, n in zip(lake_starts, lake_lengths)),
        barriers=tuple(Interval(int(s), int(n)) for s, n in zip(bar_starts, bar_lengths)),
        total_length=potential.size,
    )


def reconstruct(decomposition: LakeDecomposition, b: float) -> np.ndarray:
    """Rebuild site values from a decomposition (inverse of ``decompose_lakes``)."""
    values = np.zeros(decomposition.total_length, dtype=np.float64)
    for bar in decomposition.barriers:
        values[bar.start:bar.stop] = b
    return values


# -------------------------------------------------------
# |                Interval statistics                  |
# -------------------------------------------------------

def expected_mass_above(x: float, p: float, n: int) -> float:
    """
    Expected number of sites on lakes longer than x among n geometric lakes.

    E[sum_{L_i > x} L_i] = n/(pq) * (k q p^(k+1) + p^(k+1)) with k = floor(x).

    Parameters
    ----------
    x : float
        Length threshold, nonnegative.
    p : float
        Probability of a zero site, in (0, 1).
    n : int
        Number of lakes.

    Returns
    -------
    float
        The expectation; tends to 0 as x grows.
    """
    x = check_nonnegative("x", x, where="expected_mass_above")
    p = check_probability(p, where="expected_mass_above")
    if math.isinf(x):
        return 0.0
    q = 1.0 - p
    k = math.floor(x)
    tail = p ** (k + 1)
    return n / (p * q) * (k * q * tail + tail)


def empirical_mass_above(lengths: np.ndarray, x: float) -> int:
    """Observed sum of the lengths strictly greater than x."""
    lengths = np.asarray(lengths)
    return int(lengths[lengths > x].sum())


def expected_total_length(n: int, p: float) -> float:
    """E[L] = n/(pq) in the fixed-interval-count model."""
    p = check_probability(p, where="expected_total_length")
    return n / (p * (1.0 - p))


def expected_lake_count(L: int, p: float) -> float:
    """
    Expected number of lakes among L IID sites.

    A lake starts at site 1 with probability p and at any later site with
    probability qp.
    """
    p = check_probability(p, allow_one=True, where="expected_lake_count")
    return p + (L - 1) * p * (1.0 - p)


def geometric_cdf(x: np.ndarray | float, p: float) -> np.ndarray:
    """CDF of the lake length law, P[L_i <= x] = 1 - p^floor(x) for x >= 0."""
    x = np.floor(np.maximum(np.asarray(x, dtype=np.float64), 0.0))
    return 1.0 - np.power(p, x)


def dkw_epsilon(n_samples: int, confidence: float = 0.99) -> float:
    """Half-width of the Dvoretzky-Kiefer-Wolfowitz band for an empirical CDF."""
    alpha = 1.0 - confidence
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n_samples))
