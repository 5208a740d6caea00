import math

import numpy as np
import pytest

from gp_disorder.services.lattice.lattice_disorder import (
    Interval,
    PotentialRealization,
    decompose_lakes,
    dkw_epsilon,
    empirical_mass_above,
    expected_lake_count,
    expected_mass_above,
    expected_total_length,
    geometric_cdf,
    reconstruct,
    sample_fixed_interval_count,
    sample_fixed_length,
    sample_interval_lengths,
)
from gp_disorder.services.lattice.lattice_errors import InvalidParameter


def _realization(values, b=1.0):
    return PotentialRealization(values=np.asarray(values, dtype=float), b=b, p=0.5, seed=0)


def _assert_tiles(decomposition):
    tagged = decomposition.intervals()
    pos = 0
    prev_kind = None
    for kind, iv in tagged:
        assert iv.start == pos
        assert iv.length >= 1
        assert kind != prev_kind
        pos = iv.stop
        prev_kind = kind
    assert pos == decomposition.total_length


# -------------------------------------------------------
# |                  Fixed-length model                 |
# -------------------------------------------------------

def test_fixed_length_p_one_gives_zero_potential():
    pot = sample_fixed_length(4, 1.0, 1.0, seed=123)
    assert np.all(pot.values == 0.0)
    assert pot.mode == "fixed_length"


def test_fixed_length_rejects_p_zero_and_bad_b():
    with pytest.raises(InvalidParameter):
        sample_fixed_length(4, 0.0, 1.0, seed=0)
    with pytest.raises(InvalidParameter):
        sample_fixed_length(4, 1.5, 1.0, seed=0)
    with pytest.raises(InvalidParameter):
        sample_fixed_length(4, 0.5, 0.0, seed=0)
    with pytest.raises(InvalidParameter):
        sample_fixed_length(0, 0.5, 1.0, seed=0)


def test_fixed_length_tiny_p_is_all_barrier():
    pot = sample_fixed_length(4, 1e-9, 1.0, seed=7)
    assert np.all(pot.values == 1.0)


def test_fixed_length_zero_fraction_concentrates():
    L, p = 100_000, 0.5
    pot = sample_fixed_length(L, p, 1.0, seed=42)
    frac = np.mean(pot.values == 0.0)
    assert abs(frac - p) <= 3 * math.sqrt(p * (1 - p) / L)


def test_sampling_is_deterministic_per_seed():
    a = sample_fixed_length(500, 0.3, 2.0, seed=9)
    b = sample_fixed_length(500, 0.3, 2.0, seed=9)
    c = sample_fixed_length(500, 0.3, 2.0, seed=10)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)

    x = sample_fixed_interval_count(50, 0.3, 2.0, seed=9)
    y = sample_fixed_interval_count(50, 0.3, 2.0, seed=9)
    assert np.array_equal(x.values, y.values)


def test_realization_values_are_read_only_and_checked():
    pot = sample_fixed_length(10, 0.5, 1.0, seed=1)
    with pytest.raises(ValueError):
        pot.values[0] = 3.0
    with pytest.raises(InvalidParameter):
        PotentialRealization(values=np.array([0.0, 0.5]), b=1.0, p=0.5, seed=0)


# -------------------------------------------------------
# |              Fixed-interval-count model             |
# -------------------------------------------------------

def test_interval_count_single_pair_structure():
    pot = sample_fixed_interval_count(1, 0.5, 1.0, seed=3)
    dec = decompose_lakes(pot)
    assert dec.n_lakes == 1
    assert len(dec.barriers) == 1
    assert dec.lakes[0].start == 0
    assert dec.barriers[0].stop == pot.size


def test_interval_count_starts_with_lake_and_ends_with_barrier():
    for seed in range(20):
        pot = sample_fixed_interval_count(25, 0.4, 1.0, seed=seed)
        assert pot.values[0] == 0.0
        assert pot.values[-1] == 1.0
        dec = decompose_lakes(pot)
        assert dec.n_lakes == 25
        assert len(dec.barriers) == 25
        _assert_tiles(dec)


def test_interval_count_mean_lake_length():
    n, p = 10_000, 0.5
    q = 1 - p
    lakes, _ = sample_interval_lengths(n, p, seed=11)
    sigma = math.sqrt(p / q**2 / n)
    assert abs(lakes.mean() - 1 / q) <= 3 * sigma
    assert lakes.min() >= 1


def test_interval_count_total_length_per_pair():
    n, p = 10_000, 0.5
    q = 1 - p
    pot = sample_fixed_interval_count(n, p, 1.0, seed=12)
    sigma = math.sqrt((p / q**2 + q / p**2) / n)
    assert abs(pot.size / n - 1 / (p * q)) <= 3 * sigma


def test_interval_count_rejects_p_one():
    with pytest.raises(InvalidParameter):
        sample_fixed_interval_count(5, 1.0, 1.0, seed=0)


@pytest.mark.parametrize("p", [0.3, 0.5, 0.7])
def test_lake_lengths_within_dkw_band(p):
    lakes, _ = sample_interval_lengths(10_000, p, seed=2024)
    support = np.arange(1, lakes.max() + 1)
    ecdf = np.searchsorted(np.sort(lakes), support, side="right") / lakes.size
    gap = np.max(np.abs(ecdf - geometric_cdf(support, p)))
    assert gap <= dkw_epsilon(lakes.size, confidence=0.99)


# -------------------------------------------------------
# |                   Decomposition                     |
# -------------------------------------------------------

def test_decompose_lakes_mixed():
    dec = decompose_lakes(_realization([0, 0, 1, 0]))
    assert dec.lakes == (Interval(0, 2), Interval(3, 1))
    assert dec.barriers == (Interval(2, 1),)
    assert dec.total_length == 4


def test_decompose_lakes_all_barrier():
    dec = decompose_lakes(_realization([1, 1]))
    assert dec.lakes == ()
    assert dec.barriers == (Interval(0, 2),)
    assert dec.lake_lengths.size == 0


def test_reconstruct_inverts_decompose():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        L = int(rng.integers(1, 30))
        b = float(rng.uniform(0.5, 3.0))
        values = np.where(rng.random(L) < 0.5, 0.0, b)
        dec = decompose_lakes(PotentialRealization(values=values, b=b, p=0.5, seed=0))
        _assert_tiles(dec)
        assert np.array_equal(reconstruct(dec, b), values)


# -------------------------------------------------------
# |                Interval statistics                  |
# -------------------------------------------------------

def test_expected_mass_above_zero_counts_everything():
    assert expected_mass_above(0, 0.5, 100) == pytest.approx(200.0)
    for p in (0.1, 0.3, 0.7):
        assert expected_mass_above(0, p, 50) == pytest.approx(50 / (1 - p))


def test_expected_mass_above_vanishes():
    assert expected_mass_above(math.inf, 0.5, 100) == 0.0
    assert expected_mass_above(200, 0.5, 100) < 1e-50


def test_expected_mass_above_uses_exact_floor():
    assert expected_mass_above(3.0, 0.5, 10) == expected_mass_above(3.99, 0.5, 10)
    assert expected_mass_above(4.0, 0.5, 10) < expected_mass_above(3.99, 0.5, 10)


@pytest.mark.parametrize("p", [0.3, 0.5, 0.7])
def test_expected_mass_above_matches_monte_carlo(p):
    x, n = 3, 10_000
    q = 1 - p
    lakes, _ = sample_interval_lengths(n, p, seed=77)

    support = np.arange(1, 400)
    pmf = q * p ** (support - 1)
    kept = np.where(support > x, support, 0)
    var = np.sum(pmf * kept**2) - np.sum(pmf * kept) ** 2

    observed = empirical_mass_above(lakes, x)
    assert abs(observed - expected_mass_above(x, p, n)) <= 3 * math.sqrt(n * var)


def test_expected_total_length_and_lake_count():
    assert expected_total_length(100, 0.5) == pytest.approx(400.0)
    assert expected_lake_count(1, 0.5) == pytest.approx(0.5)
    assert expected_lake_count(101, 0.5) == pytest.approx(0.5 + 100 * 0.25)
    assert expected_lake_count(10, 1.0) == pytest.approx(1.0)


def test_geometric_cdf_values():
    assert geometric_cdf(0, 0.5) == pytest.approx(0.0)
    assert geometric_cdf(1, 0.5) == pytest.approx(0.5)
    assert geometric_cdf(2.7, 0.5) == pytest.approx(0.75)
