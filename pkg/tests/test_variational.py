import math

import numpy as np
import pytest

from gp_disorder.services.lattice.lattice_disorder import (
    PotentialRealization,
    decompose_lakes,
    sample_fixed_interval_count,
)
from gp_disorder.services.lattice.lattice_energy import evaluate_energy
from gp_disorder.services.lattice.lattice_errors import InvalidParameter, OutOfRegime
from gp_disorder.services.lattice.lattice_solver import ground_state
from gp_disorder.services.lattice.lattice_variational import (
    KAPPA,
    allocation_objective,
    asymptotic_upper_bound,
    asymptotic_upper_constant,
    build_test_function,
    contributing_length,
    cutoff_length,
    lambda_asymptotic,
    lower_bound_energy,
    sine_quartic_sum,
    upper_bound_energy,
    upper_bound_energy_sharp,
    water_fill,
)

G_SMALL = 2.0 ** -10  # cutoff ~6.678 at p = 1/2


def _decomposition(lake_lengths, b=1.0):
    """Lakes of the given lengths, each followed by a single barrier site."""
    parts = []
    for n in lake_lengths:
        parts.append(np.zeros(n))
        parts.append(np.full(1, b))
    values = np.concatenate(parts)
    return decompose_lakes(PotentialRealization(values=values, b=b, p=0.5, seed=0))


# -------------------------------------------------------
# |                  Cutoff and regime                  |
# -------------------------------------------------------

def test_cutoff_length_examples():
    assert cutoff_length(2.0 ** -20, 0.5) == pytest.approx(15.678, abs=1e-3)
    assert cutoff_length(1e-6, 0.3) == pytest.approx(9.448, abs=2e-3)
    assert cutoff_length(G_SMALL, 0.5) == pytest.approx(10 - math.log2(10), rel=1e-12)


def test_cutoff_length_out_of_regime():
    with pytest.raises(OutOfRegime):
        cutoff_length(0.5, 0.5)
    with pytest.raises(OutOfRegime):
        cutoff_length(0.6, 0.5)
    with pytest.raises(InvalidParameter):
        cutoff_length(0.0, 0.5)


def test_lambda_asymptotic_examples():
    assert lambda_asymptotic(2.0 ** -20, 0.5) == pytest.approx(3.445e-3, rel=1e-3)
    assert lambda_asymptotic(2.0 ** -24, 0.5) < lambda_asymptotic(2.0 ** -20, 0.5)


def test_asymptotic_constant():
    assert asymptotic_upper_constant(0.5) == pytest.approx(11.3696, abs=1e-4)
    assert asymptotic_upper_bound(2.0 ** -10, 0.5) == pytest.approx(11.3696 / 100, abs=1e-5)


def test_sine_quartic_sum_matches_direct_sum():
    for L in range(1, 51):
        x = np.arange(1, L + 1)
        direct = float(np.sum(np.sin(np.pi * x / (L + 1)) ** 4))
        assert sine_quartic_sum(L) == pytest.approx(direct, abs=1e-12)


# -------------------------------------------------------
# |                  Sine test function                 |
# -------------------------------------------------------

def test_test_function_splits_mass_between_equal_lakes():
    dec = _decomposition([8, 8])
    phi = build_test_function(dec, G_SMALL, 0.5)
    first, second = dec.lakes
    assert np.sum(phi.amplitudes[first.start:first.stop] ** 2) == pytest.approx(0.5)
    assert np.sum(phi.amplitudes[second.start:second.stop] ** 2) == pytest.approx(0.5)
    assert np.all(phi.amplitudes[[b.start for b in dec.barriers]] == 0.0)


def test_test_function_masses_proportional_to_length():
    dec = _decomposition([20, 10, 2])
    phi = build_test_function(dec, G_SMALL, 0.5)
    masses = [float(np.sum(phi.amplitudes[l.start:l.stop] ** 2)) for l in dec.lakes]
    assert masses == pytest.approx([20 / 30, 10 / 30, 0.0])
    assert contributing_length(dec, G_SMALL, 0.5) == 30


def test_test_function_out_of_regime():
    dec = _decomposition([3, 4, 5])
    with pytest.raises(OutOfRegime):
        build_test_function(dec, G_SMALL, 0.5)
    with pytest.raises(OutOfRegime):
        upper_bound_energy(_decomposition([30]), 0.5, 0.5)


def test_test_function_is_normalized_on_random_realizations():
    for seed in range(500):
        dec = decompose_lakes(sample_fixed_interval_count(1000, 0.5, 1.0, seed=seed))
        phi = build_test_function(dec, G_SMALL, 0.5)
        assert np.linalg.norm(phi.amplitudes) == pytest.approx(1.0, abs=1e-12)


def test_sharp_bound_is_the_test_function_energy():
    for seed in range(20):
        pot = sample_fixed_interval_count(1000, 0.5, 1.0, seed=seed)
        dec = decompose_lakes(pot)
        phi = build_test_function(dec, G_SMALL, 0.5)
        exact = evaluate_energy(phi, pot, G_SMALL).total
        assert upper_bound_energy_sharp(dec, G_SMALL, 0.5) == pytest.approx(exact, abs=1e-10)
        assert exact <= upper_bound_energy(dec, G_SMALL, 0.5) + 1e-12


def test_upper_bound_dominates_ground_state():
    for seed in range(10):
        pot = sample_fixed_interval_count(1000, 0.5, 1.0, seed=seed)
        dec = decompose_lakes(pot)
        e0 = ground_state(pot, G_SMALL).energy.total
        phi = build_test_function(dec, G_SMALL, 0.5)
        assert e0 <= evaluate_energy(phi, pot, G_SMALL).total + 1e-10
        assert e0 <= upper_bound_energy(dec, G_SMALL, 0.5)


def test_upper_bound_single_long_lake_tiny_coupling():
    dec = _decomposition([100])
    g_rho = 2.0 ** -40
    ell = cutoff_length(g_rho, 0.5)
    bound = upper_bound_energy(dec, g_rho, 0.5)
    assert bound == pytest.approx(math.pi ** 2 / (ell + 1) ** 2, rel=1e-6)
    assert bound >= 4 * math.sin(math.pi / 202) ** 2


# -------------------------------------------------------
# |                Lagrange allocation                  |
# -------------------------------------------------------

def test_water_fill_single_lake_closed_form():
    dec = _decomposition([40])
    g_rho, L = 1e-3, dec.total_length
    alloc = water_fill(dec, g_rho, L)
    c = g_rho * L
    assert alloc.lambda_ == pytest.approx(c / 40 + (KAPPA * math.pi) ** 2 / 40 ** 2, rel=1e-12)
    assert alloc.masses.tolist() == pytest.approx([1.0])


def test_water_fill_invariants_on_random_instances():
    rng = np.random.default_rng(20)
    for _ in range(500):
        dec = decompose_lakes(sample_fixed_interval_count(int(rng.integers(1, 200)), 0.5, 1.0, seed=int(rng.integers(0, 2**31))))
        g_rho = float(10 ** rng.uniform(-6, -1))
        target = float(rng.uniform(0.1, 1.0))
        L = dec.total_length
        c = g_rho * L
        alloc = water_fill(dec, g_rho, L, norm_target=target)

        assert alloc.total == pytest.approx(target, abs=1e-10)
        assert np.all(alloc.masses >= 0.0)

        lengths = dec.lake_lengths.astype(float)
        on = alloc.active
        stationarity = c * alloc.masses[on] / lengths[on] + (KAPPA * math.pi) ** 2 / lengths[on] ** 2
        np.testing.assert_allclose(stationarity, alloc.lambda_, rtol=1e-10)
        assert np.all(lengths[~on] <= alloc.cutoff * (1 + 1e-12))


def test_water_fill_is_optimal_against_feasible_perturbations():
    rng = np.random.default_rng(21)
    dec = decompose_lakes(sample_fixed_interval_count(60, 0.5, 1.0, seed=3))
    lengths = dec.lake_lengths.astype(float)
    g_rho = 1e-3
    c = g_rho * dec.total_length
    alloc = water_fill(dec, g_rho, dec.total_length)
    best = allocation_objective(alloc.masses, lengths, c)

    others = rng.dirichlet(np.ones(lengths.size), size=10_000)
    steps = rng.uniform(0.0, 1.0, size=(10_000, 1))
    trials = alloc.masses + steps * (others - alloc.masses)
    values = (0.5 * c * trials**2 / lengths + trials * (KAPPA * math.pi) ** 2 / lengths**2).sum(axis=1)
    assert values.min() >= best - 1e-12


def test_water_fill_multiplier_grows_with_coupling():
    dec = decompose_lakes(sample_fixed_interval_count(2000, 0.5, 1.0, seed=4))
    lams = [water_fill(dec, g, dec.total_length).lambda_ for g in (2.0 ** -16, 2.0 ** -12, 2.0 ** -8)]
    assert lams[0] < lams[1] < lams[2]


def test_water_fill_rejects_degenerate_input():
    with pytest.raises(InvalidParameter):
        water_fill(_decomposition([5]), 0.0, 6)
    with pytest.raises(InvalidParameter):
        water_fill(_decomposition([5]), 0.1, 6, norm_target=1.5)
    all_barrier = decompose_lakes(PotentialRealization(values=np.ones(4), b=1.0, p=0.5, seed=0))
    with pytest.raises(OutOfRegime):
        water_fill(all_barrier, 0.1, 4)


# -------------------------------------------------------
# |                    Lower bound                      |
# -------------------------------------------------------

def test_lower_bound_zero_target():
    dec = _decomposition([20, 10])
    assert lower_bound_energy(dec, G_SMALL, 0.5, norm_target=0.0) == 0.0


def test_lower_bound_formula():
    dec = _decomposition([20, 10, 2])
    L = dec.total_length
    assert lower_bound_energy(dec, G_SMALL, 0.5) == pytest.approx(G_SMALL * L / 60)


def test_lower_bound_below_ground_state():
    for seed in range(5):
        pot = sample_fixed_interval_count(1000, 0.5, 1.0, seed=seed)
        dec = decompose_lakes(pot)
        e0 = ground_state(pot, G_SMALL).energy.total
        assert lower_bound_energy(dec, G_SMALL, 0.5) <= e0 <= upper_bound_energy(dec, G_SMALL, 0.5)
