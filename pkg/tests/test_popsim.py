"""Jump-process simulation, the deterministic limit, and their agreement."""

import numpy as np
import pytest

from walkfield.errors import DataError
from walkfield.graph import generator_from_rates
from walkfield.popsim import (
    DemographyRates,
    convergence_gap,
    integrate_limit_ode,
    simulate_population,
)


def two_node_Q(a=1.0, b=1.0):
    return generator_from_rates(2, {(0, 1): a, (1, 0): b})


def cycle4_Q():
    rates = {}
    for i in range(4):
        rates[(i, (i + 1) % 4)] = 1.0
        rates[((i + 1) % 4, i)] = 1.0
    return generator_from_rates(4, rates)


def no_demography(m):
    return DemographyRates(b=np.zeros(m), d=np.zeros(m))


class TestJumpProcess:
    def test_closed_system_conserves_individuals(self):
        Q = cycle4_Q()
        traj = simulate_population(Q, no_demography(4), [25, 25, 25, 25], 100,
                                   t_end=2.0, seed=3, snapshot_every=0.5)
        np.testing.assert_array_equal(traj.values.sum(axis=1),
                                      np.full(traj.times.size, 100))

    def test_counts_stay_nonnegative_with_deaths(self):
        Q = two_node_Q()
        demo = DemographyRates(b=np.zeros(2), d=np.array([5.0, 5.0]))
        traj = simulate_population(Q, demo, [3, 3], 10, t_end=5.0, seed=1,
                                   snapshot_every=0.5)
        assert (traj.values >= 0).all()

    def test_same_seed_reproduces_path(self):
        Q = cycle4_Q()
        demo = DemographyRates(b=np.full(4, 0.3), d=np.full(4, 0.3))
        a = simulate_population(Q, demo, [10] * 4, 40, 1.0, seed=8, snapshot_every=0.25)
        b = simulate_population(Q, demo, [10] * 4, 40, 1.0, seed=8, snapshot_every=0.25)
        np.testing.assert_array_equal(a.values, b.values)
        assert a.event_count == b.event_count

    def test_snapshot_grid_includes_endpoints(self):
        Q = two_node_Q()
        traj = simulate_population(Q, no_demography(2), [5, 5], 10, 1.0,
                                   seed=0, snapshot_every=0.25)
        np.testing.assert_allclose(traj.times, [0.0, 0.25, 0.5, 0.75, 1.0])

    def test_rejects_negative_counts(self):
        with pytest.raises(DataError):
            simulate_population(two_node_Q(), no_demography(2), [-1, 2], 1,
                                1.0, seed=0, snapshot_every=0.5)

    def test_event_cap_raises_with_partial_trajectory(self):
        from walkfield.errors import NumericalError

        Q = two_node_Q(50.0, 50.0)
        with pytest.raises(NumericalError) as info:
            simulate_population(Q, no_demography(2), [500, 500], 1000, 10.0,
                                seed=0, snapshot_every=1.0, max_events=200)
        partial = info.value.partial
        assert partial.ended_early
        assert partial.times.size < 11

    def test_extinction_ends_path_early_with_flag(self):
        # once every individual has died all rates vanish
        Q = two_node_Q()
        demo = DemographyRates(b=np.zeros(2), d=np.full(2, 50.0))
        traj = simulate_population(Q, demo, [2, 2], 4, t_end=100.0, seed=2,
                                   snapshot_every=10.0)
        assert traj.ended_early
        np.testing.assert_array_equal(traj.values[-1], [0, 0])


class TestLimitODE:
    def test_balanced_demography_preserves_total(self):
        Q = cycle4_Q()
        demo = DemographyRates(b=np.array([0.4, 0.1, 0.1, 0.4]),
                               d=np.array([0.1, 0.4, 0.4, 0.1]))
        assert (demo.b - demo.d).sum() == pytest.approx(0.0)
        traj = integrate_limit_ode(Q, demo, np.full(4, 0.25), 3.0, snapshot_every=0.5)
        np.testing.assert_allclose(traj.values.sum(axis=1), np.ones(traj.times.size),
                                   atol=1e-10)

    def test_two_node_analytic_solution(self):
        # dz/dt = -Q'z: symmetric 2-state chain relaxes as exp(-2t)
        Q = two_node_Q()
        z0 = np.array([0.8, 0.2])
        traj = integrate_limit_ode(Q, no_demography(2), z0, 1.0, snapshot_every=0.25)
        for t, z in zip(traj.times, traj.values):
            gap = 0.3 * np.exp(-2.0 * t)
            np.testing.assert_allclose(z, [0.5 + gap, 0.5 - gap], atol=1e-8)

    def test_matches_matrix_exponential_oracle(self):
        from scipy.linalg import expm

        Q = cycle4_Q()
        rng = np.random.default_rng(9)
        z0 = rng.dirichlet(np.ones(4))
        traj = integrate_limit_ode(Q, no_demography(4), z0, 2.0, snapshot_every=1.0)
        for t, z in zip(traj.times, traj.values):
            oracle = expm(-Q.dense().T * t) @ z0
            np.testing.assert_allclose(z, oracle, atol=1e-7)

    def test_equilibrium_is_fixed_point(self):
        Q = cycle4_Q()
        z_eq = np.full(4, 0.25)
        traj = integrate_limit_ode(Q, no_demography(4), z_eq, 1.0, snapshot_every=0.5)
        np.testing.assert_allclose(traj.values, np.tile(z_eq, (3, 1)), atol=1e-12)


class TestConvergenceGap:
    def test_gap_shrinks_with_N(self):
        Q = cycle4_Q()
        demo = DemographyRates(b=np.array([0.2, 0.0, 0.0, 0.2]),
                               d=np.array([0.0, 0.2, 0.2, 0.0]))
        gaps = convergence_gap(Q, demo, np.full(4, 0.25), t_end=1.0,
                               N_list=[50, 5000], replicates=8, seed=12)
        assert gaps[5000] < gaps[50]

    def test_requires_increasing_N(self):
        Q = two_node_Q()
        with pytest.raises(DataError):
            convergence_gap(Q, no_demography(2), [0.5, 0.5], 1.0,
                            N_list=[100, 100], replicates=2, seed=0)

    def test_replicate_streams_are_seed_stable(self):
        Q = two_node_Q()
        demo = no_demography(2)
        a = convergence_gap(Q, demo, [0.5, 0.5], 0.5, [100], 4, seed=5)
        b = convergence_gap(Q, demo, [0.5, 0.5], 0.5, [100], 4, seed=5)
        assert a == b
