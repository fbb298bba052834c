import numpy as np
import pytest

from earc.errors import DivergenceError, UnknownNameError, ValidationError
from earc.systems import (GROWTH_RATE, INTERACTION_MATRIX, CompetitionConfig,
                          HamiltonianConfig, builtin_rep, competition_generate,
                          competition_step, hamiltonian_energy,
                          hamiltonian_generate, hamiltonian_vector_field,
                          planted_linear)


class TestHamiltonian:
    def test_printed_start_is_an_equilibrium(self):
        assert np.array_equal(hamiltonian_vector_field(np.array([1.0, 0.0])),
                              np.zeros(2))

    def test_default_start_is_not(self):
        deriv = hamiltonian_vector_field(np.array([0.5, 0.0]))
        assert deriv[0] == 0.0
        assert deriv[1] == pytest.approx(-0.375)

    def test_shapes_and_start(self):
        series = hamiltonian_generate(HamiltonianConfig())
        assert series.shape == (601, 2)
        assert np.array_equal(series[0], [0.5, 0.0])

    def test_energy_drift(self):
        series = hamiltonian_generate(HamiltonianConfig())
        energy = hamiltonian_energy(series[:, 0], series[:, 1])
        drift = np.max(np.abs(energy - energy[0])) / abs(energy[0])
        assert drift <= 1e-8

    def test_orbit_is_bounded_and_nontrivial(self):
        series = hamiltonian_generate(HamiltonianConfig())
        assert np.max(np.abs(series)) <= 2.0
        assert np.ptp(series[:, 0]) > 0.5

    def test_symmetry_of_generated_orbits(self):
        # the vector field commutes with the signed-swap group, so a
        # transformed start yields the transformed trajectory
        base = hamiltonian_generate(HamiltonianConfig(steps=200))
        for g in builtin_rep("k4").elements:
            q0, p0 = g @ np.array([0.5, 0.0])
            mapped = hamiltonian_generate(HamiltonianConfig(q0=q0, p0=p0, steps=200))
            assert np.max(np.abs(mapped - base @ g.T)) <= 1e-10

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            HamiltonianConfig(dt=0.0)
        with pytest.raises(ValidationError):
            HamiltonianConfig(steps=0)


class TestCompetition:
    def test_interaction_rows_sum_to_common_value(self):
        sums = INTERACTION_MATRIX.sum(axis=1)
        assert np.allclose(sums, 3.1, atol=1e-15)

    def test_interaction_matrix_is_circulant(self):
        for i in range(4):
            assert np.array_equal(np.roll(INTERACTION_MATRIX[i], 1),
                                  INTERACTION_MATRIX[i + 1])

    def test_uniform_fixed_point(self):
        p_star = np.full(5, 1.0 / 3.1)
        out = competition_step(p_star, np.full(5, GROWTH_RATE), INTERACTION_MATRIX)
        assert np.max(np.abs(out - p_star)) <= 1e-15

    def test_extinction_fixed_point(self):
        out = competition_step(np.zeros(5), np.full(5, GROWTH_RATE),
                               INTERACTION_MATRIX)
        assert np.array_equal(out, np.zeros(5))

    def test_zero_growth_freezes(self):
        p = np.array([0.1, 0.2, 0.3, 0.4, 0.5])
        assert np.array_equal(competition_step(p, np.zeros(5), INTERACTION_MATRIX), p)

    def test_step_commutes_with_shift(self):
        rep = builtin_rep("z5")
        rng = np.random.default_rng(30)
        r = np.full(5, GROWTH_RATE)
        for _ in range(10):
            p = rng.uniform(0.05, 0.95, 5)
            for g in rep.elements:
                lhs = g @ competition_step(p, r, INTERACTION_MATRIX)
                rhs = competition_step(g @ p, r, INTERACTION_MATRIX)
                assert np.max(np.abs(lhs - rhs)) <= 1e-14

    def test_trajectory_commutes_with_shift(self):
        rep = builtin_rep("z5")
        g = rep.generators[0]
        base = competition_generate(CompetitionConfig(steps=60))
        shifted = competition_generate(
            CompetitionConfig(p0=g @ np.array([0.2, 0.35, 0.5, 0.65, 0.8]), steps=60))
        assert np.max(np.abs(shifted - base @ g.T)) <= 1e-12

    def test_zero_steps(self):
        series = competition_generate(CompetitionConfig(steps=0))
        assert series.shape == (1, 5)
        assert np.array_equal(series[0], [0.2, 0.35, 0.5, 0.65, 0.8])

    def test_default_run_settles_on_exclusion_pattern(self):
        # The uniform state 1/3.1 is linearly unstable at the default growth
        # rate; the default start converges to a non-uniform fixed point with
        # two surviving participants instead.
        series = competition_generate(CompetitionConfig())
        final = series[-1]
        assert np.all(series >= -1e-12) and np.all(series <= 1.01)
        residual = competition_step(final, np.full(5, GROWTH_RATE),
                                    INTERACTION_MATRIX) - final
        assert np.max(np.abs(residual)) <= 1e-5
        assert np.max(np.abs(final - 1.0 / 3.1)) > 0.5

    def test_divergence_detected(self):
        with pytest.raises(DivergenceError):
            competition_generate(CompetitionConfig(r=np.full(5, 80.0), steps=50))

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            CompetitionConfig(p0=np.array([0.0, 0.5, 0.5, 0.5, 0.5]))
        with pytest.raises(ValidationError):
            CompetitionConfig(interactions=-INTERACTION_MATRIX)


class TestBuiltinReps:
    def test_orders(self):
        assert builtin_rep("k4").order == 4
        assert builtin_rep("z5").order == 5

    def test_elements_are_orthogonal(self):
        for name in ("k4", "z5"):
            rep = builtin_rep(name)
            for g in rep.elements:
                assert np.linalg.norm(g.T @ g - np.eye(rep.n)) <= 1e-14

    def test_unknown_name(self):
        with pytest.raises(UnknownNameError):
            builtin_rep("d8")


class TestPlantedLinear:
    def test_identity_gives_constant_series(self):
        series = planted_linear(np.eye(2), np.array([1.0, -2.0]), 5)
        assert np.array_equal(series, np.tile([1.0, -2.0], (6, 1)))

    def test_geometric_decay(self):
        series = planted_linear(0.5 * np.eye(1), np.array([8.0]), 3)
        assert np.allclose(series[:, 0], [8.0, 4.0, 2.0, 1.0])

    def test_rotation_preserves_norm(self):
        theta = 0.1
        rot = np.array([[np.cos(theta), -np.sin(theta)],
                        [np.sin(theta), np.cos(theta)]])
        series = planted_linear(rot, np.array([1.0, 0.0]), 100)
        norms = np.linalg.norm(series, axis=1)
        assert np.max(np.abs(norms - 1.0)) <= 1e-12

    def test_overflow_detected(self):
        with pytest.raises(DivergenceError):
            planted_linear(10.0 * np.eye(1), np.array([1.0]), 20)
