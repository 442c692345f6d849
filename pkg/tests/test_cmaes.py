import math

import numpy as np
import pytest

from osclab.cmaes import CmaEs, CmaState, should_stop
from osclab.oscillators import PolicyVariant
from osclab.search import make_space

TWO_PI = 2.0 * math.pi


def space_d(dimension):
    """A search space with the requested number of free entries."""
    # joints j give 2j amplitude/offset + (j-1) phases + 2 rates free
    for joints in range(1, 12):
        d = 3 * joints + 1
        if d == dimension:
            return make_space(
                joints, (-1.0, 1.0), (-1.0, 1.0), (0.0, TWO_PI), (2.5, 12.6)
            )
    raise AssertionError(f"no joint count gives dimension {dimension}")


def sphere_fitness(candidates, center=0.7):
    return [(c.id, -float(np.sum((c.x_internal - center) ** 2))) for c in candidates]


def states_equal(a: CmaState, b: CmaState) -> bool:
    return (
        np.array_equal(a.mean, b.mean)
        and a.step_size == b.step_size
        and np.array_equal(a.cov, b.cov)
        and np.array_equal(a.path_sigma, b.path_sigma)
        and np.array_equal(a.path_c, b.path_c)
        and a.generation == b.generation
    )


class TestInit:
    def test_stated_initialization(self):
        es = CmaEs(space_d(4), seed=0, population_size=30)
        state = es.state
        assert np.array_equal(state.mean, np.full(4, 0.5))
        assert state.step_size == 0.25
        assert np.array_equal(state.cov, np.eye(4))
        assert np.array_equal(state.path_sigma, np.zeros(4))
        assert state.generation == 0

    def test_equal_seeds_equal_states(self):
        a = CmaEs(space_d(4), seed=42)
        b = CmaEs(space_d(4), seed=42)
        assert states_equal(a.state, b.state)
        fits = sphere_fitness(a.ask())
        b.ask()
        assert states_equal(a.tell(fits), b.tell(fits))

    def test_population_of_one_rejected(self):
        with pytest.raises(ValueError):
            CmaEs(space_d(4), seed=0, population_size=1)

    def test_empty_space_rejected(self):
        space = make_space(1, amplitude=1.0, offset=0.0, phase=(0, 1), omega=3.0)
        with pytest.raises(ValueError):
            CmaEs(space, seed=0)


class TestAsk:
    def test_reproducible_across_runs(self):
        xs_a = np.array([c.x_internal for c in CmaEs(space_d(4), seed=9).ask()])
        xs_b = np.array([c.x_internal for c in CmaEs(space_d(4), seed=9).ask()])
        assert np.array_equal(xs_a, xs_b)

    def test_candidates_stay_in_unit_box(self):
        es = CmaEs(space_d(7), seed=3)
        for _ in range(5):
            candidates = es.ask()
            xs = np.array([c.x_internal for c in candidates])
            assert np.all(xs >= 0.0) and np.all(xs <= 1.0)
            es.tell(sphere_fitness(candidates))

    def test_decoded_params_within_bounds(self):
        es = CmaEs(space_d(4), seed=5)
        for candidate in es.ask():
            p = candidate.params
            assert np.all(np.abs(p.amplitudes) <= 1.0)
            assert 2.5 <= p.omega_swing <= 12.6
            assert p.phase_shifts[0] == 0.0

    def test_sample_mean_matches_distribution(self):
        # straight Monte-Carlo check on the unclipped Gaussian: with sigma
        # small the clipping never binds and the sample mean approaches m
        es = CmaEs(space_d(4), seed=11, population_size=334)
        es._sigma = 1e-3
        draws = []
        for _ in range(30):  # ~1e4 samples
            draws.extend(c.x_internal for c in es.ask())
        mean = np.mean(draws, axis=0)
        assert np.all(np.abs(mean - 0.5) < 0.02)

    def test_tiny_sigma_collapses_to_mean(self):
        es = CmaEs(space_d(4), seed=1)
        es._sigma = 1e-300
        xs = np.array([c.x_internal for c in es.ask()])
        assert np.allclose(xs, 0.5, atol=1e-290)


class TestTell:
    def test_permutation_of_scores_is_bit_identical(self):
        a = CmaEs(space_d(4), seed=7)
        b = CmaEs(space_d(4), seed=7)
        fits = sphere_fitness(a.ask())
        b.ask()
        state_a = a.tell(fits)
        state_b = b.tell(list(reversed(fits)))
        assert states_equal(state_a, state_b)

    def test_monotone_transform_is_bit_identical(self):
        a = CmaEs(space_d(4), seed=7)
        b = CmaEs(space_d(4), seed=7)
        fits = sphere_fitness(a.ask())
        b.ask()
        transformed = [(cid, math.tanh(f) * 3.0 + 1.0) for cid, f in fits]
        assert states_equal(a.tell(fits), b.tell(transformed))

    def test_rejects_missing_and_duplicate_ids(self):
        es = CmaEs(space_d(4), seed=0, population_size=4)
        fits = sphere_fitness(es.ask())
        with pytest.raises(ValueError):
            es.tell(fits[:-1])
        dup = fits[:-1] + [fits[0]]
        with pytest.raises(ValueError):
            es.tell(dup)

    def test_rejects_non_finite_scores(self):
        es = CmaEs(space_d(4), seed=0, population_size=4)
        fits = sphere_fitness(es.ask())
        fits[0] = (0, float("nan"))
        with pytest.raises(ValueError):
            es.tell(fits)

    def test_covariance_stays_symmetric_positive_definite(self):
        es = CmaEs(space_d(7), seed=13)
        for _ in range(40):
            es.tell(sphere_fitness(es.ask()))
            cov = es.state.cov
            assert np.array_equal(cov, cov.T)
            assert np.min(np.linalg.eigvalsh(cov)) > 0.0

    def test_converges_on_sphere_10d(self):
        # quick version; the acceptance suite runs all ten seeds
        es = CmaEs(space_d(10), seed=0, population_size=30)
        best = math.inf
        for _ in range(200):
            candidates = es.ask()
            fits = sphere_fitness(candidates)
            best = min(best, min(-f for _, f in fits))
            es.tell(fits)
            if best < 1e-10:
                break
        assert best < 1e-10


class TestShouldStop:
    def fresh_state(self):
        return CmaEs(space_d(4), seed=0, population_size=30).state

    def test_budget_exhausted(self):
        state = self.fresh_state()
        assert should_stop(state, [], budget_evaluations=0)

    def test_fresh_state_continues(self):
        assert not should_stop(self.fresh_state(), [1.0, 2.0], budget_evaluations=10_000)

    def test_flat_history_stops(self):
        assert should_stop(self.fresh_state(), [3.0] * 50, budget_evaluations=10_000)

    def test_improving_history_continues(self):
        history = list(np.linspace(0.0, 1.0, 60))
        assert not should_stop(self.fresh_state(), history, budget_evaluations=10_000)

    def test_collapsed_spread_stops(self):
        es = CmaEs(space_d(4), seed=0)
        es._sigma = 1e-13
        assert should_stop(es.state, [], budget_evaluations=10_000)
