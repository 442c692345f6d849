"""Box-constrained covariance-matrix-adaptation evolution strategy.

Ask/tell optimizer over the unit cube.  Candidates are sampled from a
Gaussian, clipped coordinatewise into ``[0, 1]``, decoded through a
:class:`~osclab.search.SearchSpace`, and ranked by episodic return
(maximization).  The update depends on fitnesses only through their
ordering, so any strictly increasing transform of the scores leaves the
strategy state bit-identical.

Numerical guards: the covariance is re-symmetrized every generation and its
eigenvalues floored at ``EIGENVALUE_FLOOR``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .search import SearchSpace
from .oscillators import OscillatorParams

EIGENVALUE_FLOOR = 1e-14
INITIAL_STEP_SIZE = 0.25  # fraction of the unit box width
STALL_GENERATIONS = 50
STALL_TOLERANCE = 1e-12
STEP_SIZE_FLOOR = 1e-12


class CmaNumericalError(RuntimeError):
    """Covariance factorization failed; the caller should restart."""


@dataclass(frozen=True)
class StrategyConstants:
    """Strategy constants, standard defaults.

    ============  ===========================================================
    weights       w_i ∝ ln(mu + 1/2) - ln(i), i = 1..mu, normalized to sum 1
    mu            floor(lambda / 2) parents
    mu_eff        1 / sum(w_i^2), variance-effective selection mass
    c_sigma       (mu_eff + 2) / (d + mu_eff + 5)
    d_sigma       1 + 2 max(0, sqrt((mu_eff-1)/(d+1)) - 1) + c_sigma
    c_c           (4 + mu_eff/d) / (d + 4 + 2 mu_eff/d)
    c_1           2 / ((d + 1.3)^2 + mu_eff)
    c_mu          min(1 - c_1, 2 (mu_eff - 2 + 1/mu_eff) / ((d+2)^2 + mu_eff))
    chi_n         E||N(0, I_d)|| ~ sqrt(d) (1 - 1/(4d) + 1/(21 d^2))
    ============  ===========================================================
    """

    dimension: int
    population_size: int
    mu: int
    weights: np.ndarray
    mu_eff: float
    c_sigma: float
    d_sigma: float
    c_c: float
    c_1: float
    c_mu: float
    chi_n: float

    @classmethod
    def defaults(cls, dimension: int, population_size: int) -> "StrategyConstants":
        d = float(dimension)
        mu = population_size // 2
        raw = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
        weights = raw / raw.sum()
        mu_eff = 1.0 / float(np.sum(weights**2))
        c_sigma = (mu_eff + 2.0) / (d + mu_eff + 5.0)
        d_sigma = 1.0 + 2.0 * max(0.0, math.sqrt((mu_eff - 1.0) / (d + 1.0)) - 1.0) + c_sigma
        c_c = (4.0 + mu_eff / d) / (d + 4.0 + 2.0 * mu_eff / d)
        c_1 = 2.0 / ((d + 1.3) ** 2 + mu_eff)
        c_mu = min(1.0 - c_1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((d + 2.0) ** 2 + mu_eff))
        chi_n = math.sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d))
        return cls(
            dimension=dimension,
            population_size=population_size,
            mu=mu,
            weights=weights,
            mu_eff=mu_eff,
            c_sigma=c_sigma,
            d_sigma=d_sigma,
            c_c=c_c,
            c_1=c_1,
            c_mu=c_mu,
            chi_n=chi_n,
        )


@dataclass(frozen=True)
class CmaState:
    """Snapshot of the strategy state after ``generation`` updates."""

    mean: np.ndarray
    step_size: float
    cov: np.ndarray
    path_sigma: np.ndarray
    path_c: np.ndarray
    generation: int
    population_size: int
    seed: int


@dataclass(frozen=True)
class Candidate:
    """One sampled point: generation-local id, unit-cube coordinates, decoded params."""

    id: int
    x_internal: np.ndarray
    params: OscillatorParams


class CmaEs:
    """Ask/tell loop state.  Not reentrant; one owner per instance."""

    def __init__(self, space: SearchSpace, seed: int, population_size: int = 30):
        if space.dimension < 1:
            raise ValueError("search space has no free entries")
        if population_size < 2:
            raise ValueError("population size must be at least 2")
        self.space = space
        self.seed = int(seed)
        self.constants = StrategyConstants.defaults(space.dimension, population_size)
        d = space.dimension
        self._rng = np.random.default_rng(self.seed)
        self._mean = np.full(d, 0.5)
        self._sigma = INITIAL_STEP_SIZE
        self._cov = np.eye(d)
        self._path_sigma = np.zeros(d)
        self._path_c = np.zeros(d)
        self._generation = 0
        self._eig_basis = np.eye(d)
        self._eig_scale = np.ones(d)
        self._needs_factorization = False
        self._pending: list[Candidate] | None = None

    @property
    def state(self) -> CmaState:
        return CmaState(
            mean=self._mean.copy(),
            step_size=self._sigma,
            cov=self._cov.copy(),
            path_sigma=self._path_sigma.copy(),
            path_c=self._path_c.copy(),
            generation=self._generation,
            population_size=self.constants.population_size,
            seed=self.seed,
        )

    def _factorize(self) -> None:
        try:
            eigvals, basis = np.linalg.eigh(self._cov)
        except np.linalg.LinAlgError as exc:
            raise CmaNumericalError("covariance eigendecomposition failed") from exc
        if not np.all(np.isfinite(eigvals)):
            raise CmaNumericalError("covariance eigenvalues are not finite")
        eigvals = np.maximum(eigvals, EIGENVALUE_FLOOR)
        self._cov = (basis * eigvals) @ basis.T
        self._cov = 0.5 * (self._cov + self._cov.T)
        self._eig_basis = basis
        self._eig_scale = np.sqrt(eigvals)
        self._needs_factorization = False

    def ask(self) -> list[Candidate]:
        """Sample one population, clipped into the unit cube."""
        if self._needs_factorization:
            self._factorize()
        lam = self.constants.population_size
        d = self.constants.dimension
        z = self._rng.standard_normal((lam, d))
        steps = (z * self._eig_scale) @ self._eig_basis.T
        xs = np.clip(self._mean + self._sigma * steps, 0.0, 1.0)
        self._pending = [
            Candidate(id=k, x_internal=xs[k].copy(), params=self.space.decode(xs[k]))
            for k in range(lam)
        ]
        return list(self._pending)

    def tell(self, fitnesses: list[tuple[int, float]]) -> CmaState:
        """Rank-based update from (candidate id, score) pairs; higher is better."""
        if self._pending is None:
            raise ValueError("tell() without a preceding ask()")
        lam = self.constants.population_size
        if len(fitnesses) != lam:
            raise ValueError(f"expected {lam} scores, got {len(fitnesses)}")
        scores = np.full(lam, np.nan)
        for cid, score in fitnesses:
            if not (isinstance(cid, (int, np.integer)) and 0 <= cid < lam):
                raise ValueError(f"unknown candidate id {cid!r}")
            if not np.isnan(scores[cid]):
                raise ValueError(f"duplicate candidate id {cid}")
            if not np.isfinite(score):
                raise ValueError(f"non-finite score for candidate {cid}")
            scores[cid] = score
        if np.isnan(scores).any():
            raise ValueError("missing candidate ids in tell()")

        cst = self.constants
        d = cst.dimension
        # Descending score, ties broken by id: depends on ranks only.
        order = np.argsort(-scores, kind="stable")
        xs = np.array([self._pending[i].x_internal for i in order[: cst.mu]])

        mean_old = self._mean
        sigma = self._sigma
        y_sel = (xs - mean_old) / sigma
        y_w = cst.weights @ y_sel
        self._mean = cst.weights @ xs

        # Cumulative step-size adaptation (whitened displacement).
        inv_sqrt = (self._eig_basis / self._eig_scale) @ self._eig_basis.T
        self._path_sigma = (1.0 - cst.c_sigma) * self._path_sigma + math.sqrt(
            cst.c_sigma * (2.0 - cst.c_sigma) * cst.mu_eff
        ) * (inv_sqrt @ y_w)
        norm_ps = float(np.linalg.norm(self._path_sigma))
        expected = math.sqrt(1.0 - (1.0 - cst.c_sigma) ** (2 * (self._generation + 1)))
        h_sigma = 1.0 if norm_ps / expected < (1.4 + 2.0 / (d + 1.0)) * cst.chi_n else 0.0

        self._path_c = (1.0 - cst.c_c) * self._path_c + h_sigma * math.sqrt(
            cst.c_c * (2.0 - cst.c_c) * cst.mu_eff
        ) * y_w

        rank_one = np.outer(self._path_c, self._path_c)
        rank_mu = (y_sel.T * cst.weights) @ y_sel
        correction = (1.0 - h_sigma) * cst.c_c * (2.0 - cst.c_c)
        self._cov = (
            (1.0 - cst.c_1 - cst.c_mu) * self._cov
            + cst.c_1 * (rank_one + correction * self._cov)
            + cst.c_mu * rank_mu
        )
        self._cov = 0.5 * (self._cov + self._cov.T)

        self._sigma = sigma * math.exp(
            (cst.c_sigma / cst.d_sigma) * (norm_ps / cst.chi_n - 1.0)
        )
        self._generation += 1
        self._needs_factorization = True
        self._pending = None
        return self.state


def should_stop(state: CmaState, history: list[float], budget_evaluations: int) -> bool:
    """Stop on exhausted budget, collapsed sampling spread, or a stalled best."""
    evaluations = state.generation * state.population_size
    if evaluations >= budget_evaluations:
        return True
    spread = state.step_size * math.sqrt(float(np.max(np.linalg.eigvalsh(state.cov))))
    if spread < STEP_SIZE_FLOOR:
        return True
    if len(history) >= STALL_GENERATIONS:
        recent = history[-STALL_GENERATIONS:]
        if max(recent) - min(recent) <= STALL_TOLERANCE:
            return True
    return False
