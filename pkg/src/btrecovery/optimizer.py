"""Episodic policy search over learned skill parameters.

Two proposers share one protocol: quasi-random warmup followed by Gaussian-
process surrogate optimization with random scalarization (the multi-objective
pair is collapsed with fresh simplex weights every iteration, and the next
point maximizes expected improvement over quasi-random candidates), or pure
random search as the comparison baseline.

Each proposed point is evaluated on a handful of domain-randomized episodes;
records carry per-episode outcomes so fronts, success accounting, and the
replicate-noise estimate for the surrogate all come from the same data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from . import config
from .episodes import run_episode
from .gp import GaussianProcess, expected_improvement


class DegenerateHistory(Exception):
    """All scalarized outputs identical; surrogate fitting is pointless."""


@dataclass(frozen=True)
class ParamSpace:
    """Ordered box bounds for the learned parameters of one scenario."""

    names: tuple
    lows: tuple
    highs: tuple

    def __post_init__(self):
        if len(self.names) != len(set(self.names)):
            raise ValueError("parameter names must be unique")
        if not self.names:
            raise ValueError("empty parameter space")
        for lo, hi in zip(self.lows, self.highs):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError("bounds must be finite with lo < hi")

    @property
    def dimension(self) -> int:
        return len(self.names)

    def to_unit(self, theta) -> np.ndarray:
        lo = np.asarray(self.lows)
        hi = np.asarray(self.highs)
        return (np.asarray(theta, dtype=float) - lo) / (hi - lo)

    def from_unit(self, x01) -> np.ndarray:
        lo = np.asarray(self.lows)
        hi = np.asarray(self.highs)
        return lo + np.asarray(x01, dtype=float) * (hi - lo)

    def contains(self, theta) -> bool:
        return all(lo <= v <= hi for v, lo, hi in zip(theta, self.lows, self.highs))


@dataclass
class EvaluationRecord:
    theta: tuple
    episodes: tuple            # EpisodeResult per evaluation
    insertion_reward: float    # mean over evaluations
    force_reward: float        # mean over evaluations
    success_count: int
    iteration: int
    seeds: tuple

    @property
    def successful(self) -> bool:
        return self.success_count >= config.SUCCESS_RULE_MIN_EVALS

    def objectives(self) -> tuple:
        return (self.insertion_reward, self.force_reward)


def scalarize(weights: tuple, insertion: float, force: float) -> float:
    """Weighted sum of the normalized objective pair; monotone in both."""
    return (weights[0] * insertion / config.INSERTION_REWARD_MAX
            + weights[1] * (force + 1.0))


def episode_seed(master_seed: int, repetition: int, iteration: int, eval_index: int) -> int:
    """Deterministic 64-bit episode seed from the protocol coordinates."""
    ss = np.random.SeedSequence((master_seed, repetition, iteration, eval_index))
    a, b = ss.generate_state(2)
    return (int(a) << 32) | int(b)


def evaluate_policy(theta, scenario, master_seed: int, repetition: int = 0,
                    iteration: int = 0,
                    evals: int = config.DEFAULT_EVALS_PER_ITERATION) -> EvaluationRecord:
    """Evaluate one parameter point on ``evals`` domain-randomized episodes."""
    seeds = tuple(episode_seed(master_seed, repetition, iteration, k)
                  for k in range(evals))
    episodes = tuple(run_episode(scenario, theta, s) for s in seeds)
    return EvaluationRecord(
        theta=tuple(float(v) for v in theta),
        episodes=episodes,
        insertion_reward=sum(e.insertion_reward for e in episodes) / evals,
        force_reward=sum(e.force_reward for e in episodes) / evals,
        success_count=sum(1 for e in episodes if e.success),
        iteration=iteration,
        seeds=seeds,
    )


# --- proposers -------------------------------------------------------------

class ScalarizedBayesOpt:
    """Random-scalarization expected-improvement proposer.

    The first :data:`config.N_INITIAL_PROPOSALS` points come from one
    scrambled Sobol sequence.  Afterwards each proposal draws fresh simplex
    weights, fits the surrogate to the scalarized history (replicate
    variance of each record enters as observation noise), and returns the
    expected-improvement maximizer over fresh quasi-random candidates.
    """

    kind = "bo"

    def __init__(self, space: ParamSpace, rng: np.random.Generator):
        self.space = space
        self.rng = rng
        self._warmup = qmc.Sobol(space.dimension, scramble=True,
                                 seed=int(rng.integers(2 ** 31)))

    def propose_next(self, history) -> np.ndarray:
        if len(history) < config.N_INITIAL_PROPOSALS:
            x01 = self._warmup.random(1)[0]
            return self.space.from_unit(x01)

        u = float(self.rng.uniform())
        weights = (u, 1.0 - u)
        try:
            x01 = self._ei_argmax(history, weights)
        except DegenerateHistory:
            x01 = self.rng.uniform(size=self.space.dimension)
        return self.space.from_unit(x01)

    def _ei_argmax(self, history, weights) -> np.ndarray:
        y = np.array([scalarize(weights, r.insertion_reward, r.force_reward)
                      for r in history])
        if float(y.max() - y.min()) < 1e-12:
            raise DegenerateHistory
        X = np.array([self.space.to_unit(r.theta) for r in history])
        noise = np.array([self._replicate_variance(r, weights) for r in history])
        gp = GaussianProcess().fit(X, y, noise_var=noise)
        candidates = qmc.Sobol(self.space.dimension, scramble=True,
                               seed=int(self.rng.integers(2 ** 31))
                               ).random(config.N_EI_CANDIDATES)
        mean, var = gp.predict(candidates)
        train_mean, _ = gp.predict(X)
        ei = expected_improvement(mean, var, float(train_mean.max()))
        return candidates[int(np.argmax(ei))]

    @staticmethod
    def _replicate_variance(record: EvaluationRecord, weights) -> float:
        """Variance of the record's scalarized mean, conservatively inflated
        since five replicates underestimate tail noise."""
        vals = [scalarize(weights, e.insertion_reward, e.force_reward)
                for e in record.episodes]
        n = len(vals)
        if n < 2:
            return 0.0
        mean = sum(vals) / n
        sample_var = sum((v - mean) ** 2 for v in vals) / (n - 1) / n
        return config.GP_NOISE_INFLATION * sample_var


class RandomSearch:
    """Uniform baseline sharing the proposer protocol."""

    kind = "random"

    def __init__(self, space: ParamSpace, rng: np.random.Generator):
        self.space = space
        self.rng = rng

    def propose_next(self, history) -> np.ndarray:
        return self.space.from_unit(self.rng.uniform(size=self.space.dimension))


PROPOSERS = {"bo": ScalarizedBayesOpt, "random": RandomSearch}


# --- Pareto extraction -------------------------------------------------------

def pareto_front(records) -> list:
    """Exact non-dominated subset under joint maximization of the
    objective pair, ordered by insertion reward descending.

    Sweep over records sorted by insertion reward: a record survives iff its
    force reward strictly exceeds the best force reward seen at strictly
    higher insertion reward (ties on both objectives all survive).
    """
    if not records:
        raise ValueError("pareto_front requires at least one record")
    order = sorted(range(len(records)),
                   key=lambda i: (-records[i].insertion_reward,
                                  -records[i].force_reward))
    front: list = []
    best_force = -math.inf
    i = 0
    while i < len(order):
        ins = records[order[i]].insertion_reward
        j = i
        while j < len(order) and records[order[j]].insertion_reward == ins:
            j += 1
        group = order[i:j]
        gmax = max(records[k].force_reward for k in group)
        if gmax > best_force:
            front.extend(records[k] for k in group
                         if records[k].force_reward == gmax)
            best_force = gmax
        i = j
    return front


# --- experiment protocol ------------------------------------------------------

@dataclass
class ExperimentConfig:
    iterations: int = config.DEFAULT_ITERATIONS
    evals: int = config.DEFAULT_EVALS_PER_ITERATION
    repetitions: int = config.DEFAULT_REPETITIONS
    seed: int = 0
    optimizer: str = "bo"

    def validate(self) -> None:
        if self.iterations <= 0 or self.evals <= 0 or self.repetitions <= 0:
            raise ValueError("iterations, evals, repetitions must be positive")
        if self.optimizer not in PROPOSERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class RepetitionResult:
    repetition: int
    records: list
    front: list
    found_successful_policy: bool


@dataclass
class ExperimentResult:
    scenario_id: int
    config: ExperimentConfig
    repetitions: list = field(default_factory=list)

    def found_flags(self) -> list:
        return [r.found_successful_policy for r in self.repetitions]


def run_repetition(scenario, cfg: ExperimentConfig, repetition: int) -> RepetitionResult:
    """One fresh-optimizer repetition: propose/evaluate ``iterations`` times."""
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, repetition)))
    proposer = PROPOSERS[cfg.optimizer](scenario.param_space, rng)
    records: list = []
    for iteration in range(cfg.iterations):
        theta = proposer.propose_next(records)
        record = evaluate_policy(theta, scenario, cfg.seed, repetition,
                                 iteration, cfg.evals)
        records.append(record)
    return RepetitionResult(
        repetition=repetition,
        records=records,
        front=pareto_front(records),
        found_successful_policy=any(r.successful for r in records),
    )


def run_experiment(scenario, cfg: ExperimentConfig) -> ExperimentResult:
    cfg.validate()
    result = ExperimentResult(scenario_id=scenario.id, config=cfg)
    for repetition in range(cfg.repetitions):
        result.repetitions.append(run_repetition(scenario, cfg, repetition))
    return result
