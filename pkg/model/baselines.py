""" Earlier selection schemes: static priority (IPCP-style), sequential (DOL-style) and degree bandits """
import logging
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional

import numpy as np

from model.cache import L1, NOT_PREFETCHED
from model.errors import ConfigError
from model.seeding import component_rng
from model.selector import RecentFilter, Selector

logger = logging.getLogger(__name__)

BASELINE_DEGREE = 3


class PrioritySelection(NamedTuple):
    source: Optional[int]
    blocks: List[int]


def static_priority_select(candidate_lists):
    """First non-empty candidate list in priority order; everything after it is dropped."""
    for source, blocks in enumerate(candidate_lists):
        if blocks:
            return PrioritySelection(source, list(blocks))
    return PrioritySelection(None, [])


class IpcpSelector(Selector):
    """Every engine trains on every demand; only the highest-priority engine with candidates issues."""
    name = "ipcp"

    def __init__(self, engines, degree=BASELINE_DEGREE):
        super().__init__(engines)
        if degree < 1:
            raise ConfigError("ipcp degree must be at least 1")
        self.degree = degree
        self.filter = RecentFilter()

    def step(self, record):
        outcomes = [engine.train(record, self.degree) for engine in self.engines]
        chosen = static_priority_select([o.candidates for o in outcomes])
        if chosen.source is None:
            return []
        return self.filter.requests(chosen.blocks, chosen.source, record.pc)


class DolSelector(Selector):
    """
    DolSelector

    Demands go to engines one at a time in a fixed order; the first engine
    that can predict the demand trains on it. When none can, the last engine
    trains so that it still learns.
    """
    name = "dol"

    def __init__(self, engines, degree=BASELINE_DEGREE):
        super().__init__(engines)
        if degree < 1:
            raise ConfigError("dol degree must be at least 1")
        self.degree = degree
        self.filter = RecentFilter()

    def sequential_allocate(self, record):
        for index, engine in enumerate(self.engines):
            if engine.has_prediction(record):
                return index
        return len(self.engines) - 1

    def step(self, record):
        index = self.sequential_allocate(record)
        outcome = self.engines[index].train(record, self.degree)
        return self.filter.requests(outcome.candidates, index, record.pc)


""" Bandit """

EXPLORATIONS = ("epsilon", "ucb1")


@dataclass(frozen=True)
class BanditConfig:
    """
    BanditConfig

    Attributes:
        degree (int): degree an arm gives an enabled engine.
        epoch_len (int): demands per decision.
        exploration (str): epsilon or ucb1.
        epsilon (float): exploration probability for epsilon-greedy.
        c_ucb (float): UCB1 exploration weight.
    """
    degree: int = 3
    epoch_len: int = 2048
    exploration: str = "epsilon"
    epsilon: float = 0.1
    c_ucb: float = math.sqrt(2)

    def validate(self):
        if self.degree < 1:
            raise ConfigError("bandit degree must be at least 1")
        if self.epoch_len < 1:
            raise ConfigError("bandit epoch_len must be at least 1")
        if self.exploration not in EXPLORATIONS:
            raise ConfigError(f"bandit exploration must be one of {', '.join(EXPLORATIONS)}")
        if not 0 <= self.epsilon <= 1:
            raise ConfigError("bandit epsilon must be within [0, 1]")
        if self.c_ucb < 0:
            raise ConfigError("bandit c_ucb must be non-negative")
        return self


@dataclass
class ArmStats:
    pulls: int = 0
    mean_reward: float = 0.0

    def update(self, reward):
        self.pulls += 1
        self.mean_reward += (reward - self.mean_reward) / self.pulls


def bandit_select_arm(stats, t, config, rng):
    """Pick the next arm.

    Args:
        stats (list[ArmStats]): one entry per arm.
        t (int): 1-based decision index.
        config (BanditConfig): exploration policy.
        rng (numpy.random.Generator): exploration randomness.
    """
    if t < 1:
        raise ValueError("decision index starts at 1")
    unpulled = [i for i, s in enumerate(stats) if s.pulls == 0]
    means = np.array([s.mean_reward for s in stats])
    if config.exploration == "ucb1":
        if unpulled:
            return unpulled[0]
        pulls = np.array([s.pulls for s in stats], dtype=float)
        return int(np.argmax(means + config.c_ucb * np.sqrt(math.log(t) / pulls)))
    if rng.random() < config.epsilon:
        return int(rng.integers(len(stats)))
    if unpulled:
        return unpulled[0]
    return int(np.argmax(means))


def extended_bandit_storage_bytes(actions, prefetchers):
    """Reward table size of a bandit choosing one of `actions` degrees per prefetcher."""
    return 8 * actions ** prefetchers


class BanditSelector(Selector):
    """
    BanditSelector

    Chooses one degree per engine for a whole epoch. Arms enumerate every
    tuple of per-engine degree levels; engine i is digit i of the arm index
    in base len(levels). All engines train on every demand at the top level
    and each one's candidates are cut to its arm degree. The reward of an
    epoch is its count of demand hits (L1 hits plus prefetch-covered).

    Attributes:
        levels (tuple[int]): degree choices per engine, 0 first.
        stats (list[ArmStats]): running reward per arm.
        history (list[int]): arm chosen for each epoch.
    """
    name = "bandit"

    def __init__(self, engines, config=None, seed=0, levels=None, name=None):
        super().__init__(engines)
        self.config = (config or BanditConfig()).validate()
        self.levels = tuple(levels) if levels is not None else (0, self.config.degree)
        if self.levels[0] != 0 or len(set(self.levels)) != len(self.levels):
            raise ConfigError("bandit levels must be distinct and start at 0")
        if name:
            self.name = name
        self.arms = len(self.levels) ** len(self.engines)
        self.stats = [ArmStats() for _ in range(self.arms)]
        self.history = []
        self.filter = RecentFilter()
        self._rng = component_rng(seed, "bandit")
        self._top = max(self.levels)
        self._degrees = None
        self._demands = 0
        self._reward = 0

    def arm_degrees(self, arm):
        base = len(self.levels)
        degrees = []
        for _ in self.engines:
            arm, digit = divmod(arm, base)
            degrees.append(self.levels[digit])
        return degrees

    def _begin_epoch(self):
        arm = bandit_select_arm(self.stats, len(self.history) + 1, self.config, self._rng)
        self.history.append(arm)
        self._degrees = self.arm_degrees(arm)
        logger.debug("bandit epoch %d arm %d degrees %s", len(self.history), arm, self._degrees)

    def _end_epoch(self):
        self.stats[self.history[-1]].update(self._reward)
        self._degrees = None
        self._demands = 0
        self._reward = 0

    def feedback(self, record, outcome):
        if outcome.level == L1 or outcome.covered != NOT_PREFETCHED:
            self._reward += 1

    def step(self, record):
        if self._degrees is None:
            self._begin_epoch()
        requests = []
        for index, (engine, degree) in enumerate(zip(self.engines, self._degrees)):
            candidates = engine.train(record, self._top).candidates
            if degree:
                requests.extend(self.filter.requests(candidates[:degree], index, record.pc))
        self._demands += 1
        if self._demands >= self.config.epoch_len:
            self._end_epoch()
        return requests

    def table_bits(self):
        return 8 * extended_bandit_storage_bytes(len(self.levels), len(self.engines))

    def describe(self):
        info = super().describe()
        info["bandit"] = {"arms": self.arms, "epochs": len(self.history), "table_bits": self.table_bits()}
        return info


def extended_levels(conservative_degree=3, max_level=5):
    """0, c and every aggressive degree c+1..c+M+1: M+3 levels."""
    return (0,) + tuple(range(conservative_degree, conservative_degree + max_level + 2))
