""" Alecto: per-PC prefetcher selection driven by allocation, sample and sandbox tables """
import logging
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

from model.cache import L1, L2
from model.errors import ConfigError
from model.hashing import log2_exact, pc_hash
from model.selector import PrefetchRequest, Selector

logger = logging.getLogger(__name__)

TAG_BITS = 9
SANDBOX_TAG_BITS = 6
COUNTER_BITS = 8
PUBLISHED_DEAD_BITS = 7


@dataclass(frozen=True)
class AlectoConfig:
    """
    AlectoConfig

    Attributes:
        prefetchers (int): number of engines under selection.
        max_level (int): highest aggressive substate.
        cooldown (int): epochs a blocked engine waits before it may be reconsidered.
        conservative_degree (int): degree while unidentified; also the L1 quota.
        proficiency (float): accuracy above which an engine is promoted.
        deficiency (float): accuracy below which an engine is demoted or blocked.
        epoch_demands (int): demands per PC between state updates.
        dead_threshold (int): consecutive empty rounds in an aggressive state before a reset.
        min_issued (int): issued prefetches needed before accuracy is judged.
        temporal_index (int | None): position of the temporal engine, if any.
        fixed_degree (bool): aggressive engines always use the top degree.
        alloc_entries (int): allocation table size.
        sample_entries (int): sample table size.
        sandbox_entries (int): sandbox table size.
    """
    prefetchers: int = 3
    max_level: int = 5
    cooldown: int = 8
    conservative_degree: int = 3
    proficiency: float = 0.75
    deficiency: float = 0.05
    epoch_demands: int = 100
    dead_threshold: int = 150
    min_issued: int = 8
    temporal_index: Optional[int] = None
    fixed_degree: bool = False
    alloc_entries: int = 64
    sample_entries: int = 64
    sandbox_entries: int = 512

    @property
    def dead_bits(self):
        return max(PUBLISHED_DEAD_BITS, self.dead_threshold.bit_length())

    @property
    def state_count(self):
        return 1 + (self.max_level + 1) + (self.cooldown + 1)

    def validate(self):
        if self.prefetchers < 1:
            raise ConfigError("at least one prefetcher is required")
        if not 0 <= self.deficiency < self.proficiency <= 1:
            raise ConfigError("boundaries must satisfy 0 <= deficiency < proficiency <= 1")
        if self.max_level < 0 or self.cooldown < 1:
            raise ConfigError("max_level must be >= 0 and cooldown >= 1")
        if self.conservative_degree < 1:
            raise ConfigError("conservative_degree must be at least 1")
        if not 1 <= self.epoch_demands < self.dead_threshold:
            raise ConfigError("epoch_demands must be positive and below dead_threshold")
        if self.epoch_demands >= 1 << COUNTER_BITS:
            raise ConfigError(f"epoch_demands must fit the {COUNTER_BITS}-bit demand counter")
        if self.min_issued < 1:
            raise ConfigError("min_issued must be at least 1")
        if self.temporal_index is not None and not 0 <= self.temporal_index < self.prefetchers:
            raise ConfigError("temporal_index is out of range")
        for name in ("alloc_entries", "sample_entries", "sandbox_entries"):
            try:
                log2_exact(getattr(self, name))
            except ValueError:
                raise ConfigError(f"{name} must be a power of two") from None
        return self


@dataclass(frozen=True)
class PrefState:
    """One engine's state for one PC: UI, IA_m (0..max_level) or IB_n (-cooldown..0)."""
    kind: str
    level: int = 0

    def __str__(self):
        return self.kind if self.kind == "UI" else f"{self.kind}_{self.level}"

    @property
    def aggressive(self):
        return self.kind == "IA"

    @property
    def blocked(self):
        return self.kind == "IB"

    @classmethod
    def parse(cls, text):
        if text == "UI":
            return UI
        kind, _, level = text.partition("_")
        if kind not in ("IA", "IB") or not level:
            raise ValueError(f"not a state: {text}")
        return cls(kind, int(level))

    def encode(self, config):
        """Dense code in 0..state_count-1."""
        if self.kind == "UI":
            return 0
        if self.kind == "IA":
            return 1 + self.level
        return 2 + config.max_level + config.cooldown + self.level


UI = PrefState("UI")


def aggressive(m):
    return PrefState("IA", m)


def blocked(n):
    return PrefState("IB", n)


class Directive(NamedTuple):
    """What one engine may do for the current demand."""
    train: bool
    degree: int
    l1_quota: int
    l2_quota: int


class EpochEvent(NamedTuple):
    demand_index: int
    pc: int
    before: tuple
    after: tuple
    accuracies: tuple


class AllocationEntry:
    __slots__ = ("tag", "states")

    def __init__(self, tag, prefetchers):
        self.tag = tag
        self.states = [UI] * prefetchers


class SampleEntry:
    __slots__ = ("tag", "issued", "confirmed", "deads", "demands", "last_generated")

    def __init__(self, tag, prefetchers):
        self.tag = tag
        self.issued = [0] * prefetchers
        self.confirmed = [0] * prefetchers
        self.deads = 0
        self.demands = 0
        self.last_generated = None


class SandboxEntry:
    __slots__ = ("tag", "issued_by", "pc_hash")

    def __init__(self, tag, issued_by, pc_hash_value):
        self.tag = tag
        self.issued_by = issued_by
        self.pc_hash = pc_hash_value


def _saturating_add(value, bits):
    return min(value + 1, (1 << bits) - 1)


def accuracy_of(issued, confirmed, config):
    """confirmed/issued clamped to 1, or None when too few prefetches were issued to judge."""
    if issued < config.min_issued:
        return None
    return min(1.0, confirmed / issued)


def epoch_update(states, accuracies, config):
    """Next states for one PC at an epoch boundary.

    Blocked engines cool down unconditionally. Aggressive engines step up on
    high accuracy and down (or out, from IA_0) on low accuracy. Unidentified
    engines above the proficiency boundary become promotion candidates; when
    any exist they go aggressive and every other unidentified engine is
    parked at IB_0, except that a temporal candidate yields to non-temporal
    ones. If nothing is aggressive afterwards, IB_0 engines return to UI.
    """
    new = list(states)
    candidates = []
    for i, (state, accuracy) in enumerate(zip(states, accuracies)):
        if state.blocked:
            if state.level < 0:
                new[i] = blocked(state.level + 1)
        elif state.aggressive:
            m = state.level
            if accuracy is None:
                continue
            if accuracy > config.proficiency:
                new[i] = aggressive(min(m + 1, config.max_level))
            elif accuracy < config.deficiency:
                new[i] = aggressive(m - 1) if m > 0 else UI
            elif m == 0:
                new[i] = UI
        elif accuracy is not None:
            if accuracy < config.deficiency:
                new[i] = blocked(-config.cooldown)
            elif accuracy > config.proficiency:
                candidates.append(i)

    if candidates:
        temporal = config.temporal_index
        if len(candidates) >= 2 and temporal in candidates:
            candidates.remove(temporal)
            new[temporal] = blocked(0)
        for i in candidates:
            new[i] = aggressive(0)
        new = [blocked(0) if s == UI else s for s in new]

    if not any(s.aggressive for s in new):
        new = [UI if s == blocked(0) else s for s in new]
    return new


""" Storage accounting """


class StorageBits(NamedTuple):
    allocation: int
    sample: int
    sandbox: int
    total: int
    total_excluding_sandbox: int


def storage_bits(prefetchers):
    """Published hardware budget of the three tables, in bits."""
    if prefetchers < 1:
        raise ConfigError("P must be at least 1")
    p = prefetchers
    allocation = 640 + 256 * p
    sample = 1600 + 1024 * p
    sandbox = 3072 + 512 * p
    return StorageBits(allocation, sample, sandbox, allocation + sample + sandbox, allocation + sample)


def implementation_storage_bits(config):
    """Field-by-field recount of the tables as implemented here.

    Differs from storage_bits by the sandbox pc_hash field and by any
    widening of the dead counter beyond its published 7 bits.
    """
    p = config.prefetchers
    state_bits = max(1, (config.state_count - 1).bit_length())
    allocation = config.alloc_entries * (1 + TAG_BITS + state_bits * p)
    sample = config.sample_entries * (1 + TAG_BITS + 2 * COUNTER_BITS * p + config.dead_bits + COUNTER_BITS)
    sandbox = config.sandbox_entries * (SANDBOX_TAG_BITS + p + TAG_BITS)
    return StorageBits(allocation, sample, sandbox, allocation + sample + sandbox, allocation + sample)


def storage_report(prefetchers):
    """JSON-ready storage summary for P prefetchers."""
    bits = storage_bits(prefetchers)
    recount = implementation_storage_bits(AlectoConfig(prefetchers=prefetchers))
    return {
        "P": prefetchers,
        "allocation_bits": bits.allocation,
        "sample_bits": bits.sample,
        "sandbox_bits": bits.sandbox,
        "total_bits": bits.total,
        "total_excluding_sandbox_bits": bits.total_excluding_sandbox,
        "total_bytes": bits.total // 8,
        "total_kib": round(bits.total / 8 / 1024, 2),
        "total_excluding_sandbox_bytes": bits.total_excluding_sandbox // 8,
        "implementation_total_bits": recount.total,
    }


""" Tables """


class AlectoTables:
    """
    AlectoTables

    The allocation, sample and sandbox tables plus the per-demand dataflow
    that ties them together. One instance serves one simulation.

    Attributes:
        config (AlectoConfig): validated parameters.
        events (list[EpochEvent]): every epoch boundary in order.
        filtered (int): prefetch candidates dropped by the sandbox.
        dead_resets (int): times the dead counter reset a PC to all-UI.
    """

    def __init__(self, config):
        self.config = config.validate()
        p = config.prefetchers
        self._alloc_bits = log2_exact(config.alloc_entries)
        self._sample_bits = log2_exact(config.sample_entries)
        self._sandbox_bits = log2_exact(config.sandbox_entries)
        self._allocation = [None] * config.alloc_entries
        self._sample = [None] * config.sample_entries
        self._sandbox = [None] * config.sandbox_entries
        self._p = p
        self.events = []
        self.filtered = 0
        self.dead_resets = 0
        self.demand_index = 0

    def _slot(self, pc, bits):
        return pc_hash(pc, bits), pc_hash(pc >> bits, TAG_BITS)

    def _allocation_entry(self, pc):
        index, tag = self._slot(pc, self._alloc_bits)
        entry = self._allocation[index]
        if entry is None or entry.tag != tag:
            entry = self._allocation[index] = AllocationEntry(tag, self._p)
        return entry

    def _sample_entry(self, pc):
        index, tag = self._slot(pc, self._sample_bits)
        entry = self._sample[index]
        if entry is None or entry.tag != tag:
            entry = self._sample[index] = SampleEntry(tag, self._p)
        return entry

    def _sandbox_slot(self, block):
        index = block & (self.config.sandbox_entries - 1)
        return index, pc_hash(block >> self._sandbox_bits, SANDBOX_TAG_BITS)

    def sandbox_entry(self, block):
        """Live sandbox entry whose tag matches `block`, or None."""
        index, tag = self._sandbox_slot(block)
        entry = self._sandbox[index]
        return entry if entry is not None and entry.issued_by and entry.tag == tag else None

    def states_for(self, pc):
        """Current states for `pc` if its allocation entry is resident, else None."""
        index, tag = self._slot(pc, self._alloc_bits)
        entry = self._allocation[index]
        if entry is None or entry.tag != tag:
            return None
        return list(entry.states)

    def directive(self, state, fixed_degree=None):
        """Train flag, degree and L1/L2 split for one engine in `state`.

        `fixed_degree` overrides the configured mode; the sample table always
        accounts against the state-derived (non-fixed) directive.
        """
        c = self.config.conservative_degree
        if state.blocked:
            return Directive(False, 0, 0, 0)
        if state.aggressive:
            fixed = self.config.fixed_degree if fixed_degree is None else fixed_degree
            m = self.config.max_level if fixed else state.level
            degree = c + m + 1
        else:
            degree = c
        l1 = min(degree, c)
        return Directive(True, degree, l1, degree - l1)

    def allocate(self, record, fixed_degree=None):
        entry = self._allocation_entry(record.pc)
        return [self.directive(s, fixed_degree) for s in entry.states]

    def on_prefetch_issued(self, pc, prefetcher, blocks, directive=None):
        """Filter one engine's candidates through the sandbox.

        Returns the (block, level) pairs to send downstream; the first
        l1_quota positions of `blocks` target L1 and the rest L2.
        """
        if not blocks:
            return []
        l1_quota = directive.l1_quota if directive is not None else min(len(blocks), self.config.conservative_degree)
        sample = self._sample_entry(pc)
        bit = 1 << prefetcher
        trigger = pc_hash(pc, TAG_BITS)
        kept = []
        for position, block in enumerate(blocks):
            index, tag = self._sandbox_slot(block)
            entry = self._sandbox[index]
            if entry is not None and entry.issued_by and entry.tag == tag:
                self.filtered += 1
                if entry.issued_by & bit:
                    continue
                entry.issued_by |= bit
            else:
                self._sandbox[index] = SandboxEntry(tag, bit, trigger)
                kept.append((block, L1 if position < l1_quota else L2))
            sample.issued[prefetcher] = _saturating_add(sample.issued[prefetcher], COUNTER_BITS)
        return kept

    def pass_through(self, blocks):
        """Blocks past the accounted degree; dropped when live in the sandbox, never recorded."""
        return [block for block in blocks if self.sandbox_entry(block) is None]

    def record_round(self, pc, generated):
        """Remember how many candidates the trained engines produced for this demand."""
        self._sample_entry(pc).last_generated = generated

    def on_demand_observed(self, record):
        """Confirm, count and possibly close the epoch for `record.pc`; True when an epoch fired."""
        config = self.config
        self.demand_index += 1
        sample = self._sample_entry(record.pc)

        hit = self.sandbox_entry(record.block)
        if hit is not None and hit.pc_hash == pc_hash(record.pc, TAG_BITS):
            for i in range(self._p):
                if hit.issued_by >> i & 1:
                    sample.confirmed[i] = _saturating_add(sample.confirmed[i], COUNTER_BITS)

        alloc = self._allocation_entry(record.pc)
        sample.demands = _saturating_add(sample.demands, COUNTER_BITS)
        fired = False
        if sample.demands >= config.epoch_demands:
            accuracies = tuple(accuracy_of(issued, confirmed, config)
                               for issued, confirmed in zip(sample.issued, sample.confirmed))
            before = tuple(alloc.states)
            alloc.states = epoch_update(alloc.states, accuracies, config)
            self.events.append(EpochEvent(self.demand_index, record.pc, before, tuple(alloc.states), accuracies))
            if logger.isEnabledFor(logging.DEBUG):
                logger.debug("epoch pc=%#x %s -> %s", record.pc,
                             [str(s) for s in before], [str(s) for s in alloc.states])
            sample.demands = 0
            sample.issued = [0] * self._p
            sample.confirmed = [0] * self._p
            fired = True

        if any(s.aggressive for s in alloc.states) and sample.last_generated == 0:
            sample.deads = _saturating_add(sample.deads, config.dead_bits)
        else:
            sample.deads = max(0, sample.deads - 1)
        if sample.deads >= config.dead_threshold:
            logger.debug("dead counter reset for pc=%#x", record.pc)
            alloc.states = [UI] * self._p
            sample.deads = 0
            self.dead_resets += 1
        return fired


class AlectoSelector(Selector):
    """
    AlectoSelector

    Per demand: observe it (confirmation, epoch, dead counter), allocate
    directives for its PC, train only the engines allowed to train with
    their directive degree, then filter each engine's candidates through
    the sandbox.
    """
    name = "alecto"

    def __init__(self, engines, config=None, fixed_degree=False):
        super().__init__(engines)
        names = self.engine_names
        config = replace(config or AlectoConfig(),
                         prefetchers=len(self.engines),
                         temporal_index=names.index("temporal") if "temporal" in names else None,
                         fixed_degree=fixed_degree or (config is not None and config.fixed_degree))
        self.tables = AlectoTables(config)
        if config.fixed_degree:
            self.name = "alecto_fixed_degree"

    @property
    def config(self):
        return self.tables.config

    def step(self, record):
        tables = self.tables
        tables.on_demand_observed(record)
        directives = tables.allocate(record)
        accounted = tables.allocate(record, fixed_degree=False) if self.config.fixed_degree else directives
        requests = []
        generated = 0
        for i, (engine, directive, tracked) in enumerate(zip(self.engines, directives, accounted)):
            if not directive.train:
                continue
            blocks = engine.train(record, directive.degree).candidates[:directive.degree]
            head = blocks[:tracked.degree]
            generated += len(head)
            for block, level in tables.on_prefetch_issued(record.pc, i, head, tracked):
                requests.append(PrefetchRequest(block, level, i, record.pc))
            # fixed-degree surplus goes to L2 outside the sample/sandbox accounting
            for block in tables.pass_through(blocks[tracked.degree:]):
                requests.append(PrefetchRequest(block, L2, i, record.pc))
        tables.record_round(record.pc, generated)
        return requests

    def states_for(self, pc):
        return self.tables.states_for(pc)

    def storage_bits(self):
        return storage_bits(self.config.prefetchers).total

    def filtered_duplicates(self):
        return self.tables.filtered

    def describe(self):
        info = super().describe()
        info["alecto"] = {
            "epochs": len(self.tables.events),
            "dead_resets": self.tables.dead_resets,
            "filtered": self.tables.filtered,
        }
        return info
