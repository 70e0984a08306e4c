""" Two-level set-associative cache with prefetch-fill timing and a shadow no-prefetch cache """
import logging
from collections import Counter, OrderedDict
from dataclasses import dataclass

from model.errors import ConfigError
from model.hashing import log2_exact
from model.trace import LINE_BYTES, LINE_SHIFT

logger = logging.getLogger(__name__)

L1 = "L1"
L2 = "L2"
MEM = "MEM"

NOT_PREFETCHED = "not_prefetched"
TIMELY = "timely"
UNTIMELY = "untimely"


@dataclass(frozen=True)
class CacheConfig:
    """
    CacheConfig

    Attributes:
        size_bytes (int): capacity.
        ways (int): associativity.
        line_bytes (int): line size, fixed at 64.
        hit_latency (int): round-trip hit latency in cycles.
    """
    size_bytes: int
    ways: int
    line_bytes: int = LINE_BYTES
    hit_latency: int = 4

    @property
    def sets(self):
        return self.size_bytes // (self.ways * self.line_bytes)

    def validate(self):
        if self.line_bytes != LINE_BYTES:
            raise ConfigError(f"line size must be {LINE_BYTES} bytes")
        if self.ways < 1 or self.size_bytes < self.ways * self.line_bytes:
            raise ConfigError("cache must hold at least one set")
        if self.size_bytes % (self.ways * self.line_bytes):
            raise ConfigError("cache size must be divisible by ways x line size")
        try:
            log2_exact(self.sets)
        except ValueError:
            raise ConfigError(f"set count {self.sets} is not a power of two") from None
        if self.hit_latency < 0:
            raise ConfigError("hit latency must be non-negative")
        return self


L1_DEFAULT = CacheConfig(size_bytes=32 * 1024, ways=8, hit_latency=4)
L2_DEFAULT = CacheConfig(size_bytes=256 * 1024, ways=8, hit_latency=15)
MEMORY_LATENCY_DEFAULT = 200


class CacheLine:
    """
    CacheLine

    Attributes:
        tag (int): block address bits above the set index.
        valid (bool): resident; evicted lines are dropped from their set.
        fill_complete_cycle (int): cycle the data arrives.
        prefetched (bool): installed by a prefetch.
        prefetch_source (int | None): engine index, set iff prefetched.
        trigger_pc (int | None): PC whose training produced the prefetch.
        used (bool): a demand has consumed this prefetch.
    """
    __slots__ = ("tag", "valid", "fill_complete_cycle", "prefetched", "prefetch_source", "trigger_pc", "used")

    def __init__(self, tag, fill_complete_cycle, prefetch_source=None, trigger_pc=None):
        self.tag = tag
        self.valid = True
        self.fill_complete_cycle = fill_complete_cycle
        self.prefetched = prefetch_source is not None
        self.prefetch_source = prefetch_source
        self.trigger_pc = trigger_pc
        self.used = False

    @property
    def unused_prefetch(self):
        return self.prefetched and not self.used


@dataclass(frozen=True)
class AccessOutcome:
    """
    AccessOutcome

    Attributes:
        level (str): L1, L2 or MEM, where the demand was served.
        latency (int): cycles until the data reached the core.
        covered (str): not_prefetched, timely or untimely.
        evicted_unused_prefetches (int): unused prefetched lines this fill displaced.
    """
    level: str
    latency: int
    covered: str
    evicted_unused_prefetches: int


class CacheLevel:
    """Set-associative LRU array keyed by block address."""

    def __init__(self, config, name):
        self.config = config.validate()
        self.name = name
        self.set_bits = log2_exact(config.sets)
        self._set_mask = config.sets - 1
        self._sets = [OrderedDict() for _ in range(config.sets)]

    def _set(self, block):
        return self._sets[block & self._set_mask]

    def lookup(self, block, touch=True):
        lines = self._set(block)
        line = lines.get(block)
        if line is not None and touch:
            lines.move_to_end(block)
        return line

    def contains(self, block):
        return block in self._set(block)

    def insert(self, block, line):
        """Install `line` as MRU; returns the LRU victim or None."""
        lines = self._set(block)
        victim = None
        if len(lines) >= self.config.ways:
            _, victim = lines.popitem(last=False)
            victim.valid = False
        lines[block] = line
        return victim

    def lines(self):
        for lines in self._sets:
            yield from lines.values()

    def tag_of(self, block):
        return block >> self.set_bits


class CacheHierarchy:
    """
    CacheHierarchy

    L1D + L2 with a flat memory latency. Demand misses fill both levels
    (mostly inclusive, no back-invalidation). Prefetched lines remember
    their source engine so usefulness is credited on the first demand hit
    and unused prefetches are counted when evicted or drained.

    Attributes:
        useful (Counter): engine index -> prefetched lines consumed by a demand.
        unused (Counter): engine index -> prefetched lines evicted or drained unused.
    """

    def __init__(self, l1=L1_DEFAULT, l2=L2_DEFAULT, memory_latency=MEMORY_LATENCY_DEFAULT):
        if memory_latency < 0:
            raise ConfigError("memory latency must be non-negative")
        self.l1 = CacheLevel(l1, L1)
        self.l2 = CacheLevel(l2, L2)
        self.memory_latency = memory_latency
        self.useful = Counter()
        self.unused = Counter()

    @property
    def full_miss_latency(self):
        return self.l1.config.hit_latency + self.l2.config.hit_latency + self.memory_latency

    def _consume(self, line, cycle, hit_latency):
        """Classify a demand hit on `line`; returns (covered, latency)."""
        wait = max(0, line.fill_complete_cycle - cycle)
        if not line.unused_prefetch:
            return NOT_PREFETCHED, hit_latency + wait
        if hit_latency + wait >= self.full_miss_latency:
            # the prefetch saved nothing over a demand miss: settle it as unused
            self.unused[line.prefetch_source] += 1
            line.prefetched = False
            line.prefetch_source = None
            return NOT_PREFETCHED, self.full_miss_latency
        line.used = True
        self.useful[line.prefetch_source] += 1
        return (TIMELY if wait == 0 else UNTIMELY), hit_latency + wait

    def _fill(self, level, block, line):
        victim = level.insert(block, line)
        if victim is not None and victim.unused_prefetch:
            self.unused[victim.prefetch_source] += 1
            return 1
        return 0

    def access_demand(self, addr, cycle):
        """Serve one demand access; see AccessOutcome for the result fields."""
        block = addr >> LINE_SHIFT
        l1_latency = self.l1.config.hit_latency
        line = self.l1.lookup(block)
        if line is not None:
            covered, latency = self._consume(line, cycle, l1_latency)
            return AccessOutcome(L1, latency, covered, 0)

        evicted = 0
        line = self.l2.lookup(block)
        if line is not None:
            covered, latency = self._consume(line, cycle, l1_latency + self.l2.config.hit_latency)
            level = L2
        else:
            covered = NOT_PREFETCHED
            latency = self.full_miss_latency
            level = MEM
            evicted += self._fill(self.l2, block, CacheLine(self.l2.tag_of(block), cycle + latency - l1_latency))
        evicted += self._fill(self.l1, block, CacheLine(self.l1.tag_of(block), cycle + latency - l1_latency))
        return AccessOutcome(level, latency, covered, evicted)

    def install_prefetch(self, addr, level, cycle, source, trigger_pc):
        """Install a prefetched block at L1 or L2.

        Returns False without side effects when the block is already valid
        at the target level or above.
        """
        block = addr >> LINE_SHIFT
        if level == L1:
            if self.l1.contains(block):
                return False
            fill = cycle + self.l2.config.hit_latency
            if not self.l2.contains(block):
                fill += self.memory_latency
                self._fill(self.l2, block, CacheLine(self.l2.tag_of(block), fill))
            self._fill(self.l1, block, CacheLine(self.l1.tag_of(block), fill, source, trigger_pc))
            return True
        if level == L2:
            if self.l1.contains(block) or self.l2.contains(block):
                return False
            fill = cycle + self.memory_latency
            self._fill(self.l2, block, CacheLine(self.l2.tag_of(block), fill, source, trigger_pc))
            return True
        raise ValueError(f"prefetch target must be {L1} or {L2}, got {level}")

    def drain(self):
        """Count every resident unused prefetch as unused; returns how many."""
        drained = 0
        for level in (self.l1, self.l2):
            for line in level.lines():
                if line.unused_prefetch:
                    self.unused[line.prefetch_source] += 1
                    line.prefetched = False
                    line.prefetch_source = None
                    drained += 1
        return drained


class ShadowCache:
    """An L1 twin that never receives prefetches; its misses are the coverage denominator."""

    def __init__(self, config=L1_DEFAULT):
        self.level = CacheLevel(config, "shadow")
        self.misses = 0
        self.accesses = 0

    def access(self, addr):
        block = addr >> LINE_SHIFT
        self.accesses += 1
        if self.level.lookup(block) is not None:
            return True
        self.misses += 1
        self.level.insert(block, CacheLine(self.level.tag_of(block), 0))
        return False
