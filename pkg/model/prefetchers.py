""" Prefetch engines: a shared training interface plus stream, stride, spatial and temporal tables """
import logging
from collections import OrderedDict
from dataclasses import asdict, dataclass
from typing import List, NamedTuple

from model.errors import ConfigError
from model.hashing import log2_exact, pc_hash

logger = logging.getLogger(__name__)

BLOCK_LIMIT = 1 << 58  # 64-bit byte addresses / 64-byte lines
REGION_SHIFT = 6  # 4KB regions of 64 lines
REGION_LINES = 1 << REGION_SHIFT
TAG_BITS = 9


class TrainOutcome(NamedTuple):
    """Blocks predicted by one train() call, nearest first."""
    candidates: List[int]
    table_hit: bool


@dataclass
class EngineStats:
    """
    EngineStats

    Attributes:
        train_count (int): train() calls.
        table_lookups (int): indexed-table lookups made while training.
        table_misses (int): lookups that found an empty slot or a foreign tag.
    """
    train_count: int = 0
    table_lookups: int = 0
    table_misses: int = 0

    def read(self):
        return asdict(self)


def _index_and_tag(key, entries):
    bits = log2_exact(entries)
    return pc_hash(key, bits), pc_hash(key >> bits, TAG_BITS)


def _forward(block, deltas):
    """Blocks at `block + d` for each delta, dropping any that leave the address space."""
    return [block + d for d in deltas if 0 <= block + d < BLOCK_LIMIT]


class PrefetchEngine:
    """
    PrefetchEngine

    Base class for every engine. Subclasses implement `_train`, which updates
    their tables and returns (candidates, table_hit), and `has_prediction`,
    which must answer without touching tables or stats.

    Attributes:
        name (str): registry key.
        max_degree (int | None): hard cap on candidates per train() call.
        stats (EngineStats): counters since the last reset_stats().
    """
    name = None
    max_degree = None

    def __init__(self):
        self.stats = EngineStats()

    def train(self, record, degree):
        if degree < 0:
            raise ValueError("degree must be non-negative")
        if self.max_degree is not None:
            degree = min(degree, self.max_degree)
        self.stats.train_count += 1
        candidates, table_hit = self._train(record, degree)
        self.stats.table_lookups += 1
        if not table_hit:
            self.stats.table_misses += 1
        return TrainOutcome(candidates[:degree], table_hit)

    def _train(self, record, degree):
        raise NotImplementedError

    def has_prediction(self, record):
        raise NotImplementedError

    def get_stats(self):
        return self.stats

    def reset_stats(self):
        """Zero the counters and return the previous ones; tables are untouched."""
        previous, self.stats = self.stats, EngineStats()
        return previous


""" Stride """


class _StrideEntry:
    __slots__ = ("tag", "last_block", "stride", "confidence")

    def __init__(self, tag, last_block):
        self.tag = tag
        self.last_block = last_block
        self.stride = 0
        self.confidence = 0


class StrideEngine(PrefetchEngine):
    """Per-PC constant-stride detector with a 2-bit confidence counter."""
    name = "stride"

    def __init__(self, entries=64, threshold=2):
        super().__init__()
        self.entries = entries
        self.threshold = threshold
        self._table = [None] * entries
        log2_exact(entries)

    def _lookup(self, pc):
        index, tag = _index_and_tag(pc, self.entries)
        entry = self._table[index]
        hit = entry is not None and entry.tag == tag
        return index, tag, entry if hit else None

    @staticmethod
    def _next_state(entry, block):
        delta = block - entry.last_block
        if delta == 0:
            return entry.stride, entry.confidence
        if delta == entry.stride:
            return entry.stride, min(3, entry.confidence + 1)
        if entry.confidence >= 2:
            return entry.stride, entry.confidence - 1
        return delta, 1

    def _candidates(self, block, stride, confidence, degree):
        if confidence < self.threshold or stride == 0:
            return []
        return _forward(block, [k * stride for k in range(1, degree + 1)])

    def _train(self, record, degree):
        block = record.block
        index, tag, entry = self._lookup(record.pc)
        if entry is None:
            self._table[index] = _StrideEntry(tag, block)
            return [], False
        entry.stride, entry.confidence = self._next_state(entry, block)
        entry.last_block = block
        return self._candidates(block, entry.stride, entry.confidence, degree), True

    def has_prediction(self, record):
        _, _, entry = self._lookup(record.pc)
        if entry is None:
            return False
        stride, confidence = self._next_state(entry, record.block)
        return bool(self._candidates(record.block, stride, confidence, 1))


""" Stream """


class _StreamEntry:
    __slots__ = ("last_block", "direction", "count")

    def __init__(self, last_block):
        self.last_block = last_block
        self.direction = 0
        self.count = 1


class StreamEngine(PrefetchEngine):
    """
    StreamEngine

    Region stream table: an LRU set of 4KB regions, each tracking the
    direction of its most recent accesses. Once `trigger` monotonic
    accesses are seen in a region, the next `degree` lines in that
    direction are predicted.
    """
    name = "stream"

    def __init__(self, entries=8, trigger=3):
        super().__init__()
        self.entries = entries
        self.trigger = trigger
        self._regions = OrderedDict()

    @staticmethod
    def _next_state(entry, block):
        delta = block - entry.last_block
        if delta == 0:
            return entry.direction, entry.count
        direction = 1 if delta > 0 else -1
        if direction == entry.direction:
            return direction, entry.count + 1
        return direction, 2

    def _candidates(self, block, direction, count, degree):
        if count < self.trigger or direction == 0:
            return []
        return _forward(block, [k * direction for k in range(1, degree + 1)])

    def _train(self, record, degree):
        block = record.block
        region = block >> REGION_SHIFT
        entry = self._regions.get(region)
        if entry is None:
            if len(self._regions) >= self.entries:
                self._regions.popitem(last=False)
            self._regions[region] = _StreamEntry(block)
            return [], False
        self._regions.move_to_end(region)
        entry.direction, entry.count = self._next_state(entry, block)
        entry.last_block = block
        return self._candidates(block, entry.direction, entry.count, degree), True

    def has_prediction(self, record):
        entry = self._regions.get(record.block >> REGION_SHIFT)
        if entry is None:
            return False
        direction, count = self._next_state(entry, record.block)
        return bool(self._candidates(record.block, direction, count, 1))


""" Spatial """


class _Accumulation:
    __slots__ = ("pc", "trigger_offset", "bitmap", "predicted")

    def __init__(self, pc, trigger_offset, predicted):
        self.pc = pc
        self.trigger_offset = trigger_offset
        self.bitmap = 1 << trigger_offset
        self.predicted = predicted


class SpatialEngine(PrefetchEngine):
    """
    SpatialEngine

    Footprint learner over 4KB regions. The first access to a region is its
    trigger; the accumulation table records the offsets touched afterwards.
    When an accumulation ends (the same PC triggers a new region, or LRU
    eviction) its bitmap is written to the pattern history table under
    (pc XOR trigger offset). A trigger whose key hits the history table
    predicts the stored footprint for the new region.
    """
    name = "spatial"

    def __init__(self, accumulation_entries=16, history_entries=64):
        super().__init__()
        self.accumulation_entries = accumulation_entries
        self.history_entries = history_entries
        self._active = OrderedDict()
        self._latest = {}
        self._history = [None] * history_entries
        log2_exact(history_entries)

    def _history_slot(self, pc, offset):
        return _index_and_tag(pc ^ offset, self.history_entries)

    def _ending(self, pc):
        """Regions whose accumulation ends when `pc` triggers a new region, oldest commit first."""
        ending = []
        latest = self._latest.get(pc)
        if latest in self._active:
            ending.append(latest)
        if len(self._active) - len(ending) >= self.accumulation_entries:
            ending.append(next(r for r in self._active if r not in ending))
        return ending

    def _commit(self, region):
        entry = self._active.pop(region)
        index, tag = self._history_slot(entry.pc, entry.trigger_offset)
        self._history[index] = (tag, entry.bitmap)
        if self._latest.get(entry.pc) == region:
            del self._latest[entry.pc]

    @staticmethod
    def _candidates(region, offset, remaining, degree):
        offsets = [o for o in range(REGION_LINES) if remaining >> o & 1]
        offsets.sort(key=lambda o: (abs(o - offset), o))
        base = region << REGION_SHIFT
        return [base + o for o in offsets[:degree]]

    def _train(self, record, degree):
        block = record.block
        region, offset = block >> REGION_SHIFT, block & (REGION_LINES - 1)
        entry = self._active.get(region)
        if entry is not None:
            self._active.move_to_end(region)
            entry.bitmap |= 1 << offset
            table_hit = True
        else:
            for ending in self._ending(record.pc):
                self._commit(ending)
            index, tag = self._history_slot(record.pc, offset)
            stored = self._history[index]
            table_hit = stored is not None and stored[0] == tag
            entry = _Accumulation(record.pc, offset, stored[1] if table_hit else 0)
            self._active[region] = entry
            self._latest[record.pc] = region
        remaining = entry.predicted & ~entry.bitmap
        return self._candidates(region, offset, remaining, degree), table_hit

    def has_prediction(self, record):
        block = record.block
        region, offset = block >> REGION_SHIFT, block & (REGION_LINES - 1)
        entry = self._active.get(region)
        if entry is not None:
            return bool(entry.predicted & ~(entry.bitmap | 1 << offset))
        index, tag = self._history_slot(record.pc, offset)
        stored = self._history[index]
        for ending in self._ending(record.pc):
            pending = self._active[ending]
            if self._history_slot(pending.pc, pending.trigger_offset)[0] == index:
                stored = (self._history_slot(pending.pc, pending.trigger_offset)[1], pending.bitmap)
        if stored is None or stored[0] != tag:
            return False
        return bool(stored[1] & ~(1 << offset))


""" Temporal """


class TemporalEngine(PrefetchEngine):
    """Address-correlation table: each block remembers the block its PC touched next."""
    name = "temporal"
    max_degree = 1

    def __init__(self, entries=4096, pc_entries=64):
        super().__init__()
        self.entries = entries
        self.pc_entries = pc_entries
        self._last = [None] * pc_entries
        self._next = [None] * entries
        log2_exact(entries)
        log2_exact(pc_entries)

    def _last_block(self, pc):
        index, tag = _index_and_tag(pc, self.pc_entries)
        slot = self._last[index]
        return index, tag, slot[1] if slot is not None and slot[0] == tag else None

    def _successor(self, block, table):
        index, tag = _index_and_tag(block, self.entries)
        slot = table[index]
        return slot[1] if slot is not None and slot[0] == tag else None

    def _train(self, record, degree):
        block = record.block
        index, tag, last = self._last_block(record.pc)
        if last is not None and last != block:
            corr_index, corr_tag = _index_and_tag(last, self.entries)
            self._next[corr_index] = (corr_tag, block)
        self._last[index] = (tag, block)
        successor = self._successor(block, self._next)
        if successor is None:
            return [], False
        return ([successor] if degree and successor != block else []), True

    def has_prediction(self, record):
        block = record.block
        _, _, last = self._last_block(record.pc)
        index, tag = _index_and_tag(block, self.entries)
        slot = self._next[index]
        if last is not None and last != block:
            last_index, last_tag = _index_and_tag(last, self.entries)
            if last_index == index:
                slot = (last_tag, block)
        return slot is not None and slot[0] == tag and slot[1] != block


ENGINE_TYPES = {engine.name: engine for engine in (StreamEngine, StrideEngine, SpatialEngine, TemporalEngine)}
ENGINE_ORDER = ("stream", "stride", "spatial", "temporal")
DEFAULT_ENGINES = ("stream", "stride", "spatial")


def build_engines(names):
    """Instantiate engines by name, preserving order."""
    if not names:
        raise ConfigError("at least one prefetch engine is required")
    if len(set(names)) != len(names):
        raise ConfigError("engine names must be distinct")
    unknown = [n for n in names if n not in ENGINE_TYPES]
    if unknown:
        raise ConfigError(f"unknown prefetch engine(s): {', '.join(unknown)}")
    return [ENGINE_TYPES[n]() for n in names]
