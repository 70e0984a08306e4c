""" Interface shared by Alecto and the baseline selection schemes """
from typing import NamedTuple

from model.cache import L1
from model.hashing import log2_exact, pc_hash


class PrefetchRequest(NamedTuple):
    """A prefetch that survived selection and filtering, headed for the cache."""
    block: int
    level: str
    source: int
    trigger_pc: int


class Selector:
    """
    Selector

    Owns an ordered list of engines and decides, per demand, which engines
    train and which of their candidates go downstream.

    Attributes:
        name (str): selector name as used in configs and reports.
        engines (list[PrefetchEngine]): engines in priority/lookup order.
    """
    name = None

    def __init__(self, engines):
        self.engines = list(engines)

    @property
    def engine_names(self):
        return [e.name for e in self.engines]

    def feedback(self, record, outcome):
        """Observe how the cache served `record` before step() runs."""

    def step(self, record):
        """Return the PrefetchRequests issued in response to `record`."""
        raise NotImplementedError

    def storage_bits(self):
        """Alecto table budget in bits; None for schemes without one."""
        return None

    def filtered_duplicates(self):
        duplicates = getattr(self, "filter", None)
        return duplicates.filtered if duplicates is not None else 0

    def describe(self):
        return {"selector": self.name, "engines": self.engine_names}


class RecentFilter:
    """
    RecentFilter

    Direct-mapped record of recently issued blocks, indexed and tagged like
    the Sandbox table but without PC information. A block whose live entry
    matches is dropped.
    """

    def __init__(self, entries=512, tag_bits=6):
        self.entries = entries
        self.tag_bits = tag_bits
        self.index_bits = log2_exact(entries)
        self._tags = [None] * entries
        self.filtered = 0

    def slot(self, block):
        return block & (self.entries - 1), pc_hash(block >> self.index_bits, self.tag_bits)

    def admit(self, block):
        index, tag = self.slot(block)
        if self._tags[index] == tag:
            self.filtered += 1
            return False
        self._tags[index] = tag
        return True

    def requests(self, blocks, source, pc, level=L1):
        return [PrefetchRequest(b, level, source, pc) for b in blocks if self.admit(b)]
