""" Trace-driven run loop joining the cache hierarchy, a shadow cache and a selector """
import logging

from model.cache import L1_DEFAULT, L2_DEFAULT, MEMORY_LATENCY_DEFAULT, CacheHierarchy, ShadowCache
from model.metrics import RunCounters, finalize
from model.trace import LINE_SHIFT

logger = logging.getLogger(__name__)


class Simulator:
    """
    Simulator

    For each demand: serve it from the real hierarchy, replay it on the
    shadow cache to classify coverage, report the outcome to the selector,
    then install whatever prefetches the selector issues.

    Attributes:
        cache (CacheHierarchy): the hierarchy receiving prefetches.
        shadow (ShadowCache): L1 twin without prefetching.
        counters (RunCounters): tallies for finalize().
    """

    def __init__(self, selector, l1=L1_DEFAULT, l2=L2_DEFAULT, memory_latency=MEMORY_LATENCY_DEFAULT):
        self.selector = selector
        self.cache = CacheHierarchy(l1, l2, memory_latency)
        self.shadow = ShadowCache(l1)
        self.counters = RunCounters(len(selector.engines))

    def access(self, record):
        """Simulate one demand; returns its AccessOutcome."""
        counters = self.counters
        counters.demands += 1
        outcome = self.cache.access_demand(record.addr, record.cycle)
        if not self.shadow.access(record.addr):
            counters.count_shadow_miss(outcome.covered)
        self.selector.feedback(record, outcome)
        for request in self.selector.step(record):
            if self.cache.install_prefetch(request.block << LINE_SHIFT, request.level, record.cycle,
                                           request.source, request.trigger_pc):
                counters.issued[request.source] += 1
        return outcome

    def run(self, records, trace="", config_digest=""):
        for record in records:
            self.access(record)
        return self.report(trace, config_digest)

    def report(self, trace="", config_digest=""):
        """Drain resident prefetches and finalize. Call once, at the end of the run."""
        drained = self.cache.drain()
        logger.debug("drained %d unused prefetches", drained)
        return finalize(self.counters, self.selector, self.cache.useful, self.cache.unused,
                        trace=trace, config_digest=config_digest)
