from dataclasses import replace

import numpy as np
import pytest

from model.alecto import (UI, AlectoConfig, AlectoSelector, AlectoTables, Directive, PrefState, accuracy_of,
                          aggressive, blocked, epoch_update, implementation_storage_bits, storage_bits,
                          storage_report)
from model.cache import L1, L2
from model.errors import ConfigError
from model.prefetchers import DEFAULT_ENGINES, StreamEngine, StrideEngine, build_engines
from model.trace import DemandRecord

from conftest import records_at

CONFIG = AlectoConfig()
PC = 0x400100


def states(text):
    return [PrefState.parse(s) for s in text.split()]


def demand(block, pc=PC):
    return DemandRecord(0, pc, block * 64)


""" State machine """


@pytest.mark.parametrize("before, accuracies, temporal, after", [
    ("UI UI UI", [0.8, 0.3, 0.1], None, "IA_0 IB_0 IB_0"),
    ("UI UI", [0.9, 0.85], 1, "IA_0 IB_0"),
    ("IA_0 IB_0 IB_0", [0.5, None, None], None, "UI UI UI"),
    ("UI", [0.04], None, "IB_-8"),
    ("IA_2", [0.9], None, "IA_3"),
    ("IA_2", [0.03], None, "IA_1"),
    ("IA_5", [0.9], None, "IA_5"),
    ("IA_0", [0.03], None, "UI"),
    ("IA_0", [0.76], None, "IA_1"),
    ("IA_0", [0.75], None, "UI"),
    ("IA_3", [0.5], None, "IA_3"),
    ("IA_3", [None], None, "IA_3"),
    ("UI", [None], None, "UI"),
    ("UI", [0.5], None, "UI"),
    ("UI", [0.05], None, "UI"),
    ("UI", [0.75], None, "UI"),
    ("UI", [1.0], None, "IA_0"),
    ("IB_-8", [0.9], None, "IB_-7"),
    ("IB_-1", [None], None, "UI"),
    ("IA_1 IB_-1", [None, None], None, "IA_1 IB_0"),
    ("IB_0 IA_2", [0.9, 0.9], None, "IB_0 IA_3"),
    ("IB_0 IA_0", [None, 0.03], None, "UI UI"),
    ("UI UI UI", [0.8, 0.9, None], None, "IA_0 IA_0 IB_0"),
    ("UI UI UI", [0.8, 0.02, 0.5], None, "IA_0 IB_-8 IB_0"),
    ("UI UI UI", [0.8, 0.3, 0.9], 2, "IA_0 IB_0 IB_0"),
    ("UI UI", [0.9, 0.2], 0, "IA_0 IB_0"),
    ("UI UI UI", [0.9, 0.9, 0.9], 1, "IA_0 IB_0 IA_0"),
    ("UI IA_0", [0.95, 0.9], 0, "IA_0 IA_1"),
    ("IA_1 UI", [0.9, 0.8], None, "IA_2 IA_0"),
    ("IA_1 UI", [0.9, 0.5], None, "IA_2 UI"),
    ("IA_1 UI IB_-3", [0.5, 0.01, None], None, "IA_1 IB_-8 IB_-2"),
    ("UI UI", [None, None], None, "UI UI"),
    ("IB_0 UI", [None, 0.9], None, "IB_0 IA_0"),
    ("IB_0 IB_0", [None, None], None, "UI UI"),
    ("IA_0 UI", [0.75, 0.9], None, "IB_0 IA_0"),
    ("IA_4 IA_0", [0.8, 0.02], None, "IA_5 UI"),
    ("IB_-8 UI", [0.0, 0.0], None, "IB_-7 IB_-8"),
    ("IA_5 IB_-2 UI", [0.2, None, 0.3], None, "IA_5 IB_-1 UI"),
    ("IA_0 IB_-1", [0.5, None], None, "UI UI"),
    ("IA_2 IB_-8 UI", [0.04, 0.9, 0.9], None, "IA_1 IB_-7 IA_0"),
    ("UI UI UI", [0.76, 0.74, 0.06], None, "IA_0 IB_0 IB_0"),
])
def test_epoch_update_transitions(before, accuracies, temporal, after):
    config = replace(CONFIG, prefetchers=len(accuracies), temporal_index=temporal)
    assert epoch_update(states(before), accuracies, config) == states(after)


def test_epoch_update_respects_configured_bounds():
    config = replace(CONFIG, prefetchers=1, max_level=2, cooldown=3)
    assert epoch_update(states("IA_2"), [0.9], config) == states("IA_2")
    assert epoch_update(states("UI"), [0.0], config) == states("IB_-3")


def test_epoch_update_stays_in_state_space():
    rng = np.random.default_rng(5)
    all_states = [UI] + [aggressive(m) for m in range(6)] + [blocked(n) for n in range(-8, 1)]
    config = replace(CONFIG, prefetchers=3, temporal_index=2)
    for _ in range(2000):
        before = [all_states[i] for i in rng.integers(len(all_states), size=3)]
        accuracies = [None if rng.random() < 0.2 else float(rng.random()) for _ in range(3)]
        after = epoch_update(before, accuracies, config)
        assert all(s in all_states for s in after)
        for old, new in zip(before, after):
            if old.aggressive and new.aggressive:
                assert abs(new.level - old.level) <= 1


def test_cool_down_takes_exactly_n_epochs():
    config = replace(CONFIG, prefetchers=2)
    current = [blocked(-config.cooldown), aggressive(5)]
    for _ in range(config.cooldown - 1):
        current = epoch_update(current, [None, 0.9], config)
        assert current[0].level < 0
    current = epoch_update(current, [None, 0.9], config)
    assert current == [blocked(0), aggressive(5)]


def test_accuracy_requires_minimum_issued():
    assert accuracy_of(7, 7, CONFIG) is None
    assert accuracy_of(8, 6, CONFIG) == 0.75
    assert accuracy_of(10, 12, CONFIG) == 1.0


def test_state_names_and_encoding():
    every = [UI] + [aggressive(m) for m in range(6)] + [blocked(n) for n in range(-8, 1)]
    assert [str(s) for s in (UI, aggressive(2), blocked(-4))] == ["UI", "IA_2", "IB_-4"]
    assert CONFIG.state_count == 16
    assert sorted(s.encode(CONFIG) for s in every) == list(range(16))
    assert all(PrefState.parse(str(s)) == s for s in every)
    with pytest.raises(ValueError):
        PrefState.parse("IX_1")


""" Tables """


def test_fresh_pc_gets_conservative_directives():
    tables = AlectoTables(CONFIG)
    assert tables.allocate(demand(1)) == [Directive(True, 3, 3, 0)] * 3


def test_directive_degrees():
    tables = AlectoTables(CONFIG)
    assert tables.directive(aggressive(2)) == Directive(True, 6, 3, 3)
    assert tables.directive(aggressive(5)) == Directive(True, 9, 3, 6)
    assert tables.directive(blocked(-4)) == Directive(False, 0, 0, 0)
    fixed = AlectoTables(replace(CONFIG, fixed_degree=True))
    assert fixed.directive(aggressive(0)) == Directive(True, 9, 3, 6)
    assert fixed.directive(UI) == Directive(True, 3, 3, 0)


def test_allocation_conflict_reinitializes_entry():
    tables = AlectoTables(CONFIG)
    tables.allocate(demand(1, pc=1))
    tables._allocation_entry(1).states = [aggressive(1), blocked(-2), UI]
    assert tables.states_for(1) == [aggressive(1), blocked(-2), UI]
    assert tables.allocate(demand(1, pc=64)) == [Directive(True, 3, 3, 0)] * 3
    assert tables.states_for(1) is None
    assert tables.states_for(64) == [UI, UI, UI]


def test_sandbox_filters_duplicate_across_engines():
    tables = AlectoTables(CONFIG)
    assert tables.on_prefetch_issued(PC, 0, [0x900]) == [(0x900, L1)]
    assert tables.on_prefetch_issued(PC, 2, [0x900]) == []
    assert tables.filtered == 1
    assert tables.sandbox_entry(0x900).issued_by == 0b101
    sample = tables._sample_entry(PC)
    assert sample.issued == [1, 0, 1]


def test_same_engine_reissue_is_not_counted_again():
    tables = AlectoTables(CONFIG)
    tables.on_prefetch_issued(PC, 1, [0x900, 0x901])
    assert tables.on_prefetch_issued(PC, 1, [0x901, 0x902]) == [(0x902, L1)]
    assert tables._sample_entry(PC).issued == [0, 3, 0]


def test_empty_issue_is_a_no_op():
    tables = AlectoTables(CONFIG)
    assert tables.on_prefetch_issued(PC, 0, []) == []
    assert tables.filtered == 0


def test_evicted_sandbox_entry_allows_reissue():
    tables = AlectoTables(CONFIG)
    tables.on_prefetch_issued(PC, 0, [0x900])
    assert tables.on_prefetch_issued(PC, 0, [0x900]) == []
    tables.on_prefetch_issued(PC, 0, [0x900 + 512])
    assert tables.sandbox_entry(0x900) is None
    assert tables.on_prefetch_issued(PC, 0, [0x900]) == [(0x900, L1)]


def test_quota_splits_levels_in_order():
    tables = AlectoTables(CONFIG)
    directive = tables.directive(aggressive(2))
    blocks = [0x1000 + i for i in range(6)]
    kept = tables.on_prefetch_issued(PC, 0, blocks, directive)
    assert [level for _, level in kept] == [L1, L1, L1, L2, L2, L2]


def test_confirmation_credits_every_issuer_with_matching_pc():
    tables = AlectoTables(CONFIG)
    tables.on_prefetch_issued(PC, 0, [0x900])
    tables.on_prefetch_issued(PC, 2, [0x900])
    tables.on_demand_observed(demand(0x900, pc=0x777))
    assert tables._sample_entry(PC).confirmed == [0, 0, 0]
    tables.on_demand_observed(demand(0x900))
    assert tables._sample_entry(PC).confirmed == [1, 0, 1]


def test_epoch_fires_on_hundredth_demand():
    tables = AlectoTables(CONFIG)
    tables.on_prefetch_issued(PC, 0, [0x5000])
    fired = [tables.on_demand_observed(demand(0x100 + i)) for i in range(100)]
    assert fired == [False] * 99 + [True]
    assert len(tables.events) == 1
    event = tables.events[0]
    assert (event.demand_index, event.pc) == (100, PC)
    sample = tables._sample_entry(PC)
    assert (sample.demands, sample.issued, sample.confirmed) == (0, [0, 0, 0], [0, 0, 0])


def test_dead_counter_resets_idle_aggressive_pc():
    tables = AlectoTables(CONFIG)
    tables.allocate(demand(1))
    tables._allocation_entry(PC).states = [aggressive(0), blocked(0), blocked(0)]
    for i in range(CONFIG.dead_threshold - 1):
        tables.record_round(PC, 0)
        tables.on_demand_observed(demand(0x100 + i))
    assert tables.states_for(PC)[0] == aggressive(0)
    tables.record_round(PC, 0)
    tables.on_demand_observed(demand(0x100))
    assert tables.states_for(PC) == [UI, UI, UI]
    assert tables.dead_resets == 1
    assert tables._sample_entry(PC).deads == 0


def test_dead_counter_decays_while_prefetching():
    tables = AlectoTables(CONFIG)
    tables.allocate(demand(1))
    tables._allocation_entry(PC).states = [aggressive(0), UI, UI]
    for i in range(10):
        tables.record_round(PC, 0)
        tables.on_demand_observed(demand(0x100 + i))
    tables.record_round(PC, 4)
    tables.on_demand_observed(demand(0x200))
    assert tables._sample_entry(PC).deads == 9


""" Storage """


def test_storage_bits_for_three_prefetchers():
    assert storage_bits(3) == (1408, 4672, 4608, 10688, 6080)
    assert storage_bits(1).total == 7104


def test_storage_report():
    report = storage_report(3)
    assert report["total_bytes"] == 1336
    assert report["total_kib"] == 1.3
    assert report["total_excluding_sandbox_bytes"] == 760
    assert report["implementation_total_bits"] == 10688 + 9 * 512 + 64


def test_storage_rejects_zero_prefetchers():
    with pytest.raises(ConfigError):
        storage_bits(0)


@pytest.mark.parametrize("p", [1, 2, 3, 4, 8])
def test_recount_differs_only_by_sandbox_pc_hash(p):
    config = AlectoConfig(prefetchers=p, dead_threshold=127)
    published = storage_bits(p)
    recount = implementation_storage_bits(config)
    assert recount.allocation == published.allocation
    assert recount.sample == published.sample
    assert recount.sandbox - published.sandbox == 9 * config.sandbox_entries


@pytest.mark.parametrize("changes", [
    {"proficiency": 0.05, "deficiency": 0.05},
    {"proficiency": 1.1},
    {"epoch_demands": 150},
    {"epoch_demands": 300, "dead_threshold": 400},
    {"sandbox_entries": 500},
    {"cooldown": 0},
    {"max_level": -1},
    {"conservative_degree": 0},
    {"temporal_index": 3},
])
def test_invalid_configs(changes):
    with pytest.raises(ConfigError):
        replace(CONFIG, **changes).validate()


""" Selector """


def test_selector_derives_shape_from_engines():
    selector = AlectoSelector(build_engines(["stride", "temporal"]))
    assert selector.config.prefetchers == 2
    assert selector.config.temporal_index == 1
    assert selector.name == "alecto"
    assert AlectoSelector(build_engines(["stride"]), fixed_degree=True).name == "alecto_fixed_degree"


def test_blocked_engine_never_trains():
    engines = [StrideEngine(), StreamEngine()]
    selector = AlectoSelector(engines)
    selector.tables.allocate(demand(1))
    selector.tables._allocation_entry(PC).states = [blocked(-3), UI]
    for record in records_at([0x1000 + 64 * i for i in range(20)]):
        selector.step(record)
    assert engines[0].get_stats().train_count == 0
    assert engines[1].get_stats().train_count == 20


def test_downstream_requests_never_repeat_a_live_block(mixed_trace):
    selector = AlectoSelector(build_engines(DEFAULT_ENGINES))
    live = {}
    for record in mixed_trace[:5000]:
        for request in selector.step(record):
            index = request.block & (selector.config.sandbox_entries - 1)
            assert live.get(index) != request.block
            live[index] = request.block


def test_pure_stride_converges_to_top_level():
    selector = AlectoSelector(build_engines(DEFAULT_ENGINES))
    for record in records_at([0x10000000 + 4160 * i for i in range(2000)]):
        selector.step(record)
    target = (blocked(0), aggressive(5), blocked(0))
    assert selector.states_for(PC) == list(target)
    first = next(i for i, event in enumerate(selector.tables.events) if event.after == target)
    assert first < 10
    assert all(event.after == target for event in selector.tables.events[first:])
