""" Run statistics: counters, the finalized RunReport, CSV emission and the training-energy proxy """
import io
import logging
from dataclasses import asdict, dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from typing import Dict, List, Optional

import pandas as pd

from model.cache import NOT_PREFETCHED, TIMELY
from model.prefetchers import ENGINE_ORDER

logger = logging.getLogger(__name__)

FRACTION_PLACES = Decimal("0.000001")
FRACTION_COLUMNS = ("coverage", "accuracy", "overpredictions")
COUNT_COLUMNS = ("demands", "shadow_misses", "covered_timely", "covered_untimely", "uncovered")
ENGINE_COLUMNS = (("issued", "issued"), ("useful", "useful"), ("train", "train_count"), ("table_miss", "table_misses"))
CSV_COLUMNS = (
    ("selector", "trace") + COUNT_COLUMNS + FRACTION_COLUMNS
    + tuple(f"{prefix}_{engine}" for engine in ENGINE_ORDER for prefix, _ in ENGINE_COLUMNS)
    + ("storage_bits",)
)


@dataclass
class RunCounters:
    """Raw tallies collected by the simulator before finalization."""
    engines: int
    demands: int = 0
    shadow_misses: int = 0
    covered_timely: int = 0
    covered_untimely: int = 0
    uncovered: int = 0
    issued: List[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.issued:
            self.issued = [0] * self.engines

    def count_shadow_miss(self, covered):
        self.shadow_misses += 1
        if covered == NOT_PREFETCHED:
            self.uncovered += 1
        elif covered == TIMELY:
            self.covered_timely += 1
        else:
            self.covered_untimely += 1


@dataclass
class RunReport:
    """
    RunReport

    Per-engine fields are dicts keyed by engine name.

    Attributes:
        selector (str): selection scheme.
        engines (list[str]): engines in selector order.
        trace (str): digest of the simulated trace.
        config_digest (str): digest of the experiment configuration.
        coverage (float): covered shadow misses / shadow misses.
        accuracy (float): useful / issued over all engines.
        overpredictions (float): 1 - accuracy.
        zero_issued (bool): no prefetch was installed during the run.
        avg_degree (dict): issued prefetches per training call.
        alecto_storage_bits (int | None): Alecto table budget; None for other schemes.
        details (dict): selector-specific summary from Selector.describe().
    """
    selector: str
    engines: List[str]
    trace: str
    config_digest: str
    demands: int
    shadow_misses: int
    covered_timely: int
    covered_untimely: int
    uncovered: int
    coverage: float
    accuracy: float
    overpredictions: float
    zero_issued: bool
    issued: Dict[str, int]
    useful: Dict[str, int]
    unused: Dict[str, int]
    train_count: Dict[str, int]
    table_lookups: Dict[str, int]
    table_misses: Dict[str, int]
    accuracy_per_engine: Dict[str, float]
    avg_degree: Dict[str, float]
    filtered_duplicates: int = 0
    alecto_storage_bits: Optional[int] = None
    details: Dict[str, object] = field(default_factory=dict)

    def read(self):
        return asdict(self)

    @property
    def total_train_count(self):
        return sum(self.train_count.values())

    @property
    def total_table_misses(self):
        return sum(self.table_misses.values())


def _ratio(numerator, denominator):
    return numerator / denominator if denominator else 0.0


def finalize(counters, selector, useful, unused, trace="", config_digest=""):
    """Build a RunReport once the cache has been drained.

    Args:
        counters (RunCounters): simulator tallies.
        selector (Selector): supplies engine names and stats.
        useful (Mapping[int, int]): engine index -> prefetches consumed by a demand.
        unused (Mapping[int, int]): engine index -> prefetches evicted or drained unused.
    """
    names = selector.engine_names
    stats = [engine.get_stats() for engine in selector.engines]
    issued = dict(zip(names, counters.issued))
    useful_by_name = {name: useful.get(i, 0) for i, name in enumerate(names)}
    total_issued = sum(counters.issued)
    accuracy = _ratio(sum(useful_by_name.values()), total_issued)
    report = RunReport(
        selector=selector.name,
        engines=names,
        trace=trace,
        config_digest=config_digest,
        demands=counters.demands,
        shadow_misses=counters.shadow_misses,
        covered_timely=counters.covered_timely,
        covered_untimely=counters.covered_untimely,
        uncovered=counters.uncovered,
        coverage=_ratio(counters.covered_timely + counters.covered_untimely, counters.shadow_misses),
        accuracy=accuracy,
        overpredictions=1.0 - accuracy,
        zero_issued=total_issued == 0,
        issued=issued,
        useful=useful_by_name,
        unused={name: unused.get(i, 0) for i, name in enumerate(names)},
        train_count={name: s.train_count for name, s in zip(names, stats)},
        table_lookups={name: s.table_lookups for name, s in zip(names, stats)},
        table_misses={name: s.table_misses for name, s in zip(names, stats)},
        accuracy_per_engine={name: _ratio(useful_by_name[name], issued[name]) for name in names},
        avg_degree={name: _ratio(issued[name], s.train_count) for name, s in zip(names, stats)},
        filtered_duplicates=selector.filtered_duplicates(),
        alecto_storage_bits=selector.storage_bits(),
        details=selector.describe(),
    )
    logger.info("%s: demands=%d coverage=%.4f accuracy=%.4f", report.selector,
                report.demands, report.coverage, report.accuracy)
    return report


""" CSV """


def format_fraction(value):
    return str(Decimal(value).quantize(FRACTION_PLACES, rounding=ROUND_HALF_EVEN))


def _row(report):
    row = {"selector": report.selector, "trace": report.trace}
    for column in COUNT_COLUMNS:
        row[column] = str(getattr(report, column))
    for column in FRACTION_COLUMNS:
        row[column] = format_fraction(getattr(report, column))
    for engine in ENGINE_ORDER:
        for prefix, attribute in ENGINE_COLUMNS:
            row[f"{prefix}_{engine}"] = str(getattr(report, attribute).get(engine, 0))
    row["storage_bits"] = "" if report.alecto_storage_bits is None else str(report.alecto_storage_bits)
    return row


def emit_csv(reports):
    """Header plus one row per report; fractions carry 6 decimals, rounded half-even."""
    frame = pd.DataFrame([_row(r) for r in reports], columns=list(CSV_COLUMNS))
    return frame.to_csv(index=False, lineterminator="\n")


def parse_csv(text):
    """Rows of emit_csv output with counts as int and fractions as float."""
    frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
    rows = []
    for record in frame.to_dict(orient="records"):
        row = {}
        for column, value in record.items():
            if column in ("selector", "trace"):
                row[column] = value
            elif column in FRACTION_COLUMNS:
                row[column] = float(value)
            elif column == "storage_bits":
                row[column] = int(value) if value else None
            else:
                row[column] = int(value)
        rows.append(row)
    return rows


def energy_proxy(alecto, baseline):
    """Fraction of training calls each engine avoided relative to a broadcast baseline."""
    reductions = {}
    for name, base in baseline.train_count.items():
        ours = alecto.train_count.get(name, 0)
        reductions[name] = 1.0 - ours / base if base else 0.0
    return reductions
