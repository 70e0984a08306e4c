""" Experiment configuration (INI or JSON mapping) and the run / compare drivers """
import configparser
import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Tuple

from model.alecto import AlectoConfig, AlectoSelector
from model.baselines import BASELINE_DEGREE, BanditConfig, BanditSelector, DolSelector, IpcpSelector, extended_levels
from model.cache import L1_DEFAULT, L2_DEFAULT, MEMORY_LATENCY_DEFAULT, CacheConfig
from model.errors import ConfigError
from model.hashing import MASK64
from model.prefetchers import DEFAULT_ENGINES, build_engines
from model.simulator import Simulator
from model.trace import PatternSpec, gen_interleave, read_trace, trace_digest

logger = logging.getLogger(__name__)

SELECTORS = ("alecto", "alecto_fixed_degree", "ipcp", "dol", "bandit3", "bandit6", "bandit_ext")
PATTERN_PREFIX = "pattern."


""" Typed values """


def _int(value):
    if isinstance(value, bool):
        raise ValueError("boolean is not an integer")
    if isinstance(value, int):
        return value
    return int(str(value).strip(), 0)


def _float(value):
    if isinstance(value, bool):
        raise ValueError("boolean is not a number")
    return float(value)


def _str(value):
    return str(value).strip()


def _names(value):
    if isinstance(value, (list, tuple)):
        return tuple(_str(v) for v in value)
    return tuple(v.strip() for v in str(value).split(",") if v.strip())


SECTION_KEYS = {
    "experiment": {"selector": _str, "engines": _names, "seed": _int, "trace": _str, "out": _str},
    "cache": {
        "l1_size": _int, "l1_ways": _int, "l1_latency": _int,
        "l2_size": _int, "l2_ways": _int, "l2_latency": _int,
        "memory_latency": _int,
    },
    "alecto": {
        "max_level": _int, "cooldown": _int, "conservative_degree": _int,
        "proficiency": _float, "deficiency": _float, "epoch_demands": _int,
        "dead_threshold": _int, "min_issued": _int,
        "alloc_entries": _int, "sample_entries": _int, "sandbox_entries": _int,
    },
    "bandit": {"degree": _int, "epoch_len": _int, "exploration": _str, "epsilon": _float, "c_ucb": _float},
    "ipcp": {"degree": _int},
    "dol": {"degree": _int},
}
PATTERN_KEYS = {
    "kind": _str, "pc": _int, "count": _int, "gap": _int, "base": _int, "stride": _int,
    "region": _int, "footprint": _int, "period": _int, "window": _int,
}


def _typed(section, values, schema):
    typed = {}
    for key, value in values.items():
        if key not in schema:
            raise ConfigError(f"unknown key '{key}' in [{section}]")
        try:
            typed[key] = schema[key](value)
        except (TypeError, ValueError):
            raise ConfigError(f"[{section}] {key}: cannot read '{value}'") from None
    return typed


def _sections(mapping):
    """Split a raw mapping into typed known sections and pattern sections (in file order)."""
    if not isinstance(mapping, dict):
        raise ConfigError("configuration must be a mapping of sections")
    known, patterns = {}, []
    for section, values in mapping.items():
        if not isinstance(values, dict):
            raise ConfigError(f"section [{section}] must be a mapping")
        if section.startswith(PATTERN_PREFIX):
            patterns.append((section[len(PATTERN_PREFIX):], _typed(section, values, PATTERN_KEYS)))
        elif section in SECTION_KEYS:
            known[section] = _typed(section, values, SECTION_KEYS[section])
        else:
            raise ConfigError(f"unknown section [{section}]")
    return known, patterns


def _pattern(name, values):
    missing = [k for k in ("kind", "pc", "count") if k not in values]
    if missing:
        raise ConfigError(f"[{PATTERN_PREFIX}{name}] is missing {', '.join(missing)}")
    return PatternSpec(**values).validate()


def load_mapping(path):
    """Read an INI file into {section: {key: text}}."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as f:
            parser.read_file(f)
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from None
    return {section: dict(parser[section]) for section in parser.sections()}


""" Experiment """


@dataclass(frozen=True)
class ExperimentConfig:
    """
    ExperimentConfig

    Attributes:
        selector (str): one of SELECTORS.
        engines (tuple[str]): engine names in priority/lookup order.
        l1 (CacheConfig): L1D geometry and latency.
        l2 (CacheConfig): L2 geometry and latency.
        memory_latency (int): cycles beyond an L2 miss.
        alecto (AlectoConfig): Alecto parameters.
        bandit (BanditConfig): bandit parameters.
        ipcp_degree (int): per-engine degree for static priority.
        dol_degree (int): degree of the engine chosen sequentially.
        trace_path (str | None): trace file to replay.
        patterns (tuple[PatternSpec]): inline synthetic trace, used when no trace_path.
        seed (int): 64-bit seed for every stochastic component.
        out (str | None): report destination.
    """
    selector: str = "alecto"
    engines: Tuple[str, ...] = DEFAULT_ENGINES
    l1: CacheConfig = L1_DEFAULT
    l2: CacheConfig = L2_DEFAULT
    memory_latency: int = MEMORY_LATENCY_DEFAULT
    alecto: AlectoConfig = AlectoConfig()
    bandit: BanditConfig = BanditConfig()
    ipcp_degree: int = BASELINE_DEGREE
    dol_degree: int = BASELINE_DEGREE
    trace_path: Optional[str] = None
    patterns: Tuple[PatternSpec, ...] = field(default_factory=tuple)
    seed: int = 0
    out: Optional[str] = None

    def validate(self):
        if self.selector not in SELECTORS:
            raise ConfigError(f"unknown selector '{self.selector}', expected one of {', '.join(SELECTORS)}")
        if not 0 <= self.seed <= MASK64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        build_engines(self.engines)
        self.l1.validate()
        self.l2.validate()
        if self.memory_latency < 0:
            raise ConfigError("memory_latency must be non-negative")
        if self.ipcp_degree < 1 or self.dol_degree < 1:
            raise ConfigError("baseline degrees must be at least 1")
        names = list(self.engines)
        replace(self.alecto, prefetchers=len(names),
                temporal_index=names.index("temporal") if "temporal" in names else None).validate()
        self.bandit.validate()
        return self

    def read(self):
        data = asdict(self)
        data.pop("out")
        return data

    def digest(self):
        text = json.dumps(self.read(), sort_keys=True, default=list)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def config_from_mapping(mapping, base_dir=None):
    """Build an ExperimentConfig from {section: {key: value}}; absent sections keep their defaults."""
    known, patterns = _sections(mapping)
    experiment = known.get("experiment", {})
    cache = known.get("cache", {})
    selector = experiment.get("selector", "alecto")

    trace_path = experiment.get("trace")
    if trace_path and base_dir and not os.path.isabs(trace_path):
        trace_path = os.path.join(base_dir, trace_path)

    bandit = dict(known.get("bandit", {}))
    bandit.setdefault("degree", 6 if selector == "bandit6" else 3)

    config = ExperimentConfig(
        selector=selector,
        engines=experiment.get("engines", DEFAULT_ENGINES),
        l1=CacheConfig(cache.get("l1_size", L1_DEFAULT.size_bytes), cache.get("l1_ways", L1_DEFAULT.ways),
                       hit_latency=cache.get("l1_latency", L1_DEFAULT.hit_latency)),
        l2=CacheConfig(cache.get("l2_size", L2_DEFAULT.size_bytes), cache.get("l2_ways", L2_DEFAULT.ways),
                       hit_latency=cache.get("l2_latency", L2_DEFAULT.hit_latency)),
        memory_latency=cache.get("memory_latency", MEMORY_LATENCY_DEFAULT),
        alecto=AlectoConfig(**known.get("alecto", {})),
        bandit=BanditConfig(**bandit),
        ipcp_degree=known.get("ipcp", {}).get("degree", BASELINE_DEGREE),
        dol_degree=known.get("dol", {}).get("degree", BASELINE_DEGREE),
        trace_path=trace_path,
        patterns=tuple(_pattern(name, values) for name, values in patterns),
        seed=experiment.get("seed", 0),
        out=experiment.get("out"),
    )
    return config.validate()


def load_config(path):
    return config_from_mapping(load_mapping(path), base_dir=os.path.dirname(os.path.abspath(path)))


def build_selector(config):
    engines = build_engines(config.engines)
    name = config.selector
    if name in ("alecto", "alecto_fixed_degree"):
        return AlectoSelector(engines, config.alecto, fixed_degree=name == "alecto_fixed_degree")
    if name == "ipcp":
        return IpcpSelector(engines, config.ipcp_degree)
    if name == "dol":
        return DolSelector(engines, config.dol_degree)
    if name == "bandit_ext":
        levels = extended_levels(config.alecto.conservative_degree, config.alecto.max_level)
        return BanditSelector(engines, config.bandit, config.seed, levels=levels, name=name)
    if name in ("bandit3", "bandit6"):
        return BanditSelector(engines, config.bandit, config.seed, name=name)
    raise ConfigError(f"unknown selector '{name}'")


def load_records(config):
    """The config's trace: its trace file if set, else its patterns interleaved under its seed."""
    if config.trace_path:
        return read_trace(config.trace_path)
    if config.patterns:
        return gen_interleave(list(config.patterns), config.seed)
    raise ConfigError("experiment needs a trace file or at least one [pattern.*] section")


def run_experiment(config, records=None):
    if records is None:
        records = load_records(config)
    simulator = Simulator(build_selector(config), config.l1, config.l2, config.memory_latency)
    return simulator.run(records, trace=trace_digest(records), config_digest=config.digest())


def compare_experiments(configs, records=None, jobs=1):
    """Run several experiments on one shared trace; reports come back in config order."""
    if not configs:
        raise ConfigError("compare needs at least one experiment")
    if records is None:
        traces = [load_records(c) for c in configs]
        digests = {trace_digest(t) for t in traces}
        if len(digests) != 1:
            raise ConfigError("compared experiments must share one trace")
    else:
        traces = [records] * len(configs)
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        return list(pool.map(run_experiment, configs, traces))
