""" Demand-request traces: record type, CSV text format and seeded synthetic generators """
import hashlib
import logging
import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from model.hashing import MASK64
from model.seeding import component_rng

logger = logging.getLogger(__name__)

LINE_BYTES = 64
LINE_SHIFT = 6
PATTERN_KINDS = ("stride", "stream", "spatial", "temporal", "random")


class TraceError(ValueError):
    """A trace could not be read. `line` is the 1-based line number, or None."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class TraceParseError(TraceError):
    pass


class TraceOrderError(TraceError):
    pass


class PatternError(ValueError):
    pass


class DemandRecord(NamedTuple):
    """One demand access.

    Attributes:
        cycle (int): arrival cycle, non-decreasing within a trace.
        pc (int): 64-bit instruction address.
        addr (int): 64-bit byte address.
    """
    cycle: int
    pc: int
    addr: int

    @property
    def block(self):
        return self.addr >> LINE_SHIFT


@dataclass(frozen=True)
class PatternSpec:
    """
    PatternSpec

    Describes one synthetic access stream issued by a single PC.

    Attributes:
        kind (str): stride, stream, spatial, temporal or random.
        pc (int): the PC stamped on every record.
        count (int): number of records.
        gap (int): cycles between consecutive records of this stream.
        base (int): first byte address (stride/stream/spatial) or window start (temporal/random).
        stride (int): signed byte offset for stride; its sign sets the stream direction.
        region (int): bytes per spatial region.
        footprint (int): bitmask of line offsets visited in every spatial region.
        period (int): length of the repeated temporal sequence.
        window (int): bytes the temporal/random kinds draw blocks from.
    """
    kind: str
    pc: int
    count: int
    gap: int = 4
    base: int = 0
    stride: int = LINE_BYTES
    region: int = 4096
    footprint: int = 0
    period: int = 16
    window: int = 1 << 24

    def validate(self):
        if self.kind not in PATTERN_KINDS:
            raise PatternError(f"unknown pattern kind '{self.kind}'")
        if self.count <= 0:
            raise PatternError("count must be positive")
        if self.gap < 1:
            raise PatternError("gap must be at least 1 cycle")
        if self.kind == "stride" and self.stride == 0:
            raise PatternError("stride pattern needs a nonzero stride")
        if self.kind == "spatial":
            lines = self.region // LINE_BYTES
            if self.footprint <= 0:
                raise PatternError("spatial pattern needs a non-empty footprint")
            if self.footprint.bit_length() > min(64, lines):
                raise PatternError(f"footprint does not fit a {self.region}-byte region")
        if self.kind == "temporal" and not 1 <= self.period <= self.window // LINE_BYTES:
            raise PatternError("temporal period must be between 1 and the window size in lines")
        if self.kind == "random" and self.window < LINE_BYTES:
            raise PatternError("random window must hold at least one line")
        return self


""" Text format """


def parse_trace(text):
    """Parse `cycle,0xPC,0xADDR` lines.

    Args:
        text (str | Iterable[str]): trace text or an iterable of lines.

    Returns:
        list[DemandRecord]: records in file order.

    Raises:
        TraceParseError: malformed line.
        TraceOrderError: a cycle smaller than the previous record's.
    """
    lines = text.splitlines() if isinstance(text, str) else text
    records = []
    last_cycle = 0
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 3:
            raise TraceParseError(f"expected 3 fields, found {len(fields)}", number)
        try:
            cycle = int(fields[0], 10)
            pc = int(fields[1], 16)
            addr = int(fields[2], 16)
        except ValueError:
            raise TraceParseError(f"malformed field in '{line}'", number) from None
        if cycle < 0 or not 0 <= pc <= MASK64 or not 0 <= addr <= MASK64:
            raise TraceParseError(f"value out of range in '{line}'", number)
        if cycle < last_cycle:
            raise TraceOrderError(f"cycle {cycle} precedes previous cycle {last_cycle}", number)
        last_cycle = cycle
        records.append(DemandRecord(cycle, pc, addr))
    return records


def emit_trace(records):
    return "".join(f"{r.cycle},{r.pc:#x},{r.addr:#x}\n" for r in records)


def read_trace(path):
    if not os.path.isfile(path):
        raise TraceError(f"trace file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except UnicodeDecodeError as e:
        raise TraceParseError(f"{path} is not UTF-8 text ({e.reason} at byte {e.start})") from None
    except OSError as e:
        raise TraceError(f"cannot read trace {path}: {e.strerror or e}") from None
    records = parse_trace(text)
    logger.info("read %d records from %s", len(records), path)
    return records


def write_trace(path, records, header=None):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        if header:
            f.write(f"# {header}\n")
        f.write(emit_trace(records))


def trace_digest(records):
    return hashlib.sha256(emit_trace(records).encode("utf-8")).hexdigest()[:16]


""" Synthetic generators """


def _addresses(spec, seed):
    kind = spec.kind
    n = spec.count
    if kind == "stride":
        return [spec.base + i * spec.stride for i in range(n)]
    if kind == "stream":
        step = -LINE_BYTES if spec.stride < 0 else LINE_BYTES
        return [spec.base + i * step for i in range(n)]
    if kind == "spatial":
        offsets = [o for o in range(spec.footprint.bit_length()) if spec.footprint >> o & 1]
        addrs = []
        for i in range(n):
            region, k = divmod(i, len(offsets))
            addrs.append(spec.base + region * spec.region + offsets[k] * LINE_BYTES)
        return addrs
    rng = component_rng(seed, f"{kind}:{spec.pc:#x}")
    lines = spec.window // LINE_BYTES
    if kind == "temporal":
        sequence = rng.choice(lines, size=spec.period, replace=False)
        return [spec.base + int(sequence[i % spec.period]) * LINE_BYTES for i in range(n)]
    blocks = rng.integers(0, lines, size=n)
    return [spec.base + int(b) * LINE_BYTES for b in blocks]


def gen_pattern(spec, seed):
    """Deterministic records for one PatternSpec; record k arrives at cycle k * gap."""
    spec.validate()
    pc = spec.pc & MASK64
    return [DemandRecord(i * spec.gap, pc, addr & MASK64)
            for i, addr in enumerate(_addresses(spec, seed))]


def gen_interleave(specs, seed):
    """Merge several PatternSpecs into one trace.

    Each draw picks a stream with probability proportional to its remaining
    records, realized as a seeded permutation of the stream indices. The
    global cycle advances by the gap of the stream just emitted, and the
    per-PC projection keeps every stream's solo address order.
    """
    if not specs:
        raise PatternError("at least one pattern is required")
    pcs = [s.pc & MASK64 for s in specs]
    if len(set(pcs)) != len(pcs):
        raise PatternError("interleaved patterns must use distinct pc values")
    streams = [gen_pattern(s, seed) for s in specs]
    order = np.repeat(np.arange(len(specs)), [s.count for s in specs])
    component_rng(seed, "interleave").shuffle(order)

    cursors = [0] * len(specs)
    records = []
    cycle = 0
    for idx in order:
        idx = int(idx)
        solo = streams[idx][cursors[idx]]
        cursors[idx] += 1
        records.append(solo._replace(cycle=cycle))
        cycle += specs[idx].gap
    return records
