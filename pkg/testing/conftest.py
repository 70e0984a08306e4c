import os
import sys

import pytest

# Add the directory containing main.py to the Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
os.environ['SIM_DATABASE_URI'] = 'sqlite://'

from model.trace import DemandRecord, PatternSpec, gen_interleave  # noqa: E402

MIXED_PCS = (0x400100, 0x400200, 0x400300, 0x400400)
# line offsets 0 4 9 15 22 30 39 49
FOOTPRINT = sum(1 << o for o in (0, 4, 9, 15, 22, 30, 39, 49))


def mixed_patterns():
    return [
        PatternSpec("stride", MIXED_PCS[0], 6000, base=0x10000000, stride=4160),
        PatternSpec("spatial", MIXED_PCS[1], 6000, base=0x20000000, footprint=FOOTPRINT),
        PatternSpec("stream", MIXED_PCS[2], 3000, base=0x30000000),
        PatternSpec("random", MIXED_PCS[3], 3000, base=0x40000000, window=1 << 24),
    ]


def stride_spatial_patterns():
    return [
        PatternSpec("stride", MIXED_PCS[0], 6000, base=0x10000000, stride=4160),
        PatternSpec("spatial", MIXED_PCS[1], 6000, base=0x20000000, footprint=FOOTPRINT),
    ]


def records_at(addrs, pc=0x400100, gap=4):
    return [DemandRecord(i * gap, pc, a) for i, a in enumerate(addrs)]


@pytest.fixture(scope='session')
def mixed_trace():
    return gen_interleave(mixed_patterns(), seed=7)


@pytest.fixture(scope='session')
def stride_spatial_trace():
    return gen_interleave(stride_spatial_patterns(), seed=3)


@pytest.fixture
def client():
    from main import app
    app.config['TESTING'] = True
    with app.test_client() as client:
        yield client


@pytest.fixture
def cli_runner():
    from main import app
    return app.test_cli_runner()
