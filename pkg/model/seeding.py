""" Splittable seeded generators: one independent numpy stream per component """
import zlib

import numpy as np

from model.hashing import MASK64


def component_seed(seed, component):
    """SeedSequence for `component` derived from the experiment seed."""
    return np.random.SeedSequence([seed & MASK64, zlib.crc32(component.encode("utf-8"))])


def component_rng(seed, component):
    return np.random.default_rng(component_seed(seed, component))
