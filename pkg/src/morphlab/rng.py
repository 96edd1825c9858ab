"""Named random sub-streams derived from a single root seed.

Every source of randomness in an experiment (data generation, weight init,
batch shuffling, input jitter, ...) pulls from its own named stream so that
changing one component never perturbs the draws of another.
"""

import zlib

import numpy as np


def stream_seed(root_seed: int, name: str) -> int:
    """Stable derived seed for the sub-stream `name` under `root_seed`."""
    tag = zlib.crc32(name.encode("utf-8"))
    ss = np.random.SeedSequence([int(root_seed), tag])
    return int(ss.generate_state(1)[0])


def substream(root_seed: int, name: str) -> np.random.Generator:
    """Generator for the sub-stream `name` under `root_seed`."""
    return np.random.default_rng(stream_seed(root_seed, name))
