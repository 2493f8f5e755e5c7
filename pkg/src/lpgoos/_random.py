"""Seed plumbing shared by the samplers and experiment runners."""

import numpy as np


def derive_seed(master, *keys):
    """Deterministically derive a 32-bit child seed from ``master`` and integer keys."""
    entropy = [int(master)] + [int(k) for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint32)[0])


def stream(seed, *keys):
    """Counter-based generator keyed by ``(seed, *keys)``.

    Philox streams keyed this way are independent of the order in which
    they are created, so row-wise sampling gives the same bits regardless
    of how the work is split up.
    """
    entropy = [int(seed)] + [int(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
