"""Deterministic seed derivation.

Every random draw in isp-dir comes from a generator keyed by a root seed plus
a path of integers (stage, epoch, step, sample index, ...). Work can therefore
be reordered, parallelized or resumed without changing any result.
"""

import numpy as np
import torch


def derive_seed(seed: int, *keys: int) -> int:
    """Derive a 63-bit child seed from a root seed and a key path.

    Example:
        >>> derive_seed(7, 1, 2) == derive_seed(7, 1, 2)
        True
    """
    sequence = np.random.SeedSequence([int(seed), *(int(k) for k in keys)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """NumPy generator for the given key path."""
    return np.random.default_rng(derive_seed(seed, *keys))


def torch_generator(seed: int, *keys: int) -> torch.Generator:
    """CPU torch generator for the given key path."""
    generator = torch.Generator()
    generator.manual_seed(derive_seed(seed, *keys))
    return generator
