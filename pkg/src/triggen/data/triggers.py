"""Trigger augmentation at a given ratio."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ContractError
from .samples import DataSample


def augment_with_triggers(
    samples: list[DataSample], ratio: float, seed: int
) -> list[DataSample]:
    """Give exactly round(ratio * n) samples a real trigger, the rest none.

    A triggered sample's trigger is the first token of its first reference
    (for training pairs that reference is the target).  Selection is a seeded
    shuffle, so the exact same subset is triggered on every run with the same
    seed.  Rounding is half-up.  Input samples are not mutated.
    """
    if not 0.0 <= ratio <= 1.0:
        raise ContractError(f"trigger ratio must be in [0, 1], got {ratio}")
    n = len(samples)
    k = int(math.floor(ratio * n + 0.5))
    chosen = set(np.random.default_rng(seed).permutation(n)[:k].tolist())
    out: list[DataSample] = []
    for i, s in enumerate(samples):
        if i in chosen:
            out.append(s.with_trigger(s.references[0][0]))
        else:
            out.append(s.with_trigger(None))
    return out
