"""Seeded random streams.

Every random quantity in the package is drawn from a generator derived
from an :class:`RngSpec`.  A spec is a ``(seed, stream_id)`` pair; extra
integer "purpose" keys can be appended so that, within one replication,
the dataset draw and each estimator's randomization use separate,
non-overlapping streams.  Results therefore do not depend on the order
in which replications are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

import numpy as np

__all__ = ["RngSpec", "as_generator"]


@dataclass(frozen=True)
class RngSpec:
    seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if int(self.stream_id) < 0:
            raise ValueError(f"stream_id must be nonnegative, got {self.stream_id}")

    def generator(self, *purpose: int) -> np.random.Generator:
        """Return a fresh generator for this stream and optional purpose keys."""
        key = (int(self.stream_id),) + tuple(int(p) for p in purpose)
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=key)
        return np.random.Generator(np.random.PCG64(ss))

    def stream(self, stream_id: int) -> "RngSpec":
        return replace(self, stream_id=int(stream_id))


RngLike = Union[RngSpec, np.random.Generator, int, None]


def as_generator(rng: RngLike, *purpose: int) -> np.random.Generator:
    """Coerce an RngSpec, Generator, integer seed or None into a Generator.

    A Generator passed in is used as-is (and advanced); purpose keys only
    apply to specs and integer seeds.
    """
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngSpec):
        return rng.generator(*purpose)
    if rng is None:
        return np.random.default_rng()
    return RngSpec(int(rng)).generator(*purpose)
