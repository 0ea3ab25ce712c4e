"""Three-valued verdicts for symbolic zero tests.

Structural zero is decidable; general zero-equivalence is not, so every test
that asks "is this expression identically zero?" answers Zero, NonZero, or
Unknown.  Unknown is always surfaced to callers, never silently coerced.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable


class Verdict(enum.Enum):
    ZERO = "Zero"
    NONZERO = "NonZero"
    UNKNOWN = "Unknown"

    def __str__(self) -> str:
        return self.value


def combine(verdicts: Iterable[Verdict]) -> Verdict:
    """Aggregate: all Zero -> Zero, any NonZero -> NonZero, else Unknown."""
    out = Verdict.ZERO
    for v in verdicts:
        if v is Verdict.NONZERO:
            return Verdict.NONZERO
        if v is Verdict.UNKNOWN:
            out = Verdict.UNKNOWN
    return out


@dataclass(frozen=True)
class Policy:
    """Knobs for the randomized half of the zero test.

    Sampling is seeded per expression (seed mixed with the canonical text),
    so verdicts are reproducible across runs and independent of call order.
    """

    seed: int = 0
    tol: float = 1e-9
    samples: int = 12
    low: float = 0.6
    high: float = 2.4
    max_resamples: int = 48


DEFAULT_POLICY = Policy()
