"""Intervals randomized by the order of the observed trials.

The observed 0/1 sequence is ranked among all sequences with the same number
of successes.  Sequences are ordered by the value of the binary fraction
0.b1 b2 ... bn, so the first trial is the most significant digit, and the
smallest fraction gets rank 1.  The normalized rank u = k / C(n, x) then
replaces an external uniform draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dist import BinomialSample
from .errors import DomainError
from .intervals import (
    ConfidenceInterval,
    UniformNoise,
    split_sample_sizes,
    split_tilde_x,
    stevens,
    u_noise_wilson,
)

__all__ = [
    "TrialSequence",
    "PermutationRank",
    "sequence_rank",
    "korn_interval",
    "data_randomized_u_wilson",
    "split_by_order",
]


@dataclass(frozen=True)
class TrialSequence:
    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.bits) < 1:
            raise DomainError("a trial sequence needs at least one trial")
        if any(b not in (0, 1) for b in self.bits):
            raise DomainError("trial outcomes must be 0 or 1")

    @classmethod
    def parse(cls, text: str) -> TrialSequence:
        """Parse a string such as ``"0010110"``; surrounding whitespace is ignored."""
        text = text.strip()
        bad = set(text) - {"0", "1"}
        if not text or bad:
            raise DomainError(f"sequence must be a non-empty string of 0/1, got {text!r}")
        return cls(tuple(int(c) for c in text))

    @property
    def n(self) -> int:
        return len(self.bits)

    @property
    def x(self) -> int:
        return sum(self.bits)

    @property
    def sample(self) -> BinomialSample:
        return BinomialSample(self.n, self.x)

    def __str__(self) -> str:
        return "".join(map(str, self.bits))


@dataclass(frozen=True)
class PermutationRank:
    k: int
    total: int

    def __post_init__(self) -> None:
        if not 1 <= self.k <= self.total:
            raise DomainError(f"rank {self.k} outside [1, {self.total}]")

    @property
    def u(self) -> float:
        return self.k / self.total


def sequence_rank(seq: TrialSequence) -> PermutationRank:
    """Rank of ``seq`` among all same-weight sequences, ordered by binary fraction.

    Counts smaller sequences prefix by prefix: wherever the observed sequence
    has a 1, every sequence sharing the prefix but holding a 0 there is
    smaller, and there are C(positions left, ones left) of them.
    """
    n, ones_left = seq.n, seq.x
    smaller = 0
    for i, bit in enumerate(seq.bits):
        if bit:
            smaller += math.comb(n - i - 1, ones_left)
            ones_left -= 1
    return PermutationRank(smaller + 1, math.comb(n, seq.x))


def korn_interval(seq: TrialSequence, alpha: float = 0.05) -> ConfidenceInterval:
    u = sequence_rank(seq).u
    return stevens(seq.sample, alpha, u, 1.0 - u)


def data_randomized_u_wilson(seq: TrialSequence, alpha: float = 0.05) -> ConfidenceInterval:
    u = sequence_rank(seq).u
    return u_noise_wilson(seq.sample, alpha, UniformNoise(u - 0.5))


def split_by_order(seq: TrialSequence) -> float:
    """Split-sample effective count with the first n1 trials as the first subsample."""
    design = split_sample_sizes(seq.n)
    z = sum(seq.bits[: design.n1])
    return split_tilde_x(seq.sample, design, z)
