"""Bit strings, seeded randomness and the two variation operators.

The random source is numpy's PCG64 generator; a run seed is turned into a
generator state through ``numpy.random.SeedSequence``.  Per-run seeds are
derived from a master seed with a splitmix64 counter construction (see
:func:`derive_seed`), so replication ``i`` always sees the same stream no
matter which worker executes it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class ContractError(ValueError):
    """An operation was called outside its documented preconditions."""


def _splitmix64(state: int) -> int:
    z = state & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Seed of replication ``index`` under ``master_seed``.

    Counter mode: the splitmix64 finalizer applied to
    ``master_seed + (index + 1) * 0x9E3779B97F4A7C15 (mod 2**64)``.
    """
    if index < 0:
        raise ContractError(f"run index must be non-negative, got {index}")
    return _splitmix64((master_seed & MASK64) + (index + 1) * _GOLDEN)


class RandomSource:
    """A seeded PCG64 stream.  Never share one between concurrent runs."""

    __slots__ = ("seed", "generator")

    def __init__(self, seed: int):
        if not 0 <= seed <= MASK64:
            raise ContractError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.generator = np.random.Generator(np.random.PCG64(self.seed))

    @classmethod
    def for_run(cls, master_seed: int, index: int) -> "RandomSource":
        return cls(derive_seed(master_seed, index))

    def random_bits(self, n: int) -> "BitString":
        return BitString(self.generator.integers(0, 2, size=n, dtype=np.uint8))

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed})"


class BitString:
    """Immutable fixed-length 0/1 string backed by a read-only uint8 array."""

    __slots__ = ("_bits",)

    def __init__(self, bits: Iterable[int] | np.ndarray):
        arr = np.array(bits, dtype=np.uint8)
        if arr.ndim != 1 or arr.size == 0:
            raise ContractError("a BitString needs a non-empty 1-d sequence of bits")
        if np.any(arr > 1):
            raise ContractError("bits must be 0 or 1")
        arr.flags.writeable = False
        self._bits = arr

    @classmethod
    def zeros(cls, n: int) -> "BitString":
        return cls(np.zeros(n, dtype=np.uint8))

    @classmethod
    def ones(cls, n: int) -> "BitString":
        return cls(np.ones(n, dtype=np.uint8))

    @classmethod
    def from_str(cls, text: str) -> "BitString":
        return cls([int(ch) for ch in text])

    @property
    def n(self) -> int:
        return self._bits.size

    @property
    def bits(self) -> np.ndarray:
        """Read-only view of the underlying array."""
        return self._bits

    def __len__(self) -> int:
        return self._bits.size

    def __getitem__(self, i):
        return int(self._bits[i])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self._bits, other._bits))

    def __hash__(self) -> int:
        return hash(self._bits.tobytes())

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self._bits)

    def __repr__(self) -> str:
        s = str(self)
        return f"BitString('{s if len(s) <= 64 else s[:61] + '...'}')"

    def count_ones(self) -> int:
        return int(self._bits.sum(dtype=np.int64))

    def complement(self) -> "BitString":
        return BitString(1 - self._bits)

    def hamming(self, other: "BitString") -> int:
        if self.n != other.n:
            raise ContractError("length mismatch")
        return int(np.count_nonzero(self._bits != other._bits))


@dataclass(frozen=True)
class GaParams:
    """Instance size and algorithm parameters.

    ``p`` and ``c`` default to the standard setting ``lam / n`` and ``1 / lam``.
    """

    n: int
    lam: int
    p: float | None = None
    c: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ContractError(f"n must be positive, got {self.n}")
        if not 1 <= self.lam <= self.n:
            raise ContractError(f"lambda must lie in [1..n]={[1, self.n]}, got {self.lam}")
        if self.p is None:
            object.__setattr__(self, "p", self.lam / self.n)
        if self.c is None:
            object.__setattr__(self, "c", 1.0 / self.lam)
        if not 0.0 <= self.p <= 1.0:
            raise ContractError(f"mutation probability must lie in [0,1], got {self.p}")
        if not 0.0 <= self.c <= 1.0:
            raise ContractError(f"crossover bias must lie in [0,1], got {self.c}")


def sample_ell(rng: RandomSource, n: int, p: float) -> int:
    """Mutation strength drawn from Binomial(n, p)."""
    if not 0.0 <= p <= 1.0:
        raise ContractError(f"p must lie in [0,1], got {p}")
    return int(rng.generator.binomial(n, p))


def mutate(x: BitString, ell: int, rng: RandomSource) -> BitString:
    """Flip exactly ``ell`` distinct, uniformly chosen positions of ``x``."""
    if not 0 <= ell <= x.n:
        raise ContractError(f"ell must lie in [0..{x.n}], got {ell}")
    out = x.bits.copy()
    if ell:
        pos = rng.generator.choice(x.n, size=ell, replace=False)
        out[pos] ^= 1
    return BitString(out)


def crossover(x: BitString, xp: BitString, c: float, rng: RandomSource) -> BitString:
    """Biased uniform crossover: each position comes from ``xp`` with probability ``c``."""
    if x.n != xp.n:
        raise ContractError(f"length mismatch: {x.n} vs {xp.n}")
    if not 0.0 <= c <= 1.0:
        raise ContractError(f"crossover bias must lie in [0,1], got {c}")
    take = rng.generator.random(x.n) < c
    return BitString(np.where(take, xp.bits, x.bits))


def select_best(candidates: Sequence[BitString], fitness_values: Sequence[int], rng: RandomSource) -> int:
    """Index of a fittest candidate, ties broken uniformly at random."""
    if len(candidates) == 0:
        raise ContractError("cannot select from an empty candidate list")
    if len(candidates) != len(fitness_values):
        raise ContractError("candidates and fitness values differ in length")
    vals = np.asarray(fitness_values)
    winners = np.flatnonzero(vals == vals.max())
    if winners.size == 1:
        return int(winners[0])
    return int(winners[rng.generator.integers(winners.size)])
