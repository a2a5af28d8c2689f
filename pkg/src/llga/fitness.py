"""OneMax and generalized OneMax with evaluation counting."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .bitcore import BitString, ContractError


class Kind(str, Enum):
    ONEMAX = "onemax"
    GENERALIZED = "generalized"


@dataclass(frozen=True)
class FitnessFunction:
    kind: Kind
    n: int
    target: BitString | None = None

    def __post_init__(self):
        if self.kind is Kind.GENERALIZED:
            if self.target is None:
                raise ContractError("generalized OneMax needs a target string")
            if self.target.n != self.n:
                raise ContractError("target length differs from n")
        elif self.target is not None:
            raise ContractError("plain OneMax takes no target")

    @classmethod
    def onemax(cls, n: int) -> "FitnessFunction":
        return cls(Kind.ONEMAX, n)

    @classmethod
    def generalized(cls, z: BitString) -> "FitnessFunction":
        return cls(Kind.GENERALIZED, z.n, z)

    def target_array(self) -> np.ndarray:
        """The optimum as a uint8 array (all ones for plain OneMax)."""
        if self.target is None:
            return np.ones(self.n, dtype=np.uint8)
        return self.target.bits

    def value(self, x: BitString) -> int:
        if x.n != self.n:
            raise ContractError(f"length mismatch: f.n={self.n}, x.n={x.n}")
        if self.target is None:
            return x.count_ones()
        return self.n - x.hamming(self.target)


@dataclass
class EvaluationCounter:
    count: int = 0
    first_optimum_at: int | None = field(default=None)

    def record(self, value: int, n: int) -> None:
        self.count += 1
        if value == n and self.first_optimum_at is None:
            self.first_optimum_at = self.count


def evaluate(f: FitnessFunction, x: BitString, counter: EvaluationCounter) -> int:
    """Counted fitness evaluation."""
    v = f.value(x)
    counter.record(v, f.n)
    return v


def fitness_distance(f: FitnessFunction, x: BitString) -> int:
    """Number of wrong bits; a diagnostic read that is not counted."""
    return f.n - f.value(x)
