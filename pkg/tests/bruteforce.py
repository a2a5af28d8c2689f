"""Bit-level enumeration of one round of the GA on OneMax.

Independent of the distance-chain construction: it walks every mutation
strength, every flip set of every mutant, every tie-break and every
per-position crossover choice of every child on actual bit strings.
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np


def round_distribution(n: int, lam: int, d: int) -> np.ndarray:
    p, c = lam / n, 1.0 / lam
    x = (0,) * d + (1,) * (n - d)
    fx = sum(x)
    out = np.zeros(n + 1)

    @lru_cache(maxsize=None)
    def children(flips: tuple[int, ...]) -> tuple[float, ...]:
        # every child takes a subset of the flipped positions from the winner
        singles = []
        for mask in itertools.product((0, 1), repeat=len(flips)):
            y = list(x)
            for take, i in zip(mask, flips):
                if take:
                    y[i] ^= 1
            k = sum(mask)
            singles.append((sum(y), c ** k * (1 - c) ** (len(flips) - k)))
        dist = [0.0] * (n + 1)
        for combo in itertools.product(singles, repeat=lam):
            best = max(f for f, _ in combo)
            prob = math.prod(q for _, q in combo)
            dist[n - best if best >= fx else d] += prob
        return tuple(dist)

    for ell in range(n + 1):
        w = math.comb(n, ell) * p ** ell * (1 - p) ** (n - ell)
        if w == 0.0:
            continue
        subsets = list(itertools.combinations(range(n), ell))
        fit = [sum(x[i] ^ 1 if i in s else x[i] for i in range(n)) for s in subsets]
        share = (1.0 / len(subsets)) ** lam
        for combo in itertools.product(range(len(subsets)), repeat=lam):
            top = max(fit[i] for i in combo)
            winners = [i for i in combo if fit[i] == top]
            for i in winners:
                out += w * share / len(winners) * np.asarray(children(subsets[i]))
    return out
