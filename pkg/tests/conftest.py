"""Shared brute-force oracles, kept independent of the package code paths."""

from __future__ import annotations

import itertools

import numpy as np


def naive_permanent(a) -> complex:
    """Permanent as the literal sum over all n! permutations."""
    a = np.asarray(a)
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    total = 0.0 + 0.0j
    for perm in itertools.permutations(range(n)):
        p = 1.0 + 0.0j
        for i, j in enumerate(perm):
            p *= a[i, j]
        total += p
    return total
