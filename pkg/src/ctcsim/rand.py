"""Seeded random unitaries and states for tests and verification suites."""

from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group


def rng_for(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_unitary(d: int, rng) -> np.ndarray:
    if d == 1:
        return np.exp(2j * np.pi * rng_for(rng).random()) * np.eye(1)
    return unitary_group.rvs(d, random_state=rng_for(rng))


def random_pure_state(d: int, rng) -> np.ndarray:
    rng = rng_for(rng)
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_density(d: int, rng, rank: int | None = None) -> np.ndarray:
    """Ginibre-ensemble density matrix of the given rank (full rank by default)."""
    rng = rng_for(rng)
    k = d if rank is None else rank
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
