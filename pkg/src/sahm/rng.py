"""Pinned random streams.

Every random draw in the package goes through this module so that golden
tests stay stable across numpy releases.  Only two numpy pieces are used,
both with documented, versioned output: ``SeedSequence`` hashing and the raw
64-bit output of the ``PCG64`` bit generator.  Conversion of raw words to
floats is done here, not by ``numpy.random.Generator``, whose methods are
allowed to change between releases.
"""

from __future__ import annotations

import numpy as np

_DOUBLE_SCALE = 2.0**-53


def _bit_generator(seed: int | np.random.SeedSequence) -> np.random.PCG64:
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    return np.random.PCG64(seed)


def uniforms(seed: int | np.random.SeedSequence, n: int) -> np.ndarray:
    """Return ``n`` doubles in [0, 1) from a 53-bit conversion of PCG64 words."""
    raw = _bit_generator(seed).random_raw(n)
    return (np.asarray(raw, dtype=np.uint64) >> np.uint64(11)).astype(np.float64) * _DOUBLE_SCALE


def spawn(seed: int | np.random.SeedSequence, n: int) -> list[np.random.SeedSequence]:
    """Split ``seed`` into ``n`` independent child streams."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    return seed.spawn(n)


def dirichlet(seed: int | np.random.SeedSequence, alpha: np.ndarray) -> np.ndarray:
    """Dirichlet draw with unit concentrations, built from exponential spacings.

    Only ``alpha == 1`` entries are supported (the flat Dirichlet); entries of
    0 pin the component to zero.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if np.any((alpha != 0.0) & (alpha != 1.0)):
        raise ValueError("only concentrations of 0 or 1 are supported")
    u = uniforms(seed, alpha.size)
    g = -np.log1p(-u) * alpha
    total = g.sum()
    if total <= 0.0:
        raise ValueError("degenerate Dirichlet draw")
    return g / total
