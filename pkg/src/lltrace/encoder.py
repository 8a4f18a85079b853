"""Bias sampling and code generation for bias-based schemes."""

from __future__ import annotations

import math

import numpy as np

from .model import Arcsine, BiasDistribution, Code, FixedP

# largest double below 1; sin^2 rounds to 1.0 for u within ~1e-8 of 1
_P_MAX = np.nextafter(1.0, 0.0)
_ROW_BLOCK_BITS = 1 << 24


def open_uniform(rng: np.random.Generator, size) -> np.ndarray:
    """Uniform draws on the open interval (0, 1) with 53 bits of resolution."""
    return (rng.integers(0, 1 << 53, size=size, dtype=np.int64) + 0.5) * 2.0**-53


def arcsine_quantile(u, delta: float = 0.0) -> np.ndarray:
    """Inverse CDF of the arcsine law on ``[delta, 1 - delta]``."""
    a = math.asin(math.sqrt(delta))
    return np.sin(a + np.asarray(u, dtype=float) * (math.pi / 2 - 2 * a)) ** 2


def arcsine_cdf(p, delta: float = 0.0) -> np.ndarray:
    a = math.asin(math.sqrt(delta))
    p = np.clip(np.asarray(p, dtype=float), delta, 1.0 - delta)
    return (np.arcsin(np.sqrt(p)) - a) / (math.pi / 2 - 2 * a)


def sample_biases(dist: BiasDistribution, ell: int, rng: np.random.Generator) -> np.ndarray:
    if ell < 0:
        raise ValueError(f"code length must be non-negative, got {ell}")
    if isinstance(dist, FixedP):
        return np.full(ell, dist.p)
    if isinstance(dist, Arcsine):
        p = arcsine_quantile(open_uniform(rng, ell), dist.delta)
        return np.clip(p, np.finfo(float).tiny, _P_MAX)
    raise TypeError(f"unsupported bias distribution {dist!r}")


def generate_code(n: int, biases, rng: np.random.Generator) -> Code:
    """Draw ``X[j, i] ~ Bernoulli(biases[i])`` independently; rows are generated in blocks."""
    if n < 1:
        raise ValueError(f"need at least one user, got {n}")
    biases = np.asarray(biases, dtype=float)
    ell = biases.size
    bits = np.empty((n, ell), dtype=np.uint8)
    step = max(1, _ROW_BLOCK_BITS // max(ell, 1))
    for start in range(0, n, step):
        stop = min(n, start + step)
        bits[start:stop] = rng.random((stop - start, ell)) < biases
    return Code(bits=bits, biases=biases)
