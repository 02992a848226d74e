"""
Seeded random generation.

Generators are numpy PCG64 streams derived from a SeedSequence, so a single
64-bit seed fans out into independent, reproducible substreams (one per
repetition, one per role inside a repetition).
"""

from typing import List

import numpy as np

from .errors import InvalidArgumentError

DEGENERATE_NORM = 1e-9
MAX_SEED = 2 ** 64 - 1


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise InvalidArgumentError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(_check_seed(seed))))


def spawn_streams(seed: int, n: int) -> List[np.random.Generator]:
    """n independent generators derived from one seed"""
    children = np.random.SeedSequence(_check_seed(seed)).spawn(n)
    return [np.random.Generator(np.random.PCG64(child)) for child in children]


def sample_sphere(dimension: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the unit sphere in R^dimension"""
    while True:
        g = rng.standard_normal(dimension)
        norm = np.linalg.norm(g)
        if norm >= DEGENERATE_NORM:
            return g / norm


def sample_sphere_orthogonal(v: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """
    Uniform draw from the unit sphere intersected with the orthogonal
    complement of v.

    A standard Gaussian vector is projected onto v-perp and normalized; the
    result is exactly uniform on the sphere of that subspace.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] < 2:
        raise InvalidArgumentError(f"v must be a vector of length >= 2, got shape {v.shape}")
    vv = float(v @ v)
    if vv == 0.0:
        raise InvalidArgumentError("v must be nonzero")
    while True:
        g = rng.standard_normal(v.shape[0])
        w = g - (g @ v / vv) * v
        norm = np.linalg.norm(w)
        if norm >= DEGENERATE_NORM:
            return w / norm


def sample_sphere_orthogonal_batch(v: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """n draws of sample_sphere_orthogonal at once; returns shape (n, len(v))"""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] < 2:
        raise InvalidArgumentError(f"v must be a vector of length >= 2, got shape {v.shape}")
    vv = float(v @ v)
    if vv == 0.0:
        raise InvalidArgumentError("v must be nonzero")
    g = rng.standard_normal((n, v.shape[0]))
    w = g - np.outer(g @ v / vv, v)
    norms = np.linalg.norm(w, axis=1)
    bad = norms < DEGENERATE_NORM
    if bad.any():
        w[bad] = [sample_sphere_orthogonal(v, rng) for _ in range(int(bad.sum()))]
        norms[bad] = 1.0
    return w / norms[:, None]
