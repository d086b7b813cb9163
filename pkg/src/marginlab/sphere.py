"""Geometry and sampling on the unit sphere S^{d-1}.

Uniform and band sampling, Haar-random rotations, spherical-harmonic space
dimensions and the sphere area constant.  All randomness flows through
RngStream so runs are reproducible and parallel fan-out is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

NORM_TOL = 1e-9

_CHILD_MULT = 0x9E3779B97F4A7C15  # 64-bit golden-ratio mixer
_MASK64 = (1 << 64) - 1


class DomainError(ValueError):
    pass


@dataclass
class RngStream:
    """Counter-based reproducible random stream.

    Identical (seed, stream_id) pairs replay the identical draw sequence;
    distinct stream_ids are statistically independent.  A single stream must
    not be shared across concurrent consumers -- spawn children instead.
    """

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator | None = field(default=None, repr=False, compare=False)

    @property
    def gen(self) -> np.random.Generator:
        if self._gen is None:
            ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
            self._gen = np.random.default_rng(ss)
        return self._gen

    def child(self, index: int) -> "RngStream":
        mixed = ((self.stream_id * _CHILD_MULT) + index + 1) & _MASK64
        return RngStream(self.seed, mixed)


def sample_unit_sphere(d: int, rng: RngStream) -> np.ndarray:
    """Uniform draw from S^{d-1} (normalized Gaussian)."""
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    while True:
        g = rng.gen.standard_normal(d)
        norm = np.linalg.norm(g)
        if norm > 1e-12:
            return g / norm


def sample_band(e: np.ndarray, a: float, rng: RngStream) -> np.ndarray:
    """Point x on S^{d-1} with <x, e> = a, uniform on the codimension-1 sphere.

    Constructs x = a e + sqrt(1 - a^2) z with z uniform on the unit sphere of
    the orthogonal complement of e.
    """
    e = np.asarray(e, dtype=float)
    d = len(e)
    if abs(np.linalg.norm(e) - 1.0) > NORM_TOL:
        raise DomainError("direction must be a unit vector")
    if abs(a) > 1.0 + 1e-12:
        raise DomainError("band height must be in [-1, 1]")
    a = float(np.clip(a, -1.0, 1.0))
    if abs(a) == 1.0:
        return math.copysign(1.0, a) * e
    if d < 2:
        raise DomainError("band sampling needs d >= 2 when |a| < 1")
    while True:
        g = rng.gen.standard_normal(d)
        g -= np.dot(g, e) * e
        norm = np.linalg.norm(g)
        if norm > 1e-12:
            z = g / norm
            break
    return a * e + math.sqrt(1.0 - a * a) * z


def haar_orthogonal(d: int, rng: RngStream) -> np.ndarray:
    """Haar-distributed orthogonal matrix via QR with sign-fixed R diagonal."""
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    g = rng.gen.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def harmonic_dim(d: int, n: int) -> int:
    """Dimension of the space of degree-n spherical harmonics in d variables."""
    if d < 2:
        raise DomainError(f"dimension must be >= 2, got {d}")
    if n < 0:
        raise DomainError(f"degree must be >= 0, got {n}")
    second = math.comb(d + n - 3, d - 1) if d + n - 3 >= d - 1 else 0
    return math.comb(d + n - 1, d - 1) - second


def sphere_area(d: int) -> float:
    """Surface area of S^{d-1}: 2 pi^{d/2} / Gamma(d/2)."""
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def band_average(f, e: np.ndarray, a: float, n_samples: int, rng: RngStream):
    """Monte-Carlo estimate (mean, std_err) of the band average of f at height a."""
    if n_samples < 2:
        raise DomainError("need at least 2 samples")
    vals = np.empty(n_samples)
    for i in range(n_samples):
        vals[i] = f(sample_band(e, a, rng))
    mean = float(np.mean(vals))
    std_err = float(np.std(vals, ddof=1) / math.sqrt(n_samples))
    return mean, std_err
