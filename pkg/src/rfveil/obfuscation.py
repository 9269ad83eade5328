"""Keyed per-frame phase obfuscation of the pilot symbols.

Angles are degrees at the API surface; variances are radians squared.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from scipy import integrate

from .keyed import KeyedStream, counter_uniforms, derive_seed, hash_words
from .ofdm import SubcarrierLayout

KINDS = ("uniform", "gaussian", "laplacian", "triangular")

# Domain separators for the keyed streams.
_JITTER = 0x4A49545445520001
_MEANS = 0x4D45414E53000002
_KEYGEN = 0x4B455947454E0003

RFVEIL_MEAN_RANGE = (-25.0, 40.0)


@dataclass(frozen=True)
class SecretKey:
    value: int

    def __post_init__(self):
        if not 0 <= self.value < 1 << 128:
            raise ValueError("key must be a 128-bit unsigned integer")

    @classmethod
    def generate(cls, seed: int) -> "SecretKey":
        stream = KeyedStream(derive_seed(_KEYGEN, seed))
        while True:
            hi, lo = stream.bits64(2)
            value = (hi << 64) | lo
            if value:
                return cls(value)

    @property
    def low32(self) -> int:
        return self.value & 0xFFFFFFFF

    @property
    def words(self) -> tuple[int, int]:
        return self.value >> 64, self.value & ((1 << 64) - 1)

    def digest(self) -> int:
        """128-bit identifier of the key that does not reveal it."""
        return int.from_bytes(hashlib.blake2b(self.value.to_bytes(16, "big"), digest_size=16).digest(), "big")


@dataclass(frozen=True)
class DistributionSpec:
    kind: str
    variance: float = 0.0
    mean: float = 0.0
    per_subcarrier_means: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}; choose from {KINDS}")
        if not (np.isfinite(self.variance) and self.variance >= 0):
            raise ValueError(f"variance must be finite and >= 0, got {self.variance}")
        if self.per_subcarrier_means is not None:
            m = np.asarray(self.per_subcarrier_means, dtype=float)
            m.setflags(write=False)
            object.__setattr__(self, "per_subcarrier_means", m)

    @property
    def half_width(self) -> float:
        """Support half-width in radians for the bounded kinds."""
        if self.kind == "uniform":
            return float(np.sqrt(3 * self.variance))
        if self.kind == "triangular":
            return float(np.sqrt(6 * self.variance))
        return float("inf")

    def effective_means(self, count: int) -> np.ndarray:
        if self.per_subcarrier_means is None:
            return np.full(count, self.mean)
        if self.per_subcarrier_means.size != count:
            raise ValueError("per-subcarrier means do not match the layout")
        return self.mean + self.per_subcarrier_means

    def with_mean(self, mean: float) -> "DistributionSpec":
        return DistributionSpec(self.kind, self.variance, mean)


def rfveil_spec(key: SecretKey, kind: str, variance: float, layout: SubcarrierLayout,
                mean_range=RFVEIL_MEAN_RANGE) -> DistributionSpec:
    """Session law with secret per-subcarrier means drawn from the key stream."""
    hi, lo = key.words
    u = counter_uniforms(hash_words(_MEANS, hi, lo), layout.count)
    lo_deg, hi_deg = mean_range
    return DistributionSpec(kind, variance, 0.0, lo_deg + (hi_deg - lo_deg) * u)


def sample_phases(spec: DistributionSpec, u1, u2=None, mean=None) -> np.ndarray:
    """Map uniforms in (0, 1) to draws of ``spec`` in degrees.

    ``u2`` is only consumed by the gaussian kind (Box-Muller). ``mean`` (degrees,
    broadcastable) overrides the spec's scalar mean.
    """
    u1 = np.asarray(u1, dtype=float)
    mu = spec.mean if mean is None else np.asarray(mean, dtype=float)
    if spec.variance == 0:
        return np.broadcast_to(mu, u1.shape).astype(float)
    xi = np.sqrt(spec.variance)
    if spec.kind == "uniform":
        r = np.sqrt(3.0) * xi * (2.0 * u1 - 1.0)
    elif spec.kind == "gaussian":
        if u2 is None:
            raise ValueError("gaussian sampling needs a second uniform stream")
        r = xi * np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * np.asarray(u2, dtype=float))
    elif spec.kind == "laplacian":
        b = xi / np.sqrt(2.0)
        c = u1 - 0.5
        r = -b * np.sign(c) * np.log1p(-2.0 * np.abs(c))
    else:
        a = np.sqrt(6.0) * xi
        r = np.where(u1 < 0.5, a * (np.sqrt(2.0 * u1) - 1.0), a * (1.0 - np.sqrt(2.0 * (1.0 - u1))))
    return mu + np.degrees(r)


def sample_phase(spec: DistributionSpec, stream: KeyedStream) -> float:
    u1, u2 = stream.uniforms(2)
    return float(sample_phases(spec, u1, u2))


@dataclass(frozen=True)
class ObfuscationPattern:
    z: np.ndarray
    key_fingerprint: int
    sync_index: int


def generate_patterns(key: SecretKey, indices, spec: DistributionSpec, layout: SubcarrierLayout) -> np.ndarray:
    """Rotations in degrees for many sync indices at once, shape ``(len(indices), K)``."""
    idx = np.asarray(indices, dtype=np.uint64)
    hi, lo = key.words
    seeds = hash_words(_JITTER, hi, lo, idx)
    K = layout.count
    u = counter_uniforms(seeds, 2 * K)
    return sample_phases(spec, u[..., :K], u[..., K:], mean=spec.effective_means(K))


def generate_pattern(key: SecretKey, index: int, spec: DistributionSpec, layout: SubcarrierLayout) -> ObfuscationPattern:
    if not 0 <= index <= 0xFFFFFFFF:
        raise ValueError("sync index must be a 32-bit unsigned integer")
    z = generate_patterns(key, [index], spec, layout)[0]
    return ObfuscationPattern(z, key.digest(), int(index))


def _angles(pattern) -> np.ndarray:
    return np.asarray(pattern.z if isinstance(pattern, ObfuscationPattern) else pattern, dtype=float)


def apply_pattern(freq_symbol, pattern) -> np.ndarray:
    """Rotate subcarrier ``k`` by ``z_k`` degrees; ``pattern`` may be an array of angles."""
    x = np.asarray(freq_symbol, dtype=complex)
    z = _angles(pattern)
    if x.shape[-1] != z.shape[-1]:
        raise ValueError(f"symbol has {x.shape[-1]} subcarriers, pattern has {z.shape[-1]}")
    return x * np.exp(1j * np.radians(z))


def revert_pattern(csi, pattern) -> np.ndarray:
    return apply_pattern(csi, -_angles(pattern))


def _pdf(spec: DistributionSpec, mean_rad: float):
    v = spec.variance
    if spec.kind == "uniform":
        r = spec.half_width
        return lambda z: 1.0 / (2 * r)
    if spec.kind == "laplacian":
        b = np.sqrt(v / 2)
        return lambda z: np.exp(-abs(z - mean_rad) / b) / (2 * b)
    if spec.kind == "triangular":
        a = spec.half_width
        return lambda z: max(0.0, (a - abs(z - mean_rad)) / a ** 2)
    raise AssertionError(spec.kind)


def expected_rotation(spec: DistributionSpec, mean: float | None = None) -> complex:
    """E[exp(jZ)] for one subcarrier law; ``mean`` (degrees) overrides ``spec.mean``."""
    mu = np.radians(spec.mean if mean is None else mean)
    v = spec.variance
    if spec.kind == "gaussian" or v == 0:
        return complex(np.exp(-v / 2) * np.exp(1j * mu))
    pdf = _pdf(spec, mu)
    # the absolute floor covers the near-zero imaginary part of symmetric laws
    opts = dict(epsabs=1e-14, epsrel=1e-10, limit=200)
    if spec.kind == "laplacian":
        pieces = [(-np.inf, mu), (mu, np.inf)]
    elif spec.kind == "triangular":
        a = spec.half_width
        pieces = [(mu - a, mu), (mu, mu + a)]
    else:
        r = spec.half_width
        pieces = [(mu - r, mu + r)]
    re = sum(integrate.quad(lambda z: np.cos(z) * pdf(z), lo, hi, **opts)[0] for lo, hi in pieces)
    im = sum(integrate.quad(lambda z: np.sin(z) * pdf(z), lo, hi, **opts)[0] for lo, hi in pieces)
    return complex(re, im)


def check_robustness(spec: DistributionSpec, count: int | None = None,
                     tol: float = 1e-6) -> Literal["naive", "robust"]:
    """``robust`` when some subcarrier's expected rotation keeps an imaginary part."""
    if spec.per_subcarrier_means is None:
        means = [spec.mean]
    else:
        means = spec.effective_means(count or spec.per_subcarrier_means.size)
    for m in means:
        if abs(expected_rotation(spec, float(m)).imag) > tol:
            return "robust"
    return "naive"
