"""Synthetic nonlinear phase fingerprints: embedding, extraction, matching.

A fingerprint is a float array of per-subcarrier phase errors in degrees with
zero mean and zero least-squares slope against the subcarrier labels, i.e.
what survives removal of every affine phase term.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Optional

import numpy as np

from .keyed import KeyedStream, derive_seed
from .ofdm import SubcarrierLayout, validate_csi

DEFAULT_THRESHOLD = 4.5
_DEVICE = 0x4445564943450004


@dataclass(frozen=True)
class DeviceProfile:
    device_id: Hashable
    epsilon: np.ndarray
    components: tuple = ()


@dataclass(frozen=True)
class LinearErrorSpec:
    slope: float = 0.0
    offset: float = 0.0

    def phase_deg(self, layout: SubcarrierLayout) -> np.ndarray:
        return np.degrees(2 * np.pi * self.slope * layout.index) + self.offset


def remove_affine(phase, labels) -> np.ndarray:
    """Subtract the least-squares line in ``labels`` from ``phase`` (last axis)."""
    v = np.asarray(labels, dtype=float)
    p = np.asarray(phase, dtype=float)
    vc = v - v.mean()
    pm = p.mean(axis=-1, keepdims=True)
    slope = ((p - pm) @ vc) / (vc @ vc)
    return p - pm - slope[..., None] * vc


def synth_device(seed: int, layout: SubcarrierLayout, device_id: Hashable = None,
                 n_components: int = 3, amplitude_range=(5.0, 20.0),
                 cycles_range=(1.0, 4.0)) -> DeviceProfile:
    """Sum of sinusoids over the band with parameters drawn from ``seed``.

    The result is detrended, so the profile equals the fingerprint a receiver
    can observe.
    """
    stream = KeyedStream(derive_seed(_DEVICE, seed))
    comps = []
    k = np.arange(layout.count) / layout.count
    eps = np.zeros(layout.count)
    for _ in range(n_components):
        ua, uf, up = stream.uniforms(3)
        amp = amplitude_range[0] + (amplitude_range[1] - amplitude_range[0]) * ua
        cyc = cycles_range[0] + (cycles_range[1] - cycles_range[0]) * uf
        ph = 360.0 * up
        comps.append((float(amp), float(cyc), float(ph)))
        eps += amp * np.sin(2 * np.pi * cyc * k + np.radians(ph))
    eps = remove_affine(eps, layout.index)
    return DeviceProfile(seed if device_id is None else device_id, eps, tuple(comps))


def synth_linear_error(seed: int, max_slope: float = 0.002) -> LinearErrorSpec:
    u = KeyedStream(derive_seed(_DEVICE, seed, 1)).uniforms(2)
    return LinearErrorSpec(max_slope * (2 * u[0] - 1), 360.0 * u[1] - 180.0)


def embed_fingerprint(freq_symbol, profile: DeviceProfile, linear: LinearErrorSpec | None = None,
                      layout: SubcarrierLayout | None = None) -> np.ndarray:
    x = np.asarray(freq_symbol, dtype=complex)
    eps = np.asarray(profile.epsilon, dtype=float)
    if x.shape[-1] != eps.size:
        raise ValueError(f"symbol has {x.shape[-1]} subcarriers, profile has {eps.size}")
    angle = eps
    if linear is not None:
        angle = angle + linear.phase_deg(layout or SubcarrierLayout(eps.size))
    return x * np.exp(1j * np.radians(angle))


def extract_fingerprint(csi, layout: SubcarrierLayout) -> np.ndarray:
    """Nonlinear phase error of ``csi`` in degrees (works on batches)."""
    if layout.count < 4:
        raise ValueError("need at least 4 subcarriers")
    h = validate_csi(csi, layout)
    # subcarrier labels increase with list position, so unwrapping along the
    # last axis is unwrapping across increasing v
    phase = np.unwrap(np.angle(h), axis=-1)
    return np.degrees(remove_affine(phase, 2 * np.pi * layout.index))


def wrap_deg(a) -> np.ndarray:
    """Map angles to (-180, 180]."""
    return 180.0 - np.mod(180.0 - np.asarray(a, dtype=float), 360.0)


def mae(f1, f2) -> float | np.ndarray:
    """Wrap-aware mean absolute angular difference in degrees (last axis)."""
    a = np.asarray(f1, dtype=float)
    b = np.asarray(f2, dtype=float)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"fingerprint lengths differ: {a.shape[-1]} vs {b.shape[-1]}")
    out = np.mean(np.abs(wrap_deg(a - b)), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def euclidean(f1, f2) -> float | np.ndarray:
    a = np.asarray(f1, dtype=float)
    b = np.asarray(f2, dtype=float)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"fingerprint lengths differ: {a.shape[-1]} vs {b.shape[-1]}")
    out = np.sqrt(np.sum(wrap_deg(a - b) ** 2, axis=-1))
    return float(out) if np.ndim(out) == 0 else out


METRICS = {"mae": mae, "euclidean": euclidean}


def _as_pairs(references) -> list:
    items = references.items() if isinstance(references, Mapping) else references
    pairs = sorted(((dev, np.asarray(fp, dtype=float)) for dev, fp in items), key=lambda p: p[0])
    if not pairs:
        raise ValueError("reference set is empty")
    return pairs


def distances(candidates, references, metric: str = "mae"):
    """Distance matrix ``(..., n_refs)`` and the sorted reference ids."""
    pairs = _as_pairs(references)
    ids = [p[0] for p in pairs]
    refs = np.stack([p[1] for p in pairs])
    c = np.asarray(candidates, dtype=float)[..., None, :]
    return METRICS[metric](c, refs), ids


def classify(candidate, references, threshold: float = DEFAULT_THRESHOLD,
             metric: str = "mae") -> Optional[Hashable]:
    """Nearest reference id, or ``None`` when nothing is within ``threshold``.

    Ties go to the smallest device id.
    """
    d, ids = distances(candidate, references, metric)
    best = int(np.argmin(d))
    return ids[best] if d[best] <= threshold else None


def classify_batch(candidates, references, threshold: float = DEFAULT_THRESHOLD,
                   metric: str = "mae") -> list:
    d, ids = distances(candidates, references, metric)
    best = np.argmin(d, axis=-1)
    ok = np.take_along_axis(d, best[..., None], axis=-1)[..., 0] <= threshold
    return [ids[b] if hit else None for b, hit in zip(best.tolist(), ok.tolist())]


def accuracy(predicted: Iterable, truth: Iterable) -> float:
    pairs = list(zip(predicted, truth))
    return sum(p == t for p, t in pairs) / len(pairs)
