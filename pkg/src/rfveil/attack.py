"""Adversary side: BISON CSI denoising, impersonation forging, presence tracking.

Measurement matrices hold one captured CSI vector per row, shape ``(N, K)``.
"""
from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .fingerprint import DEFAULT_THRESHOLD, classify_batch, extract_fingerprint, wrap_deg
from .ofdm import SubcarrierLayout


class DegenerateSubcarrierError(ValueError):
    """The averaged CSI is exactly zero on some subcarrier, so its phase is undefined."""


def _measurements(M) -> np.ndarray:
    m = np.asarray(M, dtype=complex)
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
        raise ValueError("measurement matrix must be (N, K) with N >= 1")
    return m


MEASUREMENT_HEADER = ("frame", "subcarrier", "re", "im")


def save_measurements(path, M) -> Path:
    """Write a capture batch as ``frame,subcarrier,re,im`` rows (list position as subcarrier)."""
    m = _measurements(M)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MEASUREMENT_HEADER)
        for n, row in enumerate(m):
            for k, c in enumerate(row):
                w.writerow((n, k, repr(float(c.real)), repr(float(c.imag))))
    return path


def load_measurements(path) -> np.ndarray:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no measurements")
    n = max(int(r["frame"]) for r in rows) + 1
    k = max(int(r["subcarrier"]) for r in rows) + 1
    if len(rows) != n * k:
        raise ValueError(f"{path}: expected {n * k} rows for a {n}x{k} batch, got {len(rows)}")
    m = np.empty((n, k), dtype=complex)
    for r in rows:
        m[int(r["frame"]), int(r["subcarrier"])] = complex(float(r["re"]), float(r["im"]))
    return m


def bison_estimate(M) -> np.ndarray:
    """Least-squares denoised CSI: the per-subcarrier mean of the captures."""
    return _measurements(M).mean(axis=0)


def bison_phase(M) -> np.ndarray:
    """Four-quadrant phase of the denoised CSI, degrees."""
    u = bison_estimate(M)
    zero = u == 0
    if np.any(zero):
        raise DegenerateSubcarrierError(f"zero mean on subcarriers {np.flatnonzero(zero).tolist()}")
    return np.degrees(np.arctan2(u.imag, u.real))


def restore_fingerprint(M, layout: SubcarrierLayout) -> np.ndarray:
    u = bison_estimate(M)
    if np.any(u == 0):
        raise DegenerateSubcarrierError("zero mean on some subcarrier")
    return extract_fingerprint(u, layout)


def restore_fingerprint_prefixes(M, layout: SubcarrierLayout, sizes: Sequence[int]) -> np.ndarray:
    """Restored fingerprints using the first ``n`` captures for each ``n`` in ``sizes``."""
    m = _measurements(M)
    sizes = np.asarray(sizes, dtype=int)
    if sizes.min() < 1 or sizes.max() > m.shape[0]:
        raise ValueError(f"prefix sizes must lie in [1, {m.shape[0]}]")
    csum = np.cumsum(m, axis=0)
    means = csum[sizes - 1] / sizes[:, None]
    if np.any(means == 0):
        raise DegenerateSubcarrierError("zero mean on some subcarrier")
    return extract_fingerprint(means, layout)


def forge_offsets(victim, own) -> np.ndarray:
    """Per-subcarrier rotations that turn ``own`` fingerprint into ``victim``'s."""
    v = np.asarray(victim, dtype=float)
    o = np.asarray(own, dtype=float)
    if v.shape != o.shape:
        raise ValueError(f"fingerprint shapes differ: {v.shape} vs {o.shape}")
    return wrap_deg(v - o)


def track_presence(frames: Iterable[tuple[float, np.ndarray]], references: Mapping,
                   layout: SubcarrierLayout, threshold: float = DEFAULT_THRESHOLD,
                   window: float = 10.0, vote: float = 0.5) -> dict:
    """Presence intervals per device from a time-sorted stream of (time, CSI).

    Every frame is classified on its own. A device counts as present in a
    window when the frames attributed to it there reach ``vote`` times its
    busiest window (and at least one frame). Windows are aligned to multiples
    of ``window``; consecutive present windows merge into ``(start, end)``
    intervals.
    """
    frames = list(frames)
    if not frames:
        return {}
    times = np.array([t for t, _ in frames], dtype=float)
    if np.any(np.diff(times) < 0):
        raise ValueError("frame stream must be time-sorted")
    fps = extract_fingerprint(np.stack([c for _, c in frames]), layout)
    labels = classify_batch(fps, references, threshold)
    t0 = np.floor(times[0] / window) * window
    win = np.floor((times - t0) / window).astype(int)
    counts: dict = defaultdict(lambda: defaultdict(int))
    for w, lab in zip(win.tolist(), labels):
        if lab is not None:
            counts[lab][w] += 1
    out = {}
    for dev, per_win in counts.items():
        peak = max(per_win.values())
        present = sorted(w for w, c in per_win.items() if c >= max(1, vote * peak))
        intervals = []
        for w in present:
            start, end = t0 + w * window, t0 + (w + 1) * window
            if intervals and np.isclose(intervals[-1][1], start):
                intervals[-1] = (intervals[-1][0], end)
            else:
                intervals.append((start, end))
        out[dev] = intervals
    return out


def interval_length(intervals) -> float:
    return float(sum(e - s for s, e in intervals))


def jaccard(a, b) -> float:
    """Overlap over union of two interval lists (each internally disjoint)."""
    inter = 0.0
    for s1, e1 in a:
        for s2, e2 in b:
            inter += max(0.0, min(e1, e2) - max(s1, s2))
    union = interval_length(a) + interval_length(b) - inter
    if union == 0:
        return 1.0
    return inter / union
