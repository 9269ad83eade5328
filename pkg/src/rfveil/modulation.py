"""Unit-power square QAM constellations and nearest-point detection."""
from __future__ import annotations

import numpy as np

ORDERS = {"BPSK": 2, "QPSK": 4, "16QAM": 16, "64QAM": 64}


def constellation(mcs: str) -> np.ndarray:
    try:
        M = ORDERS[mcs]
    except KeyError:
        raise ValueError(f"unknown modulation {mcs!r}; choose from {sorted(ORDERS)}") from None
    if M == 2:
        return np.array([-1.0 + 0j, 1.0 + 0j])
    m = int(np.sqrt(M))
    levels = np.arange(-(m - 1), m, 2, dtype=float)
    pts = (levels[:, None] + 1j * levels[None, :]).ravel()
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


def detect(symbols, points) -> np.ndarray:
    """Index of the nearest constellation point for every symbol."""
    s = np.asarray(symbols)[..., None]
    return np.argmin(np.abs(s - points) ** 2, axis=-1)
