"""OFDM pilot path: subcarrier layout, multipath channel, AWGN, CSI estimation.

All routines accept arrays with arbitrary leading (batch) axes; the subcarrier
or sample axis is always the last one. Frequency list position ``k`` maps to
DFT bin ``k`` of a ``K``-point transform, and ``layout.index[k]`` is the
signed subcarrier label used for phase-slope work.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PRESETS = {"80211a": 52, "80211ac": 56}


@dataclass(frozen=True)
class SubcarrierLayout:
    count: int

    def __post_init__(self):
        if self.count <= 0 or self.count % 2:
            raise ValueError(f"subcarrier count must be a positive even integer, got {self.count}")

    @classmethod
    def preset(cls, name: str) -> "SubcarrierLayout":
        try:
            return cls(PRESETS[name])
        except KeyError:
            raise ValueError(f"unknown layout preset {name!r}; choose from {sorted(PRESETS)}") from None

    @property
    def index(self) -> np.ndarray:
        """Signed subcarrier labels ``[-K/2, ..., -1, 1, ..., K/2]``."""
        half = self.count // 2
        return np.concatenate([np.arange(-half, 0), np.arange(1, half + 1)])

    @property
    def cp_len(self) -> int:
        return self.count // 4


@dataclass(frozen=True)
class PilotSequence:
    symbols: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.symbols, dtype=complex)
        if s.ndim != 1:
            raise ValueError("pilot symbols must be a 1-D sequence")
        if not np.allclose(np.abs(s), 1.0, rtol=0, atol=1e-12):
            raise ValueError("pilot symbols must have unit magnitude")
        object.__setattr__(self, "symbols", s)

    @classmethod
    def alternating(cls, layout: SubcarrierLayout) -> "PilotSequence":
        """BPSK +1/-1 alternating across the subcarrier labels."""
        return cls(np.where(np.arange(layout.count) % 2 == 0, 1.0, -1.0).astype(complex))


@dataclass(frozen=True)
class ChannelModel:
    taps: np.ndarray
    invariant_hold: int = 1

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.taps, dtype=complex))
        if c.ndim != 1 or c.size == 0:
            raise ValueError("channel taps must be a non-empty 1-D sequence")
        if not np.any(c):
            raise ValueError("channel taps must not all be zero")
        if self.invariant_hold < 1:
            raise ValueError("invariant_hold must be >= 1")
        object.__setattr__(self, "taps", c)

    @classmethod
    def flat(cls) -> "ChannelModel":
        return cls(np.array([1.0 + 0j]))

    @classmethod
    def indoor(cls, seed: int) -> "ChannelModel":
        """Three taps with magnitudes 1, 0.5, 0.25 and uniform random phases."""
        rng = np.random.default_rng(seed)
        phases = rng.uniform(0.0, 2 * np.pi, size=3)
        return cls(np.array([1.0, 0.5, 0.25]) * np.exp(1j * phases))

    @classmethod
    def preset(cls, name: str, seed: int = 0) -> "ChannelModel":
        if name == "flat":
            return cls.flat()
        if name == "indoor":
            return cls.indoor(seed)
        raise ValueError(f"unknown channel preset {name!r}; choose 'flat' or 'indoor'")

    def frequency_response(self, count: int) -> np.ndarray:
        """Eigenvalues of the circulant channel matrix (DFT of zero-padded taps)."""
        if self.taps.size > count:
            raise ValueError("more taps than subcarriers")
        return np.fft.fft(self.taps, count)


@dataclass(frozen=True)
class NoiseSpec:
    variance: float
    seed: int = 0

    def __post_init__(self):
        if not self.variance >= 0:
            raise ValueError(f"noise variance must be >= 0, got {self.variance}")

    def draw(self, shape) -> np.ndarray:
        """Circularly-symmetric complex Gaussian samples, ``variance`` per sample."""
        if self.variance == 0:
            return np.zeros(shape, dtype=complex)
        rng = np.random.default_rng(self.seed)
        scale = np.sqrt(self.variance / 2)
        return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def snr_to_noise_variance(snr_db: float) -> float:
    """Noise variance for unit average signal power."""
    return float(10.0 ** (-snr_db / 10.0))


def frequency_to_time(freq_symbol, cp_len: int) -> np.ndarray:
    """Unitary IDFT of the last axis with the last ``cp_len`` samples prepended."""
    x = np.asarray(freq_symbol, dtype=complex)
    K = x.shape[-1]
    if K == 0:
        raise ValueError("empty frequency symbol")
    if not 0 <= cp_len <= K:
        raise ValueError(f"cyclic prefix length must lie in [0, {K}], got {cp_len}")
    body = np.fft.ifft(x, axis=-1) * np.sqrt(K)
    if cp_len == 0:
        return body
    return np.concatenate([body[..., K - cp_len:], body], axis=-1)


def strip_cp(samples, cp_len: int) -> np.ndarray:
    s = np.asarray(samples, dtype=complex)
    if s.shape[-1] <= cp_len:
        raise ValueError("sample block shorter than cyclic prefix")
    return s[..., cp_len:]


def time_to_frequency(time_body) -> np.ndarray:
    """Unitary DFT of the last axis (inverse of the body of :func:`frequency_to_time`)."""
    t = np.asarray(time_body, dtype=complex)
    return np.fft.fft(t, axis=-1) / np.sqrt(t.shape[-1])


def transmit(time_samples, channel: ChannelModel, noise: NoiseSpec, cp_len: int) -> np.ndarray:
    """Convolve each block with the channel taps and add AWGN.

    The convolution tail that would spill into the next block is dropped, so
    after removing the cyclic prefix the result equals a circular convolution
    of the block body with the taps.
    """
    x = np.asarray(time_samples, dtype=complex)
    J = channel.taps.size
    if J > cp_len:
        raise ValueError(f"channel has {J} taps but cyclic prefix is only {cp_len} samples; "
                         "inter-block interference is not modeled")
    n = x.shape[-1]
    y = np.zeros_like(x)
    for j, c in enumerate(channel.taps):
        y[..., j:] += c * x[..., : n - j]
    return y + noise.draw(y.shape)


def estimate_csi(received_freq, pilots: PilotSequence) -> np.ndarray:
    """Least-squares per-subcarrier channel estimate ``y_k s_k^* / |s_k|^2``."""
    y = np.asarray(received_freq, dtype=complex)
    s = pilots.symbols
    if y.shape[-1] != s.size:
        raise ValueError(f"received symbol has {y.shape[-1]} subcarriers, pilots have {s.size}")
    power = np.abs(s) ** 2
    if np.any(power == 0):
        raise ValueError("pilot symbol with zero magnitude")
    return y * np.conj(s) / power


def ofdm_link(freq_symbols, channel: ChannelModel, noise: NoiseSpec, cp_len: int) -> np.ndarray:
    """Modulate, send through ``channel`` with ``noise``, strip CP and demodulate."""
    tx = frequency_to_time(freq_symbols, cp_len)
    rx = transmit(tx, channel, noise, cp_len)
    return time_to_frequency(strip_cp(rx, cp_len))


def channel_capacity(csi, noise_variance: float) -> np.ndarray:
    """Per-subcarrier Shannon capacity in bits/s/Hz."""
    if not noise_variance > 0:
        raise ValueError(f"noise variance must be > 0, got {noise_variance}")
    h = np.asarray(csi, dtype=complex)
    # log1p keeps full relative precision on weak subcarriers
    return np.log1p(np.abs(h) ** 2 / noise_variance) / np.log(2.0)


def validate_csi(csi, layout: SubcarrierLayout | None = None) -> np.ndarray:
    h = np.asarray(csi, dtype=complex)
    if layout is not None and h.shape[-1] != layout.count:
        raise ValueError(f"CSI has {h.shape[-1]} subcarriers, layout expects {layout.count}")
    if not np.all(np.isfinite(h)):
        raise ValueError("CSI contains non-finite values")
    return h
