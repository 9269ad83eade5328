"""End-to-end pilot transmission: fingerprint, obfuscation, channel, CSI."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fingerprint import DeviceProfile, LinearErrorSpec, embed_fingerprint, extract_fingerprint
from .obfuscation import apply_pattern
from .ofdm import (ChannelModel, NoiseSpec, PilotSequence, SubcarrierLayout, estimate_csi,
                   ofdm_link, snr_to_noise_variance)


@dataclass(frozen=True)
class Radio:
    """A transmitter: its hardware fingerprint and affine phase errors."""
    profile: DeviceProfile
    linear: LinearErrorSpec = field(default_factory=LinearErrorSpec)

    @property
    def device_id(self):
        return self.profile.device_id


@dataclass(frozen=True)
class Link:
    layout: SubcarrierLayout
    channel: ChannelModel = field(default_factory=ChannelModel.flat)
    pilots: PilotSequence | None = None
    cp_len: int | None = None

    def __post_init__(self):
        if self.pilots is None:
            object.__setattr__(self, "pilots", PilotSequence.alternating(self.layout))
        if self.cp_len is None:
            object.__setattr__(self, "cp_len", self.layout.cp_len)

    def pilot_symbols(self, radio: Radio, patterns=None) -> np.ndarray:
        """Pilots as emitted by ``radio``; ``patterns`` (degrees) may be batched."""
        x = embed_fingerprint(self.pilots.symbols, radio.profile, radio.linear, self.layout)
        if patterns is not None:
            x = apply_pattern(x, patterns)
        return x

    def send(self, freq_symbols, noise: NoiseSpec) -> np.ndarray:
        return ofdm_link(freq_symbols, self.channel, noise, self.cp_len)

    def csi(self, received_freq) -> np.ndarray:
        return estimate_csi(received_freq, self.pilots)

    def capture(self, radio: Radio, patterns=None, snr_db: float | None = None, seed: int = 0,
                n: int | None = None) -> np.ndarray:
        """CSI of one or many pilot frames (rows), each with its own noise draw."""
        x = self.pilot_symbols(radio, patterns)
        if n is not None and x.ndim == 1:
            x = np.broadcast_to(x, (n, x.size))
        var = 0.0 if snr_db is None else snr_to_noise_variance(snr_db)
        return self.csi(self.send(x, NoiseSpec(var, seed)))

    def reference(self, radio: Radio) -> np.ndarray:
        """Noiseless, unobfuscated fingerprint of ``radio`` seen through this link."""
        return extract_fingerprint(self.capture(radio), self.layout)
