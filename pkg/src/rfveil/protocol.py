"""Keyed session protocol: index sync, XOR index cipher, replay checks, auth."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Hashable, Literal, Mapping, Optional

import numpy as np

from .fingerprint import DEFAULT_THRESHOLD, distances, extract_fingerprint
from .keyed import KeyedStream, derive_seed
from .link import Link, Radio
from .obfuscation import DistributionSpec, SecretKey, generate_pattern, revert_pattern, rfveil_spec
from .ofdm import NoiseSpec

INDEX_MAX = 0xFFFFFFFF
INITIAL_INDEX_MAX = 2_147_483_648

_ASSOC = 0x4153534F43000005
_STANDALONE = 0x5354414E44000006


class RekeyRequired(RuntimeError):
    """The 32-bit sync index space of the current key is exhausted."""


@dataclass(frozen=True)
class SessionState:
    role: Literal["transmitter", "receiver"]
    key: Optional[SecretKey]
    spec: DistributionSpec
    mode: Literal["rfveil", "standalone"] = "rfveil"
    next_tx_index: int = 0
    last_rx_index: Optional[int] = None
    reference_table: Mapping[Hashable, np.ndarray] = field(default_factory=dict)
    threshold: float = DEFAULT_THRESHOLD


@dataclass(frozen=True)
class VeilFrame:
    encrypted_index: int
    sender_id: Hashable
    freq_symbols: np.ndarray
    payload_ok: bool = True


@dataclass(frozen=True)
class Decision:
    accepted: bool
    device_id: Hashable = None
    reason: str = ""
    index: Optional[int] = None
    mae_deg: float = float("nan")


def encrypt_index(index: int, key: SecretKey) -> int:
    return (int(index) ^ key.low32) & INDEX_MAX


decrypt_index = encrypt_index


def key_renewal_time(rate_pps: float, start_index: int) -> float:
    """Seconds until the index space starting at ``start_index`` runs out."""
    if not rate_pps > 0:
        raise ValueError(f"rate must be > 0, got {rate_pps}")
    if not 0 <= start_index <= INDEX_MAX:
        raise ValueError("start index must be a 32-bit unsigned integer")
    return (2 ** 32 - int(start_index)) / rate_pps


def associate(seed: int, radios, link: Link, kind: str = "uniform", variance: float = 1.0,
              mode: str = "rfveil", shifted_means: bool = True,
              threshold: float = DEFAULT_THRESHOLD) -> tuple[SessionState, SessionState]:
    """Install a shared key and the client reference fingerprints.

    ``radios`` is one :class:`Radio` or a list; the receiver's table holds the
    noiseless enrollment fingerprint of each. In ``standalone`` mode the key is
    local to the transmitter and the receiver gets none.
    """
    if isinstance(radios, Radio):
        radios = [radios]
    if mode not in ("rfveil", "standalone"):
        raise ValueError(f"unknown mode {mode!r}")
    key = SecretKey.generate(derive_seed(_ASSOC if mode == "rfveil" else _STANDALONE, seed))
    spec = (rfveil_spec(key, kind, variance, link.layout) if shifted_means
            else DistributionSpec(kind, variance))
    start = int(KeyedStream(derive_seed(_ASSOC, seed, 1)).bits64(1)[0] % (INITIAL_INDEX_MAX + 1))
    table = {r.device_id: link.reference(r) for r in radios}
    tx = SessionState("transmitter", key, spec, mode, next_tx_index=start, threshold=threshold)
    rx = SessionState("receiver", key if mode == "rfveil" else None, spec, mode,
                      reference_table=table, threshold=threshold)
    return tx, rx


def tx_frame(state: SessionState, radio: Radio, link: Link, noise: NoiseSpec,
             payload_ok: bool = True) -> tuple[VeilFrame, SessionState]:
    """Obfuscate and send one pilot frame; every call (retransmissions too) burns an index."""
    index = state.next_tx_index
    if index > INDEX_MAX:
        raise RekeyRequired("sync index space exhausted; renew the session key")
    pattern = generate_pattern(state.key, index, state.spec, link.layout)
    rx_symbols = link.send(link.pilot_symbols(radio, pattern.z), noise)
    frame = VeilFrame(encrypt_index(index, state.key), radio.device_id, rx_symbols, payload_ok)
    return frame, replace(state, next_tx_index=index + 1)


def authenticate(csi, claimed_id, reference_table: Mapping, link: Link,
                 threshold: float = DEFAULT_THRESHOLD, metric: str = "mae") -> Decision:
    """Fingerprint check of one CSI vector against the claimed identity."""
    if not reference_table:
        return Decision(False, reason="unknown-device")
    fp = extract_fingerprint(csi, link.layout)
    d, ids = distances(fp, reference_table, metric)
    best = int(np.argmin(d))
    winner = ids[best]
    claimed = float(d[ids.index(claimed_id)]) if claimed_id in ids else float("nan")
    if d[best] <= threshold and winner == claimed_id:
        return Decision(True, winner, "", mae_deg=claimed)
    if claimed_id not in ids and d[best] > threshold:
        return Decision(False, reason="unknown-device", mae_deg=float(d[best]))
    return Decision(False, reason="fingerprint", mae_deg=claimed)


def rx_frame(state: SessionState, frame: VeilFrame, link: Link) -> tuple[Decision, SessionState]:
    if not frame.payload_ok:
        return Decision(False, reason="fcs"), state
    csi = link.csi(frame.freq_symbols)
    if state.key is None:
        # receiver unaware of the obfuscation: plain fingerprint check
        return authenticate(csi, frame.sender_id, state.reference_table, link, state.threshold), state
    index = decrypt_index(frame.encrypted_index, state.key)
    if state.last_rx_index is not None and index <= state.last_rx_index:
        return Decision(False, reason="replay", index=index), state
    pattern = generate_pattern(state.key, index, state.spec, link.layout)
    decision = authenticate(revert_pattern(csi, pattern), frame.sender_id, state.reference_table,
                            link, state.threshold)
    decision = replace(decision, index=index)
    if decision.accepted:
        state = replace(state, last_rx_index=index)
    return decision, state


TRACE_HEADER = ("frame_no", "plain_index", "decision", "reason", "mae_deg")


def trace_row(frame_no: int, decision: Decision) -> tuple:
    return (frame_no, "" if decision.index is None else decision.index,
            "ACCEPT" if decision.accepted else "REJECT", decision.reason, decision.mae_deg)
