"""Desk-scale Monte Carlo experiments; each returns a CSV header and sorted rows."""
from __future__ import annotations

import csv
import dataclasses
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import analysis
from .attack import forge_offsets, jaccard, restore_fingerprint, restore_fingerprint_prefixes, track_presence
from .fingerprint import (accuracy, classify_batch, embed_fingerprint, extract_fingerprint, mae, synth_device,
                          synth_linear_error)
from .keyed import derive_seed
from .link import Link, Radio
from .modulation import constellation, detect
from .obfuscation import (KINDS, DistributionSpec, SecretKey, apply_pattern, generate_patterns,
                          revert_pattern, rfveil_spec)
from .ofdm import PRESETS, ChannelModel, NoiseSpec, SubcarrierLayout, estimate_csi, snr_to_noise_variance
from .protocol import VeilFrame, associate, rx_frame


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass
class ExperimentConfig:
    experiment: str = "naive_mae"
    layout: str = "80211ac"
    kinds: tuple = KINDS
    xi2: tuple = (0.1, 0.4, 0.7, 1.0)
    n: tuple = (100, 500, 1000, 2000, 5000, 10000)
    snr_db: tuple = (20.0,)
    trials: int = 50
    seed: int = 0
    out: str = "results"
    mode: str = "naive"
    channel: str = "flat"
    frames: int = 10000
    mcs: tuple = ("BPSK", "QPSK", "16QAM", "64QAM")
    capture_snr_db: float = 20.0
    capture_n: int = 1000
    window: float = 10.0
    sigma2: float = 1.0
    workers: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError("experiment", f"unknown experiment {self.experiment!r}; "
                                             f"choose from {sorted(EXPERIMENTS)}")
        if self.layout not in PRESETS:
            raise ConfigError("layout", f"unknown preset {self.layout!r}")
        if self.channel not in ("flat", "indoor"):
            raise ConfigError("channel", f"unknown channel preset {self.channel!r}")
        for name in ("trials", "frames", "capture_n", "workers"):
            if getattr(self, name) <= 0:
                raise ConfigError(name, "must be positive")
        for name in ("kinds", "xi2", "n", "snr_db", "mcs"):
            if len(getattr(self, name)) == 0:
                raise ConfigError(name, "grid is empty")
        for k in self.kinds:
            if k not in KINDS:
                raise ConfigError("kinds", f"unknown distribution {k!r}")
        if any(x < 0 for x in self.xi2):
            raise ConfigError("xi2", "variances must be >= 0")
        if any(n < 1 for n in self.n):
            raise ConfigError("n", "sample counts must be >= 1")
        if self.window <= 0:
            raise ConfigError("window", "must be positive")
        required = {"naive_mae": "naive", "rfveil_mae": "rfveil"}.get(self.experiment)
        if self.mode not in ("naive", "rfveil", "standalone"):
            raise ConfigError("mode", f"unknown mode {self.mode!r}")
        if required and self.mode != required:
            raise ConfigError("mode", f"{self.experiment} requires mode={required}")
        return self

    @property
    def layout_obj(self) -> SubcarrierLayout:
        return SubcarrierLayout.preset(self.layout)


EXPERIMENT_DEFAULTS = {
    "naive_mae": {"mode": "naive"},
    "rfveil_mae": {"mode": "rfveil"},
    "throughput": {"mode": "rfveil", "kinds": ("uniform",), "xi2": (1.0,),
                   "snr_db": (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)},
    "impersonation": {"mode": "rfveil", "kinds": ("uniform",), "xi2": (1.0,), "trials": 20,
                      "snr_db": (-10.0, 0.0, 10.0, 20.0, 25.0)},
    "tracking": {"mode": "standalone", "kinds": ("uniform",), "xi2": (1.0,), "trials": 5},
    "crb": {"xi2": (0.1, 1.0), "n": (1, 10, 100), "trials": 10000},
    "classification": {"trials": 5, "frames": 200},
}

_TUPLE_TYPES = {"kinds": str, "xi2": float, "n": int, "snr_db": float, "mcs": str}


def _convert(name: str, raw: str):
    target = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    if name not in target:
        raise ConfigError(name, "unknown configuration key")
    try:
        if name in _TUPLE_TYPES:
            items = [s.strip() for s in raw.split(",") if s.strip()]
            return tuple(_TUPLE_TYPES[name](s) for s in items)
        default = target[name].default
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes")
        return type(default)(raw)
    except ValueError as exc:
        raise ConfigError(name, f"cannot parse {raw!r}: {exc}") from None


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; lists are comma separated."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = _convert(key, value)
    return out


def make_config(experiment: str, overrides: dict | None = None) -> ExperimentConfig:
    values = dict(EXPERIMENT_DEFAULTS.get(experiment, {}))
    values.update(overrides or {})
    values["experiment"] = experiment
    return ExperimentConfig(**values).validate()


def _map(fn: Callable, args: list, workers: int) -> list:
    if workers == 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args))


def _link(cfg: ExperimentConfig, seed: int) -> Link:
    return Link(cfg.layout_obj, ChannelModel.preset(cfg.channel, seed))


def make_radio(seed: int, layout: SubcarrierLayout, device_id=None) -> Radio:
    return Radio(synth_device(seed, layout, device_id), synth_linear_error(seed))


# --- restored-fingerprint error vs number of captures ----------------------

def _mae_trial(args) -> np.ndarray:
    cfg, t, shifted = args
    L = cfg.layout_obj
    s = derive_seed(cfg.seed, "mae", t)
    link = _link(cfg, derive_seed(s, "channel"))
    radio = make_radio(derive_seed(s, "device"), L)
    ref = link.reference(radio)
    key = SecretKey.generate(derive_seed(s, "key"))
    start = derive_seed(s, "start") % (1 << 31)
    Ns = sorted(set(cfg.n))
    idx = start + np.arange(max(Ns))
    out = np.empty((len(cfg.kinds), len(cfg.xi2), len(Ns)))
    for i, kind in enumerate(cfg.kinds):
        for j, x in enumerate(cfg.xi2):
            spec = rfveil_spec(key, kind, x, L) if shifted else DistributionSpec(kind, x)
            M = link.capture(radio, generate_patterns(key, idx, spec, L), cfg.snr_db[0],
                             seed=derive_seed(s, "noise"))
            out[i, j] = mae(restore_fingerprint_prefixes(M, L, Ns), ref)
    return out


def mae_table(cfg: ExperimentConfig, shifted: bool) -> np.ndarray:
    """Per-trial MAE array of shape ``(trials, kinds, xi2, sorted N)``."""
    return np.stack(_map(_mae_trial, [(cfg, t, shifted) for t in range(cfg.trials)], cfg.workers))


def _mae_rows(cfg: ExperimentConfig, shifted: bool):
    table = mae_table(cfg, shifted)
    Ns = sorted(set(cfg.n))
    mean = table.mean(axis=0)
    se = table.std(axis=0, ddof=1) / np.sqrt(cfg.trials) if cfg.trials > 1 else np.zeros_like(mean)
    rows = []
    for i, kind in enumerate(cfg.kinds):
        for j, x in enumerate(cfg.xi2):
            for k, n in enumerate(Ns):
                rows.append((kind, float(x), int(n), float(mean[i, j, k]), float(se[i, j, k])))
    return ("kind", "xi2", "N", "mae_deg", "stderr"), sorted(rows)


def exp_naive_mae(cfg: ExperimentConfig):
    return _mae_rows(cfg, shifted=False)


def exp_rfveil_mae(cfg: ExperimentConfig):
    return _mae_rows(cfg, shifted=True)


# --- symbol error rate with and without obfuscation -----------------------

@dataclass(frozen=True)
class SerPoint:
    ser: float
    stderr: float


def ser_arms(cfg: ExperimentConfig, mcs: str, snr_db: float, wrong_key: bool = False) -> dict:
    """SER of the clean and obfuscated arms (same data and noise draws).

    Each frame is one pilot symbol followed by one data symbol, both rotated by
    the frame's pattern. The receiver equalizes with the pilot CSI. The
    ``wrong_key`` arm instead equalizes with CSI de-obfuscated under a foreign key.
    """
    L = cfg.layout_obj
    s = derive_seed(cfg.seed, "ser", mcs, float(snr_db))
    link = _link(cfg, derive_seed(cfg.seed, "channel"))
    radio = make_radio(derive_seed(cfg.seed, "device"), L)
    key = SecretKey.generate(derive_seed(cfg.seed, "key"))
    spec = rfveil_spec(key, cfg.kinds[0], cfg.xi2[0], L)
    pts = constellation(mcs)
    rng = np.random.default_rng(s)
    sent = rng.integers(pts.size, size=(cfg.frames, L.count))
    frame = np.stack([np.broadcast_to(link.pilots.symbols, (cfg.frames, L.count)), pts[sent]], axis=1)
    frame = embed_fingerprint(frame, radio.profile, radio.linear, L)
    idx = derive_seed(cfg.seed, "start") % (1 << 31) + np.arange(cfg.frames)
    z = generate_patterns(key, idx, spec, L)
    noise = NoiseSpec(snr_to_noise_variance(snr_db), derive_seed(s, "noise"))

    def run(symbols, equalizer=None):
        rx = link.send(symbols, noise)
        h = estimate_csi(rx[:, 0], link.pilots)
        if equalizer is not None:
            h = equalizer(h)
        err = detect(rx[:, 1] / h, pts) != sent
        per_frame = err.mean(axis=1)
        return SerPoint(float(per_frame.mean()), float(per_frame.std(ddof=1) / np.sqrt(cfg.frames)))

    obf = apply_pattern(frame, z[:, None, :])
    out = {"0": run(frame), "1": run(obf)}
    if wrong_key:
        other = SecretKey.generate(derive_seed(cfg.seed, "foreign-key"))
        z_wrong = generate_patterns(other, idx, rfveil_spec(other, cfg.kinds[0], cfg.xi2[0], L), L)
        out["wrong_key"] = run(obf, lambda h: revert_pattern(h, z_wrong))
    return out


def exp_throughput(cfg: ExperimentConfig, wrong_key: bool = False):
    rows = []
    for mcs in cfg.mcs:
        for snr in cfg.snr_db:
            for arm, p in ser_arms(cfg, mcs, snr, wrong_key).items():
                rows.append((mcs, float(snr), arm, p.ser, p.stderr))
    return ("mcs", "snr_db", "obfuscated", "ser", "stderr"), sorted(rows)


# --- impersonation --------------------------------------------------------

N_ENROLLED = 5


def _impersonation_trial(args) -> dict:
    cfg, t = args
    L = cfg.layout_obj
    s = derive_seed(cfg.seed, "impersonation", t)
    link = _link(cfg, derive_seed(s, "channel"))
    radios = [make_radio(derive_seed(s, "device", i), L, f"dev{i}") for i in range(N_ENROLLED)]
    victim = radios[0]
    attacker = make_radio(derive_seed(s, "attacker"), L, "attacker")
    own = link.reference(attacker)
    per = max(1, cfg.frames // cfg.trials)
    counts = {}

    # plain fingerprint authentication: victim frames are sniffed in the clear
    table = {r.device_id: link.reference(r) for r in radios}
    est = restore_fingerprint(link.capture(victim, None, cfg.capture_snr_db, derive_seed(s, "sniff"),
                                           n=cfg.capture_n), L)
    offsets = forge_offsets(est, own)
    for snr in cfg.snr_db:
        C = link.capture(attacker, offsets, snr, derive_seed(s, "forge", float(snr)), n=per)
        labels = classify_batch(extract_fingerprint(C, L), table)
        counts[("plain", float(snr))] = (sum(lab == victim.device_id for lab in labels), per)

    # keyed authentication: sniffed frames are obfuscated, forged frames carry a guessed index
    tx, rx0 = associate(derive_seed(s, "assoc"), radios, link, cfg.kinds[0], cfg.xi2[0])
    idx = tx.next_tx_index + np.arange(cfg.capture_n)
    M = link.capture(victim, generate_patterns(tx.key, idx, tx.spec, L), cfg.capture_snr_db,
                     derive_seed(s, "sniff-veil"))
    offsets = forge_offsets(restore_fingerprint(M, L), own)
    rx0 = dataclasses.replace(rx0, last_rx_index=int(idx[-1]))
    rng = np.random.default_rng(derive_seed(s, "cipher"))
    for snr in cfg.snr_db:
        symbols = link.send(np.broadcast_to(link.pilot_symbols(attacker, offsets), (per, L.count)),
                            NoiseSpec(snr_to_noise_variance(snr), derive_seed(s, "forge-veil", float(snr))))
        rx, wins = rx0, 0
        for row, cipher in zip(symbols, rng.integers(0, 1 << 32, size=per)):
            decision, rx = rx_frame(rx, VeilFrame(int(cipher), victim.device_id, row), link)
            wins += decision.accepted and decision.device_id == victim.device_id
        counts[("rfveil", float(snr))] = (wins, per)
    return counts


def impersonation_counts(cfg: ExperimentConfig) -> dict:
    total: dict = {}
    for counts in _map(_impersonation_trial, [(cfg, t) for t in range(cfg.trials)], cfg.workers):
        for k, (w, n) in counts.items():
            a, b = total.get(k, (0, 0))
            total[k] = (a + w, b + n)
    return total


def exp_impersonation(cfg: ExperimentConfig):
    rows = [(d, snr, w / n) for (d, snr), (w, n) in impersonation_counts(cfg).items()]
    return ("defense", "snr_db", "success_rate"), sorted(rows)


# --- presence tracking ----------------------------------------------------

def default_schedule(seed: int, n_devices: int = 5, duration: float = 300.0, window: float = 10.0) -> dict:
    """Two window-aligned on-intervals per device."""
    rng = np.random.default_rng(seed)
    n_win = int(duration // window)
    sched = {}
    for d in range(n_devices):
        b = np.sort(rng.choice(np.arange(n_win + 1), size=4, replace=False))
        sched[f"dev{d}"] = [(b[0] * window, b[1] * window), (b[2] * window, b[3] * window)]
    return sched


def tracking_trial(cfg: ExperimentConfig, t: int, obfuscate: bool, schedule: dict | None = None,
                   rate: float = 2.0) -> dict:
    """Jaccard index per device between tracked and true presence."""
    L = cfg.layout_obj
    s = derive_seed(cfg.seed, "tracking", t)
    link = _link(cfg, derive_seed(s, "channel"))
    if schedule is None:
        schedule = default_schedule(derive_seed(s, "schedule"), window=cfg.window)
    radios = {dev: make_radio(derive_seed(s, "device", dev), L, dev) for dev in schedule}
    refs = {dev: link.reference(r) for dev, r in radios.items()}
    rng = np.random.default_rng(derive_seed(s, "times"))
    stream = []
    for dev, intervals in schedule.items():
        times = np.concatenate([np.arange(a, b, 1.0 / rate) for a, b in intervals] or [np.empty(0)])
        if times.size == 0:
            continue
        times = times + rng.uniform(0, 1.0 / rate, size=times.size)
        patterns = None
        if obfuscate:
            key = SecretKey.generate(derive_seed(s, "standalone", dev))
            spec = rfveil_spec(key, cfg.kinds[0], cfg.xi2[0], L)
            patterns = generate_patterns(key, np.arange(times.size), spec, L)
        C = link.capture(radios[dev], patterns, cfg.snr_db[0], derive_seed(s, "noise", dev), n=times.size)
        stream.extend(zip(times.tolist(), C))
    stream.sort(key=lambda p: p[0])
    found = track_presence(stream, refs, L, window=cfg.window)
    return {dev: jaccard(found.get(dev, []), truth) for dev, truth in schedule.items()}


def exp_tracking(cfg: ExperimentConfig):
    rows = []
    for label, obf in (("none", False), ("standalone", True)):
        per_dev: dict = {}
        for t in range(cfg.trials):
            for dev, j in tracking_trial(cfg, t, obf).items():
                per_dev.setdefault(dev, []).append(j)
        for dev, js in per_dev.items():
            rows.append((label, dev, float(np.mean(js))))
        rows.append((label, "mean", float(np.mean([np.mean(js) for js in per_dev.values()]))))
    return ("obfuscation", "device", "jaccard"), sorted(rows)


# --- per-frame device classification -------------------------------------

def classification_trial(cfg: ExperimentConfig, t: int) -> tuple[list, list]:
    """``cfg.frames`` noisy frames from each of 5 enrolled devices; returns (predicted, truth)."""
    L = cfg.layout_obj
    s = derive_seed(cfg.seed, "classification", t)
    link = _link(cfg, derive_seed(s, "channel"))
    radios = [make_radio(derive_seed(s, "device", i), L, f"dev{i}") for i in range(N_ENROLLED)]
    refs = {r.device_id: link.reference(r) for r in radios}
    pred, truth = [], []
    for r in radios:
        C = link.capture(r, None, cfg.snr_db[0], derive_seed(s, "noise", r.device_id), n=cfg.frames)
        pred += classify_batch(extract_fingerprint(C, L), refs)
        truth += [r.device_id] * cfg.frames
    return pred, truth


def exp_classification(cfg: ExperimentConfig):
    rows = []
    for t in range(cfg.trials):
        pred, truth = classification_trial(cfg, t)
        rows.append((t, accuracy(pred, truth), sum(p is None for p in pred) / len(pred)))
    return ("trial", "accuracy", "reject_rate"), rows


# --- estimator theory curves ---------------------------------------------

def exp_crb(cfg: ExperimentConfig):
    rows = [(x, f"bias_sq/{name}", v) for x, name, v in analysis.bias_curves(np.linspace(0.0, 1.0, 101))]
    rows += [(x, f"theory/{name}", v)
             for x, name, v in analysis.mse_curves(range(1, 101), cfg.xi2, 1.0, cfg.sigma2)]
    for x in cfg.xi2:
        for mu_deg in (0.0, 90.0):
            who = "legitimate" if mu_deg == 0 else "attacker"
            spec = DistributionSpec("gaussian", x, mu_deg)
            for n in sorted(set(cfg.n)):
                st = analysis.empirical_estimator_stats(1.0, cfg.sigma2, spec, n, cfg.trials,
                                                        seed=derive_seed(cfg.seed, "crb", float(x), mu_deg, n))
                for name, v in (("mse", st.mse), ("variance", st.variance), ("bias_sq", st.bias_sq)):
                    rows.append((float(n), f"empirical/{name}_{who}_xi2_{x}", v))
    return ("x", "series", "value"), sorted(rows, key=lambda r: (r[1], r[0]))


EXPERIMENTS = {
    "naive_mae": exp_naive_mae,
    "rfveil_mae": exp_rfveil_mae,
    "throughput": exp_throughput,
    "impersonation": exp_impersonation,
    "tracking": exp_tracking,
    "crb": exp_crb,
    "classification": exp_classification,
}


def run_experiment(cfg: ExperimentConfig):
    cfg.validate()
    return EXPERIMENTS[cfg.experiment](cfg)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_csv(header, rows), newline="")
    return path
