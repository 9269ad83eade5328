"""Regenerate the golden pattern fixtures in tests/fixtures.

Only rerun this after an intentional change to the keyed generator or the
samplers; the golden tests exist to catch unintentional ones.
"""
import cmath
import csv
import math
from pathlib import Path

from rfveil.obfuscation import KINDS, DistributionSpec, SecretKey, generate_pattern, rfveil_spec
from rfveil.ofdm import SubcarrierLayout

GOLDEN_KEY = SecretKey(0x0123456789ABCDEFFEDCBA9876543210)
GOLDEN_INDEX = 1_000_003
OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def golden_specs(layout):
    for kind in KINDS:
        yield f"pattern_{kind}_naive.csv", DistributionSpec(kind, 1.0)
    yield "pattern_uniform_rfveil.csv", rfveil_spec(GOLDEN_KEY, "uniform", 0.1, layout)


def write_pattern(path, layout, z):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("subcarrier", "z_deg"))
        for v, angle in zip(layout.index.tolist(), z.tolist()):
            w.writerow((v, repr(angle)))


BIAS_MU_DEG = (0, 1, 2, 5, 10, 20, 45, 90, 180)


def bias_curve_rows():
    """Squared bias |E[u] - h|^2 with |h| = 1 from the complex mean, one row per (mu, xi2)."""
    rows = []
    for mu in BIAS_MU_DEG:
        series = "legitimate" if mu == 0 else f"attacker_mu{mu}"
        for i in range(101):
            x = i / 100
            b = cmath.exp(-x / 2) * cmath.exp(1j * math.radians(mu)) - 1
            rows.append((x, series, abs(b) ** 2))
    return rows


def main():
    layout = SubcarrierLayout.preset("80211ac")
    OUT.mkdir(parents=True, exist_ok=True)
    for name, spec in golden_specs(layout):
        write_pattern(OUT / name, layout, generate_pattern(GOLDEN_KEY, GOLDEN_INDEX, spec, layout).z)
        print(OUT / name)
    with open(OUT / "bias_curves.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("xi2", "series", "bias_sq"))
        for x, series, v in bias_curve_rows():
            w.writerow((repr(x), series, repr(v)))
    print(OUT / "bias_curves.csv")


if __name__ == "__main__":
    main()
