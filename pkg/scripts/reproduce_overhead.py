"""Reproduce the bandwidth and computation overhead analysis.

Writes the three sweep CSVs (commitment bandwidth vs symbol width, online
tag bandwidth vs data length, per-packet verification time vs data length)
and prints the headline numbers for the default setting of five sessions,
generation size 100 and 1024-symbol packets.

Usage:
    python3 scripts/reproduce_overhead.py [--out overhead_out]
"""
import argparse
import pathlib
import sys

from ncdetect import overhead


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="overhead_out", help="output directory")
    args = ap.parse_args(argv)

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = {5: "commit_bandwidth_vs_qbits.csv",
             6: "online_bandwidth_vs_datalen.csv",
             7: "verify_time_vs_datalen.csv"}
    for fig, name in names.items():
        overhead.dump_csv(fig, out / name)
        print(f"wrote {out / name}")

    d = overhead.DEFAULTS
    print("\nheadline numbers (s=5, g=100, n=1024, |q|=128, N=256):")
    for scheme, label in (("intermac_cpk", "padded-key"),
                          ("spacemac_pm", "subspace")):
        saved = overhead.offline_saving(d, scheme) * 100
        print(f"  {label} commitment saves {saved:.4f}% vs cleartext upload")
    pm256 = overhead.offline_saving(
        overhead.OverheadParams(q_bits=256), "spacemac_pm") * 100
    print(f"  subspace saving at 256-bit symbols: {pm256:.4f}%")
    single = overhead.online_fraction(d, "single") * 100
    ripple = overhead.online_fraction(d, "ripple") * 100
    ratio = overhead.online_baseline_ratio(d)
    print(f"  online tag bandwidth: {single:.4f}% single slot, "
          f"{ripple:.4f}% with one slot per hop, "
          f"{ratio:.4f}x less than per-source signatures")
    mac = overhead.compute_cost(d, "mac")
    base = overhead.compute_cost(d, "baseline")
    mixed = overhead.compute_cost(d, "hash")
    print(f"  verification: MAC {mac.seconds * 1e3:.3f} ms/packet, "
          f"signature baseline {base.seconds:.4f} s/packet "
          f"({base.mults / mac.mults:.1f}x more work), "
          f"hash pair {mixed.seconds * 1e3:.3f} ms/packet expected")
    return 0


if __name__ == "__main__":
    sys.exit(main())
