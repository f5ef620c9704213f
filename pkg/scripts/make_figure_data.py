#!/usr/bin/env python3
"""Emit the full set of curve datasets for the study's standard plots.

Writes CSV files into --outdir (default ./figure_data):

  keyrate_asym_k{0..3}.csv     key rate vs distance, extreme asymmetric,
                               Alice-side subtraction at per-distance
                               optimal t_ps (the t_ps column doubles as
                               the optimal-transmittance-vs-distance
                               profile)
  noise_asym_k{0..3}.csv       tolerable excess noise vs distance
  keyrate_bob_k{1..3}.csv      Bob-side subtraction curves
  keyrate_both_k1.csv          two-sided subtraction curve
  keyrate_sym_{ind,neg}_k{0,1}.csv
                               symmetric layout, V=10^4, independent vs
                               negative-EPR correlated attack
  success_prob_k{1..3}.csv     subtraction success probability vs t_ps

Everything is a plain CLI invocation, so any row can be reproduced by
hand with `cvmdi-ps`.
"""

import argparse
import pathlib
import sys
import time

from cvmdi_ps.cli import main as cli


def run(outdir: pathlib.Path, name: str, args: list[str]) -> None:
    out = outdir / name
    start = time.perf_counter()
    rc = cli(args + ["--out", str(out)])
    status = "ok" if rc == 0 else f"exit {rc}"
    print(f"  {name:32s} {status} ({time.perf_counter() - start:.1f}s)")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="figure_data")
    args = parser.parse_args(argv)
    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    print("extreme asymmetric key-rate curves (V=40, eps=0.002, beta=0.95)")
    run(outdir, "keyrate_asym_k0.csv",
        ["keyrate-curve", "--scheme", "none", "--dmax", "80"])
    for k in (1, 2, 3):
        run(outdir, f"keyrate_asym_k{k}.csv",
            ["keyrate-curve", "--scheme", "alice", "--k", str(k), "--dmax", "80"])

    print("tolerable-noise curves")
    run(outdir, "noise_asym_k0.csv",
        ["noise-curve", "--scheme", "none", "--dmax", "40", "--step", "5"])
    for k in (1, 2, 3):
        run(outdir, f"noise_asym_k{k}.csv",
            ["noise-curve", "--scheme", "alice", "--k", str(k), "--dmax", "60",
             "--step", "5"])

    print("Bob-side and two-sided subtraction")
    for k in (1, 2, 3):
        run(outdir, f"keyrate_bob_k{k}.csv",
            ["keyrate-curve", "--scheme", "bob", "--k", str(k), "--dmax", "45"])
    run(outdir, "keyrate_both_k1.csv",
        ["keyrate-curve", "--scheme", "both", "--k", "1", "--dmax", "70"])

    print("symmetric layout under independent and correlated attacks (V=10^4)")
    for attack, tag in (("independent", "ind"), ("negative-epr", "neg")):
        run(outdir, f"keyrate_sym_{tag}_k0.csv",
            ["keyrate-curve", "--scheme", "none", "--geometry", "symmetric",
             "--attack", attack, "--dmax", "8", "--step", "0.25"])
        run(outdir, f"keyrate_sym_{tag}_k1.csv",
            ["keyrate-curve", "--scheme", "alice", "--k", "1", "--geometry",
             "symmetric", "--attack", attack, "--dmax", "8", "--step", "0.25"])

    print("success-probability profiles")
    for k in (1, 2, 3):
        run(outdir, f"success_prob_k{k}.csv",
            ["success-prob", "--k", str(k)])

    print(f"done: {outdir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
