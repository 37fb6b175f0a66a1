"""Conformal modulus of A(r) over a range of r, at two grid sizes."""
import argparse
import csv
import sys

import numpy as np

from kernelsmith.geometry import make_ar_domain
from kernelsmith.potential import modulus


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--r", type=float, nargs="+", default=[2.2, 2.4, 2.6, 2.8, 3.0, 3.5, 4.0])
    p.add_argument("--M", type=int, default=256)
    args = p.parse_args()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["r", "modulus", "modulus_2M", "drift"])
    for r in args.r:
        a = modulus(make_ar_domain(r, args.M))
        b = modulus(make_ar_domain(r, 2 * args.M))
        w.writerow([r, f"{a:.12f}", f"{b:.12f}", f"{abs(a - b):.1e}"])
    vals = [modulus(make_ar_domain(r, args.M)) for r in sorted(args.r)]
    print("monotone:", bool(np.all(np.diff(vals) > 0)), file=sys.stderr)


if __name__ == "__main__":
    main()
