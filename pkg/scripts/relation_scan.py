"""Bidegree scan for the (f, K(., b)/f') relation on a domain spec; prints the residual table."""
import argparse
import json
import sys

from kernelsmith import algebra as alg
from kernelsmith.cli import base_point, parse_complex
from kernelsmith.geometry import domain_from_spec, interior_probes
from kernelsmith.szego import ahlfors


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("spec")
    p.add_argument("--max-degree", type=int, default=12)
    p.add_argument("--b")
    args = p.parse_args()
    with open(args.spec) as fh:
        spec = json.load(fh)
    d = domain_from_spec(spec)
    if spec.get("type") == "ar":
        pm, b0 = alg.ar_proper_map(float(spec["r"])), 0.9 + 0.3j
    else:
        pm = alg.ahlfors_proper_map(ahlfors(d, base_point(d, spec)))
        b0 = complex(interior_probes(d, 1, 0.1, offset=3)[0])
    b = alg.choose_b(d, pm, parse_complex(args.b) if args.b else b0)
    scan = alg.scan_until(alg.sample_pair(d, pm, b), args.max_degree)
    sys.stdout.write(scan.table_csv())
    if scan.relation is None:
        print("no relation found", file=sys.stderr)
        return 4
    r = scan.relation
    print(f"relation ({r.du}, {r.dv}) held-out {r.validation_residual:.2e} gap {scan.gap:.2e}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
