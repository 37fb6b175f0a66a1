"""Continue K(., w) on A(r) along paths inside, across the boundary, and around a branch point.

Writes inside.csv, exit.csv and loop.csv (points, tracked value, full root multiset).
"""
import argparse
from pathlib import Path

import numpy as np

from kernelsmith import algebra as alg
from kernelsmith.geometry import make_ar_domain
from kernelsmith.potential import bergman_oracle


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--r", type=float, default=3.0)
    p.add_argument("--w", default="0.4+1.0j")
    p.add_argument("--out", default="continuation_out")
    args = p.parse_args()
    r, w = args.r, complex(args.w)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    d = make_ar_domain(r)
    pm = alg.ar_proper_map(r)
    samples = alg.sample_triple(d, pm)
    fit = alg.ar_kernel_relation(r, samples, pm)
    rel = fit.relation
    K = bergman_oracle(d)
    print(f"relation: K-degree {rel.dk}, (x, y) degrees ({rel.dx}, {rel.dy}), "
          f"held-out residual {rel.validation_residual:.1e}")

    inside = np.linspace(1.5 + 0.2j, 0.5 + 1.2j, 9)
    tr = alg.continue_kernel(rel, pm.f, w, inside, K([inside[0]], [w])[0, 0])
    ref = K(tr.points, [w])[:, 0]
    print(f"inside: max rel err vs oracle {np.max(np.abs(tr.values - ref) / np.abs(ref)):.1e}")
    (out / "inside.csv").write_text(tr.to_csv())

    edge = float(np.max(np.abs(d.outer.samples.real)))
    exit_path = np.linspace(1.5, edge + 0.3, 6) + 0j
    tr = alg.continue_kernel(rel, pm.f, w, exit_path, K([exit_path[0]], [w])[0, 0])
    print(f"exit to z = {exit_path[-1].real:.2f}: {tr.branch_count} branches, tracked value {tr.values[-1]:.6g}")
    (out / "exit.csv").write_text(tr.to_csv())

    zb = alg.kernel_branch_points(fit, w)
    centre = zb[np.argmax(zb.real)]
    start = 1.5 + 0.3j
    seed = K([start], [w])[0, 0]
    tr = alg.continue_kernel(rel, pm.f, w, alg.loop_path(start, centre, 0.4), seed)
    print(f"loop around branch point {centre:.4f}: returns {tr.values[-1]:.6g} (started at {seed:.6g})")
    (out / "loop.csv").write_text(tr.to_csv())


if __name__ == "__main__":
    main()
