"""Command-line front end: domains, kernel values, identity suites and relation discovery."""
from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import io
import json
import os
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import (NoRelationFound, ahlfors_proper_map, ar_kernel_relation, ar_proper_map, choose_b,
                      hermitian_swap_residual, minimal_relation, sample_pair, sample_triple, shuffled_control)
from .calculus import GuardError
from .geometry import Domain, GeometryError, domain_from_spec, interior_probes
from .identities import (CheckRecord, ahlfors_ratio_check, biholo_transport_check, build_generator_set,
                         check_boundary_identities, expansion_checks, fit_expansions, garabedian_from_generators,
                         generator_diagonal_check, green_factorization_check, pair_grid, proper_map_expansion,
                         reconstruct_bergman, reconstruction_check, szego_from_generators)
from .potential import bergman_oracle, green, lambda_oracle
from .szego import (ahlfors, garabedian_kernel, kerzman_stein_kernel, select_base_point, szego_kernel,
                    szego_solve)

EXIT_FAILED, EXIT_SPEC, EXIT_GUARD, EXIT_NO_RELATION = 1, 2, 3, 4
SUITES = ("szego", "bergman", "reconstruct", "biholo")


# ---------------------------------------------------------------- reports

def spec_hash(spec: dict) -> str:
    return hashlib.sha256(json.dumps(spec, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


@dataclass
class RunReport:
    spec: dict
    checks: list = field(default_factory=list)
    timing: dict | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, records):
        seen = {c.id for c in self.checks}
        for r in records:
            if r.id in seen:
                raise ValueError(f"duplicate check id {r.id}")
            seen.add(r.id)
            self.checks.append(r)

    def to_dict(self) -> dict:
        d = {"version": __version__, "spec_hash": spec_hash(self.spec), "pass": self.passed,
             "checks": [c.to_dict() for c in self.checks]}
        if self.timing is not None:
            d["timing"] = self.timing
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


# ---------------------------------------------------------------- suites

def _rel_err(a, b) -> float:
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def _disc_params(spec: dict):
    """(center, radius) if the spec is a single disc, else None."""
    if spec.get("type") == "circles" and len(spec["radii"]) == 1:
        c = spec["centers"][0]
        return complex(c[0], c[1]), float(spec["radii"][0])
    return None


def base_point(domain: Domain, spec: dict) -> complex:
    if "a" in spec:
        return complex(*spec["a"])
    return select_base_point(domain, 1j)


def disc_closed_form_checks(domain: Domain, center: complex, R: float, a: complex) -> list[CheckRecord]:
    z, w = pair_grid(domain, 12)
    t = (z - center) / R
    s = (w - center) / R
    den = 1 - t[:, None] * np.conj(s)[None, :]
    S = 1 / (2 * np.pi * R * den)
    K = 1 / (np.pi * R ** 2 * den ** 2)
    L = 1 / (2 * np.pi * (z[:, None] - w[None, :]))
    al = (a - center) / R
    F = (t - al) / (1 - np.conj(al) * t)
    grid = "12x12 interior pairs"
    return [
        CheckRecord("disc_szego_closed_form", grid, _rel_err(szego_kernel(domain, z, w), S), 1e-8),
        CheckRecord("disc_garabedian_closed_form", grid, _rel_err(garabedian_kernel(domain, z, w), L), 1e-8),
        CheckRecord("disc_bergman_closed_form", grid, _rel_err(bergman_oracle(domain)(z, w), K), 1e-8),
        CheckRecord("disc_ahlfors_mobius", "12 interior points", _rel_err(ahlfors(domain, a).f(z), F), 1e-8),
    ]


def suite_szego(domain: Domain, spec: dict, a: complex) -> list[CheckRecord]:
    out = []
    A = kerzman_stein_kernel(domain)
    out.append(CheckRecord("kerzman_stein_skew_hermitian", "boundary grid",
                           float(np.max(np.abs(A + A.conj().T))), 1e-12))
    disc = _disc_params(spec)
    if disc is not None:
        out.append(CheckRecord("kerzman_stein_vanishes_on_circle", "boundary grid", float(np.max(np.abs(A))), 1e-12))
    sol = szego_solve(domain, a)
    out.append(CheckRecord("szego_garabedian_boundary_identity", "boundary grid", sol.identity_residual(), 1e-7))
    amap = ahlfors(domain, a, sol)
    out.append(CheckRecord("ahlfors_boundary_modulus", "boundary grid", amap.boundary_modulus_error(), 1e-7))
    saa = float(np.real(sol.S(a)))
    out.append(CheckRecord("ahlfors_derivative_at_base", "base point",
                           abs(amap.derivative_at_a - 2 * np.pi * saa) / (2 * np.pi * saa), 1e-7))
    out.append(CheckRecord("ahlfors_degree", "argument principle", float(abs(amap.degree() - domain.n)), 0.0))
    gs = build_generator_set(domain, a)
    z, w = pair_grid(domain, 12, avoid=gs.points, avoid_dist=1e-2)
    out.append(CheckRecord("szego_from_generators", "12x12 interior pairs",
                           _rel_err(szego_from_generators(gs, z, w), szego_kernel(domain, z, w)), 1e-8))
    out.append(CheckRecord("garabedian_from_generators", "12x12 interior pairs",
                           _rel_err(garabedian_from_generators(gs, z, w), garabedian_kernel(domain, z, w)), 1e-8))
    if disc is not None:
        out.extend(disc_closed_form_checks(domain, *disc, a))
    return out


def suite_bergman(domain: Domain, spec: dict, a: complex) -> list[CheckRecord]:
    gs = build_generator_set(domain, a)
    ex = fit_expansions(domain, gs)
    out = list(expansion_checks(domain, gs, ex))
    out.append(generator_diagonal_check(gs, ex))
    out.append(ahlfors_ratio_check(domain, gs, ex))
    out.extend(check_boundary_identities(domain, gs))
    out.extend(proper_map_expansion(domain, gs.maps[0], gs))
    out.append(green_factorization_check(domain, gs.maps[0]))
    z, w = pair_grid(domain, 10)
    K = bergman_oracle(domain)(z, w)
    Kt = bergman_oracle(domain)(w, z)
    out.append(CheckRecord("bergman_hermitian", "10x10 interior pairs", _rel_err(K, np.conj(Kt.T)), 1e-8))
    zz, ww = z[:5], w[:5]
    G = green(domain)(zz, ww)
    Gt = green(domain)(ww, zz)
    out.append(CheckRecord("green_symmetric", "5x5 interior pairs", _rel_err(G, Gt.T), 1e-8))
    Lam = lambda_oracle(domain)(zz, ww)
    Lt = lambda_oracle(domain)(ww, zz)
    out.append(CheckRecord("lambda_symmetric", "5x5 interior pairs", _rel_err(Lam, Lt.T), 1e-8))
    return out


def suite_reconstruct(domain: Domain, spec: dict, a: complex) -> list[CheckRecord]:
    gs = build_generator_set(domain, a)
    ex = fit_expansions(domain, gs)
    rec = reconstruct_bergman(gs, ex)
    record, _ = reconstruction_check(gs, rec)
    n = domain.n
    bound = n * n - 2 * n + 2
    size = CheckRecord("generator_set_size", f"bound n^2-2n+2 = {bound}", float(max(0, len(gs.points) - bound)), 0.0)
    return [record, size]


def self_maps(domain: Domain, spec: dict) -> list[tuple]:
    """Explicit automorphisms (label, phi, dphi) the domain is known to admit."""
    kind = spec.get("type")
    if kind == "ar":
        return [("inversion", lambda z: 1 / z, lambda z: -1 / z ** 2),
                ("negation", lambda z: -z, lambda z: -np.ones_like(z))]
    disc = _disc_params(spec)
    if disc is not None:
        c, R = disc
        al = 0.3

        def phi(z):
            t = (z - c) / R
            return c + R * (t - al) / (1 - al * t)

        def dphi(z):
            t = (z - c) / R
            return (1 - al * al) / (1 - al * t) ** 2

        return [("mobius", phi, dphi)]
    centers = [complex(*p) for p in spec.get("centers", [])]
    radii = spec.get("radii", [])
    maps = []
    if len(centers) == 2 and abs(centers[0] - centers[1]) < 1e-14:
        c, k = centers[0], radii[0] * radii[1]
        maps.append(("annulus_inversion", lambda z: c + k / (z - c), lambda z: -k / (z - c) ** 2))
    if len(centers) > 2:
        c = centers[0]
        pts = domain.points
        refl = 2 * c - pts
        if np.max(np.min(np.abs(refl[:, None] - pts[None, :]), axis=1)) < 1e-9:
            maps.append(("point_reflection", lambda z: 2 * c - z, lambda z: -np.ones_like(z)))
    return maps


def suite_biholo(domain: Domain, spec: dict, a: complex) -> list[CheckRecord]:
    out = []
    for label, phi, dphi in self_maps(domain, spec):
        out.extend(biholo_transport_check(domain, domain, phi, dphi, label=label))
    return out


SUITE_FUNCS = {"szego": suite_szego, "bergman": suite_bergman, "reconstruct": suite_reconstruct,
               "biholo": suite_biholo}


@dataclass(frozen=True)
class VerifyConfig:
    """Suites to run and per-check threshold overrides (check id -> threshold)."""

    suites: tuple = SUITES
    thresholds: dict = field(default_factory=dict)
    timing: bool = False


@dataclass(frozen=True)
class DiscoverConfig:
    max_degree: int = 12
    count: int = 400
    tol: float = 1e-6
    b: complex | None = None


def run_suites(domain: Domain, spec: dict, names, timing: bool = False,
               thresholds: dict | None = None) -> RunReport:
    report = RunReport(spec, timing={} if timing else None)
    a = base_point(domain, spec)
    for name in names:
        t0 = time.perf_counter()
        report.add(SUITE_FUNCS[name](domain, spec, a))
        if timing:
            report.timing[name] = round(time.perf_counter() - t0, 3)
    if thresholds:
        ids = {c.id for c in report.checks}
        unknown = sorted(set(thresholds) - ids)
        if unknown:
            raise ValueError(f"threshold override for unknown check(s): {', '.join(unknown)}")
        report.checks = [replace(c, threshold=float(thresholds[c.id])) if c.id in thresholds else c
                         for c in report.checks]
    return report


def run_config(domain: Domain, spec: dict, cfg: VerifyConfig) -> RunReport:
    return run_suites(domain, spec, cfg.suites, cfg.timing, cfg.thresholds)


# ---------------------------------------------------------------- helpers

def _load_spec(path: str) -> tuple[dict, Domain]:
    with open(path) as fh:
        spec = json.load(fh)
    return spec, domain_from_spec(spec)


def parse_complex(text: str) -> complex:
    return complex(text.strip().replace(" ", "").replace("i", "j"))


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    p = Path(args.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _emit(args, name: str, text: str):
    d = _out_dir(args)
    if d is None:
        sys.stdout.write(text)
    else:
        (d / name).write_text(text)


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------- commands

def cmd_domain(args) -> int:
    spec, domain = _load_spec(args.spec)
    boxes = []
    for c in domain.curves:
        p = c.samples
        boxes.append([float(p.real.min()), float(p.real.max()), float(p.imag.min()), float(p.imag.max())])
    summary = {"n": domain.n, "M": domain.sizes, "bounding_boxes": boxes,
               "invariants": domain.invariant_report(), "spec_hash": spec_hash(spec)}
    _emit(args, "domain.json", json.dumps(summary, indent=2, default=float) + "\n")
    return 0


def _kernel_values(domain: Domain, spec: dict, kind: str, z, w, a: complex | None):
    if kind == "K":
        return bergman_oracle(domain)(z, w)
    if kind == "Lambda":
        return lambda_oracle(domain)(z, w)
    if kind == "G":
        return green(domain)(z, w).astype(complex)
    if kind == "S":
        return szego_kernel(domain, z, w)
    if kind == "L":
        if np.any(np.abs(np.asarray(z)[:, None] - np.asarray(w)[None, :]) < 1e-3):
            raise GuardError("L evaluated within 1e-3 of the diagonal")
        return garabedian_kernel(domain, z, w)
    raise ValueError(kind)


def cmd_kernel(args) -> int:
    spec, domain = _load_spec(args.spec)
    kind = args.kind
    if kind == "ahlfors":
        a = parse_complex(args.base) if args.base else base_point(domain, spec)
        amap = ahlfors(domain, a)
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        if args.boundary:
            fb = amap.f_boundary.values
            wr.writerow(["re_z", "im_z", "re_f", "im_f", "modulus_error"])
            for p, v in zip(domain.points, fb):
                wr.writerow([_fmt(p.real), _fmt(p.imag), _fmt(v.real), _fmt(v.imag), _fmt(abs(abs(v) - 1))])
            _emit(args, "ahlfors_boundary.csv", buf.getvalue())
            return 0
        z = ([parse_complex(args.at.split(",")[0])] if args.at
             else interior_probes(domain, args.grid or 16, 0.05))
        vals = amap.f(np.asarray(z))
        wr.writerow(["re_z", "im_z", "re_val", "im_val"])
        for p, v in zip(np.atleast_1d(z), np.atleast_1d(vals)):
            wr.writerow([_fmt(p.real), _fmt(p.imag), _fmt(v.real), _fmt(v.imag)])
        _emit(args, "ahlfors.csv", buf.getvalue())
        return 0
    if args.at:
        parts = args.at.split(",")
        if len(parts) != 2:
            raise ValueError("--at expects 'z,w'")
        z, w = np.array([parse_complex(parts[0])]), np.array([parse_complex(parts[1])])
        val = complex(_kernel_values(domain, spec, kind, z, w, None)[0, 0])
        _emit(args, "kernel.json", json.dumps({"kind": kind, "z": [z[0].real, z[0].imag],
                                                "w": [w[0].real, w[0].imag],
                                                "value": [val.real, val.imag]}, indent=2) + "\n")
        return 0
    count = args.grid or 8
    z = interior_probes(domain, count, 0.05)
    w = interior_probes(domain, count, 0.05, offset=count)
    vals = _kernel_values(domain, spec, kind, z, w, None)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["re_z", "im_z", "re_w", "im_w", "re_val", "im_val"])
    for i, zi in enumerate(z):
        for j, wj in enumerate(w):
            v = vals[i, j]
            wr.writerow([_fmt(zi.real), _fmt(zi.imag), _fmt(wj.real), _fmt(wj.imag), _fmt(v.real), _fmt(v.imag)])
    _emit(args, "kernel.csv", buf.getvalue())
    return 0


def _parse_thresholds(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep:
            raise ValueError(f"--threshold expects ID=VALUE, got {item!r}")
        out[key.strip()] = float(val)
    return out


def verify_config(args) -> VerifyConfig:
    thresholds = {}
    if args.config:
        with open(args.config) as fh:
            thresholds.update({k: float(v) for k, v in json.load(fh).get("thresholds", {}).items()})
    thresholds.update(_parse_thresholds(args.threshold))
    names = SUITES if args.suite == "all" else (args.suite,)
    return VerifyConfig(names, thresholds, args.timing)


def cmd_verify(args) -> int:
    spec, domain = _load_spec(args.spec)
    report = run_config(domain, spec, verify_config(args))
    text = report.to_json()
    d = _out_dir(args)
    if d is None:
        sys.stdout.write(text)
    else:
        (d / "report.json").write_text(text)
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.id} {c.max_residual:.3e} <= {c.threshold:.1e}",
              file=sys.stderr)
    return 0 if report.passed else EXIT_FAILED


def _scan_csv(table, header) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in table:
        wr.writerow([row[0], row[1], f"{row[2]:.6e}", f"{row[3]:.6e}"])
    return buf.getvalue()


def cmd_discover(args) -> int:
    spec, domain = _load_spec(args.spec)
    if args.trivariate:
        if spec.get("type") != "ar":
            raise ValueError("--trivariate needs an 'ar' domain spec")
        r = float(spec["r"])
        pmap = ar_proper_map(r)
        samples = sample_triple(domain, pmap)
        fit = ar_kernel_relation(r, samples, pmap, tol=args.tol)
        d = fit.to_dict()
        d["shuffled_control"] = shuffled_control(samples, fit, pmap)
        d["hermitian_swap_residual"] = hermitian_swap_residual(samples, fit.relation)
        _emit(args, "relation.json", json.dumps(d, indent=2) + "\n")
        _emit(args, "scan.csv", _scan_csv(fit.invariant_table, ["dk", "dxy", "fit_residual", "validation_residual"]))
        return 0
    if spec.get("type") == "ar":
        pmap = ar_proper_map(float(spec["r"]))
        b0 = 0.9 + 0.3j
    else:
        pmap = ahlfors_proper_map(ahlfors(domain, base_point(domain, spec)))
        b0 = complex(interior_probes(domain, 1, 0.1, offset=3)[0])
    cfg = DiscoverConfig(args.max_degree, args.count, args.tol, parse_complex(args.b) if args.b else None)
    b = choose_b(domain, pmap, cfg.b if cfg.b is not None else b0)
    samples = sample_pair(domain, pmap, b, cfg.count)
    scan = minimal_relation(samples, cfg.max_degree, cfg.tol)
    d = scan.relation.to_dict()
    d["b"] = [b.real, b.imag]
    d["gap"] = scan.gap
    _emit(args, "relation.json", json.dumps(d, indent=2) + "\n")
    _emit(args, "scan.csv", scan.table_csv())
    return 0


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kernelsmith", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("spec", help="JSON domain spec")
        sp.add_argument("--out", help="directory for output files (default: stdout)")

    d = sub.add_parser("domain", help="build a domain and report its invariants")
    common(d)
    d.set_defaults(func=cmd_domain)

    k = sub.add_parser("kernel", help="evaluate a kernel")
    common(k)
    k.add_argument("--kind", required=True, choices=["K", "S", "L", "Lambda", "G", "ahlfors"])
    g = k.add_mutually_exclusive_group()
    g.add_argument("--at", help="'z,w' (or 'z' for ahlfors)")
    g.add_argument("--grid", type=int, help="number of probe points per variable")
    g.add_argument("--boundary", action="store_true", help="ahlfors boundary trace")
    k.add_argument("--base", help="base point of the Ahlfors map")
    k.set_defaults(func=cmd_kernel)

    v = sub.add_parser("verify", help="run identity suites")
    common(v)
    v.add_argument("--suite", default="all", choices=("all",) + SUITES)
    v.add_argument("--timing", action="store_true", help="record wall times (breaks byte-identical output)")
    v.add_argument("--threshold", action="append", metavar="ID=VALUE", help="override one check threshold")
    v.add_argument("--config", help='JSON file {"thresholds": {id: value}}')
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("discover", help="discover polynomial relations")
    common(s)
    m = s.add_mutually_exclusive_group(required=True)
    m.add_argument("--pair", action="store_true")
    m.add_argument("--trivariate", action="store_true")
    s.add_argument("--max-degree", type=int, default=12)
    s.add_argument("--count", type=int, default=400)
    s.add_argument("--tol", type=float, default=1e-6, help="held-out residual accepted as a relation")
    s.add_argument("--b", help="second point for the pair relation")
    s.set_defaults(func=cmd_discover)
    return p


@contextlib.contextmanager
def _thread_limit():
    n = os.environ.get("KERNELSMITH_THREADS")
    if not n:
        yield
        return
    from threadpoolctl import threadpool_limits
    with threadpool_limits(limits=int(n)):
        yield


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with _thread_limit():
            return args.func(args)
    except GuardError as exc:
        print(f"guard violation: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except NoRelationFound as exc:
        print(f"no relation found: {exc}", file=sys.stderr)
        return EXIT_NO_RELATION
    except (GeometryError, json.JSONDecodeError, KeyError, ValueError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_SPEC


if __name__ == "__main__":
    sys.exit(main())
