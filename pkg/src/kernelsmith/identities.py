"""Generator sets, structural coefficient fits, and the identities tying the Szegő and Bergman families together.

The Szegő side (S, L, f_a) comes from the Kerzman-Stein solver, the Bergman side
(K_m, Lambda_m, G, F'_j) from the Dirichlet solver, so each check compares two
independent computations.  Check records carry relative residuals unless the
record id says otherwise.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .calculus import TRACE_SPACINGS, BoundaryField, GuardError, boundary_derivative, cauchy_interior, unit_tangent
from .geometry import Domain, interior_probes
from .potential import bergman_oracle, f_prime, green, lambda_oracle
from .szego import (
    AhlforsMap,
    SzegoSolution,
    ahlfors,
    garabedian_kernel,
    szego_kernel,
    szego_solve,
    well_resolved,
    zero_report,
)


class IdentityViolation(RuntimeError):
    pass


class BasisDegeneracyError(RuntimeError):
    pass


class DegenerateZerosError(RuntimeError):
    pass


@dataclass(frozen=True)
class CheckRecord:
    id: str
    grid: str
    max_residual: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_residual) and self.max_residual <= self.threshold)

    def to_dict(self) -> dict:
        return {"id": self.id, "grid": self.grid, "max_residual": float(self.max_residual),
                "threshold": float(self.threshold), "pass": self.passed}


def report_json(records) -> str:
    return json.dumps([r.to_dict() for r in records], indent=2)


def _rel(diff, ref) -> float:
    scale = float(np.max(np.abs(ref)))
    return float(np.max(np.abs(diff)) / scale) if scale > 0 else float(np.max(np.abs(diff)))


# ---------------------------------------------------------------- generator sets

@dataclass(frozen=True, eq=False)
class GeneratorSet:
    """Base point a, the zeros a_k of S(., a), the point set A(a) and K_m(., alpha) traces."""

    domain: Domain
    a: complex
    zeros: tuple
    secondary: tuple          # zeros of S(., a_k), one tuple per k (a removed)
    points: tuple             # A(a), a first, then a_1..a_{n-1}, then the rest
    tables: dict              # (m, index into points) -> BoundaryField of K_m(., alpha)
    solutions: tuple          # SzegoSolution for a, a_1, ..., a_{n-1}
    maps: tuple               # AhlforsMap for a, a_1, ..., a_{n-1}
    N: int = 2

    @property
    def n(self) -> int:
        return self.domain.n

    def index(self, p: complex) -> int:
        d = np.abs(np.asarray(self.points) - p)
        k = int(np.argmin(d))
        if d[k] > 1e-8 * max(1.0, abs(p)):
            raise KeyError(f"{p} is not a generator point")
        return k

    def zero_set(self, k: int) -> tuple:
        """Z(a) for k = 0, Z(a_k) for k >= 1, as indices into ``points``."""
        if k == 0:
            return tuple(range(self.n))
        return (k,) + (0,) + tuple(self.index(p) for p in self.secondary[k - 1])

    def K(self, m: int, idx: int, z, check: bool = True):
        return cauchy_interior(self.tables[(m, idx)], z, check=check)

    def S(self, k: int, z, check: bool = True):
        return self.solutions[k].S(z, check)

    def L(self, k: int, z, check: bool = True):
        return self.solutions[k].L(z, check)

    def basis(self, z, check: bool = True) -> np.ndarray:
        """Rows z, columns i: L(z, a_i) S(z, a)."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if self.n == 1:
            return np.zeros((len(z), 0), dtype=complex)
        Lz = garabedian_kernel(self.domain, z, np.array(self.zeros), check)
        return Lz * self.S(0, z, check)[:, None]


def build_generator_set(domain: Domain, a: complex, N: int = 2, min_sep: float = 1e-2) -> GeneratorSet:
    a = complex(a)
    sol = szego_solve(domain, a)
    rep = zero_report(domain, a, sol)
    if not rep["simple"] or rep["separation"] < min_sep:
        raise DegenerateZerosError(f"zeros of S(., {a}) are not simple and separated; move a "
                                   "(e.g. closer to the boundary)")
    zeros = tuple(rep["zeros"])
    sols, maps = [sol], [ahlfors(domain, a, sol)]
    points = [a] + list(zeros)
    secondary = []
    scale = float(np.max(sol.s_boundary.abs()))
    for ak in zeros:
        sk = szego_solve(domain, ak)
        rk = zero_report(domain, ak, sk)
        if not rk["simple"] or rk["separation"] < min_sep:
            raise DegenerateZerosError(f"zeros of S(., {ak}) are degenerate; move a")
        zk = list(rk["zeros"])
        # a must be among the zeros of S(., a_k)
        j = int(np.argmin(np.abs(np.array(zk) - a)))
        if abs(sk.S(a, check=False)) > 1e-7 * scale or abs(zk[j] - a) > 1e-6:
            raise IdentityViolation(f"a is not a zero of S(., {ak}) to tolerance")
        zk.pop(j)
        for p in zk:
            if np.min(np.abs(np.array(points) - p)) > 1e-8:
                points.append(p)
        secondary.append(tuple(zk))
        sols.append(sk)
        maps.append(ahlfors(domain, ak, sk))
    n = domain.n
    if len(points) > n * n - 2 * n + 2:
        raise IdentityViolation(f"generator set has {len(points)} points, more than n^2-2n+2")
    tables = {}
    for m in range(N + 1):
        ev = bergman_oracle(domain, m)
        for i, p in enumerate(points):
            tables[(m, i)] = ev.boundary(p)
    gs = GeneratorSet(domain, a, zeros, tuple(secondary), tuple(points), tables, tuple(sols),
                      tuple(maps), N)
    return gs


# ---------------------------------------------------------------- Szegő expansion

@dataclass(frozen=True)
class SzegoExpansion:
    c0: float
    c: np.ndarray


def szego_expansion(genset: GeneratorSet) -> SzegoExpansion:
    a = genset.a
    saa = genset.S(0, a, check=False)
    if saa.real <= 0:
        raise IdentityViolation("S(a, a) must be positive")
    n1 = genset.n - 1
    M = np.zeros((n1, n1), dtype=complex)
    for k in range(n1):
        M[:, k] = genset.S(k + 1, np.array(genset.zeros), check=False)
    if n1:
        sv = np.linalg.svd(M / np.max(np.abs(M)), compute_uv=False)
        if sv[-1] < 1e-10:
            raise BasisDegeneracyError("matrix of Szegő values at the zeros is singular")
    return SzegoExpansion(float(1.0 / saa.real), np.linalg.inv(M) if n1 else M)


def szego_from_generators(genset: GeneratorSet, z, w, expansion: SzegoExpansion | None = None) -> np.ndarray:
    """S(z, w) (rows z, columns w) from S(., a), f_a and S(., a_i) only."""
    ex = expansion or szego_expansion(genset)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    fa = genset.maps[0]
    fz, fw = fa.f(z), fa.f(w)
    den = 1.0 - fz[:, None] * np.conj(fw)[None, :]
    if np.min(np.abs(den)) < 1e-8:
        raise GuardError("1 - f_a(z) conj f_a(w) is numerically zero")
    num = ex.c0 * genset.S(0, z)[:, None] * np.conj(genset.S(0, w))[None, :]
    if genset.n > 1:
        Sz = np.stack([genset.S(k, z) for k in range(1, genset.n)], axis=1)
        Sw = np.stack([genset.S(k, w) for k in range(1, genset.n)], axis=1)
        num = num + Sz @ ex.c @ np.conj(Sw).T
    return num / den


def garabedian_from_generators(genset: GeneratorSet, z, w, expansion: SzegoExpansion | None = None) -> np.ndarray:
    """L(z, w) (rows z, columns w) from S(., a), S(., a_i), L(., a), L(., a_j) and f_a."""
    ex = expansion or szego_expansion(genset)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    fa = genset.maps[0]
    fz, fw = fa.f(z), fa.f(w)
    den = fz[:, None] - fw[None, :]
    if np.min(np.abs(den)) < 1e-8:
        raise GuardError("f_a(z) = f_a(w): the pair is not separated by the Ahlfors map")
    num = ex.c0 * genset.S(0, z)[:, None] * genset.L(0, w)[None, :]
    if genset.n > 1:
        Sz = np.stack([genset.S(k, z) for k in range(1, genset.n)], axis=1)
        Lw = np.stack([genset.L(k, w) for k in range(1, genset.n)], axis=1)
        num = num + Sz @ ex.c @ Lw.T
    return fw[None, :] / den * num


# ---------------------------------------------------------------- Bergman expansion

@dataclass(frozen=True, eq=False)
class BergmanExpansion:
    A: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    q: np.ndarray
    residuals: dict = field(default_factory=dict)

    def hermitian_defect(self) -> dict:
        out = {}
        for name, X in (("A", self.A), ("lambda", self.lam)):
            nrm = np.linalg.norm(X)
            out[name] = float(np.linalg.norm(X - X.conj().T) / nrm) if nrm else 0.0
        return out

    def lambda_min_singular(self) -> float:
        if self.lam.size == 0:
            return float("inf")
        sv = np.linalg.svd(self.lam, compute_uv=False)
        return float(sv[-1] / np.linalg.norm(self.lam))


def pair_grid(domain: Domain, count: int = 20, min_dist: float = 0.05, avoid=(), avoid_dist: float = 0.0):
    zs = interior_probes(domain, count, min_dist, offset=0, avoid=avoid, avoid_dist=avoid_dist)
    ws = interior_probes(domain, count, min_dist, offset=count, avoid=avoid, avoid_dist=avoid_dist)
    return zs, ws


def zero_derivative_q(genset: GeneratorSet) -> np.ndarray:
    """q_k = V'(a_k) with V = S(., a)/(2 pi)."""
    sp = boundary_derivative(genset.solutions[0].s_boundary)
    return np.array([cauchy_interior(sp, ak, check=False) / (2 * np.pi) for ak in genset.zeros],
                    dtype=complex)


def _lstsq(design: np.ndarray, target: np.ndarray):
    if design.shape[1] == 0:
        return np.zeros(0, dtype=complex), target
    colnorm = np.linalg.norm(design, axis=0)
    if np.min(colnorm) == 0:
        raise BasisDegeneracyError("zero basis column")
    D = design / colnorm
    sv = np.linalg.svd(D, compute_uv=False)
    if sv[-1] < 1e-10 * sv[0]:
        raise BasisDegeneracyError("basis Gram matrix is singular")
    coef, *_ = np.linalg.lstsq(D, target, rcond=None)
    coef = coef / colnorm
    return coef, target - design @ coef


def fit_expansions(domain: Domain, genset: GeneratorSet, count: int = 20, tol: float = 1e-6) -> BergmanExpansion:
    n1 = domain.n - 1
    zs, ws = pair_grid(domain, count)
    K = bergman_oracle(domain)(zs, ws)
    S = szego_kernel(domain, zs, ws)
    target = (K - 4 * np.pi * S ** 2).ravel()
    scale_k = float(np.max(np.abs(K)))
    res = {}

    Fz = np.stack([f_prime(domain, j)(zs) for j in range(1, n1 + 1)], axis=1) if n1 else np.zeros((count, 0))
    Fw = np.stack([f_prime(domain, j)(ws) for j in range(1, n1 + 1)], axis=1) if n1 else np.zeros((count, 0))
    Bz, Bw = genset.basis(zs), genset.basis(ws)

    def outer(U, V, conj):
        V = np.conj(V) if conj else V
        cols = [(U[:, i][:, None] * V[:, j][None, :]).ravel() for i in range(n1) for j in range(n1)]
        return np.stack(cols, axis=1) if cols else np.zeros((U.shape[0] * V.shape[0], 0))

    cA, rA = _lstsq(outer(Fz, Fw, True), target)
    cl, rl = _lstsq(outer(Bz, Bw, True), target)
    res["bergman_szego_fprime"] = float(np.max(np.abs(rA)) / scale_k)
    res["bergman_szego_basis"] = float(np.max(np.abs(rl)) / scale_k)

    mask = (np.abs(zs[:, None] - ws[None, :]) >= 0.05).ravel()
    Lam = lambda_oracle(domain)(zs, ws)
    Lzw = garabedian_kernel(domain, zs, ws)
    tmu = (Lam - 4 * np.pi * Lzw ** 2).ravel()
    cm, rm = _lstsq(outer(Bz, Bw, False)[mask], tmu[mask])
    res["lambda_garabedian_basis"] = float(np.max(np.abs(rm)) / np.max(np.abs(Lam.ravel()[mask])))

    q = zero_derivative_q(genset)
    ex = BergmanExpansion(cA.reshape(n1, n1), cl.reshape(n1, n1), cm.reshape(n1, n1), q, res)
    bad = {k: v for k, v in res.items() if v > tol}
    if bad:
        raise IdentityViolation(f"expansion fit residuals above {tol:g}: {bad}")
    if n1:
        if np.min(np.abs(q)) == 0:
            raise BasisDegeneracyError("a zero of S(., a) is not simple (q_k = 0)")
        herm = ex.hermitian_defect()
        if max(herm.values()) > 1e-8:
            raise IdentityViolation(f"fitted matrices are not hermitian: {herm}")
        if ex.lambda_min_singular() <= 1e-8:
            raise BasisDegeneracyError("coefficient matrix lambda is singular")
    return ex


def expansion_checks(domain: Domain, genset: GeneratorSet, expansion: BergmanExpansion) -> list[CheckRecord]:
    grid = "20x20 interior pairs"
    out = [CheckRecord(f"fit_{k}", grid, v, 1e-6) for k, v in expansion.residuals.items()]
    if domain.n > 1:
        herm = expansion.hermitian_defect()
        out.append(CheckRecord("fit_hermitian_A", "matrix", herm["A"], 1e-8))
        out.append(CheckRecord("fit_hermitian_lambda", "matrix", herm["lambda"], 1e-8))
        out.append(CheckRecord("lambda_nonsingular", "matrix", 1e-8 / expansion.lambda_min_singular(), 1.0))
    return out


def generator_diagonal_check(genset: GeneratorSet, expansion: BergmanExpansion) -> CheckRecord:
    """[L_j(a_k)] is diagonal with entries q_k."""
    n1 = genset.n - 1
    if n1 == 0:
        return CheckRecord("generator_matrix_diagonal", "zeros", 0.0, 1e-8)
    mat = np.zeros((n1, n1), dtype=complex)
    for k, ak in enumerate(genset.zeros):
        for j, aj in enumerate(genset.zeros):
            if j != k:
                mat[k, j] = genset.L(j + 1, ak, check=False) * genset.S(0, ak, check=False)
    off = float(np.max(np.abs(mat)) / np.min(np.abs(expansion.q)))
    return CheckRecord("generator_matrix_diagonal", "zeros", off, 1e-8)


def ahlfors_ratio_check(domain: Domain, genset: GeneratorSet, expansion: BergmanExpansion,
                        count: int = 10) -> CheckRecord:
    """f_w(z)^2 (Lambda - sum mu L L) = K - sum lambda L conj(L) on count x count pairs.

    Each w needs its own Ahlfors map, built from boundary traces, so only w
    whose zero sets clear the trace guard are used.
    """
    zs = interior_probes(domain, count, 0.05)
    cand = interior_probes(domain, 4 * count, 0.05, offset=count, spacings=TRACE_SPACINGS)
    ws = np.array([w for w in cand if well_resolved(domain, w)][:count])
    K = bergman_oracle(domain)(zs, ws)
    Lam = lambda_oracle(domain)(zs, ws)
    Bz, Bw = genset.basis(zs), genset.basis(ws)
    lhs_k = K - Bz @ expansion.lam @ np.conj(Bw).T
    lhs_l = Lam - Bz @ expansion.mu @ Bw.T
    fw2 = np.stack([ahlfors(domain, w).f(zs) ** 2 for w in ws], axis=1)
    diff = fw2 * lhs_l - lhs_k
    return CheckRecord("ahlfors_square_ratio", f"{count}x{count} interior pairs", _rel(diff, K), 1e-6)


# ---------------------------------------------------------------- boundary identities

def check_boundary_identities(domain: Domain, genset: GeneratorSet, probes=None) -> list[CheckRecord]:
    ws = interior_probes(domain, 4, 0.05, offset=7, spacings=TRACE_SPACINGS) if probes is None else np.atleast_1d(probes)
    T = unit_tangent(domain).values
    out = []
    for m in range(3):
        worst = 0.0
        for w in ws:
            Kt = bergman_oracle(domain, m).boundary(w).values
            Lt = lambda_oracle(domain, m).boundary(w).values
            worst = max(worst, _rel(Kt * T + np.conj(Lt) * np.conj(T), Kt))
        out.append(CheckRecord(f"bergman_lambda_boundary_m{m}", f"boundary x {len(ws)} probes", worst, 1e-6))
    fa = genset.maps[0]
    f, fp = fa.f_boundary.values, fa.fp_boundary.values
    g = fp / f * T
    out.append(CheckRecord("ahlfors_log_derivative_boundary", "boundary", _rel(g + np.conj(g), g), 1e-6))
    worst = 0.0
    for w in ws:
        Kt = bergman_oracle(domain).boundary(w).values
        Lt = lambda_oracle(domain).boundary(w).values
        lhs = f * Kt / fp
        worst = max(worst, _rel(lhs - np.conj(f * Lt / fp), lhs))
    out.append(CheckRecord("double_extension_matching", f"boundary x {len(ws)} probes", worst, 1e-6))
    return out


# ---------------------------------------------------------------- proper maps from kernels

@dataclass(frozen=True, eq=False)
class GeneratedMap:
    """A proper map rebuilt from K and K_1 at its zero set.

    f' = pi sum_k K(z, alpha_k) conj(d1_k) and
    2 f f' = pi sum_k [K_1(z, alpha_k) conj(d1_k^2) + K(z, alpha_k) conj(d2_k)],
    with d1 = 1/f'(alpha_k), d2 = -f''(alpha_k)/f'(alpha_k)^3 the derivatives of
    the local inverses at the origin.
    """

    genset: GeneratorSet
    idx: tuple
    d1: np.ndarray
    d2: np.ndarray

    def fp(self, z, check: bool = True):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return np.pi * sum(self.genset.K(0, i, z, check) * np.conj(c) for i, c in zip(self.idx, self.d1))

    def ffp(self, z, check: bool = True):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        s = sum(self.genset.K(1, i, z, check) * np.conj(c * c) + self.genset.K(0, i, z, check) * np.conj(e)
                for i, c, e in zip(self.idx, self.d1, self.d2))
        return 0.5 * np.pi * s

    def f(self, z, check: bool = True):
        return self.ffp(z, check) / self.fp(z, check)


def generated_map(genset: GeneratorSet, k: int) -> GeneratedMap:
    amap = genset.maps[k]
    idx = genset.zero_set(k)
    pts = np.array([genset.points[i] for i in idx])
    f1 = amap.fp(pts, check=False)
    f2 = amap.fpp(pts, check=False)
    scale = max(1.0, abs(amap.derivative_at_a))
    if np.min(np.abs(f1)) < 1e-8 * scale:
        raise DegenerateZerosError("the map has a branch point at one of its zeros")
    return GeneratedMap(genset, idx, 1.0 / f1, -f2 / f1 ** 3)


def proper_map_expansion(domain: Domain, ahlfors_map: AhlforsMap, genset: GeneratorSet,
                         count: int = 100) -> list[CheckRecord]:
    k = int(np.argmin(np.abs(np.array([m.a for m in genset.maps]) - ahlfors_map.a)))
    gm = generated_map(genset, k)
    zs = interior_probes(domain, count, 0.05)
    fp = ahlfors_map.fp(zs)
    ffp = ahlfors_map.f(zs) * fp
    grid = f"{count} interior probes"
    return [CheckRecord("proper_map_derivative", grid, _rel(gm.fp(zs) - fp, fp), 1e-6),
            CheckRecord("proper_map_product", grid, _rel(gm.ffp(zs) - ffp, ffp), 1e-6)]


def green_factorization_check(domain: Domain, ahlfors_map: AhlforsMap, count: int = 100) -> CheckRecord:
    """ln|f_a(z)| + G(z, a) + sum G(z, a_i) = 0 with the positive Green's function."""
    sol = ahlfors_map.solution
    zeros = [ahlfors_map.a] + zero_report(domain, ahlfors_map.a, sol)["zeros"]
    zs = interior_probes(domain, count, 0.05, avoid=zeros, avoid_dist=0.05)
    G = green(domain)(zs, np.array(zeros))
    resid = np.log(np.abs(ahlfors_map.f(zs))) + G.sum(axis=1)
    return CheckRecord("green_factorization", f"{count} interior probes", float(np.max(np.abs(resid))), 1e-7)


# ---------------------------------------------------------------- reconstruction of K

def cramer(A: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Solve A x = r by Cramer's rule (small systems)."""
    det = np.linalg.det(A)
    x = np.empty(len(r), dtype=complex)
    for i in range(len(r)):
        Ai = A.copy()
        Ai[:, i] = r
        x[i] = np.linalg.det(Ai) / det
    return x


@dataclass(frozen=True, eq=False)
class ReconstructedBergman:
    """K(z, w) assembled from the generator tables and fitted constants only.

    The Lambda(., alpha) generators are not tabulated separately; their
    boundary traces follow from the K(., alpha) traces through the boundary
    relation Lambda(zeta, alpha) = -conj(K(zeta, alpha)) conj(T(zeta))^2.
    """

    genset: GeneratorSet
    expansion: BergmanExpansion
    szego: SzegoExpansion
    maps: tuple
    lam_free: tuple            # pole-free traces of Lambda(., a), Lambda(., a_k)
    La: np.ndarray             # L_j(a)
    B: np.ndarray              # S(z, a_i) L(z, a) = sum_j B_ij L_j(z)
    cond_limit: float = 1e8

    def lam(self, k: int, z, check: bool = True):
        alpha = self.genset.points[k]
        return cauchy_interior(self.lam_free[k], z, check=check) + 1.0 / (np.pi * (z - alpha) ** 2)

    def one_variable(self, z, check: bool = True) -> dict:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        gs, ex = self.genset, self.expansion
        n1 = gs.n - 1
        P = len(z)
        basis = np.zeros((P, n1), dtype=complex)
        cond = np.ones(P)
        if n1:
            fk2 = np.stack([self.maps[k].f(z, check) ** 2 for k in range(1, n1 + 1)], axis=1)
            rhs = np.stack([gs.K(0, k, z, check) - fk2[:, k - 1] * self.lam(k, z, check)
                            for k in range(1, n1 + 1)], axis=1)
            q = ex.q
            for p in range(P):
                Amat = ex.lam * np.conj(q)[None, :] - ex.mu * (fk2[p][None, :] * q[None, :])
                cond[p] = np.linalg.cond(Amat)
                basis[p] = cramer(Amat.T, rhs[p]) if cond[p] < self.cond_limit else np.nan
        L2 = (self.lam(0, z, check) - basis @ ex.mu @ self.La) / (4 * np.pi)
        f = self.maps[0].f(z, check)
        return {"z": z, "f": f, "L2": L2, "SL": f * L2, "SiL": basis @ self.B.T, "basis": basis,
                "cond": cond, "ok": cond < self.cond_limit}

    def assemble(self, u: dict, v: dict) -> np.ndarray:
        c0, c = self.szego.c0, self.szego.c
        num = c0 * u["SL"][:, None] * np.conj(v["SL"])[None, :]
        if self.genset.n > 1:
            num = num + u["SiL"] @ c @ np.conj(v["SiL"]).T
        sll = num / (1.0 - u["f"][:, None] * np.conj(v["f"])[None, :])
        K = 4 * np.pi * sll ** 2 / (u["L2"][:, None] * np.conj(v["L2"])[None, :])
        return K + u["basis"] @ self.expansion.lam @ np.conj(v["basis"]).T

    def __call__(self, z, w, check: bool = True) -> np.ndarray:
        return self.assemble(self.one_variable(z, check), self.one_variable(w, check))

    def matrix_at_base(self) -> float:
        """Defect of [A_ik(a)] = [lambda_ij][conj L_j(a_k)], relative to |lambda q|."""
        ex = self.expansion
        if self.genset.n == 1:
            return 0.0
        a = self.genset.a
        fk2 = np.array([self.maps[k].f(a, check=False)[0] ** 2 for k in range(1, self.genset.n)])
        Amat = ex.lam * np.conj(ex.q)[None, :] - ex.mu * (fk2 * ex.q)[None, :]
        ref = ex.lam @ np.diag(np.conj(ex.q))
        return _rel(Amat - ref, ref)


def reconstruct_bergman(genset: GeneratorSet, expansion: BergmanExpansion,
                        szego: SzegoExpansion | None = None) -> ReconstructedBergman:
    d = genset.domain
    ex = expansion
    sz = szego or szego_expansion(genset)
    n1 = d.n - 1
    maps = tuple(generated_map(genset, k) for k in range(n1 + 1))
    Tc2 = np.conj(unit_tangent(d).values) ** 2
    lam_free = []
    for k in range(n1 + 1):
        alpha = genset.points[k]
        tr = -np.conj(genset.tables[(0, k)].values) * Tc2 - 1.0 / (np.pi * (d.points - alpha) ** 2)
        lam_free.append(BoundaryField(tr, d))
    a = genset.a
    saa = genset.S(0, a, check=False)
    La = np.array([genset.L(j, a, check=False) * saa for j in range(1, n1 + 1)], dtype=complex)
    B = np.zeros((n1, n1), dtype=complex)
    for k, ak in enumerate(genset.zeros):
        lka = genset.L(0, ak, check=False)
        for i in range(n1):
            B[i, k] = genset.S(i + 1, ak, check=False) * lka / ex.q[k]
    return ReconstructedBergman(genset, ex, sz, maps, tuple(lam_free), La, B)


def reconstruction_check(genset: GeneratorSet, rec: ReconstructedBergman, count: int = 20,
                         tol: float = 1e-5) -> tuple[CheckRecord, dict]:
    d = genset.domain
    zs, ws = pair_grid(d, count, 0.05, avoid=genset.points, avoid_dist=0.1)
    Krec = rec(zs, ws)
    Kor = bergman_oracle(d)(zs, ws)
    rel = np.abs(Krec - Kor) / np.abs(Kor)
    ok = np.isfinite(rel)
    info = {"pairs": int(rel.size), "skipped": int((~ok).sum()),
            "max_rel_error": float(np.max(rel[ok])) if ok.any() else float("nan")}
    rec_sym = rec(ws, zs)
    info["hermitian_defect"] = float(np.nanmax(np.abs(Krec - np.conj(rec_sym).T) / np.abs(Kor)))
    return CheckRecord("bergman_reconstruction", f"{count}x{count} interior pairs", info["max_rel_error"], tol), info


# ---------------------------------------------------------------- transformation laws

def sqrt_branch(domain: Domain, dphi, points, base: int = 0, substeps: int = 32) -> np.ndarray:
    """A continuous branch of sqrt(phi') at the points, continued from points[base].

    Points are joined by a shortest-edge tree (Prim) whose edges stay inside
    the domain; the root is tracked along each edge in small steps.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    P = len(pts)
    val = np.full(P, np.nan + 0j)
    val[base] = np.sqrt(dphi(pts[base]))
    ts = np.linspace(0.0, 1.0, substeps + 1)[1:]
    best_len = np.full(P, np.inf)
    best_from = np.full(P, -1)
    done = np.zeros(P, bool)
    new = base
    for _ in range(P - 1):
        done[new] = True
        seg = pts[new] + ts[None, 3::4] * (pts - pts[new])[:, None]
        inside = domain.contains_many(seg).all(axis=1)
        length = np.abs(pts - pts[new])
        better = inside & ~done & (length < best_len)
        best_len[better] = length[better]
        best_from[better] = new
        cand = np.where(done, np.inf, best_len)
        new = int(np.argmin(cand))
        if not np.isfinite(cand[new]):
            raise GuardError("could not connect probes inside the domain")
        j = best_from[new]
        r = val[j]
        for c in np.sqrt(dphi(pts[j] + ts * (pts[new] - pts[j]))):
            r = c if abs(c - r) <= abs(c + r) else -c
        val[new] = r
    return val


def biholo_transport_check(source: Domain, target: Domain, phi, dphi, count: int = 50,
                           tol: float = 1e-8, label: str = "map") -> list[CheckRecord]:
    zs = interior_probes(source, 3 * count, 0.05)
    ws = interior_probes(source, 3 * count, 0.05, offset=3 * count)
    keep = np.abs(zs - ws) >= 0.05
    for p in (phi(zs), phi(ws)):
        keep &= target.contains_many(p) & target.guard_ok(p) & (target.boundary_distance(p) >= 0.05)
    zs, ws = zs[keep][:count], ws[keep][:count]
    if len(zs) < count:
        raise GuardError(f"only {len(zs)} probe pairs map inside the target domain")
    pz, pw = phi(zs), phi(ws)
    allp = np.concatenate([pz, pw])
    dist = np.abs(allp[:, None] - allp[None, :]) + np.eye(len(allp))
    src = np.abs(np.concatenate([zs, ws])[:, None] - np.concatenate([zs, ws])[None, :]) + np.eye(len(allp))
    if np.any((dist < 1e-10) & (src > 1e-10)):
        raise GuardError("map is not one-to-one on the probes")
    dz, dw = dphi(zs), dphi(ws)
    root = sqrt_branch(source, dphi, np.concatenate([zs, ws]))
    rz, rw = root[:len(zs)], root[len(zs):]
    diag = np.arange(len(zs))
    grid = f"{len(zs)} interior pairs"

    def pairs(fn, dom, z, w):
        return fn(dom, z, w)[diag, diag]

    K = pairs(lambda d, z, w: bergman_oracle(d)(z, w), source, zs, ws)
    Ka = pairs(lambda d, z, w: bergman_oracle(d)(z, w), target, pz, pw)
    Lm = pairs(lambda d, z, w: lambda_oracle(d)(z, w), source, zs, ws)
    Lma = pairs(lambda d, z, w: lambda_oracle(d)(z, w), target, pz, pw)
    S = pairs(szego_kernel, source, zs, ws)
    Sa = pairs(szego_kernel, target, pz, pw)
    L = pairs(garabedian_kernel, source, zs, ws)
    La = pairs(garabedian_kernel, target, pz, pw)
    G = pairs(lambda d, z, w: green(d)(z, w), source, zs, ws)
    Ga = pairs(lambda d, z, w: green(d)(z, w), target, pz, pw)
    return [
        CheckRecord(f"transport_bergman_{label}", grid, _rel(K - dz * Ka * np.conj(dw), K), tol),
        CheckRecord(f"transport_lambda_{label}", grid, _rel(Lm - dz * Lma * dw, Lm), tol),
        CheckRecord(f"transport_szego_{label}", grid, _rel(S - rz * Sa * np.conj(rw), S), tol),
        CheckRecord(f"transport_garabedian_{label}", grid, _rel(L - rz * La * rw, L), tol),
        CheckRecord(f"transport_green_{label}", grid, _rel(G - Ga, G), tol),
    ]
