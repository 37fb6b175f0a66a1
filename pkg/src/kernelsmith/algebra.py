"""Numerical discovery of polynomial relations among kernel values and proper maps.

Relations are null vectors of monomial design matrices.  Every fit holds out
30% of the samples; only the held-out residual certifies a relation.
Coefficients refer to the RMS-normalised variables, so rescaling any variable
leaves residuals unchanged.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .calculus import BoundaryField, boundary_derivative, cauchy_interior, find_zeros
from .geometry import Domain, interior_probes
from .potential import bergman_oracle


class NoRelationFound(RuntimeError):
    pass


class ContinuationError(RuntimeError):
    pass


# ---------------------------------------------------------------- proper maps

@dataclass(frozen=True, eq=False)
class ProperMap:
    """A proper holomorphic map onto the disc: f, f' and the critical points inside the domain."""

    f: object
    fp: object
    critical: tuple = ()
    zeros: tuple = ()
    closed_form: bool = False


def ar_proper_map(r: float) -> ProperMap:
    """f(z) = (z + 1/z)/r on A(r); critical points +-1, zeros +-i."""
    return ProperMap(lambda z: (np.asarray(z) + 1 / np.asarray(z)) / r,
                     lambda z: (1 - 1 / np.asarray(z) ** 2) / r,
                     (1.0 + 0j, -1.0 + 0j), (1j, -1j), True)


def disc_identity_map() -> ProperMap:
    return ProperMap(lambda z: np.asarray(z, dtype=complex), lambda z: np.ones_like(np.asarray(z, dtype=complex)),
                     (), (0j,), True)


def ahlfors_proper_map(amap) -> ProperMap:
    """Wrap an Ahlfors map; its 2n-2 critical points come from the argument principle on f'."""
    d = amap.domain
    crit = ()
    if d.n > 1:
        crit = tuple(find_zeros(amap.fp_boundary, amap.fpp_boundary, 2 * d.n - 2))
    zeros = (amap.a,) + tuple(_szego_zeros(amap))
    return ProperMap(lambda z: amap.f(z, check=False), lambda z: amap.fp(z, check=False), crit, zeros)


def _szego_zeros(amap):
    from .szego import szego_zeros
    return szego_zeros(amap.domain, amap.a, amap.solution)


# ---------------------------------------------------------------- samples

@dataclass(frozen=True, eq=False)
class SamplePair:
    points: np.ndarray
    u: np.ndarray
    v: np.ndarray
    b: complex


def sample_pair(domain: Domain, pmap: ProperMap, b: complex, count: int = 400,
                crit_dist: float = 1e-2, min_dist: float = 0.05) -> SamplePair:
    """u = f(z), v = K(z, b)/f'(z) at deterministic interior points."""
    b = complex(b)
    if pmap.critical and np.min(np.abs(np.array(pmap.critical) - b)) < crit_dist:
        raise ValueError("b sits at a critical point of f")
    avoid = list(pmap.critical) + [b]
    z = interior_probes(domain, count, min_dist, avoid=avoid, avoid_dist=crit_dist)
    u = np.asarray(pmap.f(z), dtype=complex)
    v = bergman_oracle(domain)(z, [b])[:, 0] / np.asarray(pmap.fp(z), dtype=complex)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise ValueError("non-finite samples")
    return SamplePair(z, u, v, b)


# ---------------------------------------------------------------- bivariate relations

@dataclass(frozen=True, eq=False)
class PolynomialRelation:
    """P(u, v) = sum c[p, q] (u/su)^p (v/sv)^q with unit Frobenius norm coefficients."""

    du: int
    dv: int
    coeffs: np.ndarray
    fit_residual: float
    validation_residual: float
    scales: tuple = (1.0, 1.0)
    note: str = ""

    def __call__(self, u, v):
        su, sv = self.scales
        u = np.asarray(u, dtype=complex) / su
        v = np.asarray(v, dtype=complex) / sv
        return sum(self.coeffs[p, q] * u ** p * v ** q
                   for p in range(self.du + 1) for q in range(self.dv + 1))

    def v_roots(self, u) -> np.ndarray:
        """All v with P(u, v) = 0 at a single u."""
        su, sv = self.scales
        x = complex(u) / su
        c = np.array([np.sum(self.coeffs[:, q] * x ** np.arange(self.du + 1)) for q in range(self.dv + 1)])
        return np.roots(c[::-1]) * sv

    def to_dict(self) -> dict:
        return {"du": self.du, "dv": self.dv,
                "coeffs": [[[float(c.real), float(c.imag)] for c in row] for row in self.coeffs],
                "scales": [float(s) for s in self.scales],
                "fit_residual": float(self.fit_residual),
                "validation_residual": float(self.validation_residual), "note": self.note}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _rms(x) -> float:
    s = float(np.sqrt(np.mean(np.abs(x) ** 2)))
    return s if s > 0 else 1.0


def _split(count: int):
    idx = np.arange(count)
    held = idx % 10 >= 7
    return idx[~held], idx[held]


def _null_vector(rows: np.ndarray):
    rn = np.linalg.norm(rows, axis=1, keepdims=True)
    A = rows / rn
    _, s, vh = np.linalg.svd(A, full_matrices=False)
    c = np.conj(vh[-1])
    return c / np.linalg.norm(c), float(s[-1] / np.sqrt(A.shape[0]))


def _validate(rows: np.ndarray, c: np.ndarray) -> float:
    return float(np.max(np.abs(rows @ c) / np.linalg.norm(rows, axis=1)))


def _design(u, v, du, dv):
    P = u[:, None] ** np.arange(du + 1)[None, :]
    Q = v[:, None] ** np.arange(dv + 1)[None, :]
    return (P[:, :, None] * Q[:, None, :]).reshape(len(u), -1)


def fit_relation(samples: SamplePair, du: int, dv: int) -> PolynomialRelation:
    n_terms = (du + 1) * (dv + 1)
    if len(samples.u) < 3 * n_terms:
        raise ValueError(f"need at least {3 * n_terms} samples for bidegree ({du}, {dv})")
    su, sv = _rms(samples.u), _rms(samples.v)
    rows = _design(samples.u / su, samples.v / sv, du, dv)
    fit, held = _split(len(rows))
    c, fres = _null_vector(rows[fit])
    vres = _validate(rows[held], c)
    C = c.reshape(du + 1, dv + 1)
    if dv > 1 and np.linalg.norm(C[:, dv]) <= 1e-10 and len(samples.u) >= 3 * (du + 1) * dv:
        # the null vector never uses v^dv: an exact relation of lower v-degree exists
        lower = fit_relation(samples, du, dv - 1)
        return PolynomialRelation(lower.du, lower.dv, lower.coeffs, lower.fit_residual,
                                  lower.validation_residual, lower.scales,
                                  f"requested ({du}, {dv}); leading v column vanished")
    return PolynomialRelation(du, dv, C, fres, vres, (su, sv))


@dataclass(frozen=True, eq=False)
class RelationScan:
    relation: PolynomialRelation | None
    table: list = field(default_factory=list)      # (du, dv, fit_residual, validation_residual)
    gap: float = float("nan")

    def table_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["du", "dv", "fit_residual", "validation_residual"])
        for row in self.table:
            w.writerow([row[0], row[1], f"{row[2]:.6e}", f"{row[3]:.6e}"])
        return buf.getvalue()


NOISE_FLOOR = 1e-13     # held-out residual treated as exact
SHARP_DROP = 1e3        # residual ratio from (du-1, dv) that marks an exact relation
PLATEAU = 10.0          # an exact relation gains less than this from one more degree


def _exact(res: float, prev: float, tol: float, refit) -> bool:
    """Held-out residual ``res`` marks an identity rather than an approximant.

    Below the noise floor it is accepted outright.  Otherwise it must be a
    sharp drop from the previous degree and stay flat at the next one, which
    geometric convergence of polynomial approximants does not do.
    """
    if res > tol:
        return False
    if res <= NOISE_FLOOR:
        return True
    if prev < SHARP_DROP * res:
        return False
    nxt = refit()
    return nxt is not None and nxt * PLATEAU >= res


def _scan(samples: SamplePair, max_degree: int, tol: float):
    table = []
    best_by_dv = {}
    for dv in range(1, max_degree + 1):
        prev = np.inf
        for du in range(0, max_degree + 1):
            if len(samples.u) < 3 * (du + 1) * (dv + 1):
                break
            rel = fit_relation(samples, du, dv)
            res = rel.validation_residual
            table.append((du, dv, rel.fit_residual, res))
            best_by_dv[dv] = min(best_by_dv.get(dv, np.inf), res)
            if rel.note:
                prev = res
                continue

            def refit(du=du, dv=dv):
                if len(samples.u) < 3 * (du + 2) * (dv + 1):
                    return None
                return fit_relation(samples, du + 1, dv).validation_residual

            exact = _exact(res, prev, tol, refit)
            prev = res
            if exact:
                gap = best_by_dv[dv - 1] / max(res, 1e-300) if dv > 1 else np.inf
                return RelationScan(rel, table, float(gap))
    return RelationScan(None, table)


def minimal_relation(samples: SamplePair, max_degree: int = 12, tol: float = 1e-6) -> RelationScan:
    """Smallest dv, then du, carrying an exact relation.

    A bidegree is accepted when its held-out residual is below ``tol`` and it
    is either at the noise floor, or a sharp drop from (du-1, dv) that does
    not improve further at (du+1, dv).  ``gap`` is
    the best residual one v-degree lower divided by the accepted one.
    """
    scan = _scan(samples, max_degree, tol)
    if scan.relation is None:
        raise NoRelationFound(f"no relation found up to bidegree ({max_degree}, {max_degree})")
    return scan


def scan_until(samples: SamplePair, max_degree: int = 12, tol: float = 1e-6) -> RelationScan:
    """minimal_relation that returns the scan table instead of raising."""
    return _scan(samples, max_degree, tol)


def separation_test(pmap: ProperMap, b: complex, domain: Domain, zeros=None, tol: float = 1e-6) -> bool:
    """True iff K(a_i, b)/f'(a_i) are pairwise distinct over the zeros a_i of f."""
    zs = np.array(zeros if zeros is not None else pmap.zeros, dtype=complex)
    if len(zs) < 2:
        return True
    vals = bergman_oracle(domain)(zs, [b])[:, 0] / np.asarray(pmap.fp(zs))
    scale = float(np.max(np.abs(vals)))
    d = np.abs(vals[:, None] - vals[None, :])
    np.fill_diagonal(d, np.inf)
    return bool(np.min(d) >= tol * scale)


def choose_b(domain: Domain, pmap: ProperMap, b0: complex, tries: int = 5, seed: int = 7) -> complex:
    """b0 if it separates the zeros of f, else deterministic pseudo-random retries."""
    rng = np.random.default_rng(seed)
    b = complex(b0)
    for _ in range(tries):
        if separation_test(pmap, b, domain):
            return b
        cand = interior_probes(domain, 1, 0.1, offset=int(rng.integers(0, 200)))[0]
        b = complex(cand)
    raise NoRelationFound("could not find a b separating the zeros of f")


# ---------------------------------------------------------------- trivariate relation

@dataclass(frozen=True, eq=False)
class SampleTriple:
    z: np.ndarray
    w: np.ndarray
    k: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def with_values(self, k) -> "SampleTriple":
        return SampleTriple(self.z, self.w, np.asarray(k, dtype=complex), self.x, self.y)


def sample_triple(domain: Domain, pmap: ProperMap, count: int = 52, min_dist: float = 0.05,
                  crit_dist: float = 1e-2) -> SampleTriple:
    """(K(z, w), f(z), conj f(w)) on a count x count tensor grid of interior points."""
    zs = interior_probes(domain, count, min_dist, avoid=pmap.critical, avoid_dist=crit_dist)
    ws = interior_probes(domain, count, min_dist, offset=count, avoid=pmap.critical, avoid_dist=crit_dist)
    K = bergman_oracle(domain)(zs, ws)
    Z, W = np.meshgrid(zs, ws, indexing="ij")
    x = np.asarray(pmap.f(Z.ravel()))
    y = np.conj(np.asarray(pmap.f(W.ravel())))
    return SampleTriple(Z.ravel(), W.ravel(), K.ravel(), x, y)


def invariant_triple(samples: SampleTriple, pmap: ProperMap) -> SampleTriple:
    """Replace K by I = K/(f'(z) conj f'(w))."""
    d = np.asarray(pmap.fp(samples.z)) * np.conj(np.asarray(pmap.fp(samples.w)))
    return samples.with_values(samples.k / d)


def _powers(t, d):
    return np.asarray(t, dtype=complex)[:, None] ** np.arange(d + 1)[None, :]


@dataclass(frozen=True, eq=False)
class TrivariateRelation:
    """P(k, x, y) = sum c[r, p, q] (k/sk)^r (x/sx)^p (y/sy)^q, unit Frobenius norm."""

    dk: int
    dx: int
    dy: int
    coeffs: np.ndarray
    fit_residual: float
    validation_residual: float
    scales: tuple
    note: str = ""

    def _factors(self, k, x, y):
        sk, sx, sy = self.scales
        return (_powers(np.atleast_1d(k) / sk, self.dk), _powers(np.atleast_1d(x) / sx, self.dx),
                _powers(np.atleast_1d(y) / sy, self.dy))

    def __call__(self, k, x, y) -> np.ndarray:
        Kp, X, Y = self._factors(k, x, y)
        return np.einsum("rpq,nr,np,nq->n", self.coeffs, Kp, X, Y)

    def residual(self, k, x, y) -> np.ndarray:
        """|P| divided by the norm of the monomial row (which factorizes)."""
        Kp, X, Y = self._factors(k, x, y)
        val = np.einsum("rpq,nr,np,nq->n", self.coeffs, Kp, X, Y)
        return np.abs(val) / (np.linalg.norm(Kp, axis=1) * np.linalg.norm(X, axis=1) * np.linalg.norm(Y, axis=1))

    def k_polynomial(self, x: complex, y: complex) -> np.ndarray:
        """Ascending coefficients in the scaled variable k/sk."""
        sk, sx, sy = self.scales
        px = (complex(x) / sx) ** np.arange(self.dx + 1)
        py = (complex(y) / sy) ** np.arange(self.dy + 1)
        return np.einsum("rpq,p,q->r", self.coeffs, px, py)

    def k_roots(self, x: complex, y: complex) -> np.ndarray:
        c = self.k_polynomial(x, y)
        nz = np.nonzero(np.abs(c) > 1e-300)[0]
        return np.roots(c[: nz[-1] + 1][::-1]) * self.scales[0]

    def root_residual(self, k, x, y) -> np.ndarray:
        """Distance from each k to the nearest root of P(., x, y), relative to |k|."""
        k = np.atleast_1d(np.asarray(k, dtype=complex))
        return np.array([np.min(np.abs(self.k_roots(xi, yi) - ki)) / max(abs(ki), 1e-300)
                         for ki, xi, yi in zip(k, np.atleast_1d(x), np.atleast_1d(y))])

    def to_dict(self) -> dict:
        return {"dk": self.dk, "dx": self.dx, "dy": self.dy,
                "coeffs": [[[[float(c.real), float(c.imag)] for c in row] for row in plane]
                           for plane in self.coeffs],
                "scales": [float(s) for s in self.scales],
                "fit_residual": float(self.fit_residual),
                "validation_residual": float(self.validation_residual), "note": self.note}


def _design3(k, x, y, dk, dx, dy):
    K, X, Y = _powers(k, dk), _powers(x, dx), _powers(y, dy)
    return (K[:, :, None, None] * X[:, None, :, None] * Y[:, None, None, :]).reshape(len(k), -1)


def fit_three_var_relation(samples: SampleTriple, dk: int, dx: int, dy: int | None = None) -> TrivariateRelation:
    dy = dx if dy is None else dy
    n_terms = (dk + 1) * (dx + 1) * (dy + 1)
    if len(samples.k) < 3 * n_terms:
        raise ValueError(f"need at least {3 * n_terms} samples")
    sc = (_rms(samples.k), _rms(samples.x), _rms(samples.y))
    rows = _design3(samples.k / sc[0], samples.x / sc[1], samples.y / sc[2], dk, dx, dy)
    fit, held = _split(len(rows))
    c, fres = _null_vector(rows[fit])
    vres = _validate(rows[held], c)
    return TrivariateRelation(dk, dx, dy, c.reshape(dk + 1, dx + 1, dy + 1), fres, vres, sc)


def minimal_three_var_relation(samples: SampleTriple, max_k: int = 4, max_xy: int = 10,
                               tol: float = 1e-6) -> tuple[TrivariateRelation, list]:
    """Smallest k-degree, then common x/y degree, carrying an exact relation (same test as pairs)."""
    table = []
    for dk in range(1, max_k + 1):
        prev = np.inf
        for d in range(1, max_xy + 1):
            if len(samples.k) < 3 * (dk + 1) * (d + 1) ** 2:
                break
            rel = fit_three_var_relation(samples, dk, d)
            res = rel.validation_residual
            table.append((dk, d, rel.fit_residual, res))

            def refit(dk=dk, d=d):
                if len(samples.k) < 3 * (dk + 1) * (d + 2) ** 2:
                    return None
                return fit_three_var_relation(samples, dk, d + 1).validation_residual

            exact = _exact(res, prev, tol, refit)
            prev = res
            if exact:
                return rel, table
    raise NoRelationFound("no trivariate relation found")


def ar_derivative_roots(r: float, x) -> np.ndarray:
    """Both values of f'(z) over f(z) = x for f = (z + 1/z)/r.

    f' = (1 - z^-2)/r satisfies t^2 - s t + p = 0 with s = (4 - r^2 x^2)/r and
    p = (4 - r^2 x^2)/r^2.  Returns shape (2,) + x.shape.
    """
    x = np.asarray(x, dtype=complex)
    s = (4 - r * r * x * x) / r
    p = (4 - r * r * x * x) / r ** 2
    disc = np.sqrt(s * s - 4 * p)
    return np.stack([(s + disc) / 2, (s - disc) / 2])


def _eliminate(inv: TrivariateRelation, r: float, k_scale: float, grid: int = 64, trim: float = 1e-12):
    """Coefficients of prod_{i,j} (a_i b_j)^dk P_I(k/(a_i b_j), x, y) as a polynomial in (k/k_scale, x, y).

    a_i and b_j run over the two values of f' above x and y; the product is
    symmetric in each pair, hence polynomial in x and y.  Coefficients come
    from FFT interpolation on |x| = |y| = 1 and are trimmed where they vanish.
    """
    sI, sx, sy = inv.scales
    t = np.exp(2j * np.pi * np.arange(grid) / grid)
    X = _powers(t / sx, inv.dx)
    Y = _powers(t / sy, inv.dy)
    c = np.einsum("rpq,mp,nq->rmn", inv.coeffs, X, Y)          # P_I coefficients on the grid
    a = ar_derivative_roots(r, t)[:, :, None]                   # (2, grid, 1)
    b = ar_derivative_roots(r, t)[:, None, :]                   # conj f'(w) over y: real coefficients
    poly = np.ones((1, grid, grid), dtype=complex)
    for ai in a:
        for bj in b:
            ab = ai * bj
            q = np.stack([c[m] * (k_scale / sI) ** m * ab ** (inv.dk - m) for m in range(inv.dk + 1)])
            out = np.zeros((poly.shape[0] + inv.dk, grid, grid), dtype=complex)
            for m in range(inv.dk + 1):
                out[m:m + poly.shape[0]] += q[m] * poly
            poly = out
    coef = np.fft.fft2(poly, axes=(1, 2)) / grid ** 2
    mag = np.abs(coef)
    tiny = trim * mag.max()
    dx = int(np.nonzero(mag.max(axis=(0, 2)) > tiny)[0][-1])
    dy = int(np.nonzero(mag.max(axis=(0, 1)) > tiny)[0][-1])
    if max(dx, dy) >= grid // 2:
        raise NoRelationFound("elimination grid too coarse for the derived degree")
    coef = coef[:, : dx + 1, : dy + 1]
    return coef / np.linalg.norm(coef)


@dataclass(frozen=True, eq=False)
class KernelRelationFit:
    """Trivariate relation P(K, f(z), conj f(w)) on A(r) together with its provenance."""

    relation: TrivariateRelation
    invariant: TrivariateRelation
    invariant_table: list
    held_out_root_error: float
    r: float
    root_guard: float = 0.3

    @property
    def k_degree(self) -> int:
        return self.relation.dk

    def to_dict(self) -> dict:
        d = self.relation.to_dict()
        d["invariant_relation"] = self.invariant.to_dict()
        d["held_out_root_error"] = float(self.held_out_root_error)
        d["root_error_guard"] = float(self.root_guard)
        return d


def ar_kernel_relation(r: float, samples: SampleTriple, pmap: ProperMap | None = None,
                       tol: float = 1e-6, root_guard: float = 0.3) -> KernelRelationFit:
    """Discover the polynomial relation satisfied by the Bergman kernel of A(r).

    A direct monomial fit in K is out of reach (the relation has bidegree in
    the twenties).  Instead the invariant I = K/(f'(z) conj f'(w)) is fitted,
    which has a low-degree relation, and f' is eliminated exactly because it
    is quadratic over f.  The result is validated on held-out K samples only.
    """
    pmap = pmap or ar_proper_map(r)
    inv, table = minimal_three_var_relation(invariant_triple(samples, pmap), tol=tol)
    ks = _rms(samples.k)
    coef = _eliminate(inv, r, ks)
    dk, dx, dy = (n - 1 for n in coef.shape)
    _, held = _split(len(samples.k))
    proto = TrivariateRelation(dk, dx, dy, coef, inv.fit_residual, 0.0, (ks, 1.0, 1.0))
    vres = float(np.max(proto.residual(samples.k[held], samples.x[held], samples.y[held])))
    rel = TrivariateRelation(dk, dx, dy, coef, inv.fit_residual, vres, (ks, 1.0, 1.0),
                             f"derived from a ({inv.dk}, {inv.dx}, {inv.dy}) relation for the invariant")
    # roots of the expanded relation lose accuracy where f' is small (all roots cluster at 0)
    g = np.minimum(np.abs(pmap.fp(samples.z[held])), np.abs(pmap.fp(samples.w[held])))
    sub = held[g >= root_guard]
    sub = sub[:: max(1, len(sub) // 200)]
    rerr = float(np.max(rel.root_residual(samples.k[sub], samples.x[sub], samples.y[sub])))
    return KernelRelationFit(rel, inv, table, rerr, float(r), root_guard)


def shuffled_control(samples: SampleTriple, fit: KernelRelationFit, pmap: ProperMap, seed: int = 0) -> float:
    """Held-out residual of the same-degree refit after permuting the K values."""
    rng = np.random.default_rng(seed)
    shuffled = invariant_triple(samples.with_values(samples.k[rng.permutation(len(samples.k))]), pmap)
    inv = fit.invariant
    return fit_three_var_relation(shuffled, inv.dk, inv.dx, inv.dy).validation_residual


def hermitian_swap_residual(samples: SampleTriple, rel: TrivariateRelation) -> float:
    """Residual at (conj K, conj y, conj x): the relation evaluated with z and w exchanged."""
    return float(np.max(rel.residual(np.conj(samples.k), np.conj(samples.y), np.conj(samples.x))))


def invariant_branch_points(inv: TrivariateRelation, y: complex) -> np.ndarray:
    """x values where two roots of the invariant relation collide, for fixed y (quadratic case)."""
    if inv.dk != 2:
        raise NotImplementedError("branch points are computed for quadratic invariant relations")
    sI, sx, sy = inv.scales
    py = (complex(y) / sy) ** np.arange(inv.dy + 1)
    c0, c1, c2 = (np.polynomial.Polynomial(inv.coeffs[m] @ py) for m in range(3))
    disc = c1 * c1 - 4 * c0 * c2
    return disc.roots() * sx


def kernel_branch_points(fit: KernelRelationFit, w: complex, max_abs: float = 100.0) -> np.ndarray:
    """z locations where continuing K(., w) changes branch.

    Only discriminant zeros of odd order give monodromy.  The order is read
    off in the z-plane, from the winding of disc(f(z)) on a small circle: at
    a critical point of f the x-plane zero is odd but its pullback is even.
    """
    inv, r = fit.invariant, fit.r
    f = ar_proper_map(r).f
    y = np.conj(f(w))
    sI, sx, sy = inv.scales
    py = (complex(y) / sy) ** np.arange(inv.dy + 1)
    c0, c1, c2 = (np.polynomial.Polynomial(inv.coeffs[m] @ py) for m in range(3))
    disc = c1 * c1 - 4 * c0 * c2
    xs = disc.roots() * sx
    xs = xs[np.abs(xs) < max_abs]
    zs = np.concatenate([ar_preimages(r, x) for x in xs]) if len(xs) else np.array([], complex)
    out = []
    th = np.linspace(0, 2 * np.pi, 721)
    for z0 in zs:
        others = np.abs(zs - z0)
        others = others[others > 1e-6]
        rad = 0.25 * min(others.min() if len(others) else 1.0, 0.2)
        vals = disc(f(z0 + rad * np.exp(1j * th)) / sx)
        wind = int(round(np.sum(np.diff(np.unwrap(np.angle(vals)))) / (2 * np.pi)))
        if wind % 2:
            out.append(z0)
    return np.array(out)


def loop_path(start: complex, center: complex, radius: float, legs: int = 12, arc: int = 48) -> np.ndarray:
    """Out from start to a circle about center, once around it, and back."""
    d = (start - center) / abs(start - center)
    ring = center + radius * d * np.exp(1j * np.linspace(0, 2 * np.pi, arc + 1))
    return np.concatenate([np.linspace(start, ring[0], legs), ring[1:], np.linspace(ring[-1], start, legs)[1:]])


def ar_preimages(r: float, x) -> np.ndarray:
    """Both z with (z + 1/z)/r = x."""
    x = complex(x)
    return np.roots([1.0, -r * x, 1.0])


# ---------------------------------------------------------------- invariant and continuation

def invariant_I(domain: Domain, pmap: ProperMap, z, w, guard: float = 1e-3) -> np.ndarray:
    """I(z, w) = K(z, w)/(f'(z) conj f'(w)), rows z and columns w."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    fz, fw = np.asarray(pmap.fp(z)), np.asarray(pmap.fp(w))
    if np.min(np.abs(fz)) < guard or np.min(np.abs(fw)) < guard:
        raise ValueError("too close to a critical point of f")
    return bergman_oracle(domain)(z, w) / (fz[:, None] * np.conj(fw)[None, :])


@dataclass(frozen=True, eq=False)
class ContinuationTrace:
    points: np.ndarray
    values: np.ndarray
    roots: list                   # full root multiset at every accepted point
    stopped_at: complex | None = None
    reason: str = ""

    @property
    def branch_count(self) -> int:
        return len(self.roots[-1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        nr = max(len(r) for r in self.roots)
        w.writerow(["re_z", "im_z", "re_k", "im_k"]
                   + list(itertools.chain.from_iterable((f"re_root{j}", f"im_root{j}") for j in range(nr))))
        for p, v, r in zip(self.points, self.values, self.roots):
            row = [f"{p.real:.12g}", f"{p.imag:.12g}", f"{v.real:.12g}", f"{v.imag:.12g}"]
            for x in r:
                row += [f"{x.real:.12g}", f"{x.imag:.12g}"]
            w.writerow(row)
        return buf.getvalue()


def continue_kernel(rel: TrivariateRelation, f, w: complex, path, seed: complex,
                    min_step: float = 1e-6, collision: float = 1e-8) -> ContinuationTrace:
    """Track the root of P(., f(z), conj f(w)) matching ``seed`` along a polyline path.

    Each step takes the root nearest to the previous value; the step is halved
    while the nearest root is not clearly closer than the runner-up.
    """
    path = np.asarray(path, dtype=complex)
    y = np.conj(f(w))
    cur = complex(seed)
    roots0 = rel.k_roots(f(path[0]), y)
    j = int(np.argmin(np.abs(roots0 - cur)))
    cur = roots0[j]
    pts, vals, allr = [path[0]], [cur], [roots0]
    z = path[0]
    for target in path[1:]:
        h = 1.0
        while True:
            znew = z + h * (target - z)
            r = rel.k_roots(f(znew), y)
            scale = float(np.max(np.abs(r)))
            d = np.abs(r[:, None] - r[None, :])
            np.fill_diagonal(d, np.inf)
            d = np.sort(d, axis=None)
            if len(r) > 1 and d[0] < collision * scale:
                return ContinuationTrace(np.array(pts), np.array(vals), allr, znew, "root collision (branch point)")
            dist = np.abs(r - cur)
            order = np.argsort(dist)
            ok = len(r) == 1 or dist[order[0]] < 0.25 * dist[order[1]]
            if ok:
                cur, z = r[order[0]], znew
                pts.append(z)
                vals.append(cur)
                allr.append(r)
                if abs(z - target) < 1e-15 * max(1.0, abs(target)):
                    break
                h = min(1.0, 2 * h)
                continue
            h *= 0.5
            if h * abs(target - z) < min_step:
                raise ContinuationError(f"step underflow near {z}: roots too close to track")
    return ContinuationTrace(np.array(pts), np.array(vals), allr)
