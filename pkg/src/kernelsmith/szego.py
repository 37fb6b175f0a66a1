"""Szegő and Garabedian kernels via the Kerzman–Stein integral equation, and Ahlfors maps.

For boundary points z, w the Cauchy kernel is H(z, w) = (1/2 pi i) T(w)/(w - z)
and the Kerzman–Stein kernel A(z, w) = conj(H(w, z)) - H(z, w) (the kernel of
C* - C, with C the Cauchy transform) is smooth and skew-hermitian.  The boundary trace of S(., a) solves

    S(z, a) + \\int A(z, w) S(w, a) ds_w = conj(H(a, z)),

and L(z, a) = i conj(S(z, a)) conj(T(z)) on the boundary.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .calculus import (
    TRACE_SPACINGS,
    BoundaryField,
    GuardError,
    boundary_derivative,
    cauchy_interior,
    check_points,
    find_zeros,
    holomorphic_defect,
    unit_tangent,
)
from .geometry import Domain


class ResolutionError(RuntimeError):
    pass


class BasePointError(RuntimeError):
    pass


def kerzman_stein_kernel(domain: Domain) -> np.ndarray:
    """A(z_k, z_l) on the boundary grid.  The diagonal limit is zero for smooth curves."""
    z = domain.points
    T = domain.derivs / np.abs(domain.derivs)
    diff = z[None, :] - z[:, None]          # w - z with z = row, w = column
    np.fill_diagonal(diff, 1.0)
    H = T[None, :] / diff / (2j * np.pi)    # H(z_k, w_l)
    A = H.conj().T - H
    np.fill_diagonal(A, 0.0)
    return A


def richardson_diagonal(domain: Domain) -> np.ndarray:
    """Fourth-order extrapolation of A(z_k, z_{k+j}) to j = 0 along each curve.

    Used only to confirm that the analytic diagonal value (zero) is consistent
    with the off-diagonal entries.
    """
    A = kerzman_stein_kernel(domain)
    out = np.empty(domain.N, dtype=complex)
    for sl, c in zip(domain.slices(), domain.curves):
        blk = A[sl, sl]
        k = np.arange(c.M)
        near1 = 0.5 * (blk[k, (k + 1) % c.M] + blk[k, (k - 1) % c.M])
        near2 = 0.5 * (blk[k, (k + 2) % c.M] + blk[k, (k - 2) % c.M])
        out[sl] = (4.0 * near1 - near2) / 3.0
    return out


@dataclass(frozen=True, eq=False)
class _KSSystem:
    domain: Domain
    lu: tuple
    sqrt_ds: np.ndarray


@functools.lru_cache(maxsize=32)
def _ks_system(domain: Domain) -> _KSSystem:
    A = kerzman_stein_kernel(domain)
    ds = np.abs(domain.derivs) * domain.weights_dt
    r = np.sqrt(ds)
    # symmetrized: I + D^1/2 A D^1/2 is identity plus skew-hermitian
    B = np.eye(domain.N) + r[:, None] * A * r[None, :]
    lu = sla.lu_factor(B)
    if np.min(np.abs(np.diag(lu[0]))) < 1e-12:
        raise ResolutionError("Kerzman–Stein system is singular to working precision")
    return _KSSystem(domain, lu, r)


def szego_rhs(domain: Domain, a) -> np.ndarray:
    """conj(H(a, z)) = conj((1/2 pi i) T(z)/(z - a)) for each base point a (columns)."""
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    z = domain.points
    T = domain.derivs / np.abs(domain.derivs)
    return np.conj(T[:, None] / (z[:, None] - a[None, :]) / (2j * np.pi))


def szego_boundary_values(domain: Domain, a, check: bool = True) -> np.ndarray:
    """Columns hold the boundary traces of S(., a_j)."""
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    if check:
        check_points(domain, a)
    sys = _ks_system(domain)
    rhs = szego_rhs(domain, a) * sys.sqrt_ds[:, None]
    v = sla.lu_solve(sys.lu, rhs)
    return v / sys.sqrt_ds[:, None]


@dataclass(frozen=True, eq=False)
class SzegoSolution:
    a: complex
    s_boundary: BoundaryField
    l_boundary: BoundaryField

    @property
    def domain(self) -> Domain:
        return self.s_boundary.domain

    def S(self, z, check: bool = True):
        return szego_eval(self, z, check)

    def L(self, z, check: bool = True):
        return garabedian_eval(self, z, check)

    def pole_free_l(self) -> BoundaryField:
        return self.l_boundary - 1.0 / (2 * np.pi * (self.domain.points - self.a))

    def identity_residual(self) -> float:
        """Relative defect of the boundary identity: L(., a) built from conj(S) must be pole + holomorphic."""
        scale = float(np.max(self.l_boundary.abs()))
        return holomorphic_defect(self.pole_free_l()) / scale

    def szego_defect(self) -> float:
        return holomorphic_defect(self.s_boundary) / float(np.max(self.s_boundary.abs()))


def _solution(domain: Domain, a: complex, s: np.ndarray) -> SzegoSolution:
    T = unit_tangent(domain).values
    sb = BoundaryField(s, domain)
    lb = BoundaryField(1j * np.conj(s) * np.conj(T), domain)
    return SzegoSolution(complex(a), sb, lb)


def szego_solve(domain: Domain, a: complex, check: bool = True) -> SzegoSolution:
    s = szego_boundary_values(domain, a, check)[:, 0]
    return _solution(domain, a, s)


def szego_solve_many(domain: Domain, points, check: bool = True) -> list[SzegoSolution]:
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    S = szego_boundary_values(domain, pts, check)
    return [_solution(domain, p, S[:, j]) for j, p in enumerate(pts)]


def szego_eval(solution: SzegoSolution, z, check: bool = True):
    return cauchy_interior(solution.s_boundary, z, check=check)


def garabedian_eval(solution: SzegoSolution, z, check: bool = True):
    scalar = np.ndim(z) == 0
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(np.abs(zz - solution.a) < 1e-6):
        raise GuardError("Garabedian kernel evaluated at its pole")
    v = cauchy_interior(solution.pole_free_l(), zz, check=check) + 1.0 / (2 * np.pi * (zz - solution.a))
    return complex(v[0]) if scalar else v


def szego_kernel(domain: Domain, z, w, check: bool = True) -> np.ndarray:
    """S(z_i, w_j) as a matrix (rows z, columns w)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    S = szego_boundary_values(domain, w, check)
    if check:
        check_points(domain, z)
    from .calculus import cauchy_matrix
    return cauchy_matrix(domain, z) @ S


def garabedian_kernel(domain: Domain, z, w, check: bool = True) -> np.ndarray:
    """L(z_i, w_j) as a matrix (rows z, columns w)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    if np.any(np.abs(z[:, None] - w[None, :]) < 1e-6):
        raise GuardError("Garabedian kernel evaluated on the diagonal")
    S = szego_boundary_values(domain, w, check)
    if check:
        check_points(domain, z)
    T = unit_tangent(domain).values
    zeta = domain.points
    Lb = 1j * np.conj(S) * np.conj(T)[:, None] - 1.0 / (2 * np.pi * (zeta[:, None] - w[None, :]))
    from .calculus import cauchy_matrix
    return cauchy_matrix(domain, z) @ Lb + 1.0 / (2 * np.pi * (z[:, None] - w[None, :]))


@dataclass(frozen=True, eq=False)
class AhlforsMap:
    a: complex
    solution: SzegoSolution
    f_boundary: BoundaryField
    fp_boundary: BoundaryField
    fpp_boundary: BoundaryField
    derivative_at_a: float = field(default=0.0)

    @property
    def domain(self) -> Domain:
        return self.f_boundary.domain

    def f(self, z, check: bool = True):
        return cauchy_interior(self.f_boundary, z, check=check)

    def fp(self, z, check: bool = True):
        return cauchy_interior(self.fp_boundary, z, check=check)

    def fpp(self, z, check: bool = True):
        return cauchy_interior(self.fpp_boundary, z, check=check)

    def __call__(self, z, check: bool = True):
        return self.f(z, check)

    def boundary_modulus_error(self) -> float:
        return float(np.max(np.abs(self.f_boundary.abs() - 1.0)))

    def curve_windings(self) -> list[int]:
        """Winding number of f_a about 0 along each boundary curve (in the curve's own direction)."""
        d = self.domain
        q = self.fp_boundary.values / self.f_boundary.values * d.derivs * d.weights_dt / (2j * np.pi)
        return [int(round(np.sum(q[sl]).real)) for sl in d.slices()]

    def degree(self) -> int:
        return int(sum(self.curve_windings()))


def ahlfors(domain: Domain, a: complex, solution: SzegoSolution | None = None) -> AhlforsMap:
    """f_a = S(., a)/L(., a): boundary traces plus Cauchy interior evaluation."""
    sol = solution if solution is not None else szego_solve(domain, a)
    fb = sol.s_boundary / sol.l_boundary
    fpb = boundary_derivative(fb)
    fppb = boundary_derivative(fpb)
    d0 = cauchy_interior(fpb, sol.a, check=False)
    return AhlforsMap(sol.a, sol, fb, fpb, fppb, float(d0.real))


def szego_zeros(domain: Domain, a: complex, solution: SzegoSolution | None = None) -> list[complex]:
    """The n-1 zeros of S(., a) in the domain."""
    sol = solution if solution is not None else szego_solve(domain, a)
    sb = sol.s_boundary
    return find_zeros(sb, boundary_derivative(sb), domain.n - 1)


def zero_report(domain: Domain, a: complex, solution: SzegoSolution | None = None) -> dict:
    """Zeros of S(., a) with simplicity and separation diagnostics."""
    sol = solution if solution is not None else szego_solve(domain, a)
    zs = szego_zeros(domain, a, sol)
    sp = boundary_derivative(sol.s_boundary)
    scale = float(np.max(sol.s_boundary.abs()))
    ok_pts = domain.contains_many(np.array(zs)) if zs else np.array([], bool)
    derivs = [abs(cauchy_interior(sp, z, check=False)) for z in zs]
    resid = [abs(cauchy_interior(sol.s_boundary, z, check=False)) / scale for z in zs]
    sep = np.inf
    if len(zs) > 1:
        arr = np.array(zs)
        dist = np.abs(arr[:, None] - arr[None, :])
        np.fill_diagonal(dist, np.inf)
        sep = float(np.min(dist))
    scale_d = scale / max(1.0, float(np.max(np.abs(domain.points))))
    simple = all(dv >= 1e-6 * scale_d for dv in derivs)
    return {"a": sol.a, "zeros": zs, "separation": sep, "derivs": derivs, "residuals": resid,
            "inside": bool(np.all(ok_pts)), "simple": simple}


def well_resolved(domain: Domain, a: complex, spacings: float = TRACE_SPACINGS) -> bool:
    """True when the zeros of S(., a) are found and clear the trace guard, so f_a is resolved."""
    try:
        zs = zero_report(domain, a)["zeros"]
    except (GuardError, RuntimeError):
        return False
    return bool(not zs or np.all(domain.guard_ok(np.array(zs), spacings)))


def _admissible(domain: Domain, a: complex, min_sep: float, spacings: float) -> tuple[bool, str]:
    try:
        check_points(domain, a, spacings)
        rep = zero_report(domain, a)
    except (GuardError, RuntimeError) as exc:
        return False, str(exc)
    zs = rep["zeros"]
    if not rep["simple"] or rep["separation"] < min_sep:
        return False, "zeros not simple/separated"
    if zs and not np.all(domain.guard_ok(np.array(zs), spacings)):
        return False, "zeros inside the accuracy guard"
    pts = [a] + zs
    for ak in zs:
        try:
            rk = zero_report(domain, ak)
        except (GuardError, RuntimeError) as exc:
            return False, str(exc)
        if not rk["simple"] or rk["separation"] < min_sep:
            return False, "secondary zeros not simple/separated"
        if not np.all(domain.guard_ok(np.array(rk["zeros"]), spacings)):
            return False, "secondary zeros inside the accuracy guard"
        pts += rk["zeros"]
    return True, "ok"


def select_base_point(domain: Domain, direction_hint: complex = 1.0, start: complex | None = None,
                      min_sep: float = 1e-2, spacings: float = TRACE_SPACINGS, max_steps: int = 24,
                      log: list | None = None) -> complex:
    """Walk from ``start`` toward the boundary along ``direction_hint``.

    The gap to the first boundary crossing is halved at every step; the first
    point whose zero sets (for S(., a) and each S(., a_k)) are simple, pairwise
    separated by ``min_sep`` and clear of the accuracy guard is returned.
    """
    if direction_hint == 0:
        raise ValueError("direction_hint must be non-zero")
    u = complex(direction_hint) / abs(direction_hint)
    p0 = domain.deepest_point() if start is None else complex(start)
    if not domain.contains(p0):
        raise BasePointError("start point is not inside the domain")
    # first boundary crossing along the ray
    ts = np.linspace(0.0, 4 * max(1.0, abs(domain.bounding_box()[1] - domain.bounding_box()[0])), 4001)
    ray = p0 + u * ts
    inside = domain.contains_many(ray)
    exit_idx = int(np.argmin(inside)) if not np.all(inside) else len(ts) - 1
    t_exit = ts[exit_idx]
    gap = t_exit
    t = 0.0
    for _ in range(max_steps):
        a = p0 + u * t
        ok, why = _admissible(domain, a, min_sep, spacings)
        if log is not None:
            log.append((a, why))
        if ok:
            return complex(a)
        gap *= 0.5
        t = t_exit - gap
        a_next = p0 + u * t
        if not domain.guard_ok(a_next, spacings):
            break
    raise BasePointError("no admissible base point before the accuracy guard; try a larger M "
                         "or another direction")
