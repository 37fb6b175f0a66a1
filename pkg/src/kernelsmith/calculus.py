"""Periodic quadrature, spectral differentiation and Cauchy integrals on a Domain grid."""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import Domain, spectral_diff


class GridMismatchError(ValueError):
    pass


class GuardError(ValueError):
    """Evaluation point outside the domain or closer than the accuracy guard."""


class ZeroCountError(RuntimeError):
    pass


class ClusteredZerosWarning(RuntimeWarning):
    pass


GUARD_SPACINGS = 5.0
# boundary traces of kernels singular at w lose accuracy twice as fast as interior
# Cauchy sums, so points whose traces are tabulated keep twice the distance
TRACE_SPACINGS = 8.0


@dataclass(frozen=True, eq=False)
class BoundaryField:
    """Complex samples on the concatenated boundary grid of ``domain``."""

    values: np.ndarray
    domain: Domain

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.domain.N,):
            raise GridMismatchError(f"field has {v.shape} samples, grid has {self.domain.N}")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, domain: Domain, f) -> "BoundaryField":
        return cls(f(domain.points), domain)

    def _other(self, other):
        if isinstance(other, BoundaryField):
            if other.domain is not self.domain:
                raise GridMismatchError("fields live on different boundary grids")
            return other.values
        return other

    def __add__(self, other):
        return BoundaryField(self.values + self._other(other), self.domain)

    __radd__ = __add__

    def __sub__(self, other):
        return BoundaryField(self.values - self._other(other), self.domain)

    def __rsub__(self, other):
        return BoundaryField(self._other(other) - self.values, self.domain)

    def __mul__(self, other):
        return BoundaryField(self.values * self._other(other), self.domain)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return BoundaryField(self.values / self._other(other), self.domain)

    def __rtruediv__(self, other):
        return BoundaryField(self._other(other) / self.values, self.domain)

    def __neg__(self):
        return BoundaryField(-self.values, self.domain)

    def __pow__(self, p):
        return BoundaryField(self.values ** p, self.domain)

    def conj(self) -> "BoundaryField":
        return BoundaryField(np.conj(self.values), self.domain)

    def abs(self) -> np.ndarray:
        return np.abs(self.values)

    def on_curve(self, j: int) -> np.ndarray:
        return self.values[self.domain.slices()[j]]


def _check_field(field) -> BoundaryField:
    if not isinstance(field, BoundaryField):
        raise GridMismatchError("expected a BoundaryField")
    return field


def integrate_ds(field: BoundaryField) -> complex:
    f = _check_field(field)
    d = f.domain
    return complex(np.sum(f.values * np.abs(d.derivs) * d.weights_dt))


def integrate_dz(field: BoundaryField) -> complex:
    f = _check_field(field)
    d = f.domain
    return complex(np.sum(f.values * d.derivs * d.weights_dt))


def unit_tangent(domain: Domain, curve_index: int | None = None) -> BoundaryField | np.ndarray:
    """T(z) = z'(t)/|z'(t)|; the whole-boundary field, or one curve's samples."""
    if curve_index is None:
        dz = domain.derivs
        return BoundaryField(dz / np.abs(dz), domain)
    c = domain.curves[curve_index]
    return c.deriv / np.abs(c.deriv)


def boundary_t_derivative(field: BoundaryField) -> np.ndarray:
    f = _check_field(field)
    out = np.empty_like(f.values)
    for sl in f.domain.slices():
        out[sl] = spectral_diff(f.values[sl])
    return out


def boundary_derivative(field: BoundaryField, order: int = 1) -> BoundaryField:
    """Trace of h'(z) from the trace of h, where h is holomorphic near the boundary."""
    f = _check_field(field)
    for _ in range(order):
        f = BoundaryField(boundary_t_derivative(f) / f.domain.derivs, f.domain)
    return f


def check_points(domain: Domain, z, spacings: float = GUARD_SPACINGS) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    inside = domain.contains_many(z)
    if not np.all(inside):
        raise GuardError(f"points outside the domain: {z[~inside][:3]}")
    ok = domain.guard_ok(z, spacings)
    if not np.all(ok):
        raise GuardError(f"points within the accuracy guard ({spacings} grid spacings) "
                         f"of the boundary: {z[~ok][:3]}; raise M")
    return z


def cauchy_matrix(domain: Domain, z, order: int = 0) -> np.ndarray:
    """Rows map boundary samples to the ``order``-th derivative of the Cauchy integral."""
    z = np.atleast_1d(np.asarray(z, dtype=complex)).reshape(-1)
    zeta = domain.points
    w = domain.derivs * domain.weights_dt
    fac = math.factorial(order) / (2j * np.pi)
    return fac * w[None, :] / (zeta[None, :] - z[:, None]) ** (order + 1)


def cauchy_interior(field: BoundaryField, point, order: int = 0, check: bool = True):
    """(k!/2 pi i) \\oint f(zeta)/(zeta - z)^{k+1} dzeta over the whole boundary."""
    f = _check_field(field)
    scalar = np.ndim(point) == 0
    z = np.atleast_1d(np.asarray(point, dtype=complex))
    if check:
        check_points(f.domain, z)
    vals = cauchy_matrix(f.domain, z.reshape(-1), order) @ f.values
    vals = vals.reshape(z.shape)
    return complex(vals[0]) if scalar else vals


@functools.lru_cache(maxsize=32)
def interior_limit_matrix(domain: Domain) -> np.ndarray:
    """Matrix P with (P g)_k = boundary value, from inside, of the Cauchy integral of g.

    Uses f_+(z0) = g(z0) + (1/2 pi i) \\oint (g - g(z0))/(zeta - z0) dzeta; the
    diagonal limit of the subtracted integrand is dg/dt, supplied by a spectral
    differentiation matrix.
    """
    zeta = domain.points
    w = domain.derivs * domain.weights_dt
    diff = zeta[None, :] - zeta[:, None]
    np.fill_diagonal(diff, 1.0)
    C = w[None, :] / diff / (2j * np.pi)
    np.fill_diagonal(C, 0.0)
    P = -np.diag(C.sum(axis=1)) + C
    P += np.eye(domain.N)
    for sl, c in zip(domain.slices(), domain.curves):
        D = _spectral_diff_matrix(c.M)
        P[sl, sl] += D / c.M / (2j * np.pi)
    P.setflags(write=False)
    return P


def _spectral_diff_matrix(m: int) -> np.ndarray:
    return spectral_diff(np.eye(m)).T


def holomorphic_defect(field: BoundaryField) -> float:
    """max |f_+ - f| on the grid: zero iff f is the trace of a function holomorphic in the domain."""
    f = _check_field(field)
    return float(np.max(np.abs(interior_limit_matrix(f.domain) @ f.values - f.values)))


def find_zeros(g: BoundaryField, g_deriv: BoundaryField, expected_count: int,
               polish_steps: int = 8) -> list[complex]:
    """Zeros of a function holomorphic in the domain from its boundary trace.

    Power sums s_p = (1/2 pi i) \\oint z^p g'/g dz give the elementary symmetric
    functions by Newton's identities; the roots of the resulting monic
    polynomial are then polished by Newton iteration on Cauchy-evaluated g, g'.
    """
    g, g_deriv = _check_field(g), _check_field(g_deriv)
    d = g.domain
    if g_deriv.domain is not d:
        raise GridMismatchError("g and g' live on different grids")
    scale = float(np.max(np.abs(g.values)))
    if np.min(np.abs(g.values)) <= 1e-10 * max(scale, 1e-300):
        raise ZeroCountError("g vanishes (to 1e-10) on the boundary")
    c0 = d.outer.centroid()
    zeta = d.points - c0
    q = g_deriv.values / g.values * d.derivs * d.weights_dt / (2j * np.pi)
    s0 = np.sum(q)
    if abs(s0 - expected_count) > 1e-6:
        raise ZeroCountError(f"argument principle gives {s0.real:.8f} zeros, expected {expected_count}")
    m = int(round(s0.real))
    if m == 0:
        return []
    s = [np.sum(zeta ** p * q) for p in range(1, m + 1)]
    e = [1.0 + 0j]
    for k in range(1, m + 1):
        e.append(sum((-1) ** (i - 1) * e[k - i] * s[i - 1] for i in range(1, k + 1)) / k)
    coeffs = [(-1) ** k * e[k] for k in range(m + 1)]
    roots = np.roots(coeffs) + c0 if m > 1 else np.array([e[1] + c0])
    roots = np.asarray(roots, dtype=complex)
    for _ in range(polish_steps):
        inside = d.contains_many(roots)
        if not np.all(inside):
            break
        gv = cauchy_interior(g, roots, check=False)
        gp = cauchy_interior(g_deriv, roots, check=False)
        step = gv / gp
        roots = roots - step
        if np.max(np.abs(step)) < 1e-15 * max(1.0, float(np.max(np.abs(roots)))):
            break
    if m > 1:
        dist = np.abs(roots[:, None] - roots[None, :])
        np.fill_diagonal(dist, np.inf)
        if np.min(dist) < 1e-4:
            warnings.warn(f"clustered zeros (separation {np.min(dist):.2e}); results ill-conditioned",
                          ClusteredZerosWarning, stacklevel=2)
    order = np.lexsort((roots.imag, roots.real))
    return [complex(r) for r in roots[order]]


def argument_count(g: BoundaryField, g_deriv: BoundaryField) -> float:
    d = g.domain
    return float(np.real(np.sum(g_deriv.values / g.values * d.derivs * d.weights_dt) / (2j * np.pi)))
