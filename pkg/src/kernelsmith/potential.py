"""Harmonic measures, Green's function and the Bergman-family kernels from a Dirichlet solver.

Nothing here touches the Szegő machinery, so identities that mix the two
families are genuine cross-checks.

Representation: u(z) = D[mu](z) + sum_j A_j ln|z - p_j|, with D the double
layer potential Re{(1/2 pi i) oint mu(zeta) dzeta/(zeta - z)} (applied
componentwise to complex densities), one log source p_j inside each hole, and
zero-mean conditions oint_{gamma_j} mu ds = 0 on the inner curves.  Then

    2 d/dz u = C'[mu](z) + sum_j A_j/(z - p_j),

with C' the derivative of the Cauchy integral, so z-derivatives are analytic.
Green's function convention: G > 0 inside, G(z, w) = -ln|z - w| + h(z, w).
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .calculus import (
    BoundaryField,
    GuardError,
    boundary_derivative,
    cauchy_matrix,
    check_points,
    interior_limit_matrix,
)
from .geometry import Domain, refine, trig_resample
from .szego import ResolutionError


@dataclass(frozen=True, eq=False)
class _DirichletSystem:
    domain: Domain
    lu: tuple
    holes: np.ndarray


def double_layer_matrix(domain: Domain) -> np.ndarray:
    """Interior-limit double layer operator (1/2 I + K) on the grid."""
    z = domain.points
    dz = domain.derivs
    wt = domain.weights_dt
    diff = z[None, :] - z[:, None]
    np.fill_diagonal(diff, 1.0)
    K = np.real(dz[None, :] / diff / (2j * np.pi)) * wt[None, :]
    d2 = np.concatenate([c.second_deriv() for c in domain.curves])
    np.fill_diagonal(K, np.imag(d2 / dz) / (4 * np.pi) * wt)
    return 0.5 * np.eye(domain.N) + K


@functools.lru_cache(maxsize=32)
def _dirichlet_system(domain: Domain) -> _DirichletSystem:
    N, n = domain.N, domain.n
    holes = np.array(domain.hole_points(), dtype=complex)
    B = np.zeros((N + n - 1, N + n - 1))
    B[:N, :N] = double_layer_matrix(domain)
    z = domain.points
    ds = np.abs(domain.derivs) * domain.weights_dt
    for j, p in enumerate(holes):
        B[:N, N + j] = np.log(np.abs(z - p))
        B[N + j, domain.slices()[j]] = ds[domain.slices()[j]]
    lu = sla.lu_factor(B)
    piv = np.abs(np.diag(lu[0]))
    if np.min(piv) < 1e-12 * np.max(piv):
        raise ResolutionError("Dirichlet system is singular to working precision")
    return _DirichletSystem(domain, lu, holes)


def dirichlet_density(domain: Domain, data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Densities (N, k) and log coefficients (n-1, k) for k columns of boundary data."""
    sys = _dirichlet_system(domain)
    data = np.asarray(data)
    one = data.ndim == 1
    rhs = data[:, None] if one else data
    rhs = np.vstack([rhs, np.zeros((domain.n - 1, rhs.shape[1]), dtype=rhs.dtype)])
    if np.iscomplexobj(rhs):
        sol = sla.lu_solve(sys.lu, rhs.real) + 1j * sla.lu_solve(sys.lu, rhs.imag)
    else:
        sol = sla.lu_solve(sys.lu, rhs)
    mu, A = sol[:domain.N], sol[domain.N:]
    return (mu[:, 0], A[:, 0]) if one else (mu, A)


def double_layer_eval_matrix(domain: Domain, z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex)).reshape(-1)
    zeta = domain.points
    w = domain.derivs * domain.weights_dt
    return np.real(w[None, :] / (zeta[None, :] - z[:, None]) / (2j * np.pi))


@dataclass(frozen=True, eq=False)
class HarmonicEvaluator:
    """u = D[mu] + sum_j A_j ln|z - p_j| for (possibly complex) boundary data."""

    domain: Domain
    mu: np.ndarray
    log_coeffs: np.ndarray
    data: np.ndarray

    @property
    def holes(self) -> np.ndarray:
        return _dirichlet_system(self.domain).holes

    def _grid(self, z, check, upsample):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        d, mu = self.domain, self.mu
        if upsample > 1:
            d = refine(self.domain, upsample)
            mu = np.concatenate([trig_resample(mu[sl], c.M * upsample)
                                 for sl, c in zip(self.domain.slices(), self.domain.curves)])
            if not np.iscomplexobj(self.mu):
                mu = mu.real
        if check:
            check_points(d, z)
        return z, d, mu

    def __call__(self, z, check: bool = True, upsample: int = 1):
        scalar = np.ndim(z) == 0
        z, d, mu = self._grid(z, check, upsample)
        flat = z.reshape(-1)
        v = double_layer_eval_matrix(d, flat) @ mu
        for A, p in zip(self.log_coeffs, self.holes):
            v = v + A * np.log(np.abs(flat - p))
        v = v.reshape(z.shape)
        return v[0] if scalar else v

    def dz2(self, z, check: bool = True, upsample: int = 1):
        """2 du/dz (holomorphic when u is harmonic)."""
        scalar = np.ndim(z) == 0
        z, d, mu = self._grid(z, check, upsample)
        flat = z.reshape(-1)
        v = cauchy_matrix(d, flat, order=1) @ mu
        for A, p in zip(self.log_coeffs, self.holes):
            v = v + A / (flat - p)
        v = v.reshape(z.shape)
        return complex(v[0]) if scalar else v

    def dz2_boundary(self) -> BoundaryField:
        """Boundary trace of 2 du/dz."""
        d = self.domain
        phi = BoundaryField(interior_limit_matrix(d) @ self.mu, d)
        v = boundary_derivative(phi).values
        for A, p in zip(self.log_coeffs, self.holes):
            v = v + A / (d.points - p)
        return BoundaryField(v, d)

    def boundary_residual(self) -> float:
        """Mismatch between the representation and the data at off-node (midpoint) boundary points."""
        d = self.domain
        ref = refine(d, 2)
        data_up = np.concatenate([trig_resample(np.asarray(self.data[sl], complex), 2 * c.M)
                                  for sl, c in zip(d.slices(), d.curves)])
        mid = np.concatenate([np.arange(s.start, s.stop)[1::2] for s in ref.slices()])
        zm = ref.points[mid]
        # interior limit at zm: 1/2 mu(zm) + smooth double-layer quadrature on the coarse grid
        mu_up = np.concatenate([trig_resample(np.asarray(self.mu[sl], complex), 2 * c.M)
                                for sl, c in zip(d.slices(), d.curves)])
        v = 0.5 * mu_up[mid] + double_layer_eval_matrix(d, zm) @ self.mu
        for A, p in zip(self.log_coeffs, self.holes):
            v = v + A * np.log(np.abs(zm - p))
        return float(np.max(np.abs(v - data_up[mid])))

    def mean_value_residual(self, center: complex, radius: float, nodes: int = 64) -> float:
        """|u(center) - circle average of u|; the circle must sit inside the domain."""
        ring = center + radius * np.exp(2j * np.pi * np.arange(nodes) / nodes)
        return float(abs(self(center) - np.mean(self(ring))))

    def dzbar_residual(self, z, h: float = 2e-3) -> float:
        """Cauchy-Riemann defect of 2 du/dz on a fourth-order cross stencil."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))

        def d(step):
            f = self.dz2
            return (-f(z + 2 * step) + 8 * f(z + step) - 8 * f(z - step) + f(z - 2 * step)) / (12 * h)

        dx, dy = d(h), d(1j * h)
        return float(np.max(np.abs(0.5 * (dx + 1j * dy))))


def dirichlet_solve(domain: Domain, boundary_data) -> HarmonicEvaluator:
    data = boundary_data.values if isinstance(boundary_data, BoundaryField) else np.asarray(boundary_data)
    if isinstance(boundary_data, BoundaryField) and np.max(np.abs(data.imag)) == 0:
        data = data.real
    mu, A = dirichlet_density(domain, data)
    return HarmonicEvaluator(domain, mu, A, data)


def harmonic_measure(domain: Domain, j: int) -> HarmonicEvaluator:
    """omega_j: one on inner curve j (1-based, j <= n-1), zero elsewhere."""
    if not 1 <= j <= domain.n - 1:
        raise IndexError(f"harmonic measure index {j} outside 1..{domain.n - 1}")
    data = np.zeros(domain.N)
    data[domain.slices()[j - 1]] = 1.0
    return dirichlet_solve(domain, data)


@dataclass(frozen=True, eq=False)
class KernelEvaluator:
    """Evaluator for one kernel family on interior points.

    kind: "K" (K_m = d^m/dwbar^m K), "Lambda" (Lambda_m = d^m/dw^m Lambda),
    "G" (Green's function) or "Fprime" (F'_j, one-variable; ``m`` holds j).
    Two-point kinds are called as ``ev(z, w)`` and return a len(z) x len(w) array.
    """

    domain: Domain
    kind: str
    m: int = 0

    def _data(self, w: np.ndarray) -> np.ndarray:
        zeta = self.domain.points[:, None]
        w = w[None, :]
        m = self.m
        if self.kind == "K":
            return -0.5 * math.factorial(m) * (np.conj(zeta) - np.conj(w)) ** (-(m + 1))
        if self.kind == "Lambda":
            return -0.5 * math.factorial(m) * (zeta - w) ** (-(m + 1))
        if self.kind == "G":
            return np.log(np.abs(zeta - w))
        raise ValueError(self.kind)

    def harmonic(self, w) -> list[HarmonicEvaluator]:
        """The harmonic corrections h(., w_j) (or their w-derivatives) as evaluators."""
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        data = self._data(w)
        mu, A = dirichlet_density(self.domain, data)
        return [HarmonicEvaluator(self.domain, mu[:, j], A[:, j], data[:, j]) for j in range(len(w))]

    def __call__(self, z, w=None, check: bool = True, upsample: int = 1) -> np.ndarray:
        if self.kind == "Fprime":
            return f_prime_evaluator(self.domain, self.m).dz2(z, check, upsample)
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        if check:
            check_points(self.domain, w)
        if self.kind in ("Lambda", "G"):
            if np.any(np.abs(z[:, None] - w[None, :]) < 1e-3):
                raise GuardError(f"{self.kind} evaluated within 1e-3 of the diagonal")
        data = self._data(w)
        mu, A = dirichlet_density(self.domain, data)
        ev = HarmonicEvaluator(self.domain, mu, A, data)
        zz, d, mu_g = ev._grid(z, check, upsample)
        holes = ev.holes
        if self.kind == "G":
            h = double_layer_eval_matrix(d, zz) @ mu_g
            for j, p in enumerate(holes):
                h = h + np.log(np.abs(zz - p))[:, None] * A[j][None, :]
            return -np.log(np.abs(zz[:, None] - w[None, :])) + h
        dh = cauchy_matrix(d, zz, order=1) @ mu_g
        for j, p in enumerate(holes):
            dh = dh + (1.0 / (zz - p))[:, None] * A[j][None, :]
        # -(2/pi) d/dz h = -(1/pi) (2 dh/dz)
        out = -dh / np.pi
        if self.kind == "Lambda":
            out = out + math.factorial(self.m + 1) / (np.pi * (zz[:, None] - w[None, :]) ** (self.m + 2))
        return out

    def boundary(self, w: complex) -> BoundaryField:
        """Boundary trace (in z) of K_m(., w) or Lambda_m(., w)."""
        if self.kind not in ("K", "Lambda"):
            raise ValueError("boundary traces are available for K and Lambda")
        ev = self.harmonic(w)[0]
        tr = -ev.dz2_boundary().values / np.pi
        if self.kind == "Lambda":
            zeta = self.domain.points
            tr = tr + math.factorial(self.m + 1) / (np.pi * (zeta - w) ** (self.m + 2))
        return BoundaryField(tr, self.domain)


def bergman_oracle(domain: Domain, m: int = 0) -> KernelEvaluator:
    """K_m(z, w) = d^m/dwbar^m K(z, w) with K = -(2/pi) d^2 G/dz dwbar."""
    if not 0 <= m <= 2:
        raise ValueError("derivative order m must be 0, 1 or 2")
    return KernelEvaluator(domain, "K", m)


def lambda_oracle(domain: Domain, m: int = 0) -> KernelEvaluator:
    """Lambda_m(z, w) = d^m/dw^m Lambda(z, w) with Lambda = -(2/pi) d^2 G/dz dw."""
    if not 0 <= m <= 2:
        raise ValueError("derivative order m must be 0, 1 or 2")
    return KernelEvaluator(domain, "Lambda", m)


def green(domain: Domain) -> KernelEvaluator:
    return KernelEvaluator(domain, "G", 0)


@functools.lru_cache(maxsize=64)
def f_prime_evaluator(domain: Domain, j: int) -> HarmonicEvaluator:
    return harmonic_measure(domain, j)


def f_prime(domain: Domain, j: int) -> KernelEvaluator:
    """F'_j = 2 d(omega_j)/dz, evaluated analytically from the layer representation."""
    f_prime_evaluator(domain, j)
    return KernelEvaluator(domain, "Fprime", j)


def modulus(domain: Domain) -> float:
    """Conformal modulus of a doubly connected domain, normalized so the annulus rho<|z|<1 gives ln(1/rho).

    The period of F'_1 around the outer curve equals 2 pi i times the sum of the
    log-source coefficients of omega_1 (the layer part is single valued), and
    the modulus is 2 pi / |period|.
    """
    if domain.n != 2:
        raise ValueError("modulus is defined here for doubly connected domains only")
    om = f_prime_evaluator(domain, 1)
    period = 2j * np.pi * np.sum(om.log_coeffs)
    return float(2 * np.pi / abs(period))
