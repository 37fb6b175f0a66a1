"""Multiply connected planar domains bounded by sampled analytic curves.

Curves are sampled at equispaced parameters t_k = k/M on [0, 1).  The outer
curve is stored last and runs counterclockwise; inner curves run clockwise,
so the domain always lies to the left of every boundary curve.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class GeometryError(ValueError):
    pass


class IndeterminateError(GeometryError):
    """Raised when a membership query sits on (or too near) the boundary."""


def spectral_diff(samples: np.ndarray, order: int = 1) -> np.ndarray:
    """d/dt of a 1-periodic trigonometric interpolant sampled at t_k = k/M."""
    m = samples.shape[-1]
    k = np.fft.fftfreq(m, d=1.0 / m)
    if order % 2 == 1 and m % 2 == 0:
        k[m // 2] = 0.0
    return np.fft.ifft((2j * np.pi * k) ** order * np.fft.fft(samples, axis=-1), axis=-1)


@dataclass(frozen=True, eq=False)
class ParamCurve:
    samples: np.ndarray
    deriv: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.samples, dtype=complex)
        dz = np.asarray(self.deriv, dtype=complex)
        if z.shape != dz.shape or z.ndim != 1:
            raise GeometryError("samples and deriv must be equal-length 1-d arrays")
        m = z.size
        if m < 32 or m & (m - 1):
            raise GeometryError(f"sample count must be a power of two >= 32, got {m}")
        if np.min(np.abs(dz)) <= 1e-12:
            raise GeometryError("degenerate parameterization: |z'(t)| vanishes")
        z.setflags(write=False)
        dz.setflags(write=False)
        object.__setattr__(self, "samples", z)
        object.__setattr__(self, "deriv", dz)

    @property
    def M(self) -> int:
        return self.samples.size

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.M) / self.M

    @property
    def speed(self) -> np.ndarray:
        return np.abs(self.deriv)

    @property
    def spacing(self) -> float:
        """Largest arc-length gap between consecutive samples."""
        return float(np.max(self.speed)) / self.M

    def second_deriv(self) -> np.ndarray:
        return spectral_diff(self.deriv)

    def spectral_deriv_error(self) -> float:
        return float(np.max(np.abs(spectral_diff(self.samples) - self.deriv)))

    def winding(self, p: complex) -> float:
        """Winding number of the curve about p (trapezoid rule on dz/(z-p))."""
        return float(np.real(np.sum(self.deriv / (self.samples - p)) / self.M / (2j * np.pi)))

    def reversed(self) -> "ParamCurve":
        # z(1 - t): sample k maps to index (-k) mod M
        idx = (-np.arange(self.M)) % self.M
        return ParamCurve(self.samples[idx], -self.deriv[idx])

    def centroid(self) -> complex:
        w = self.speed
        return complex(np.sum(self.samples * w) / np.sum(w))


@dataclass(frozen=True, eq=False)
class Domain:
    """Ordered boundary curves; ``curves[-1]`` is the outer curve."""

    curves: tuple
    spec: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        curves = list(self.curves)
        if not curves:
            raise GeometryError("a domain needs at least one boundary curve")
        # normalize to the standard orientation: outer ccw, holes cw
        if round(curves[-1].winding(curves[-1].centroid())) < 0:
            curves[-1] = curves[-1].reversed()
        for j in range(len(curves) - 1):
            if round(curves[j].winding(curves[j].centroid())) > 0:
                curves[j] = curves[j].reversed()
        object.__setattr__(self, "curves", tuple(curves))
        self._check()

    @property
    def n(self) -> int:
        return len(self.curves)

    @property
    def outer_index(self) -> int:
        return self.n - 1

    @property
    def outer(self) -> ParamCurve:
        return self.curves[-1]

    @property
    def inner(self) -> tuple:
        return self.curves[:-1]

    @property
    def sizes(self) -> list[int]:
        return [c.M for c in self.curves]

    @property
    def N(self) -> int:
        return sum(self.sizes)

    @property
    def points(self) -> np.ndarray:
        return np.concatenate([c.samples for c in self.curves])

    @property
    def derivs(self) -> np.ndarray:
        return np.concatenate([c.deriv for c in self.curves])

    @property
    def weights_dt(self) -> np.ndarray:
        """Parameter quadrature weight 1/M_j per node."""
        return np.concatenate([np.full(c.M, 1.0 / c.M) for c in self.curves])

    @property
    def curve_ids(self) -> np.ndarray:
        return np.concatenate([np.full(c.M, j) for j, c in enumerate(self.curves)])

    def slices(self) -> list[slice]:
        out, start = [], 0
        for c in self.curves:
            out.append(slice(start, start + c.M))
            start += c.M
        return out

    def hole_points(self) -> list[complex]:
        """One point inside each hole (curve centroids), used as log-source centers."""
        pts = []
        for c in self.inner:
            p = c.centroid()
            if abs(c.winding(p)) < 0.5:
                raise GeometryError("inner-curve centroid does not lie inside its hole")
            pts.append(p)
        return pts

    def _check(self):
        pts = [c.samples for c in self.curves]
        for i in range(self.n):
            for j in range(i + 1, self.n):
                d = np.min(np.abs(pts[i][:, None] - pts[j][None, :]))
                if d <= 1e-6:
                    raise GeometryError(f"boundary curves {i} and {j} intersect")
        outer = self.outer
        for j, c in enumerate(self.inner):
            if round(outer.winding(c.samples[0])) != 1:
                raise GeometryError(f"hole {j} is not inside the outer curve")
            for k, other in enumerate(self.inner):
                if k != j and round(abs(c.winding(other.samples[0]))) != 0:
                    raise GeometryError(f"holes {j} and {k} are nested or overlap")
        if round(outer.winding(outer.centroid())) != 1:
            raise GeometryError("outer curve must run counterclockwise")
        for j, c in enumerate(self.inner):
            if round(c.winding(c.centroid())) != -1:
                raise GeometryError(f"inner curve {j} must run clockwise")

    def min_curve_gap(self) -> float:
        if self.n == 1:
            return float("inf")
        pts = [c.samples for c in self.curves]
        return float(min(np.min(np.abs(pts[i][:, None] - pts[j][None, :]))
                         for i in range(self.n) for j in range(i + 1, self.n)))

    def winding(self, p: complex) -> float:
        return sum(c.winding(p) for c in self.curves)

    def boundary_distance(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        flat = z.reshape(-1)
        d = np.min(np.abs(flat[:, None] - self.points[None, :]), axis=1)
        return d.reshape(z.shape)

    def curve_distances(self, z) -> np.ndarray:
        """Distance from each point to each curve, shape (..., n)."""
        z = np.asarray(z, dtype=complex)
        flat = z.reshape(-1)
        out = np.stack([np.min(np.abs(flat[:, None] - c.samples[None, :]), axis=1)
                        for c in self.curves], axis=-1)
        return out.reshape(z.shape + (self.n,))

    def guard_ok(self, z, spacings: float = 5.0) -> np.ndarray:
        """True where every curve is at least ``spacings`` grid spacings away."""
        h = np.array([c.spacing for c in self.curves])
        return np.all(self.curve_distances(z) >= spacings * h, axis=-1)

    def contains(self, point: complex, tol: float = 1e-9) -> bool:
        if self.boundary_distance(point) < tol:
            raise IndeterminateError(f"point {point} lies within {tol} of the boundary")
        return bool(self.contains_many(np.array([point]))[0])

    def contains_many(self, z) -> np.ndarray:
        """Inside test by the winding of the sample polygons.

        Angle increments between consecutive samples stay exact right up to the
        boundary, where the trapezoid rule for dz/(z - p) does not.
        """
        z = np.asarray(z, dtype=complex)
        flat = z.reshape(-1)
        w = np.zeros(flat.shape)
        for c in self.curves:
            d = c.samples[None, :] - flat[:, None]
            w += np.sum(np.angle(np.roll(d, -1, axis=1) / d), axis=1) / (2 * np.pi)
        return (np.round(w) == 1).reshape(z.shape)

    def bounding_box(self) -> tuple[float, float, float, float]:
        z = self.outer.samples
        return float(z.real.min()), float(z.real.max()), float(z.imag.min()), float(z.imag.max())

    def deepest_point(self, grid: int = 64) -> complex:
        """Interior grid point farthest from the boundary (deterministic)."""
        x0, x1, y0, y1 = self.bounding_box()
        xs = np.linspace(x0, x1, grid + 2)[1:-1]
        ys = np.linspace(y0, y1, grid + 2)[1:-1]
        zz = (xs[None, :] + 1j * ys[:, None]).ravel()
        zz = zz[self.contains_many(zz)]
        return complex(zz[np.argmax(self.boundary_distance(zz))])

    def invariant_report(self) -> dict:
        spec_err = max(c.spectral_deriv_error() / max(1.0, float(np.max(c.speed))) for c in self.curves)
        return {
            "n": self.n,
            "M": self.sizes,
            "min_speed": float(min(np.min(c.speed) for c in self.curves)),
            "spectral_deriv_error": spec_err,
            "min_curve_gap": self.min_curve_gap(),
            "outer_winding": round(self.outer.winding(self.outer.centroid())),
            "inner_windings": [round(c.winding(c.centroid())) for c in self.inner],
            "pass": bool(spec_err <= 1e-8),
        }


def _circle(center: complex, radius: float, m: int, ccw: bool) -> ParamCurve:
    t = np.arange(m) / m
    s = 1.0 if ccw else -1.0
    e = np.exp(s * 2j * np.pi * t)
    return ParamCurve(center + radius * e, s * 2j * np.pi * radius * e)


def make_circle_domain(centers: Sequence[complex], radii: Sequence[float], M: int = 256) -> Domain:
    """First circle is the outer boundary; the rest are holes."""
    centers = [complex(c) for c in centers]
    radii = [float(r) for r in radii]
    if len(centers) != len(radii) or not centers:
        raise GeometryError("centers and radii must be non-empty and of equal length")
    if any(r <= 0 for r in radii):
        raise GeometryError("radii must be positive")
    c0, r0 = centers[0], radii[0]
    for j in range(1, len(centers)):
        if abs(centers[j] - c0) + radii[j] >= r0:
            raise GeometryError(f"hole {j} is not inside the outer circle")
        for k in range(j + 1, len(centers)):
            if abs(centers[j] - centers[k]) <= radii[j] + radii[k]:
                raise GeometryError(f"holes {j} and {k} overlap")
    curves = [_circle(c, r, M, ccw=False) for c, r in zip(centers[1:], radii[1:])]
    curves.append(_circle(c0, r0, M, ccw=True))
    spec = {"type": "circles", "centers": [[c.real, c.imag] for c in centers],
            "radii": radii, "M": M}
    return Domain(tuple(curves), spec)


def ar_outer_point(w):
    """Larger-modulus root z of z + 1/z = w."""
    w = np.asarray(w, dtype=complex)
    s = np.sqrt(w * w - 4.0)
    z1, z2 = (w + s) / 2, (w - s) / 2
    return np.where(np.abs(z1) >= np.abs(z2), z1, z2)


def make_ar_domain(r: float, M: int = 256) -> Domain:
    """The domain {|z + 1/z| < r}; boundary solves z^2 - r e^{i theta} z + 1 = 0."""
    r = float(r)
    if not r > 2:
        raise GeometryError("r must exceed 2: pinched or disconnected boundary")
    t = np.arange(M) / M
    w = r * np.exp(2j * np.pi * t)
    z = ar_outer_point(w)
    dz = (z * z / (z * z - 1.0)) * (2j * np.pi * w)
    outer = ParamCurve(z, dz)
    # inner curve is the image under 1/z, which reverses orientation
    inner = ParamCurve(1.0 / z, -dz / (z * z))
    return Domain((inner, outer), {"type": "ar", "r": r, "M": M})


def make_domain_from_curves(funcs: Sequence[tuple[Callable, Callable]], M: int = 256) -> Domain:
    """Build a domain from (z(t), z'(t)) callables; orientation is normalized.

    The curve enclosing the others is taken as the outer curve.
    """
    t = np.arange(M) / M
    curves = [ParamCurve(np.asarray(f(t), complex), np.asarray(df(t), complex)) for f, df in funcs]
    outer_idx = None
    for i, c in enumerate(curves):
        if all(abs(round(c.winding(o.samples[0]))) == 1 for j, o in enumerate(curves) if j != i):
            outer_idx = i
    if outer_idx is None:
        raise GeometryError("no curve encloses all the others")
    outer = curves.pop(outer_idx)
    return Domain(tuple(curves) + (outer,))


def domain_from_spec(spec: dict) -> Domain:
    kind = spec.get("type")
    M = int(spec.get("M", 256))
    if kind == "circles":
        centers = [complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c)
                   for c in spec["centers"]]
        return make_circle_domain(centers, spec["radii"], M)
    if kind == "ar":
        return make_ar_domain(spec["r"], M)
    raise GeometryError(f"unknown domain type {kind!r}")


def load_domain(path) -> Domain:
    with open(path) as fh:
        return domain_from_spec(json.load(fh))


def trig_resample(samples: np.ndarray, m_new: int) -> np.ndarray:
    """Values of the trigonometric interpolant of ``samples`` on a finer equispaced grid."""
    m = samples.size
    if m_new < m:
        raise ValueError("can only refine")
    c = np.fft.fft(samples) / m
    cc = np.zeros(m_new, dtype=complex)
    h = m // 2
    cc[:h] = c[:h]
    cc[-h:] = c[-h:]
    # split the Nyquist mode symmetrically
    cc[h] = 0.5 * c[h]
    cc[-h] += 0.5 * c[h]
    return np.fft.ifft(cc) * m_new


def refine(domain: Domain, factor: int) -> Domain:
    """Same curves sampled ``factor`` times more densely (spectral interpolation)."""
    curves = [ParamCurve(trig_resample(c.samples, c.M * factor), trig_resample(c.deriv, c.M * factor))
              for c in domain.curves]
    return Domain(tuple(curves), dict(domain.spec))


def interior_probes(domain: Domain, count: int, min_dist: float = 0.05, offset: int = 0,
                    spacings: float = 5.0, avoid=(), avoid_dist: float = 0.0) -> np.ndarray:
    """Deterministic low-discrepancy interior points.

    Points come from an unscrambled 2-d Halton sequence over the bounding box,
    skipping the first ``offset`` accepted points, and are kept only when they
    are at least ``max(min_dist, guard)`` from the boundary and ``avoid_dist``
    from every point in ``avoid``.
    """
    from scipy.stats import qmc

    x0, x1, y0, y1 = domain.bounding_box()
    h = np.array([c.spacing for c in domain.curves])
    need = max(min_dist, spacings * float(np.max(h)))
    avoid = np.asarray(list(avoid), dtype=complex)
    eng = qmc.Halton(d=2, scramble=False)
    eng.fast_forward(1)
    out: list[complex] = []
    skipped = 0
    for _ in range(200):
        u = eng.random(256)
        z = (x0 + (x1 - x0) * u[:, 0]) + 1j * (y0 + (y1 - y0) * u[:, 1])
        z = z[domain.contains_many(z)]
        z = z[domain.boundary_distance(z) >= need]
        z = z[domain.guard_ok(z, spacings)]
        if avoid.size:
            z = z[np.min(np.abs(z[:, None] - avoid[None, :]), axis=1) >= avoid_dist]
        for p in z:
            if skipped < offset:
                skipped += 1
                continue
            out.append(complex(p))
            if len(out) == count:
                return np.array(out)
    raise GeometryError(f"could only place {len(out)} of {count} interior probes")
