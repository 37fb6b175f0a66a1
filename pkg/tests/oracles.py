"""Independent closed forms and series used as test oracles.

Nothing here touches the boundary integral machinery: the annulus kernels are
Laurent series in the orthonormal monomial bases, the disc kernels are exact.
"""
import numpy as np


def disc_szego(z, w):
    return 1.0 / (2 * np.pi * (1 - np.outer(z, np.conj(w))))


def disc_garabedian(z, w):
    return 1.0 / (2 * np.pi * np.subtract.outer(z, w))


def disc_bergman(z, w):
    return 1.0 / (np.pi * (1 - np.outer(z, np.conj(w))) ** 2)


def disc_green(z, w):
    """G = -ln|z - w| + ln|1 - z conj(w)| (positive in the disc)."""
    return -np.log(np.abs(np.subtract.outer(z, w))) + np.log(np.abs(1 - np.outer(z, np.conj(w))))


def mobius(a):
    return lambda z: (z - a) / (1 - np.conj(a) * z)


def _laurent_range(rho, terms):
    return np.arange(-terms, terms + 1)


def annulus_szego(z, w, rho, terms=400):
    """Arc-length Szego kernel of rho < |z| < 1: z^n has squared norm 2 pi (1 + rho^(2n+1))."""
    n = _laurent_range(rho, terms)
    q = np.outer(z, np.conj(w))[..., None]
    return np.sum(q ** n / (2 * np.pi * (1 + rho ** (2.0 * n + 1))), axis=-1)


def annulus_bergman(z, w, rho, terms=400):
    """Bergman kernel of rho < |z| < 1 from the monomial basis; n = -1 has norm 2 pi ln(1/rho)."""
    n = _laurent_range(rho, terms)
    n = n[n != -1]
    q = np.outer(z, np.conj(w))
    series = np.sum(q[..., None] ** n * (n + 1) / (np.pi * (1 - rho ** (2.0 * n + 2))), axis=-1)
    return series + 1.0 / (2 * np.pi * np.log(1 / rho) * q)


def annulus_modulus(rho):
    return np.log(1 / rho)
