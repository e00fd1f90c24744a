"""Closed forms for the free Jacobi law (the t -> infinity limit of mu_t)."""
import numpy as np


def edges(alpha, beta):
    """Return (r_minus, r_plus), the roots of z^2 - 2(a+b-2ab)z + (a-b)^2."""
    c = alpha + beta - 2 * alpha * beta
    # clamp round-off when a factor is exactly 0 or 1
    rad = 2 * np.sqrt(max(alpha * beta * (1 - alpha) * (1 - beta), 0.0))
    return max(c - rad, 0.0), min(c + rad, 1.0)


def atom_masses(alpha, beta):
    m = min(alpha, beta)
    return 1 - m, max(alpha + beta - 1, 0.0)


def density(alpha, beta, x, clip=1e-12):
    x = np.asarray(x, dtype=float)
    rm, rp = edges(alpha, beta)
    inside = (x > rm + clip) & (x < rp - clip)
    xs = np.where(inside, x, 0.5 * (rm + rp))
    val = np.sqrt((rp - xs) * (xs - rm)) / (2 * np.pi * xs * (1 - xs))
    return np.where(inside, val, 0.0)


def radical(alpha, beta, z):
    """sqrt(z - r+) sqrt(z - r-): analytic off [r-, r+], ~ z at infinity."""
    rm, rp = edges(alpha, beta)
    return np.sqrt(z - rp) * np.sqrt(z - rm)


def shifted_cauchy(alpha, beta, z):
    """Cauchy transform of mu with the static atom (1 - min) delta_0 removed."""
    z = np.asarray(z, dtype=complex)
    a = 2 * min(alpha, beta) - 1
    b = abs(alpha - beta)
    return (a * z + b + radical(alpha, beta, z)) / (2 * z * (z - 1))


def shifted_cauchy_derivative(alpha, beta, z):
    z = np.asarray(z, dtype=complex)
    a = 2 * min(alpha, beta) - 1
    b = abs(alpha - beta)
    rm, rp = edges(alpha, beta)
    R = radical(alpha, beta, z)
    dR = (z - 0.5 * (rm + rp)) / R
    num = a * z + b + R
    den = 2 * z * (z - 1)
    return ((a + dR) * den - num * 2 * (2 * z - 1)) / den**2
