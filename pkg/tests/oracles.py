"""Reference computations that share no numerical code with the package."""

import mpmath
import numpy as np


def romberg_pupil_intensity(aperture, focal_length, waist, wavelength, r, rel=1e-13,
                            max_level=14, dps=30):
    """I(r)/I(0) by Romberg (trapezoid + Richardson) with mpmath's J0.

    Refinement stops when successive diagonal entries agree to ``rel``.
    """
    with mpmath.workdps(dps):
        a = mpmath.mpf(aperture) / 2
        w = mpmath.mpf(waist)
        k = 2 * mpmath.pi / mpmath.mpf(wavelength)
        r = mpmath.mpf(r)
        kappa = k * r / mpmath.sqrt(r * r + mpmath.mpf(focal_length) ** 2)

        def g(x):
            return x * mpmath.besselj(0, kappa * x) * mpmath.exp(-x * x / (w * w))

        def norm(x):
            return x * mpmath.exp(-x * x / (w * w))

        def romberg(func):
            h = a
            prev_row = [h * (func(0) + func(a)) / 2]
            for level in range(1, max_level + 1):
                h /= 2
                n = 2 ** (level - 1)
                mid = mpmath.fsum(func((2 * i + 1) * h) for i in range(n))
                row = [prev_row[0] / 2 + h * mid]
                for m in range(1, level + 1):
                    row.append(row[m - 1] + (row[m - 1] - prev_row[m - 1]) / (4 ** m - 1))
                if level > 3 and abs(row[-1] - prev_row[-1]) <= rel * abs(row[-1]):
                    return row[-1]
                prev_row = row
            raise RuntimeError("Romberg oracle did not converge")

        return float((romberg(g) / romberg(norm)) ** 2)


def single_line_shift(gamma, omega0, laser_omega, intensity, c=299792458.0):
    """(3 pi c^2 / 2) I Gamma / (omega0^3 Delta) written out directly."""
    return 3 * np.pi * c**2 / 2 * intensity * gamma / (omega0**3 * (laser_omega - omega0))


def square_pulse_population(omega, delta, t):
    """Textbook Rabi formula for |c1|^2 from |0> with a constant drive."""
    gen = np.hypot(omega, delta)
    return (omega / gen) ** 2 * np.sin(gen * t / 2) ** 2


def expm_propagator(h, t):
    """exp(-i H t) by eigen-decomposition of a constant Hermitian H."""
    vals, vecs = np.linalg.eigh(h)
    return vecs @ np.diag(np.exp(-1j * vals * t)) @ vecs.conj().T
