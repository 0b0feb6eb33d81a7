"""Focal intensity of a Gaussian beam focused through a circular lens.

The relative intensity in the focal plane is the normalised aperture integral

    I(r)/I(0) = [ int_0^{D/2} r' J0(k_f r' r / sqrt(r^2 + f^2)) exp(-r'^2/w^2) dr' / G ]^2

with ``G`` the same integral at ``r = 0``.  Lengths here are SI metres.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy import integrate, optimize, special
from scipy.interpolate import CubicSpline

from .errors import DomainError, NumericalError
from .io import write_csv
from .search import golden_section


@dataclass(frozen=True)
class BeamGeometry:
    aperture: float       # lens diameter D
    focal_length: float   # f
    input_waist: float    # w of the incoming Gaussian beam
    wavelength: float     # lambda_f
    power: float | None = None  # P_f in W, only needed for absolute intensity

    def __post_init__(self):
        for name in ("aperture", "focal_length", "input_waist", "wavelength"):
            if not getattr(self, name) > 0:
                raise DomainError(f"BeamGeometry.{name} must be positive")
        if self.power is not None and self.power < 0:
            raise DomainError("BeamGeometry.power must be non-negative")

    @property
    def wavevector(self) -> float:
        return 2 * np.pi / self.wavelength

    @property
    def apodization(self) -> float:
        """``(D/2)^2 / w^2``: Gaussian fall-off across the aperture."""
        return (0.5 * self.aperture / self.input_waist) ** 2

    @property
    def airy_radius(self) -> float:
        """Uniform-pupil first zero ``1.22 lambda_f f / D`` (paraxial)."""
        return 1.2196698912665045 * self.wavelength * self.focal_length / self.aperture

    def replace(self, **changes) -> "BeamGeometry":
        return replace(self, **changes)


DEFAULT_GEOMETRY = BeamGeometry(aperture=20e-3, focal_length=20e-3, input_waist=20e-3,
                                wavelength=421e-9, power=17e-6)


def _normalization(beta: float) -> float:
    # int_0^1 u exp(-beta u^2) du
    return -np.expm1(-beta) / (2 * beta)


def _pupil_integral(geom: BeamGeometry, r: float, tol: float, limit: int):
    a = 0.5 * geom.aperture
    beta = geom.apodization
    kappa = geom.wavevector * r / np.hypot(r, geom.focal_length) * a
    g0 = _normalization(beta)
    if kappa == 0.0:
        return 1.0, 0.0
    epsrel = 0.25 * tol
    epsabs = 0.25 * tol * 1e-3 * g0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        res = integrate.quad(
            lambda u: u * special.j0(kappa * u) * np.exp(-beta * u * u), 0.0, 1.0,
            epsabs=epsabs, epsrel=epsrel, limit=limit, full_output=1)
    val, err = res[0], res[1]
    # a fourth element is the QUADPACK failure message
    if len(res) > 3 or err > 10 * max(epsabs, epsrel * abs(val)):
        raise NumericalError(
            f"aperture quadrature did not converge at r={r:.6g} m (error estimate {err:.3g})",
            achieved=err / g0)
    return val / g0, err / g0


def airy_relative_intensity(geom: BeamGeometry, r: float, tol: float = 1e-10,
                            limit: int = 200) -> float:
    """``I(r)/I(0)`` by adaptive Gauss-Kronrod quadrature over the pupil.

    ``tol`` bounds the relative error of the result (measured against the
    peak when the value itself is close to an Airy zero).
    """
    if r < 0:
        raise DomainError(f"radius must be non-negative, got {r!r}")
    if not 0 < tol <= 1e-4:
        raise DomainError(f"tol must lie in (0, 1e-4], got {tol!r}")
    g, _ = _pupil_integral(geom, float(r), tol, limit)
    return g * g


class _LinearInterp:
    def __init__(self, x, y):
        self.x, self.y = x, y

    def __call__(self, r, nu=0):
        if nu == 0:
            return np.interp(r, self.x, self.y)
        slope = np.diff(self.y) / np.diff(self.x)
        idx = np.clip(np.searchsorted(self.x, r) - 1, 0, slope.size - 1)
        return slope[idx] if nu == 1 else np.zeros_like(np.asarray(r, dtype=float))


@dataclass(frozen=True)
class IntensityProfile:
    geometry: BeamGeometry
    radii: np.ndarray        # metres, strictly increasing from 0
    values: np.ndarray       # I(r)/I(0)
    tol: float
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if radii.ndim != 1 or radii.shape != values.shape or radii.size < 2:
            raise DomainError("profile needs matching 1-D radii/values with at least 2 samples")
        if np.any(np.diff(radii) <= 0):
            raise DomainError("profile radii must be strictly increasing")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "values", values)
        if radii.size >= 4:
            # I_rel is even in r, so the slope vanishes on the axis
            bc = ((1, 0.0), "not-a-knot") if radii[0] == 0 else "not-a-knot"
            spline = CubicSpline(radii, values, bc_type=bc)
        else:
            spline = _LinearInterp(radii, values)
        object.__setattr__(self, "_spline", spline)

    @property
    def r_max(self) -> float:
        return float(self.radii[-1])

    def __call__(self, r):
        """Interpolated ``I_rel`` at radius ``r`` (clipped at zero)."""
        r = np.abs(np.asarray(r, dtype=float))
        if np.any(r > self.r_max * (1 + 1e-12)):
            raise DomainError(f"radius beyond sampled range {self.r_max:.6g} m")
        return np.clip(self._spline(r), 0.0, None)

    def derivative(self, r, order: int = 1):
        return self._spline(np.abs(np.asarray(r, dtype=float)), order)

    def map_2d(self, x, y):
        """Intensity on a Cartesian grid using radial symmetry."""
        return self(np.hypot(x, y))

    def rows(self, lattice_wavelength: float):
        return zip(self.radii / lattice_wavelength, self.values)

    def to_csv(self, path, lattice_wavelength: float) -> str:
        return write_csv(path, ("r_over_lambda", "I_rel"), self.rows(lattice_wavelength))


def intensity_map(geom: BeamGeometry, r_max: float, n: int, tol: float = 1e-10,
                  workers: int | None = None) -> IntensityProfile:
    """Sample ``I_rel`` on a uniform radial grid ``[0, r_max]`` with ``n`` points."""
    if n < 2 or not r_max > 0:
        raise DomainError("intensity_map needs n >= 2 and r_max > 0")
    radii = np.linspace(0.0, r_max, n)

    def point(r):
        return airy_relative_intensity(geom, r, tol)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = np.fromiter(pool.map(point, radii), float, count=n)
    else:
        values = np.array([point(r) for r in radii])
    return IntensityProfile(geom, radii, values, tol)


def first_minimum(geom: BeamGeometry, tol: float = 1e-10, xtol: float = 1e-14) -> float:
    """Radius (m) of the first zero of the focal pattern.

    The first local minimum on a grid over ``[0.5, 2] x 1.22 lambda_f f / D``
    brackets it; golden section refines.
    """
    r0 = geom.airy_radius
    xs = np.linspace(0.5 * r0, 2.0 * r0, 61)
    vals = [airy_relative_intensity(geom, x, tol) for x in xs]
    for i in range(1, xs.size - 1):
        if vals[i] <= vals[i - 1] and vals[i] < vals[i + 1]:
            return golden_section(lambda r: airy_relative_intensity(geom, r, tol),
                                  xs[i - 1], xs[i + 1], xtol=xtol).x
    raise DomainError("no focal-intensity minimum found within 2x the Airy radius")


class GaussianFit(NamedTuple):
    waist: float
    rms_residual: float
    window: float        # fit window end (first sampled minimum)


def _first_sampled_minimum(profile: IntensityProfile) -> int:
    v = profile.values
    for i in range(1, v.size - 1):
        if v[i] <= v[i - 1] and v[i] < v[i + 1]:
            return i
    raise DomainError("no intensity minimum inside the sampled range; extend r_max")


def effective_gaussian_waist(profile: IntensityProfile) -> GaussianFit:
    """Least-squares fit of ``exp(-2 r^2 / w^2)`` to the central lobe.

    The fit window is ``[0, first sampled minimum]`` with uniform weights.
    """
    i = _first_sampled_minimum(profile)
    # fit in units of the window radius; metre-scale parameters upset the stopping tests
    scale = profile.radii[i]
    x = profile.radii[: i + 1] / scale
    v = profile.values[: i + 1]
    # 1/e^2 crossing as the starting guess
    below = np.nonzero(v < np.exp(-2))[0]
    w_guess = x[below[0]] if below.size else 1.0

    def resid(p):
        return np.exp(-2 * x**2 / p[0] ** 2) - v

    sol = optimize.least_squares(resid, [w_guess], bounds=([1e-6], [np.inf]),
                                 xtol=1e-15, ftol=1e-15, gtol=1e-15)
    w = float(abs(sol.x[0]))
    rms = float(np.sqrt(np.mean(resid([w]) ** 2)))
    r = x * scale
    w *= scale
    return GaussianFit(w, rms, float(r[-1]))


def effective_area(geom: BeamGeometry) -> float:
    """``2 pi int_0^inf I_rel(r) r dr`` in m^2.

    Evaluated with the Hankel-Parseval identity in the paraxial limit, which
    integrates the whole diffraction pattern (rings included) exactly.
    """
    a = 0.5 * geom.aperture
    w = geom.input_waist
    g = 0.5 * w**2 * -np.expm1(-(a / w) ** 2)
    power_pupil = 0.25 * w**2 * -np.expm1(-2 * (a / w) ** 2)
    return float(2 * np.pi * (geom.focal_length / geom.wavevector) ** 2 * power_pupil / g**2)


def peak_intensity(geom: BeamGeometry, power: float | None = None) -> float:
    """On-axis intensity ``I(0)`` (W/m^2) for the given or configured power."""
    p = geom.power if power is None else power
    if p is None:
        raise DomainError("beam power is required for an absolute intensity")
    return p / effective_area(geom)


def equal_power_waist(geom: BeamGeometry) -> float:
    """Waist of a Gaussian with the same peak intensity and total power."""
    return float(np.sqrt(2 * effective_area(geom) / np.pi))
