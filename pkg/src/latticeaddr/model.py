"""Unit system anchored to the lattice recoil energy, and two-level state types.

Energies are expressed in units of the recoil energy ``E_r = hbar^2 k^2 / 2m``,
angular frequencies in ``E_r / hbar`` and lengths in lattice wavelengths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import constants

from .errors import DomainError

RB87_MASS = 86.909180527 * constants.atomic_mass
"""Mass of a ^87Rb atom in kg."""

NORM_TOL = 1e-10


@dataclass(frozen=True)
class UnitSystem:
    lattice_wavelength: float
    atom_mass: float
    recoil_energy: float
    length_scale: float
    speed_of_light: float = constants.c
    hbar: float = constants.hbar

    @property
    def wavevector(self) -> float:
        return 2 * np.pi / self.lattice_wavelength

    @property
    def recoil_frequency(self) -> float:
        """``E_r / hbar`` in rad/s."""
        return self.recoil_energy / self.hbar

    def to_recoil(self, energy):
        return energy / self.recoil_energy

    def to_si(self, energy):
        return energy * self.recoil_energy

    def rate_to_recoil(self, omega):
        """Angular frequency (rad/s) -> units of ``E_r / hbar``."""
        return omega / self.recoil_frequency

    def rate_to_si(self, omega):
        return omega * self.recoil_frequency

    def length_to_lattice(self, length):
        return length / self.lattice_wavelength

    def length_to_si(self, length):
        return length * self.lattice_wavelength


def make_units(wavelength: float, mass: float = RB87_MASS) -> UnitSystem:
    """Build the recoil unit system for a lattice of ``wavelength`` (m)."""
    if not (wavelength > 0 and mass > 0):
        raise DomainError(f"wavelength and mass must be positive, got {wavelength!r}, {mass!r}")
    hbar = constants.hbar
    k = 2 * np.pi / wavelength
    er = hbar**2 * k**2 / (2 * mass)
    a0 = np.sqrt(hbar**2 / (mass * er))
    return UnitSystem(wavelength, mass, er, a0, constants.c, hbar)


@dataclass(frozen=True)
class QubitState:
    """Pure state ``c0|0> + c1|1>``.

    The global phase is kept but never used for comparisons; see
    :meth:`overlap_error`.
    """

    c0: complex
    c1: complex

    def __post_init__(self):
        object.__setattr__(self, "c0", complex(self.c0))
        object.__setattr__(self, "c1", complex(self.c1))
        if abs(self.norm - 1.0) > NORM_TOL:
            raise DomainError(f"state is not normalised: |c0|^2 + |c1|^2 = {self.norm!r}")

    @classmethod
    def normalized(cls, c0, c1) -> "QubitState":
        n = np.sqrt(abs(c0) ** 2 + abs(c1) ** 2)
        if n == 0:
            raise DomainError("zero vector cannot be normalised")
        return cls(c0 / n, c1 / n)

    @classmethod
    def from_array(cls, v, renormalize=False) -> "QubitState":
        if renormalize:
            return cls.normalized(v[0], v[1])
        return cls(v[0], v[1])

    @property
    def norm(self) -> float:
        return abs(self.c0) ** 2 + abs(self.c1) ** 2

    @property
    def p0(self) -> float:
        return abs(self.c0) ** 2

    @property
    def p1(self) -> float:
        return abs(self.c1) ** 2

    @property
    def theta(self) -> float:
        """Relative phase ``arg(c1) - arg(c0)`` wrapped to (-pi, pi]."""
        return float(np.angle(self.c1 * np.conj(self.c0)))

    def as_array(self) -> np.ndarray:
        return np.array([self.c0, self.c1], dtype=complex)

    def overlap_error(self, other: "QubitState") -> float:
        """``1 - |<self|other>|^2``; zero iff equal up to global phase."""
        ov = np.conj(self.c0) * other.c0 + np.conj(self.c1) * other.c1
        return float(max(0.0, 1.0 - abs(ov) ** 2))

    def bloch(self) -> "BlochVector":
        return bloch(self)


@dataclass(frozen=True)
class BlochVector:
    sx: float
    sy: float
    sz: float

    @property
    def length(self) -> float:
        return float(np.sqrt(self.sx**2 + self.sy**2 + self.sz**2))

    def as_array(self) -> np.ndarray:
        return np.array([self.sx, self.sy, self.sz])


def bloch(state: QubitState) -> BlochVector:
    """Spin components ``Sz = |c1|^2 - |c0|^2``, ``Sx + i Sy = 2 c1 conj(c0)``."""
    m = state.c1 * np.conj(state.c0)
    return BlochVector(float(2 * m.real), float(2 * m.imag), state.p1 - state.p0)


def state_from_bloch(v: BlochVector) -> QubitState:
    """Inverse of :func:`bloch` with ``c0`` chosen real and non-negative."""
    p1 = min(1.0, max(0.0, 0.5 * (1 + v.sz)))
    theta = np.arctan2(v.sy, v.sx)
    return QubitState.normalized(np.sqrt(1 - p1), np.sqrt(p1) * np.exp(1j * theta))


# initial states used for the population-error curves
REFERENCE_STATES = (
    QubitState(1.0, 0.0),
    QubitState(np.sqrt(0.5), 1j * np.sqrt(0.5)),
    QubitState(np.sqrt(2 / 3), np.sqrt(1 / 4) + 1j * np.sqrt(1 / 12)),
    QubitState(np.sqrt(2 / 3), np.sqrt(1 / 4) - 1j * np.sqrt(1 / 12)),
)
