"""Light shifts of the qubit states, microwave detunings, optical potentials
and the static error budget (scattering, misalignment, detection crosstalk).

Shift of ground state ``i`` in a field of intensity ``I`` (rotating-wave sum
over excited levels ``j``)::

    dE_i = (3 pi c^2 / 2) I sum_j Gamma_j |c_ij|^2 / (omega_ij^3 Delta_ij),
    Delta_ij = omega_laser - omega_ij.

Maps and potentials use recoil units: energies in E_r, radii in lattice
wavelengths, detunings in E_r/hbar.
"""

from __future__ import annotations

import csv
import io
import os
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import NamedTuple, Sequence

import numpy as np
from scipy import constants

from .errors import DomainError, NumericalError
from .io import write_csv
from .model import UnitSystem
from .optics import IntensityProfile, peak_intensity
from .search import golden_section, grid_then_golden

C_LIGHT = constants.c
HBAR = constants.hbar
RESONANCE_MARGIN = 1e3  # in units of Gamma_j


@dataclass(frozen=True)
class Transition:
    state: str
    label: str
    gamma: float        # decay rate Gamma_j, 1/s
    omega: float        # transition angular frequency, rad/s
    cij_sq: float

    def __post_init__(self):
        if not (self.gamma > 0 and self.omega > 0):
            raise DomainError(f"transition {self.label!r}: gamma and omega must be positive")
        if not 0 <= self.cij_sq <= 1:
            raise DomainError(f"transition {self.label!r}: |c_ij|^2 must lie in [0, 1]")

    @property
    def manifold(self) -> str:
        """Fine-structure manifold, e.g. ``6P`` for ``6P3/2``."""
        m = re.match(r"\s*(\d+[A-Za-z])", self.label)
        return m.group(1) if m else self.label

    @property
    def wavelength(self) -> float:
        return 2 * np.pi * C_LIGHT / self.omega


@dataclass(frozen=True)
class AtomicLineData:
    transitions: tuple[Transition, ...]
    source: str = ""

    def __post_init__(self):
        sums: dict[tuple[str, str], float] = {}
        for t in self.transitions:
            key = (t.state, t.manifold)
            sums[key] = sums.get(key, 0.0) + t.cij_sq
        for (state, manifold), total in sums.items():
            if total > 1 + 1e-6:
                raise DomainError(
                    f"state {state}: |c_ij|^2 over manifold {manifold} sums to {total:.8g} > 1")

    @property
    def states(self) -> tuple[str, ...]:
        seen: list[str] = []
        for t in self.transitions:
            if t.state not in seen:
                seen.append(t.state)
        return tuple(seen)

    def for_state(self, state) -> tuple[Transition, ...]:
        key = str(state)
        lines = tuple(t for t in self.transitions if t.state == key)
        if not lines:
            raise DomainError(f"no transitions listed for state {key!r}")
        return lines

    def reference_frequency(self, label: str, states=("0", "1")) -> float:
        """Mean transition frequency of lines called ``label`` over ``states``."""
        om = [t.omega for t in self.transitions if t.label == label and t.state in states]
        if not om:
            raise DomainError(f"no transition labelled {label!r}")
        return float(np.mean(om))


def parse_lines(text: str, source: str = "") -> AtomicLineData:
    """Parse the line-data format (comma separated, ``#`` comments, header row).

    Columns: ``state, label, gamma_hz, omega_rad_s | wavelength_nm, cij_sq``
    where ``gamma_hz`` is ``Gamma_j / 2 pi`` and ``wavelength_nm`` is in vacuum.
    """
    rows = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    rows = [ln for ln in rows if ln]
    if not rows:
        raise DomainError(f"line data {source!r} is empty")
    reader = csv.reader(io.StringIO("\n".join(rows)), skipinitialspace=True)
    header = [h.strip() for h in next(reader)]
    required = {"state", "label", "gamma_hz", "cij_sq"}
    if missing := required - set(header):
        raise DomainError(f"line data {source!r} lacks columns {sorted(missing)}")
    if "omega_rad_s" not in header and "wavelength_nm" not in header:
        raise DomainError(f"line data {source!r} needs omega_rad_s or wavelength_nm")
    out = []
    for lineno, rec in enumerate(reader, start=2):
        if len(rec) != len(header):
            raise DomainError(f"{source}: record {lineno} has {len(rec)} fields, expected {len(header)}")
        d = dict(zip(header, (v.strip() for v in rec)))
        try:
            if d.get("omega_rad_s"):
                omega = float(d["omega_rad_s"])
            else:
                omega = 2 * np.pi * C_LIGHT / (float(d["wavelength_nm"]) * 1e-9)
            out.append(Transition(d["state"], d["label"], 2 * np.pi * float(d["gamma_hz"]),
                                  omega, float(d["cij_sq"])))
        except ValueError as exc:
            raise DomainError(f"{source}: record {lineno}: {exc}") from None
    return AtomicLineData(tuple(out), source)


def load_lines(path) -> AtomicLineData:
    with open(os.fspath(path), encoding="utf-8") as fh:
        return parse_lines(fh.read(), os.fspath(path))


def bundled_lines(name: str = "rb87_6p") -> AtomicLineData:
    """Line data shipped with the package (``rb87_6p`` or ``rb87_5p_6p``)."""
    fname = name if name.endswith(".lines") else name + ".lines"
    res = resources.files("latticeaddr") / "data" / fname
    if not res.is_file():
        raise DomainError(f"no bundled line file {fname!r}")
    return parse_lines(res.read_text(encoding="utf-8"), f"bundled:{fname}")


def _detunings(lines: Sequence[Transition], wavelength: float) -> np.ndarray:
    w_laser = 2 * np.pi * C_LIGHT / wavelength
    det = np.array([w_laser - t.omega for t in lines])
    for t, d in zip(lines, det):
        if abs(d) < RESONANCE_MARGIN * t.gamma:
            raise DomainError(
                f"laser at {wavelength * 1e9:.6f} nm is within {RESONANCE_MARGIN:g} Gamma "
                f"of transition {t.state}->{t.label}")
    return det


def stark_shift(lines: AtomicLineData, state, intensity: float, wavelength: float) -> float:
    """Light shift (J) of ``state`` at ``intensity`` (W/m^2) for laser ``wavelength`` (m).

    Red detuning (``Delta < 0``) gives a negative, attractive shift.
    """
    tr = lines.for_state(state)
    det = _detunings(tr, wavelength)
    s = sum(t.gamma * t.cij_sq / (t.omega**3 * d) for t, d in zip(tr, det))
    return 1.5 * np.pi * C_LIGHT**2 * intensity * s


def scattering_rate(lines: AtomicLineData, state, intensity: float, wavelength: float) -> float:
    """Photon scattering rate (1/s) of ``state``, same line sum with ``Gamma^2 / Delta^2``."""
    tr = lines.for_state(state)
    det = _detunings(tr, wavelength)
    s = sum(t.gamma**2 * t.cij_sq / (t.omega**3 * d**2) for t, d in zip(tr, det))
    return 1.5 * np.pi * C_LIGHT**2 / HBAR * intensity * s


@dataclass(frozen=True)
class Calibration:
    mode: str = "calibrated"      # or "raw"
    splitting: float = 107.0      # |dE(0)| in E_r, calibrated mode
    peak_intensity: float | None = None  # W/m^2, raw mode override

    def __post_init__(self):
        if self.mode not in ("calibrated", "raw"):
            raise DomainError(f"calibration mode must be 'calibrated' or 'raw', not {self.mode!r}")
        if self.mode == "calibrated" and not self.splitting > 0:
            raise DomainError("calibrated splitting must be positive")


@dataclass(frozen=True)
class ShiftMap:
    """Radial map of the qubit-state shifts.

    ``radii`` in lattice wavelengths, shifts in E_r, ``detuning`` in E_r/hbar.
    """

    radii: np.ndarray
    intensity: np.ndarray
    shift0: np.ndarray
    shift1: np.ndarray
    peak_shift0: float
    peak_shift1: float
    calibration: Calibration
    peak_intensity: float         # W/m^2
    laser_detuning: float         # Delta_0, rad/s
    wavelength: float             # lambda_f, m
    units: UnitSystem
    profile: IntensityProfile = field(repr=False, compare=False)

    @property
    def splitting(self) -> np.ndarray:
        return np.abs(self.shift1 - self.shift0)

    @property
    def detuning(self) -> np.ndarray:
        return self.splitting[0] - self.splitting

    @property
    def peak_splitting(self) -> float:
        return abs(self.peak_shift1 - self.peak_shift0)

    def intensity_at(self, r):
        """Relative intensity at ``r`` (lattice wavelengths), interpolated."""
        return self.profile(np.asarray(r, dtype=float) * self.units.lattice_wavelength)

    def shift_at(self, state, r):
        peak = self.peak_shift0 if str(state) == "0" else self.peak_shift1
        return peak * self.intensity_at(r)

    def splitting_at(self, r):
        return self.peak_splitting * self.intensity_at(r)

    def detuning_at(self, r):
        return self.peak_splitting * (1.0 - self.intensity_at(r))

    def scaled(self, fraction: float) -> "ShiftMap":
        """The same focus at ``fraction`` of its full intensity."""
        return replace(self, shift0=self.shift0 * fraction, shift1=self.shift1 * fraction,
                       peak_shift0=self.peak_shift0 * fraction,
                       peak_shift1=self.peak_shift1 * fraction,
                       peak_intensity=self.peak_intensity * fraction)

    def rows(self):
        return zip(self.radii, self.shift0, self.shift1, self.splitting, self.detuning)

    def to_csv(self, path) -> str:
        return write_csv(path, ("r_over_lambda", "dE0_Er", "dE1_Er", "absdE_Er",
                                "delta_Er_per_hbar"), self.rows())


def shift_map(profile: IntensityProfile, lines: AtomicLineData, units: UnitSystem,
              calibration: Calibration = Calibration(),
              reference_label: str = "6P3/2") -> ShiftMap:
    """State shifts on the profile's radial grid.

    Raw mode converts the beam power into ``I(0)``; calibrated mode keeps the
    profile shape and sets the intensity so that ``|dE(0)|`` equals
    ``calibration.splitting``.
    """
    wl = profile.geometry.wavelength
    s0 = stark_shift(lines, 0, 1.0, wl)
    s1 = stark_shift(lines, 1, 1.0, wl)
    if calibration.mode == "calibrated":
        if s1 == s0:
            raise DomainError("qubit states shift identically; splitting cannot be calibrated")
        i0 = units.to_si(calibration.splitting) / abs(s1 - s0)
    else:
        i0 = calibration.peak_intensity
        if i0 is None:
            i0 = peak_intensity(profile.geometry)
    p0 = units.to_recoil(s0 * i0)
    p1 = units.to_recoil(s1 * i0)
    try:
        ref = lines.reference_frequency(reference_label)
        laser_det = 2 * np.pi * C_LIGHT / wl - ref
    except DomainError:
        laser_det = float("nan")
    return ShiftMap(
        radii=units.length_to_lattice(profile.radii),
        intensity=profile.values.copy(),
        shift0=p0 * profile.values, shift1=p1 * profile.values,
        peak_shift0=float(p0), peak_shift1=float(p1),
        calibration=calibration, peak_intensity=float(i0),
        laser_detuning=float(laser_det), wavelength=wl, units=units, profile=profile)


# --- optical potentials ------------------------------------------------------

def lattice_potential(x, y, depth: float):
    """``V_L (sin^2 kx + sin^2 ky)``; x, y in lattice wavelengths, zero at sites."""
    return depth * (np.sin(2 * np.pi * np.asarray(x)) ** 2 + np.sin(2 * np.pi * np.asarray(y)) ** 2)


def state_potential(shifts: ShiftMap, state, depth: float, x, y):
    """Lattice plus focus potential (E_r) for ``state`` at (x, y)."""
    return lattice_potential(x, y, depth) + shifts.shift_at(state, np.hypot(x, y))


class Barrier(NamedTuple):
    height: float         # E_r
    path: str             # "toward_target", "outward" or "transverse"
    site_minimum: float   # x of the displaced site minimum (lambda)
    saddle: float         # coordinate of the barrier top along its path


def site_barrier(shifts: ShiftMap, depth: float, state=0, site: float = 0.5,
                 xtol: float = 1e-11) -> Barrier:
    """Lowest escape barrier for an atom at the lattice site ``(site, 0)``.

    Three paths are searched: along y = 0 toward the focus, along y = 0
    away from it, and transversally (along y at the displaced minimum).
    A non-positive height means the site no longer traps the atom.
    """
    if not depth > 0:
        raise DomainError("lattice depth must be positive")

    def along_x(x):
        return float(state_potential(shifts, state, depth, x, 0.0))

    lo, hi = site - 0.24, site + 0.24
    ext = grid_then_golden(along_x, lo, hi, n_grid=49, xtol=xtol, interior=False)
    xm, vmin = ext.x, ext.value
    if xm <= lo + 1e-6 or xm >= hi - 1e-6:
        return Barrier(0.0, "toward_target", xm, xm)

    candidates = []
    inner = grid_then_golden(along_x, max(site - 0.5, 0.0), xm, n_grid=101, xtol=xtol,
                             maximize=True, interior=False)
    candidates.append(Barrier(inner.value - vmin, "toward_target", xm, inner.x))
    outer = grid_then_golden(along_x, xm, site + 0.5, n_grid=101, xtol=xtol,
                             maximize=True, interior=False)
    candidates.append(Barrier(outer.value - vmin, "outward", xm, outer.x))
    trans = grid_then_golden(lambda y: float(state_potential(shifts, state, depth, xm, y)),
                             0.0, 0.5, n_grid=101, xtol=xtol, maximize=True, interior=False)
    candidates.append(Barrier(trans.value - vmin, "transverse", xm, trans.x))
    return min(candidates, key=lambda b: b.height)


@dataclass(frozen=True)
class PotentialMap:
    x: np.ndarray           # lambda
    y: np.ndarray
    v0: np.ndarray          # E_r, shape (len(y), len(x))
    v1: np.ndarray
    depth: float
    barrier: Barrier        # atom B (lambda/2, 0), state |0>

    def rows(self):
        for j, yy in enumerate(self.y):
            for i, xx in enumerate(self.x):
                yield xx, yy, self.v0[j, i], self.v1[j, i]

    def to_csv(self, path) -> str:
        return write_csv(path, ("x_over_lambda", "y_over_lambda", "V0_Er", "V1_Er"), self.rows())


def potential_map(depth: float, shifts: ShiftMap, half_width: float = 1.0,
                  resolution: int = 81) -> PotentialMap:
    """Both state potentials on a square grid centred on the target site."""
    if not depth > 0:
        raise DomainError("lattice depth must be positive")
    if half_width * np.sqrt(2) > shifts.radii[-1] * (1 + 1e-12):
        raise DomainError(f"region corners at {half_width * np.sqrt(2):.4g} lambda lie beyond the "
                          f"shift map's range {shifts.radii[-1]:.4g} lambda")
    ax = np.linspace(-half_width, half_width, resolution)
    xx, yy = np.meshgrid(ax, ax)
    v0 = state_potential(shifts, 0, depth, xx, yy)
    v1 = state_potential(shifts, 1, depth, xx, yy)
    return PotentialMap(ax, ax.copy(), v0, v1, depth, site_barrier(shifts, depth, 0))


# --- error budget pieces -------------------------------------------------------

def scattering_probability(shifts: ShiftMap, lines: AtomicLineData, exposure: float) -> float:
    """Probability of scattering a photon on the target atom.

    ``exposure`` is the full-intensity-equivalent time (s); the worse of the
    two qubit states is used.
    """
    if exposure < 0:
        raise DomainError("exposure must be non-negative")
    rate = max(scattering_rate(lines, s, shifts.peak_intensity, shifts.wavelength) for s in (0, 1))
    return rate * exposure


class WavelengthOptimum(NamedTuple):
    wavelength: float     # m
    ratio: float          # (|dE1 - dE0| / hbar) / max_i R_sc,i  (rad per scattered photon)
    laser_detuning: float  # rad/s from the reference line


def splitting_to_scattering(lines: AtomicLineData, wavelength: float) -> float:
    """Intensity-independent figure of merit maximised by :func:`optimize_wavelength`."""
    split = abs(stark_shift(lines, 1, 1.0, wavelength) - stark_shift(lines, 0, 1.0, wavelength))
    scat = max(scattering_rate(lines, s, 1.0, wavelength) for s in (0, 1))
    return split / HBAR / scat


def optimize_wavelength(lines: AtomicLineData, wavelength_range: tuple[float, float],
                        n_grid: int = 201, xtol: float = 1e-15,
                        reference_label: str = "6P3/2") -> WavelengthOptimum:
    lo, hi = sorted(wavelength_range)
    for t in lines.transitions:
        if t.state in ("0", "1"):
            margin = RESONANCE_MARGIN * t.gamma * t.wavelength**2 / (2 * np.pi * C_LIGHT)
            if lo - margin <= t.wavelength <= hi + margin:
                raise DomainError(
                    f"wavelength range contains the {t.state}->{t.label} resonance "
                    f"({t.wavelength * 1e9:.4f} nm)")
    ext = grid_then_golden(lambda wl: splitting_to_scattering(lines, wl), lo, hi,
                           n_grid=n_grid, xtol=xtol, maximize=True)
    try:
        det = 2 * np.pi * C_LIGHT / ext.x - lines.reference_frequency(reference_label)
    except DomainError:
        det = float("nan")
    return WavelengthOptimum(ext.x, ext.value, det)


def curvature_at_focus(shifts: ShiftMap) -> float:
    """``d^2 |dE| / dr^2`` at r = 0 (E_r / lambda^2) by a symmetric second difference."""
    r, s = shifts.radii, shifts.splitting
    if r.size < 3 or r[0] != 0:
        raise NumericalError("shift map must start at r = 0 with at least three samples")
    h = r[1]
    c1 = 2 * (s[1] - s[0]) / h**2
    c2 = 2 * (s[2] - s[0]) / (2 * h) ** 2
    if c1 == 0 or abs(c1 - c2) > 1e-2 * abs(c1):
        raise NumericalError(
            f"grid spacing {h:.3g} lambda too coarse for a stable curvature "
            f"({c1:.6g} vs {c2:.6g} at double spacing)", achieved=abs(c1 - c2))
    return c1


def misalignment_detuning(shifts: ShiftMap, offset: float) -> float:
    """Microwave detuning (E_r/hbar) of the target for a focus displaced by ``offset`` (lambda).

    Quadratic model ``|d^2|dE|/dr^2| offset^2 / 2``.
    """
    curv = curvature_at_focus(shifts)
    waist = np.sqrt(4 * shifts.peak_splitting / abs(curv))
    if abs(offset) > waist / 10:
        raise DomainError(f"offset {offset:.3g} lambda exceeds a tenth of the central lobe ({waist:.3g})")
    return 0.5 * abs(curv) * offset**2


def detection_crosstalk(gamma: float, detuning: float, intensity_ratio: float) -> float:
    """Photons scattered by a neighbour per photon on the target, ``(Gamma/2 delta)^2 I(r)/I(0)``."""
    if detuning == 0:
        raise DomainError("detection detuning must be non-zero")
    return (gamma / (2 * detuning)) ** 2 * intensity_ratio
