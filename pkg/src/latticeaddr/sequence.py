"""Composite operations: adiabatic focus ramps, the four-step refocused
rotation, and the tunneling-time estimate.

Times inside a :class:`SequencePlan` are in ``hbar/E_r`` and detunings in
``E_r/hbar``; :class:`RampSchedule` reports seconds.

The sequence works in the frame of the target atom, whose microwave
detuning is zero whenever the focus is on.  A non-target atom at radius
``r`` sees ``f(t) delta(r)`` while the focus is at fraction ``f`` of full
intensity, so a ramp contributes the pure phase ``delta(r) int f dt``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from . import dynamics
from .errors import DomainError
from .io import write_csv
from .lightshift import Barrier, ShiftMap, curvature_at_focus, site_barrier
from .model import QubitState
from .optics import effective_gaussian_waist

# ideal resonant pi pulse about x (chi = 0)
X_GATE = np.array([[0, -1j], [-1j, 0]], dtype=complex)


def rotation_x(area: float) -> np.ndarray:
    """Exact resonant rotation ``exp(-i area sigma_x / 2)``."""
    c, s = np.cos(area / 2), np.sin(area / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def phase_gate(phi: float) -> np.ndarray:
    """``diag(1, exp(i phi))``: free precession by ``phi``."""
    return np.diag([1.0, np.exp(1j * phi)]).astype(complex)


# --- adiabatic ramp -------------------------------------------------------------

def rate_prefactor(w_bar: float, r: float, a0: float, recoil_frequency: float) -> float:
    """``8 w^2 E_r / (hbar a0 r exp(-2 r^2 / w^2))`` in 1/s; lengths in any common unit."""
    if not (w_bar > 0 and r > 0 and a0 > 0):
        raise DomainError("w_bar, r and a0 must be positive (the rate diverges at r = 0)")
    return 8 * w_bar**2 / (a0 * r) * np.exp(2 * r**2 / w_bar**2) * recoil_frequency


def ramp_rate(barrier: float, xi: float, prefactor: float) -> float:
    """Allowed ``|d(dE0(0)/E_r)/dt|`` (1/s): ``xi * prefactor * barrier^(5/4)``."""
    if not barrier > 0:
        raise DomainError(f"barrier {barrier:.4g} E_r is not positive: the focus destroys the trap")
    if not 0 < xi < 1:
        raise DomainError("xi must lie in (0, 1)")
    return xi * prefactor * barrier**1.25


class TrackedAtom(NamedTuple):
    label: str
    x: float          # lattice wavelengths
    state: int


DEFAULT_TRACKED = (TrackedAtom("B", 0.5, 0), TrackedAtom("B", 0.5, 1))


@dataclass(frozen=True)
class RampSchedule:
    xi: float
    w_bar: float                 # lattice wavelengths
    ramped_shift: float          # final |dE0(0)| of state |0> at the focus, E_r
    total_time: float            # s
    focus_integral: float        # int f dt over one ramp, s
    limiting_atom: str
    fractions: np.ndarray        # quadrature nodes in f
    barriers: np.ndarray         # limiting barrier at each node, E_r
    rates: np.ndarray            # limiting rate at each node, 1/s
    final_barrier: Barrier = field(repr=False)

    @property
    def mean_fraction(self) -> float:
        return self.focus_integral / self.total_time

    def rows(self):
        return zip(self.fractions, self.fractions * self.ramped_shift, self.barriers, self.rates)

    def to_csv(self, path) -> str:
        return write_csv(path, ("focus_fraction", "dE0_Er", "barrier_Er", "rate_per_s"), self.rows())


def ramp_schedule(shifts: ShiftMap, depth: float, xi: float, nodes: int = 32,
                  tracked: Sequence[TrackedAtom] = DEFAULT_TRACKED,
                  w_bar: float | None = None) -> RampSchedule:
    """Time to ramp the focus from zero to full (calibrated) intensity.

    The rate bound applies to the state-|0> shift at the focus, so
    ``T = int_0^1 |dE0(0)| df / rate(f)`` by Gauss-Legendre quadrature in the
    focus fraction ``f``, with every tracked atom's barrier recomputed at each
    node; the smallest allowed rate limits.  ``w_bar`` defaults to the fitted
    Gaussian waist of the profile.
    """
    if not 0 < xi < 1:
        raise DomainError("xi must lie in (0, 1)")
    units = shifts.units
    if w_bar is None:
        w_bar = units.length_to_lattice(effective_gaussian_waist(shifts.profile).waist)
    a0 = units.length_to_lattice(units.length_scale)
    prefs = {a: rate_prefactor(w_bar, abs(a.x), a0, units.recoil_frequency) for a in tracked}

    def limiting(f):
        sm = shifts.scaled(f)
        best = None
        for a in tracked:
            b = site_barrier(sm, depth, a.state, a.x)
            if b.height <= 0:
                return None
            rate = ramp_rate(b.height, xi, prefs[a])
            if best is None or rate < best[0]:
                best = (rate, a, b)
        return best

    if limiting(1.0) is None:
        lo, hi = 0.0, 1.0
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if limiting(mid) is not None else (lo, mid)
        raise DomainError(
            f"barrier collapses before full intensity; max reachable "
            f"|dE0(0)| = {lo * abs(shifts.peak_shift0):.4g} E_r "
            f"(|dE(0)| = {lo * shifts.peak_splitting:.4g} E_r)")

    x, w = np.polynomial.legendre.leggauss(nodes)
    f = 0.5 * (x + 1)
    w = 0.5 * w
    res = [limiting(fi) for fi in f]
    rates = np.array([r[0] for r in res])
    barriers = np.array([r[2].height for r in res])
    ramped = abs(shifts.peak_shift0)
    dt_df = ramped / rates
    total = float(np.sum(w * dt_df))
    integral = float(np.sum(w * f * dt_df))
    end = limiting(1.0)
    return RampSchedule(xi, float(w_bar), ramped, total, integral,
                        end[1].label, f, barriers, rates, end[2])


# --- refocused rotation ---------------------------------------------------------

class Site(NamedTuple):
    label: str
    x: float
    y: float

    @property
    def r(self) -> float:
        return float(np.hypot(self.x, self.y))


DEFAULT_SITES = (Site("A", 0.0, 0.0), Site("B", 0.5, 0.0), Site("C", 0.5, 0.5), Site("D", 1.0, 0.0))


class Step(NamedTuple):
    kind: str          # ramp_up | pulse | ramp_down | refocus | drift
    duration: float    # hbar/E_r
    detail: str = ""


@dataclass(frozen=True)
class SequencePlan:
    """Four-step plan: (i) ramp up, alpha/2 pulse, ramp down; (ii) fast pi;
    (iii) repeat (i); (iv) fast pi."""

    alpha: float
    width: float                       # omega0, E_r/hbar
    sites: tuple[Site, ...]
    detunings: Mapping[str, float]     # delta(r) at full focus, E_r/hbar
    target: str = "A"
    ramp_focus_integral: float = 0.0   # int f dt per ramp, hbar/E_r
    ramp_duration: float = 0.0         # hbar/E_r
    refocus: str = "ideal"             # ideal | square
    refocus_duration: float = 0.0      # hbar/E_r, square mode
    focus_during_refocus: bool = False
    phase: float = 0.0                 # chi of the alpha/2 pulses

    def __post_init__(self):
        if not 0 <= self.alpha <= 2 * np.pi + 1e-12:
            raise DomainError("alpha must lie in [0, 2 pi]")
        if self.refocus not in ("ideal", "square"):
            raise DomainError(f"refocus mode must be 'ideal' or 'square', not {self.refocus!r}")
        if self.refocus == "square" and not self.refocus_duration > 0:
            raise DomainError("square refocusing pulses need a positive duration")
        if self.target not in {s.label for s in self.sites}:
            raise DomainError(f"target {self.target!r} is not among the sites")

    @property
    def pulse(self) -> dynamics.PulseShape:
        return dynamics.gaussian_pulse(dynamics.amplitude_for_area(self.alpha / 2, self.width),
                                       self.width, self.phase)

    @property
    def steps(self) -> tuple[Step, ...]:
        half = (Step("ramp_up", self.ramp_duration), Step("pulse", 2 * self.pulse.half_window,
                                                           f"area {self.alpha / 2:.6g}"),
                Step("ramp_down", self.ramp_duration))
        pi = Step("refocus", self.refocus_duration if self.refocus == "square" else 0.0, self.refocus)
        return half + (pi,) + half + (pi,)

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.steps)

    @property
    def focus_exposure(self) -> float:
        """Full-intensity-equivalent time the focus is on (hbar/E_r)."""
        t = 2 * 2 * self.pulse.half_window + 4 * self.ramp_focus_integral
        if self.focus_during_refocus:
            t += 2 * self.refocus_duration
        return t


def four_step_plan(shifts: ShiftMap, alpha: float, ramp: RampSchedule | None = None,
                   width: float | None = None, sites: Sequence[Site] = DEFAULT_SITES,
                   **kwargs) -> SequencePlan:
    """Plan with each site's ``delta(r)`` read from the calibrated map.

    ``width`` defaults to ``omega0 = delta(lambda/2) / 8``.
    """
    if width is None:
        width = float(shifts.detuning_at(0.5)) / 8
    det = {s.label: float(shifts.detuning_at(s.r)) for s in sites}
    rf = shifts.units.recoil_frequency
    if ramp is not None:
        kwargs.setdefault("ramp_focus_integral", ramp.focus_integral * rf)
        kwargs.setdefault("ramp_duration", ramp.total_time * rf)
    return SequencePlan(alpha, width, tuple(sites), det, **kwargs)


def _half_unitary(plan: SequencePlan, delta: float, tol: float) -> np.ndarray:
    ramp = phase_gate(delta * plan.ramp_focus_integral)
    pulse = dynamics.propagator(plan.pulse, delta, tol) if plan.alpha > 0 else \
        dynamics.free_evolution(delta, 2 * plan.pulse.half_window)
    return ramp @ pulse @ ramp


def _refocus_unitary(plan: SequencePlan, delta: float, tol: float) -> np.ndarray:
    if plan.refocus == "ideal":
        return X_GATE
    det = delta if plan.focus_during_refocus else 0.0
    return dynamics.propagator(dynamics.square_pulse(np.pi / plan.refocus_duration,
                                                     plan.refocus_duration), det, tol)


def sequence_unitary(plan: SequencePlan, delta: float, static_phase_drift: float = 0.0,
                     tol: float = 1e-10) -> np.ndarray:
    """Whole-sequence unitary for an atom with full-focus detuning ``delta``.

    The static drift is a free-precession phase acquired in each half while
    the focus is off, on either side of the first refocusing pulse.
    """
    half = _half_unitary(plan, delta, tol)
    pi = _refocus_unitary(plan, delta, tol)
    drift = phase_gate(static_phase_drift)
    return pi @ half @ drift @ pi @ drift @ half


class SiteResult(NamedTuple):
    site: Site
    detuning: float
    initial: QubitState
    final: QubitState
    reference: QubitState

    @property
    def pop_error(self) -> float:
        return abs(self.final.p1 - self.reference.p1)

    @property
    def phase_error(self) -> float:
        """Wrapped ``|theta_final - theta_reference|``; NaN where theta is undefined (poles)."""
        if min(self.reference.p0, self.reference.p1) < 1e-9:
            return float("nan")
        return float(abs(np.angle(np.exp(1j * (self.final.theta - self.reference.theta)))))


@dataclass(frozen=True)
class SequenceReport:
    plan: SequencePlan
    sites: tuple[SiteResult, ...]
    static_phase_drift: float = 0.0

    def __getitem__(self, label: str) -> SiteResult:
        for s in self.sites:
            if s.site.label == label:
                return s
        raise KeyError(label)

    def rows(self):
        for s in self.sites:
            yield (s.site.label, s.site.r, s.detuning, s.initial.p1, s.final.p1,
                   s.initial.theta, s.final.theta, s.pop_error, s.phase_error)

    def to_csv(self, path) -> str:
        return write_csv(path, ("site", "r_over_lambda", "delta_Er_per_hbar", "p1_initial",
                                "p1_final", "theta_initial_rad", "theta_final_rad",
                                "pop_error", "phase_error"), self.rows())


def refocused_rotation(initial: Mapping[str, QubitState] | QubitState, plan: SequencePlan,
                       static_phase_drift: float = 0.0, tol: float = 1e-10) -> SequenceReport:
    """Run the plan for every site.

    The target's reference is a single exact resonant rotation by ``alpha``;
    every other site's reference is its initial state.
    """
    out = []
    for site in plan.sites:
        psi = initial if isinstance(initial, QubitState) else initial[site.label]
        delta = 0.0 if site.label == plan.target else plan.detunings[site.label]
        u = sequence_unitary(plan, delta, static_phase_drift, tol)
        final = QubitState.from_array(u @ psi.as_array(), renormalize=True)
        if site.label == plan.target:
            ref = QubitState.from_array(rotation_x(plan.alpha) @ psi.as_array(), renormalize=True)
        else:
            ref = psi
        out.append(SiteResult(site, delta, psi, final, ref))
    return SequenceReport(plan, tuple(out), static_phase_drift)


def echo_unitary(delta: float, duration: float) -> np.ndarray:
    """``X U(delta T) X U(delta T)`` for free evolution: proportional to identity."""
    u = dynamics.free_evolution(delta, duration)
    return X_GATE @ u @ X_GATE @ u


# --- tunneling ------------------------------------------------------------------

def tight_binding_hopping(depth: float) -> float:
    """``J/E_r = (4/sqrt(pi)) V^(3/4) exp(-2 sqrt(V))`` for a 1-D lattice of depth V (E_r)."""
    if not depth > 0:
        raise DomainError("depth must be positive")
    return 4 / np.sqrt(np.pi) * depth**0.75 * np.exp(-2 * np.sqrt(depth))


def effective_site_depth(shifts: ShiftMap, depth: float, state: int = 0) -> float:
    """Harmonic-equivalent depth (E_r) of the target site including the focus curvature."""
    curv = curvature_at_focus(shifts) / shifts.peak_splitting   # I_rel''(0), 1/lambda^2
    peak = shifts.peak_shift0 if state == 0 else shifts.peak_shift1
    v = depth + peak * curv / (2 * (2 * np.pi) ** 2)
    if not v > 0:
        raise DomainError("the focus removes the target site's confinement")
    return float(v)


def trap_gap(shifts: ShiftMap, depth: float, state: int = 0) -> float:
    """``E_g = hbar omega_trap = 2 sqrt(V_eff E_r)`` in E_r."""
    return 2 * np.sqrt(effective_site_depth(shifts, depth, state))


def tunneling_time(hopping: float, gap: float, recoil_frequency: float) -> float:
    """``1 / varpi`` (s) with ``varpi = 2 pi J^2 / (hbar E_g)``; J and E_g in E_r."""
    if not (hopping > 0 and gap > 0):
        raise DomainError("J and E_g must be positive")
    return gap / (2 * np.pi * hopping**2) / recoil_frequency
