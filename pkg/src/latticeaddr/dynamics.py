"""Two-level Rabi dynamics under shaped microwave pulses.

The amplitudes obey

    i d/dt (c0, c1) = [[0, exp(-i chi) Omega(t)/2], [exp(i chi) Omega(t)/2, -delta]] (c0, c1)

with ``delta`` the microwave detuning.  Rates and times only need to be
mutually consistent: with rates in E_r/hbar, times are in hbar/E_r; most
studies simply set ``omega0 = 1`` and work in the dimensionless time
``omega0 * t``.

Gaussian pulses are ``Omega0 exp(-omega0^2 t^2)`` truncated to
``|omega0 t| <= 7``; the neglected tail is below 1e-21 of the area, so a
"pi pulse" here means area ``pi * erf(7)``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.integrate import DOP853
from scipy.special import erf

from .errors import DomainError, NumericalError
from .io import write_csv
from .model import NORM_TOL, QubitState, bloch
from .search import golden_section

GAUSSIAN_HALF_WINDOW = 7.0   # omega0 * t_f
_MIN_RTOL = 2.3e-14          # just above scipy's 100 * eps floor


@dataclass(frozen=True)
class PulseShape:
    """Microwave pulse: envelope ``Omega(t) >= 0`` on ``[-t_f, t_f]`` and phase ``chi``."""

    kind: str                      # "gaussian", "square" or "custom"
    amplitude: float               # Omega0
    half_window: float             # t_f
    width: float | None = None     # omega0 (gaussian only)
    phase: float = 0.0             # chi
    envelope: Callable[[float], float] | None = field(default=None, compare=False)
    reversed: bool = False

    def __post_init__(self):
        if self.kind not in ("gaussian", "square", "custom"):
            raise DomainError(f"unknown pulse kind {self.kind!r}")
        if not self.half_window > 0:
            raise DomainError("pulse window must have positive length")
        if self.amplitude < 0:
            raise DomainError("pulse amplitude must be non-negative")
        if self.kind == "gaussian" and not (self.width and self.width > 0):
            raise DomainError("gaussian pulse needs a positive width omega0")
        if self.kind == "custom" and self.envelope is None:
            raise DomainError("custom pulse needs an envelope function")

    def __call__(self, t: float) -> float:
        """``Omega(t)``; zero outside the window."""
        if self.reversed:
            t = -t
        if abs(t) > self.half_window * (1 + 1e-14):
            return 0.0
        if self.kind == "gaussian":
            return self.amplitude * np.exp(-(self.width * t) ** 2)
        if self.kind == "square":
            return self.amplitude
        return self.amplitude * float(self.envelope(t))

    @property
    def window(self) -> tuple[float, float]:
        return -self.half_window, self.half_window

    @property
    def area(self) -> float:
        """``int Omega dt`` over the window."""
        if self.kind == "gaussian":
            return pulse_area(self.amplitude, self.width, self.width * self.half_window)
        if self.kind == "square":
            return 2 * self.amplitude * self.half_window
        from scipy.integrate import quad
        return quad(self, -self.half_window, self.half_window, limit=200)[0]

    def mirrored(self) -> "PulseShape":
        """Time-mirrored envelope ``Omega(-t)``."""
        return replace(self, reversed=not self.reversed)

    def with_phase(self, chi: float) -> "PulseShape":
        return replace(self, phase=chi)

    def scaled(self, amplitude: float) -> "PulseShape":
        return replace(self, amplitude=amplitude)


def gaussian_pulse(amplitude: float, width: float = 1.0, phase: float = 0.0,
                   half_window: float = GAUSSIAN_HALF_WINDOW) -> PulseShape:
    """``Omega0 exp(-omega0^2 t^2)`` on ``|omega0 t| <= half_window`` (default 7)."""
    if not width > 0:
        raise DomainError("gaussian width omega0 must be positive")
    return PulseShape("gaussian", amplitude, half_window / width, width, phase)


def square_pulse(amplitude: float, duration: float, phase: float = 0.0) -> PulseShape:
    return PulseShape("square", amplitude, 0.5 * duration, None, phase)


def custom_pulse(envelope: Callable[[float], float], half_window: float,
                 amplitude: float = 1.0, phase: float = 0.0) -> PulseShape:
    return PulseShape("custom", amplitude, half_window, None, phase, envelope)


def pulse_area(amplitude: float, width: float, half_window: float = GAUSSIAN_HALF_WINDOW) -> float:
    """Gaussian pulse area ``(Omega0/omega0) sqrt(pi) erf(omega0 t_f)``."""
    if not width > 0:
        raise DomainError("omega0 must be positive")
    return amplitude / width * np.sqrt(np.pi) * erf(half_window)


def amplitude_for_area(area: float, width: float = 1.0,
                       half_window: float = GAUSSIAN_HALF_WINDOW) -> float:
    """Inverse of :func:`pulse_area`."""
    return area * width / (np.sqrt(np.pi) * erf(half_window))


# --- integration ---------------------------------------------------------------

@dataclass(frozen=True)
class SolverStats:
    steps: int
    rejected_steps: int
    nfev: int
    est_error: float   # largest norm drift seen at step ends and samples


@dataclass(frozen=True)
class EvolutionResult:
    times: np.ndarray
    states: np.ndarray     # shape (len(times), 2), complex
    final: QubitState
    stats: SolverStats
    pulse: PulseShape | None = None
    detuning: float = 0.0

    @property
    def trajectory(self) -> list[tuple[float, QubitState]]:
        return [(float(t), QubitState.from_array(c, renormalize=True))
                for t, c in zip(self.times, self.states)]

    @property
    def p1(self) -> np.ndarray:
        return np.abs(self.states[:, 1]) ** 2

    @property
    def norms(self) -> np.ndarray:
        return np.sum(np.abs(self.states) ** 2, axis=1)

    def rows(self, time_scale: float | None = None):
        if time_scale is None:
            p = self.pulse
            time_scale = p.width if p is not None and p.width else (
                GAUSSIAN_HALF_WINDOW / p.half_window if p is not None else 1.0)
        for t, (c0, c1) in zip(self.times, self.states):
            m = c1 * np.conj(c0)
            yield (t * time_scale, c0.real, c0.imag, c1.real, c1.imag, abs(c1) ** 2,
                   2 * m.real, 2 * m.imag, abs(c1) ** 2 - abs(c0) ** 2)

    def to_csv(self, path, time_scale: float | None = None) -> str:
        """Trajectory export; time column is ``omega0 t`` (gaussian width or 7/t_f)."""
        return write_csv(path, ("omega0_t", "re_c0", "im_c0", "re_c1", "im_c1", "p1",
                                "Sx", "Sy", "Sz"), self.rows(time_scale))


def _check_tol(tol: float):
    if not 1e-12 <= tol <= 1e-6:
        raise DomainError(f"tol must lie in [1e-12, 1e-6], got {tol!r}")


def _rhs(pulse: PulseShape, detuning: float, columns: int = 1):
    """Right-hand side for ``columns`` state vectors stored row-major as (2, columns)."""
    ephase = np.exp(1j * pulse.phase)

    lower, upper = -0.5j * ephase, -0.5j * np.conj(ephase)
    diag = 1j * detuning

    def f(t, y):
        om = pulse(t)
        y = y.reshape(2, columns)
        out = np.empty_like(y)
        out[0] = upper * om * y[1]
        out[1] = lower * om * y[0] + diag * y[1]
        return out.ravel()

    return f


def _integrate(f, y0: np.ndarray, t0: float, t1: float, tol: float, samples=None,
               max_step: float = np.inf):
    """Drive DOP853 step by step; return (sample times, sample values, end value, stats)."""
    rtol = max(tol / 100, _MIN_RTOL)
    solver = DOP853(f, t0, y0.astype(complex), t1, rtol=rtol, atol=rtol * 1e-2,
                    max_step=max_step)
    samples = np.asarray([] if samples is None else samples, dtype=float)
    out = np.empty((samples.size, y0.size), dtype=complex)
    k = 0
    while k < samples.size and samples[k] <= t0:
        out[k] = y0
        k += 1
    steps = attempts = 0
    drift = 0.0
    nfev_prev = solver.nfev
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise NumericalError(f"Rabi integration failed at t = {solver.t:.6g}: {msg}",
                                 achieved=solver.t)
        attempts += (solver.nfev - nfev_prev) // solver.n_stages
        steps += 1
        if k < samples.size and samples[k] <= solver.t:
            dense = solver.dense_output()
            while k < samples.size and samples[k] <= solver.t:
                out[k] = dense(samples[k])
                k += 1
        nfev_prev = solver.nfev
        drift = max(drift, _norm_drift(solver.y))
    if k < samples.size:
        out[k:] = solver.y
    if samples.size:
        drift = max(drift, max(_norm_drift(v) for v in out))
    stats = SolverStats(steps, max(attempts - steps, 0), solver.nfev, drift)
    return samples, out, solver.y.copy(), stats


def _norm_drift(y: np.ndarray) -> float:
    if y.size == 2:
        return abs(float(np.sum(np.abs(y) ** 2)) - 1.0)
    u = y.reshape(2, 2)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(2))))


def _as_state(initial) -> QubitState:
    if isinstance(initial, QubitState):
        return initial
    return QubitState.from_array(initial)


def evolve(initial, pulse: PulseShape, detuning: float = 0.0, tol: float = 1e-10,
           samples: int | Sequence[float] | None = None) -> EvolutionResult:
    """Integrate the Rabi equation over the pulse window.

    ``samples`` is either a count (uniform grid over the window, endpoints
    included) or explicit times.  The adaptive DOP853 pair runs with an
    internal relative tolerance of ``tol / 100`` so that interpolated samples
    also meet ``tol``.  A step-size underflow raises :class:`NumericalError`
    whose ``achieved`` is the time reached.
    """
    _check_tol(tol)
    state = _as_state(initial)
    t0, t1 = pulse.window
    if samples is None:
        times = np.array([t0, t1])
    elif np.isscalar(samples):
        if int(samples) < 2:
            raise DomainError("need at least two samples")
        times = np.linspace(t0, t1, int(samples))
    else:
        times = np.sort(np.asarray(samples, dtype=float))
        if times.size and (times[0] < t0 or times[-1] > t1):
            raise DomainError("sample times must lie inside the pulse window")
    times, values, end, stats = _integrate(_rhs(pulse, detuning), state.as_array(), t0, t1, tol, times)
    if stats.est_error > 10 * max(tol, NORM_TOL):
        raise NumericalError(f"norm drift {stats.est_error:.3g} exceeds tolerance", achieved=stats.est_error)
    final = QubitState.from_array(end, renormalize=True)
    return EvolutionResult(times, values, final, stats, pulse, detuning)


def propagator(pulse: PulseShape, detuning: float = 0.0, tol: float = 1e-10) -> np.ndarray:
    """2x2 unitary of the whole pulse (both basis states integrated together)."""
    _check_tol(tol)
    t0, t1 = pulse.window
    _, _, end, stats = _integrate(_rhs(pulse, detuning, 2), np.eye(2, dtype=complex).ravel(), t0, t1, tol)
    if stats.est_error > 10 * max(tol, NORM_TOL):
        raise NumericalError(f"propagator unitarity drift {stats.est_error:.3g}", achieved=stats.est_error)
    return end.reshape(2, 2)


def free_evolution(detuning: float, duration: float) -> np.ndarray:
    """Propagator with the drive off: ``diag(1, exp(i delta T))``."""
    return np.diag([1.0, np.exp(1j * detuning * duration)]).astype(complex)


# --- closed-form resonant solution -----------------------------------------------

def resonant_parameters(initial) -> tuple[float, float, bool]:
    """``(rho, phi, degenerate)`` of the resonant closed form for ``chi = 0``.

    ``rho = sqrt(Sy^2 + Sz^2)`` and ``phi = atan2(-Sz, Sy)``.  The inverse-sine
    form ``phi = arcsin((1 - 2 p1) / rho)`` coincides with this only on the
    half ``Sy >= 0``; the two-argument form covers both halves.  ``rho = 0``
    (an Sx eigenstate, stationary under the drive) is flagged as degenerate.
    """
    v = bloch(_as_state(initial))
    rho = float(np.hypot(v.sy, v.sz))
    if rho < 1e-12:
        return rho, float("nan"), True
    return rho, float(np.arctan2(-v.sz, v.sy)), False


def eta(width: float, t, half_window: float = GAUSSIAN_HALF_WINDOW):
    """``omega0 int_{-t_f}^{t} exp(-omega0^2 t'^2) dt'`` via the error function."""
    return 0.5 * np.sqrt(np.pi) * (erf(width * np.asarray(t, dtype=float)) + erf(half_window))


def analytic_resonant_population(initial, amplitude: float, width: float, t,
                                 half_window: float = GAUSSIAN_HALF_WINDOW):
    """``|c1(t)|^2 = (1 - rho sin(eta Omega0/omega0 + phi)) / 2`` for ``delta = chi = 0``."""
    if not width > 0:
        raise DomainError("omega0 must be positive")
    rho, phi, degenerate = resonant_parameters(initial)
    if degenerate:
        return np.full_like(np.asarray(t, dtype=float), 0.5)[()]
    return 0.5 * (1 - rho * np.sin(eta(width, t, half_window) * amplitude / width + phi))


# --- error functionals -------------------------------------------------------------

def manipulation_error(initial, amplitude: float, width: float, detuning: float,
                       tol: float = 1e-10, phase: float = 0.0) -> float:
    """``| |c1(t_f)|^2 - |c1(-t_f)|^2 |`` for one gaussian pulse."""
    if tol > 1e-10:
        raise DomainError("manipulation_error needs solver tol <= 1e-10")
    state = _as_state(initial)
    res = evolve(state, gaussian_pulse(amplitude, width, phase), detuning, tol)
    return abs(res.final.p1 - state.p1)


def _sweep_point(ratio, states, detuning_ratio, tol, phase):
    u = propagator(gaussian_pulse(ratio, 1.0, phase), detuning_ratio, tol)
    out = []
    for s in states:
        c = u @ s.as_array()
        out.append(abs(abs(c[1]) ** 2 / np.sum(np.abs(c) ** 2) - s.p1))
    return out


def error_sweep(states: Iterable, ratios: Sequence[float], detuning_ratio: float,
                tol: float = 1e-10, phase: float = 0.0, workers: int | None = None) -> np.ndarray:
    """Manipulation error for each ``Omega0/omega0`` in ``ratios`` (rows) and state (columns).

    Detuning is given as ``delta / omega0``.  One propagator per amplitude is
    shared by all states; results are ordered by input regardless of ``workers``.
    """
    if tol > 1e-10:
        raise DomainError("error_sweep needs solver tol <= 1e-10")
    states = [_as_state(s) for s in states]
    ratios = [float(r) for r in ratios]

    def point(r):
        return _sweep_point(r, states, detuning_ratio, tol, phase)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(point, ratios))
    else:
        rows = [point(r) for r in ratios]
    return np.array(rows, dtype=float).reshape(len(ratios), len(states))


def final_population(initial, ratio: float, detuning_ratio: float = 0.0, tol: float = 1e-10,
                     phase: float = 0.0) -> float:
    """``|c1(t_f)|^2`` after a gaussian pulse of amplitude ``ratio * omega0`` (omega0 = 1)."""
    return evolve(initial, gaussian_pulse(ratio, 1.0, phase), detuning_ratio, tol).final.p1


def inversion_peak(bracket: tuple[float, float] = (1.5, 2.1), tol: float = 1e-10,
                   xtol: float = 1e-7) -> tuple[float, float]:
    """Amplitude ``Omega0/omega0`` maximising the transfer out of ``|0>`` on resonance.

    Golden-section search on the numerically integrated final population.
    Returns ``(ratio, population)``.
    """
    ext = golden_section(lambda r: final_population(QubitState(1, 0), r, 0.0, tol),
                         *bracket, xtol=xtol, maximize=True)
    return ext.x, ext.value
