import numpy as np
import pytest
from scipy import constants

from latticeaddr import lightshift as ls
from latticeaddr import optics
from latticeaddr.errors import DomainError, NumericalError
from oracles import single_line_shift

LAMBDA = 850e-9
C = constants.c


def synthetic(gamma=2 * np.pi * 6e6, wavelength=780e-9, cij=1.0):
    return ls.parse_lines(
        "state,label,gamma_hz,wavelength_nm,cij_sq\n"
        f"0,5P3/2,{gamma / (2 * np.pi)},{wavelength * 1e9},{cij}\n"
        f"1,5P3/2,{gamma / (2 * np.pi)},{wavelength * 1e9},{cij}\n")


# --- line data ---------------------------------------------------------------

def test_bundled_files_parse():
    six = ls.bundled_lines("rb87_6p")
    full = ls.bundled_lines("rb87_5p_6p")
    assert set(six.states) == {"0", "1", "1bar"}
    assert len(full.transitions) > len(six.transitions)
    assert {t.manifold for t in full.transitions} == {"5P", "6P"}


def test_omega_column_accepted():
    d = ls.parse_lines("state,label,gamma_hz,omega_rad_s,cij_sq  # header\n"
                       "0, 5P1/2, 5.75e6, 2.37e15, 0.5\n")
    assert d.transitions[0].omega == 2.37e15


@pytest.mark.parametrize("text", [
    "",
    "state,label,gamma_hz,cij_sq\n0,x,1,1\n",                       # no frequency column
    "state,label,gamma_hz,wavelength_nm,cij_sq\n0,5P,-1,780,0.5\n",  # gamma <= 0
    "state,label,gamma_hz,wavelength_nm,cij_sq\n0,5P,1,780,1.5\n",   # cij > 1
    "state,label,gamma_hz,wavelength_nm,cij_sq\n0,5P,1,780\n",       # short record
    "state,label,gamma_hz,wavelength_nm,cij_sq\n0,5P1/2,1,780,0.7\n0,5P3/2,1,781,0.7\n",  # sum > 1
])
def test_bad_line_data(text):
    with pytest.raises(DomainError):
        ls.parse_lines(text)


def test_load_lines_from_path(tmp_path):
    p = tmp_path / "x.lines"
    p.write_text("# comment only line\nstate,label,gamma_hz,wavelength_nm,cij_sq\n0,6P3/2,1e6,420,1\n")
    assert ls.load_lines(p).transitions[0].label == "6P3/2"


def test_unknown_bundled_name():
    with pytest.raises(DomainError):
        ls.bundled_lines("nope")


# --- Stark shift ---------------------------------------------------------------

def test_single_line_formula():
    gamma, wl = 2 * np.pi * 6e6, 780e-9
    lines = synthetic(gamma, wl)
    laser = 800e-9
    got = ls.stark_shift(lines, 0, 1e7, laser)
    want = single_line_shift(gamma, 2 * np.pi * C / wl, 2 * np.pi * C / laser, 1e7)
    assert got == pytest.approx(want, rel=1e-13)
    assert got < 0   # red detuned: attractive


def test_zero_and_linear_in_intensity(lines):
    assert ls.stark_shift(lines, 0, 0.0, 421e-9) == 0.0
    a = ls.stark_shift(lines, 1, 1e7, 421e-9)
    assert ls.stark_shift(lines, 1, 2e7, 421e-9) == 2 * a
    assert ls.stark_shift(lines, 1, 3.7e7, 421e-9) == pytest.approx(3.7 * a, rel=1e-15)


def test_near_resonance_names_transition(lines):
    t = lines.for_state("0")[0]
    with pytest.raises(DomainError, match=t.label):
        ls.stark_shift(lines, 0, 1.0, t.wavelength * (1 + 1e-12))


def test_qubit_state_signs(lines):
    # between the 6P lines: state |0> attractive, state |1> repulsive
    assert ls.stark_shift(lines, 0, 1e7, 421e-9) < 0 < ls.stark_shift(lines, 1, 1e7, 421e-9)


# --- shift map -------------------------------------------------------------------

def test_calibrated_map(shifts):
    assert shifts.splitting[0] == pytest.approx(107.0, rel=1e-12)
    assert shifts.detuning[0] == 0.0
    assert shifts.detuning_at(0.5) == pytest.approx(102, rel=0.1)
    assert shifts.detuning_at(0.5) / 8 == pytest.approx(12.75, rel=0.02)
    assert np.allclose(shifts.splitting, np.abs(shifts.shift1 - shifts.shift0), rtol=0, atol=1e-12)


def test_calibrated_shape_identity(shifts):
    assert np.allclose(shifts.splitting / shifts.splitting[0], shifts.intensity, rtol=1e-13, atol=0)


def test_detuning_non_negative(shifts):
    inside = (shifts.radii > 0) & (shifts.radii <= 0.5)
    assert np.all(shifts.detuning[inside] > 0)


def test_raw_mode_uses_power(profile, lines, units):
    raw = ls.shift_map(profile, lines, units, ls.Calibration("raw"))
    i0 = optics.peak_intensity(profile.geometry)
    want = units.to_recoil(ls.stark_shift(lines, 0, i0, profile.geometry.wavelength))
    assert raw.peak_shift0 == pytest.approx(want, rel=1e-14)
    assert raw.peak_intensity == i0


def test_calibration_validation():
    with pytest.raises(DomainError):
        ls.Calibration("weird")
    with pytest.raises(DomainError):
        ls.Calibration("calibrated", 0.0)


def test_laser_detuning_sign(shifts):
    # 421 nm lies on the red side of the 420.3 nm line
    assert shifts.laser_detuning < 0
    assert shifts.laser_detuning / (2 * np.pi * 1e9) == pytest.approx(-1209, rel=0.03)


def test_shift_map_csv(shifts, tmp_path):
    text = shifts.to_csv(tmp_path / "s.csv")
    assert text.splitlines()[0] == "r_over_lambda,dE0_Er,dE1_Er,absdE_Er,delta_Er_per_hbar"
    assert len(text.splitlines()) == shifts.radii.size + 1


# --- potentials ---------------------------------------------------------------------

def test_bare_lattice_periodic(shifts):
    off = shifts.scaled(0.0)
    x = np.linspace(-0.4, 0.3, 9)
    y = np.linspace(-0.3, 0.2, 9)
    xx, yy = np.meshgrid(x, y)
    v = ls.state_potential(off, 0, 50.0, xx, yy)
    assert np.max(np.abs(ls.state_potential(off, 0, 50.0, xx + 0.5, yy) - v)) < 1e-12
    assert np.max(np.abs(ls.state_potential(off, 0, 50.0, xx, yy + 0.5) - v)) < 1e-12


def test_bare_barrier_equals_depth(shifts):
    assert ls.site_barrier(shifts.scaled(0.0), 50.0).height == pytest.approx(50.0, abs=1e-8)


def test_barrier_default_configuration(shifts):
    b = ls.site_barrier(shifts, 50.0, state=0)
    assert 12 <= b.height <= 22
    assert b.path == "toward_target"
    assert b.site_minimum < 0.5      # pulled toward the focus


def test_state1_raised_at_focus(shifts):
    pm = ls.potential_map(50.0, shifts, 0.7, 15)
    c = 7
    assert pm.v1[c, c] > 0 > pm.v0[c, c]
    assert pm.x[c] == 0


def test_potential_map_region_check(shifts):
    with pytest.raises(DomainError):
        ls.potential_map(50.0, shifts, 1.2, 11)
    with pytest.raises(DomainError):
        ls.potential_map(-1.0, shifts, 0.5, 11)


def test_barrier_collapse_reported(shifts):
    b = ls.site_barrier(shifts.scaled(20.0), 50.0)
    assert b.height <= 0


# --- scattering / wavelength ----------------------------------------------------------

def test_scattering_linear_and_zero(shifts, lines):
    p1 = ls.scattering_probability(shifts, lines, 1e-4)
    assert ls.scattering_probability(shifts, lines, 2e-4) == pytest.approx(2 * p1, rel=1e-15)
    assert ls.scattering_probability(shifts.scaled(0.0), lines, 1e-4) == 0.0
    with pytest.raises(DomainError):
        ls.scattering_probability(shifts, lines, -1.0)


def test_wavelength_objective_intensity_free(lines):
    assert ls.splitting_to_scattering(lines, 421e-9) > 0
    # ratio of two linear-in-I quantities
    wl = 421.1e-9
    split = lambda i: abs(ls.stark_shift(lines, 1, i, wl) - ls.stark_shift(lines, 0, i, wl))  # noqa: E731
    scat = lambda i: max(ls.scattering_rate(lines, s, i, wl) for s in (0, 1))  # noqa: E731
    assert split(1.0) / scat(1.0) == pytest.approx(split(5e8) / scat(5e8), rel=1e-14)


def test_optimum_matches_fine_grid(lines):
    opt = ls.optimize_wavelength(lines, (420.35e-9, 421.62e-9), n_grid=41)
    fine = np.linspace(420.35e-9, 421.62e-9, 20001)
    vals = [ls.splitting_to_scattering(lines, w) for w in fine]
    best = fine[int(np.argmax(vals))]
    cell = (421.62e-9 - 420.35e-9) / 40
    assert abs(opt.wavelength - best) < cell
    assert opt.ratio >= max(vals) * (1 - 1e-9)


def test_optimize_rejects_resonance_in_range(lines):
    with pytest.raises(DomainError):
        ls.optimize_wavelength(lines, (419e-9, 421e-9))


def test_optimize_no_interior_maximum(lines):
    with pytest.raises(DomainError):
        ls.optimize_wavelength(lines, (421.3e-9, 421.6e-9))


# --- misalignment / detection ----------------------------------------------------------

def test_misalignment_quadratic(shifts):
    d1 = ls.misalignment_detuning(shifts, 0.002)
    assert ls.misalignment_detuning(shifts, 0.004) == pytest.approx(4 * d1, rel=1e-14)
    assert ls.misalignment_detuning(shifts, 0.0) == 0.0


def test_misalignment_matches_profile_curvature(shifts, geometry, units):
    # independent curvature: symmetric difference straight from the quadrature
    h = 5e-9
    i0 = 1.0
    ih = optics.airy_relative_intensity(geometry, h)
    curv = 2 * (ih - i0) / (h / LAMBDA) ** 2 * shifts.peak_splitting
    x = 1e-9 / LAMBDA
    assert ls.misalignment_detuning(shifts, x) == pytest.approx(0.5 * abs(curv) * x**2, rel=1e-3)


def test_misalignment_domain(shifts):
    with pytest.raises(DomainError):
        ls.misalignment_detuning(shifts, 0.2)


def test_curvature_needs_fine_grid(profile, lines, units):
    coarse = optics.intensity_map(profile.geometry, 1.5 * LAMBDA, 7)
    sm = ls.shift_map(coarse, lines, units)
    with pytest.raises(NumericalError):
        ls.curvature_at_focus(sm)


def test_detection_crosstalk_basic():
    g, d = 2 * np.pi * 1.42e6, 2 * np.pi * 27.6e6
    assert ls.detection_crosstalk(g, d, 0.0) == 0.0
    a = ls.detection_crosstalk(g, d, 0.04)
    assert ls.detection_crosstalk(g, 2 * d, 0.04) == pytest.approx(a / 4, rel=1e-15)
    with pytest.raises(DomainError):
        ls.detection_crosstalk(g, 0.0, 0.04)
