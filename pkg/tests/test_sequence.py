import numpy as np
import pytest

from latticeaddr import dynamics as dy
from latticeaddr import sequence as sq
from latticeaddr.errors import DomainError
from latticeaddr.model import REFERENCE_STATES, QubitState


def equal_up_to_phase(a, b, tol):
    ov = np.trace(a.conj().T @ b) / 2
    return abs(abs(ov) - 1) < tol


# --- ramp ----------------------------------------------------------------------

def test_rate_power_law_and_xi():
    p = 3.6e6
    assert sq.ramp_rate(16 * 2.0, 0.01, p) / sq.ramp_rate(2.0, 0.01, p) == pytest.approx(32, rel=1e-14)
    assert sq.ramp_rate(5.0, 0.02, p) == pytest.approx(2 * sq.ramp_rate(5.0, 0.01, p), rel=1e-15)


@pytest.mark.parametrize("barrier, xi", [(0.0, 0.1), (-1.0, 0.1), (5.0, 0.0), (5.0, 1.0)])
def test_rate_domain(barrier, xi):
    with pytest.raises(DomainError):
        sq.ramp_rate(barrier, xi, 1.0)


def test_prefactor_rejects_target_radius():
    with pytest.raises(DomainError):
        sq.rate_prefactor(0.43, 0.0, 0.225, 2e4)


def test_prefactor_value(ramp, units):
    a0 = units.length_to_lattice(units.length_scale)
    pref = sq.rate_prefactor(ramp.w_bar, 0.5, a0, units.recoil_frequency)
    assert pref == pytest.approx(3.6e6, rel=0.15)


def test_ramp_schedule_basics(ramp):
    assert ramp.limiting_atom == "B"
    assert ramp.total_time > 0 and np.isfinite(ramp.total_time)
    assert np.all(ramp.rates > 0)
    assert 0 < ramp.mean_fraction < 1
    # barrier falls monotonically as the focus rises
    assert np.all(np.diff(ramp.barriers) < 0)


def test_ramp_halving_xi_doubles_time(shifts, ramp):
    half = sq.ramp_schedule(shifts, 50.0, 0.0025, w_bar=ramp.w_bar)
    assert half.total_time == pytest.approx(2 * ramp.total_time, rel=1e-12)


def test_ramp_monotone_in_xi(shifts, ramp):
    times = [sq.ramp_schedule(shifts, 50.0, xi, nodes=16, w_bar=ramp.w_bar).total_time
             for xi in (0.002, 0.005, 0.01, 0.05)]
    assert all(a > b for a, b in zip(times, times[1:]))


def test_ramp_quadrature_refinement(shifts, ramp):
    fine = sq.ramp_schedule(shifts, 50.0, 0.005, nodes=64, w_bar=ramp.w_bar)
    assert fine.total_time == pytest.approx(ramp.total_time, rel=1e-6)


def test_ramp_collapse_reports_reachable(shifts):
    strong = shifts.scaled(20.0)
    with pytest.raises(DomainError, match="max reachable"):
        sq.ramp_schedule(strong, 50.0, 0.005, nodes=8, w_bar=0.43)


def test_ramp_csv(ramp, tmp_path):
    text = ramp.to_csv(tmp_path / "r.csv")
    assert text.splitlines()[0] == "focus_fraction,dE0_Er,barrier_Er,rate_per_s"


# --- refocusing -----------------------------------------------------------------

def test_echo_identity_grid():
    for delta in np.linspace(0, 20, 41):
        u = sq.echo_unitary(delta, 14.0)
        assert equal_up_to_phase(u, np.eye(2), 1e-12)
        for s in REFERENCE_STATES:
            out = QubitState.from_array(u @ s.as_array(), renormalize=True)
            assert abs(out.p1 - s.p1) < 1e-10
            assert s.overlap_error(out) < 1e-10


def test_two_pi_pulses_compose_to_identity():
    xx = sq.X_GATE @ sq.X_GATE
    assert np.allclose(xx, -np.eye(2), atol=1e-15)
    r = sq.rotation_x(1.234)
    assert equal_up_to_phase(sq.X_GATE @ r @ sq.X_GATE @ r, sq.rotation_x(2 * 1.234), 1e-12)


def test_free_evolution_sequence(shifts, ramp):
    plan = sq.four_step_plan(shifts, 0.0, ramp)
    for s in REFERENCE_STATES:
        rep = sq.refocused_rotation(s, plan)
        for site in rep.sites:
            assert s.overlap_error(site.final) < 1e-10


def test_target_follows_single_pulse(shifts, ramp):
    plan = sq.four_step_plan(shifts, np.pi / 2, ramp)
    for s in REFERENCE_STATES:
        a = sq.refocused_rotation(s, plan)["A"]
        single = dy.evolve(s, dy.gaussian_pulse(dy.amplitude_for_area(np.pi / 2)), 0.0).final
        assert abs(a.final.p1 - single.p1) < 1e-8
        assert a.pop_error < 1e-8


def test_static_drift_cancels(shifts, ramp):
    plan = sq.four_step_plan(shifts, 0.8 * np.pi, ramp)
    for s in REFERENCE_STATES:
        ref = sq.refocused_rotation(s, plan)
        for drift in (0.3, 2.1, -1.0):
            rep = sq.refocused_rotation(s, plan, static_phase_drift=drift)
            for a, b in zip(ref.sites, rep.sites):
                assert a.final.overlap_error(b.final) < 1e-8


def test_nontarget_population_small(shifts, ramp):
    plan = sq.four_step_plan(shifts, np.pi / 2, ramp)
    for s in REFERENCE_STATES:
        rep = sq.refocused_rotation(s, plan)
        for site in rep.sites[1:]:
            assert site.pop_error < 1e-4


def test_phase_error_nan_for_poles(shifts, ramp):
    plan = sq.four_step_plan(shifts, np.pi, ramp)
    rep = sq.refocused_rotation(QubitState(1, 0), plan)
    assert np.isnan(rep["B"].phase_error)
    assert np.isnan(rep["A"].phase_error)   # reference is |1>


def test_square_refocus_mode(shifts, ramp):
    # a short square pi pulse with the focus off is an exact X
    ideal = sq.four_step_plan(shifts, np.pi / 2, ramp)
    square = sq.four_step_plan(shifts, np.pi / 2, ramp, refocus="square", refocus_duration=0.01)
    for s in REFERENCE_STATES[1:]:
        a = sq.refocused_rotation(s, ideal)
        b = sq.refocused_rotation(s, square)
        for x, y in zip(a.sites, b.sites):
            assert x.final.overlap_error(y.final) < 1e-9
    # leaving the focus on detunes the neighbours during the pi pulses
    on = sq.four_step_plan(shifts, np.pi / 2, ramp, refocus="square", refocus_duration=0.01,
                           focus_during_refocus=True)
    b = sq.refocused_rotation(REFERENCE_STATES[2], on)["B"]
    assert b.pop_error > sq.refocused_rotation(REFERENCE_STATES[2], square)["B"].pop_error
    assert on.focus_exposure > square.focus_exposure


def test_plan_structure(shifts, ramp):
    plan = sq.four_step_plan(shifts, np.pi, ramp)
    kinds = [s.kind for s in plan.steps]
    assert kinds == ["ramp_up", "pulse", "ramp_down", "refocus"] * 2
    assert plan.width == pytest.approx(shifts.detuning_at(0.5) / 8)
    assert plan.detunings["A"] == 0.0
    assert plan.pulse.area == pytest.approx(np.pi / 2, rel=1e-15)


def test_plan_validation(shifts):
    with pytest.raises(DomainError):
        sq.four_step_plan(shifts, 7.0)
    with pytest.raises(DomainError):
        sq.four_step_plan(shifts, 1.0, refocus="square")
    with pytest.raises(DomainError):
        sq.four_step_plan(shifts, 1.0, target="Z")


def test_report_csv(shifts, ramp, tmp_path):
    rep = sq.refocused_rotation(REFERENCE_STATES[2], sq.four_step_plan(shifts, np.pi / 2, ramp))
    text = rep.to_csv(tmp_path / "seq.csv")
    assert text.splitlines()[0] == ("site,r_over_lambda,delta_Er_per_hbar,p1_initial,p1_final,"
                                    "theta_initial_rad,theta_final_rad,pop_error,phase_error")
    assert [ln.split(",")[0] for ln in text.splitlines()[1:]] == ["A", "B", "C", "D"]


# --- tunneling ---------------------------------------------------------------------

def test_tunneling_scalings():
    t = sq.tunneling_time(0.01, 10.0, 2e4)
    assert sq.tunneling_time(0.04, 10.0, 2e4) == pytest.approx(t / 16, rel=1e-15)
    assert sq.tunneling_time(0.01, 20.0, 2e4) == pytest.approx(2 * t, rel=1e-15)
    with pytest.raises(DomainError):
        sq.tunneling_time(0.0, 1.0, 1.0)


def test_hopping_formula():
    v = 10.0
    assert sq.tight_binding_hopping(v) == pytest.approx(
        4 / np.sqrt(np.pi) * v**0.75 * np.exp(-2 * np.sqrt(v)), rel=1e-15)
    with pytest.raises(DomainError):
        sq.tight_binding_hopping(0.0)


def test_trap_gap_bare_lattice(shifts):
    assert sq.trap_gap(shifts.scaled(1e-9), 50.0) == pytest.approx(2 * np.sqrt(50.0), rel=1e-8)
    # the attractive focus stiffens site A for state |0>
    assert sq.trap_gap(shifts, 50.0) > 2 * np.sqrt(50.0)
