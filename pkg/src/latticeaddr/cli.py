"""Command-line scenario runner.

Each subcommand writes deterministic CSV files, a ``manifest`` (config and
data hashes, library versions), the effective ``config.ini`` and a
``SUMMARY`` table into the output directory.

Exit codes: 0 success, 2 configuration error, 3 numerical/model error,
4 a ``--check`` bound was violated.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import os
import platform
import sys
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy

from . import __version__, config as cfgmod, dynamics, lightshift as ls, optics, sequence as sq
from .errors import DomainError, NumericalError
from .io import csv_text, fmt
from .model import REFERENCE_STATES, make_units

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4


class Check:
    """A named bound: ``lower <= value <= upper`` (either side may be None)."""

    def __init__(self, name, value, lower=None, upper=None, strict_upper=False):
        self.name, self.value, self.lower, self.upper = name, float(value), lower, upper
        self.strict_upper = strict_upper

    @property
    def ok(self) -> bool:
        if math.isnan(self.value):
            return False
        if self.lower is not None and self.value < self.lower:
            return False
        if self.upper is not None:
            return self.value < self.upper if self.strict_upper else self.value <= self.upper
        return True

    def line(self) -> str:
        lo = "-inf" if self.lower is None else fmt(self.lower)
        hi = "inf" if self.upper is None else fmt(self.upper)
        op = "<" if self.strict_upper else "<="
        return f"{'PASS' if self.ok else 'FAIL'}  {self.name} = {fmt(self.value)}  ({lo} <= x {op} {hi})"


@dataclass
class RunResult:
    files: dict          # name -> CSV text
    summary: list        # (key, value, unit)
    checks: list         # Check


class Scenario:
    """Lazily built physics objects for one configuration."""

    def __init__(self, cfg: cfgmod.ScenarioConfig):
        self.cfg = cfg
        self.tol = cfg["solver.tol"]
        self.threads = cfg["solver.threads"]

    @cached_property
    def units(self):
        return make_units(self.cfg["units.lattice_wavelength"], self.cfg["units.atom_mass"])

    @cached_property
    def geometry(self):
        c = self.cfg
        return optics.BeamGeometry(c["beam.aperture"], c["beam.focal_length"], c["beam.input_waist"],
                                   c["beam.wavelength"], c["beam.power"])

    @cached_property
    def profile(self):
        r_max = self.units.length_to_si(self.cfg["grid.r_max"])
        # quadrature tolerance is capped by airy_relative_intensity's domain
        return optics.intensity_map(self.geometry, r_max, self.cfg["grid.points"],
                                    tol=min(self.tol, 1e-4), workers=self.threads)

    @cached_property
    def lines_text(self) -> str:
        path = self.cfg.lines_path()
        if path is None:
            from importlib import resources
            name = self.cfg["lines.file"]
            res = resources.files("latticeaddr") / "data" / (name + ".lines")
            if not res.is_file():
                raise cfgmod.ConfigError(f"[lines] file: no bundled dataset {name!r}")
            return res.read_text(encoding="utf-8")
        with open(path, encoding="utf-8") as fh:
            return fh.read()

    @cached_property
    def lines(self):
        return ls.parse_lines(self.lines_text, self.cfg["lines.file"])

    @cached_property
    def calibration(self):
        return ls.Calibration(self.cfg["calibration.mode"], self.cfg["calibration.splitting"])

    @cached_property
    def shifts(self):
        return ls.shift_map(self.profile, self.lines, self.units, self.calibration)

    @cached_property
    def omega0(self) -> float:
        """Pulse width in E_r/hbar."""
        return float(self.shifts.detuning_at(0.5)) * self.cfg["pulse.omega0_over_delta_half"]

    @cached_property
    def ramp(self):
        return sq.ramp_schedule(self.shifts, self.cfg["lattice.depth"], self.cfg["sequence.xi"],
                                nodes=self.cfg["sequence.ramp_nodes"])

    @cached_property
    def waist_fit(self):
        return optics.effective_gaussian_waist(self.profile)

    def sweep_ratios(self) -> np.ndarray:
        c = self.cfg
        n = int(round((c["sweep.ratio_stop"] - c["sweep.ratio_start"]) / c["sweep.ratio_step"])) + 1
        return c["sweep.ratio_start"] + c["sweep.ratio_step"] * np.arange(n)


# --- subcommands ------------------------------------------------------------------

def run_shift_map(sc: Scenario) -> RunResult:
    cfg = sc.cfg
    lam = sc.units.lattice_wavelength
    pm = ls.potential_map(cfg["lattice.depth"], sc.shifts, cfg["grid.map_half_width"],
                          cfg["grid.map_points"])
    fit = sc.waist_fit
    files = {"intensity.csv": csv_text(("r_over_lambda", "I_rel"), sc.profile.rows(lam)),
             "shift_map.csv": csv_text(("r_over_lambda", "dE0_Er", "dE1_Er", "absdE_Er",
                                        "delta_Er_per_hbar"), sc.shifts.rows()),
             "potential.csv": csv_text(("x_over_lambda", "y_over_lambda", "V0_Er", "V1_Er"), pm.rows())}
    delta_half = float(sc.shifts.detuning_at(0.5))
    summary = [("peak_shift0", sc.shifts.peak_shift0, "Er"),
               ("peak_shift1", sc.shifts.peak_shift1, "Er"),
               ("delta_half", delta_half, "Er/hbar"),
               ("omega0", sc.omega0, "Er/hbar"),
               ("barrier_B", pm.barrier.height, "Er"),
               ("barrier_path", pm.barrier.path, ""),
               ("w_bar", sc.units.length_to_lattice(fit.waist), "lambda"),
               ("w_bar_rms_residual", fit.rms_residual, ""),
               ("laser_detuning", sc.shifts.laser_detuning / (2 * np.pi * 1e9), "GHz")]
    checks = [Check("delta_half_Er", delta_half, 0.9 * 102, 1.1 * 102),
              Check("omega0_Er", sc.omega0, 0.9 * 12.8, 1.1 * 12.8),
              Check("barrier_B_Er", pm.barrier.height, 12, 22)]
    return RunResult(files, summary, checks)


def run_rabi(sc: Scenario) -> RunResult:
    cfg = sc.cfg
    files, summary = {}, []
    for i, ratio in enumerate(cfg["pulse.rabi_ratios"]):
        for j, det in enumerate(cfg["pulse.rabi_detunings"]):
            pulse = dynamics.gaussian_pulse(ratio, 1.0, cfg["pulse.chi"])
            for k, state in enumerate(REFERENCE_STATES):
                res = dynamics.evolve(state, pulse, det, sc.tol, samples=cfg["pulse.rabi_samples"])
                name = f"rabi_s{k}_r{i}_d{j}.csv"
                files[name] = res.to_csv(None)
                summary.append((f"p1_final[s{k},ratio={fmt(ratio)},delta={fmt(det)}]",
                                res.final.p1, ""))
                summary.append((f"norm_drift[s{k},ratio={fmt(ratio)},delta={fmt(det)}]",
                                res.stats.est_error, ""))
    checks = [Check("max_norm_drift", max(v for k, v, _ in summary if k.startswith("norm")), None, 1e-10)]
    return RunResult(files, summary, checks)


def _final_populations(sc: Scenario, ratios, det):
    out = np.empty((len(ratios), len(REFERENCE_STATES)))
    for i, r in enumerate(ratios):
        u = dynamics.propagator(dynamics.gaussian_pulse(r, 1.0, sc.cfg["pulse.chi"]), det, sc.tol)
        for k, s in enumerate(REFERENCE_STATES):
            c = u @ s.as_array()
            out[i, k] = abs(c[1]) ** 2 / np.sum(np.abs(c) ** 2)
    return out


def run_area_sweep(sc: Scenario) -> RunResult:
    ratios = sc.sweep_ratios()
    dets = sc.cfg["sweep.area_detunings"]
    cols = [_final_populations(sc, ratios, d) for d in dets]
    header = ["omega0_ratio", "area_over_pi"] + [f"p1_s{k}_d{fmt(d)}" for d in dets
                                                 for k in range(len(REFERENCE_STATES))]
    rows = []
    for i, r in enumerate(ratios):
        rows.append([r, dynamics.pulse_area(r, 1.0) / np.pi] + [c[i, k] for c in cols
                                                                 for k in range(len(REFERENCE_STATES))])
    peak, pmax = dynamics.inversion_peak(tol=sc.tol)
    summary = [("inversion_peak_ratio", peak, "omega0"), ("inversion_peak_p1", pmax, ""),
               ("area_at_1.81", dynamics.pulse_area(1.81, 1.0) / np.pi, "pi")]
    checks = [Check("inversion_peak_minus_sqrtpi", abs(peak - np.sqrt(np.pi)), None, 1e-3)]
    return RunResult({"area_sweep.csv": csv_text(header, rows)}, summary, checks)


def run_error_sweep(sc: Scenario) -> RunResult:
    ratios = sc.sweep_ratios()
    det = sc.cfg["sweep.detuning_over_omega0"]
    eps = dynamics.error_sweep(REFERENCE_STATES, ratios, det, sc.tol, sc.cfg["pulse.chi"], sc.threads)
    header = ["omega0_ratio"] + [f"eps_s{k}" for k in range(len(REFERENCE_STATES))] + ["eps_max"]
    rows = [[r, *e, e.max()] for r, e in zip(ratios, eps)]
    worst = float(eps.max())
    i = int(np.argmax(eps.max(axis=1)))
    summary = [("detuning", det, "omega0"), ("max_eps", worst, ""), ("argmax_ratio", ratios[i], "omega0")]
    over = np.nonzero(eps.max(axis=1) >= 1e-4)[0]
    if over.size:
        summary.append(("first_ratio_eps_ge_1e-4", ratios[over[0]], "omega0"))
    checks = [Check("max_eps", worst, None, 1e-4, strict_upper=True)]
    return RunResult({"error_sweep.csv": csv_text(header, rows)}, summary, checks)


def _plan(sc: Scenario):
    c = sc.cfg
    return sq.four_step_plan(sc.shifts, c["sequence.alpha"], sc.ramp, sc.omega0,
                             refocus=c["sequence.refocus"],
                             refocus_duration=c["sequence.refocus_duration"],
                             focus_during_refocus=c["sequence.focus_during_refocus"],
                             phase=c["pulse.chi"])


def run_sequence(sc: Scenario) -> RunResult:
    plan = _plan(sc)
    drift = sc.cfg["sequence.static_phase_drift"]
    files, summary = {}, []
    pop, phase = 0.0, 0.0
    for k, state in enumerate(REFERENCE_STATES):
        rep = sq.refocused_rotation(state, plan, drift, sc.tol)
        files[f"sequence_s{k}.csv"] = rep.to_csv(None)
        for s in rep.sites:
            pop = max(pop, s.pop_error)
            if not math.isnan(s.phase_error):
                phase = max(phase, s.phase_error)
    summary += [("alpha", plan.alpha / np.pi, "pi"), ("omega0", plan.width, "Er/hbar"),
                ("duration", plan.duration / sc.units.recoil_frequency * 1e6, "us"),
                ("max_pop_error", pop, ""), ("max_phase_error", phase, "rad")]
    checks = [Check("max_pop_error", pop, None, 1e-4), Check("max_phase_error", phase, None, 1e-6)]
    return RunResult(files, summary, checks)


def run_ramp(sc: Scenario) -> RunResult:
    rs = sc.ramp
    a0 = sc.units.length_to_lattice(sc.units.length_scale)
    pref = sq.rate_prefactor(rs.w_bar, 0.5, a0, sc.units.recoil_frequency)
    summary = [("xi", rs.xi, ""), ("total_time", rs.total_time * 1e6, "us"),
               ("mean_focus_fraction", rs.mean_fraction, ""),
               ("rate_prefactor", pref, "Hz"), ("w_bar", rs.w_bar, "lambda"),
               ("limiting_atom", rs.limiting_atom, ""),
               ("final_barrier", rs.final_barrier.height, "Er")]
    checks = [Check("ramp_time_us", rs.total_time * 1e6, 0.8 * 57, 1.2 * 57),
              Check("rate_prefactor_Hz", pref, 0.85 * 3.6e6, 1.15 * 3.6e6)]
    return RunResult({"ramp.csv": rs.to_csv(None)}, summary, checks)


def run_optimize_wavelength(sc: Scenario) -> RunResult:
    c = sc.cfg
    lo, hi = c["wavelength.range_min"], c["wavelength.range_max"]
    opt = ls.optimize_wavelength(sc.lines, (lo, hi), n_grid=c["wavelength.grid_points"])
    grid = np.linspace(lo, hi, c["wavelength.grid_points"])
    rows = [(wl * 1e9, ls.splitting_to_scattering(sc.lines, wl)) for wl in grid]
    summary = [("optimum", opt.wavelength * 1e9, "nm"), ("ratio", opt.ratio, "rad/photon"),
               ("laser_detuning", opt.laser_detuning / (2 * np.pi * 1e9), "GHz")]
    checks = [Check("optimum_nm", opt.wavelength * 1e9, 418, 424)]
    return RunResult({"wavelength_scan.csv": csv_text(("wavelength_nm", "split_per_scatter"), rows)},
                     summary, checks)


def _crosstalk(sc: Scenario):
    c = sc.cfg
    ratio = float(sc.shifts.intensity_at(c["detect.neighbor_distance"]))
    return ratio, ls.detection_crosstalk(2 * np.pi * c["detect.linewidth"],
                                         2 * np.pi * c["detect.detuning"], ratio)


def run_detect(sc: Scenario) -> RunResult:
    ratio, x = _crosstalk(sc)
    c = sc.cfg
    rows = [(c["detect.linewidth"] / 1e6, c["detect.detuning"] / 1e6, c["detect.neighbor_distance"],
             ratio, x)]
    header = ("linewidth_MHz", "detuning_MHz", "r_over_lambda", "I_ratio", "crosstalk")
    return RunResult({"detect.csv": csv_text(header, rows)}, [("crosstalk", x, "")],
                     [Check("crosstalk", x, None, 2e-5)])


def budget_rows(sc: Scenario):
    """(quantity, value, unit, reference, lower, upper) rows for the headline quantities."""
    u = sc.units
    rf = u.recoil_frequency
    shifts = sc.shifts
    delta_half = float(shifts.detuning_at(0.5))
    rs = sc.ramp
    a0 = u.length_to_lattice(u.length_scale)
    plan = _plan(sc)
    tau = ls.scattering_probability(shifts, sc.lines, plan.focus_exposure / rf)
    hop = sq.tight_binding_hopping(rs.final_barrier.height)
    gap = sq.trap_gap(shifts, sc.cfg["lattice.depth"])
    t_tun = sq.tunneling_time(hop, gap, rf)
    offset = u.length_to_lattice(sc.cfg["misalignment.offset"])
    mis = u.rate_to_si(ls.misalignment_detuning(shifts, offset)) / (2 * np.pi)
    _, cross = _crosstalk(sc)
    power_needed = shifts.peak_intensity * optics.effective_area(sc.geometry)
    nan = float("nan")
    return [
        ("recoil_frequency", rf / (2 * np.pi), "Hz", 3180, 3180 * 0.99, 3180 * 1.01),
        ("abs_dE0", shifts.peak_splitting, "Er", 107, nan, nan),
        ("dE0_at_focus", shifts.peak_shift0, "Er", nan, nan, nan),
        ("delta_half", delta_half, "Er/hbar", 102, 0.9 * 102, 1.1 * 102),
        ("omega0", delta_half / 8, "Er/hbar", 12.8, 0.9 * 12.8, 1.1 * 12.8),
        ("barrier_B", rs.final_barrier.height, "Er", 15, 12, 22),
        ("w_bar", rs.w_bar, "lambda", nan, nan, nan),
        ("laser_detuning", shifts.laser_detuning / (2 * np.pi * 1e9), "GHz", -1209, nan, nan),
        ("focus_power_for_calibration", power_needed * 1e6, "uW", 17, nan, nan),
        ("rate_prefactor", sq.rate_prefactor(rs.w_bar, 0.5, a0, rf), "Hz", 3.6e6, 0.85 * 3.6e6,
         1.15 * 3.6e6),
        ("ramp_time", rs.total_time * 1e6, "us", 57, 0.8 * 57, 1.2 * 57),
        ("tau", tau, "", 6e-4, 6e-4 / 3, 6e-4 * 3),
        ("tunneling_time", t_tun, "s", 13, 1.3, 130),
        ("misalignment_detuning", mis, "Hz", 3, 1.5, 6),
        ("detection_crosstalk", cross, "", 2e-5, nan, 2e-5),
    ]


def run_budget(sc: Scenario) -> RunResult:
    rows = budget_rows(sc)
    out, checks = [], []
    for name, value, unit, ref, lo, hi in rows:
        bounded = not (math.isnan(lo) and math.isnan(hi))
        ck = Check(name, value, None if math.isnan(lo) else lo, None if math.isnan(hi) else hi)
        if bounded:
            checks.append(ck)
        out.append((name, value, unit, ref, lo, hi, ("pass" if ck.ok else "fail") if bounded else "info"))
    header = ("quantity", "value", "unit", "reference", "lower", "upper", "status")
    summary = [(r[0], r[1], r[2]) for r in rows]
    return RunResult({"budget.csv": csv_text(header, out)}, summary, checks)


SUBCOMMANDS = {
    "shift-map": run_shift_map,
    "rabi": run_rabi,
    "area-sweep": run_area_sweep,
    "error-sweep": run_error_sweep,
    "sequence": run_sequence,
    "ramp": run_ramp,
    "optimize-wavelength": run_optimize_wavelength,
    "detect": run_detect,
    "budget": run_budget,
}


# --- driver -------------------------------------------------------------------------

def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def manifest_text(subcommand: str, effective: str, lines_text: str, files: dict) -> str:
    out = [f"subcommand {subcommand}",
           f"latticeaddr {__version__}",
           f"python {platform.python_version()}",
           f"numpy {np.__version__}",
           f"scipy {scipy.__version__}",
           f"config_sha256 {_sha256(effective)}",
           f"lines_sha256 {_sha256(lines_text)}"]
    out += [f"file {name} sha256 {_sha256(text)}" for name, text in sorted(files.items())]
    return "\n".join(out) + "\n"


def summary_text(subcommand: str, result: RunResult, check: bool) -> str:
    width = max([len(k) for k, _, _ in result.summary] + [8])
    out = [f"# {subcommand}"]
    for key, value, unit in result.summary:
        out.append(f"{key:<{width}}  {fmt(value)}{(' ' + unit) if unit else ''}")
    if check:
        out.append("")
        out.append("# checks")
        out += [c.line() for c in result.checks]
    return "\n".join(out) + "\n"


def _effective_config(cfg: cfgmod.ScenarioConfig) -> str:
    path = cfg.lines_path()
    if path is not None:
        vals = {s: dict(v) for s, v in cfg.values.items()}
        vals["lines"]["file"] = os.path.abspath(path)
        cfg = cfgmod.ScenarioConfig(vals, cfg.base_dir)
    return cfgmod.dump(cfg)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario INI file (default: bundled default scenario)")
    common.add_argument("--out", help="output directory (default: ./out/<subcommand>)")
    common.add_argument("--set", action="append", default=None, metavar="SECTION.KEY=VALUE",
                        help="override one config entry (repeatable)")
    common.add_argument("--tol", type=float, help="solver / quadrature tolerance")
    common.add_argument("--threads", type=int, help="worker threads for grid evaluations")
    common.add_argument("--check", action="store_true", default=None,
                        help="assert the reference bounds; exit 4 on violation")
    parser = argparse.ArgumentParser(prog="latticeaddr", parents=[common],
                                     description="Focused-laser single-site addressing studies.")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    sub_common = argparse.ArgumentParser(add_help=False)
    for action in common._actions:
        kwargs = {"help": action.help, "default": argparse.SUPPRESS}
        if isinstance(action, argparse._StoreTrueAction):
            sub_common.add_argument(*action.option_strings, action="store_true", **kwargs)
        elif isinstance(action, argparse._AppendAction):
            sub_common.add_argument(*action.option_strings, action="append", metavar=action.metavar,
                                    **kwargs)
        else:
            sub_common.add_argument(*action.option_strings, type=action.type, **kwargs)
    for name, fn in SUBCOMMANDS.items():
        sub.add_parser(name, parents=[sub_common], help=(fn.__doc__ or name).strip().splitlines()[0]
                       if fn.__doc__ else name)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load(args.config)
        overrides = list(args.set or [])
        if args.tol is not None:
            overrides.append(f"solver.tol={args.tol!r}")
        if args.threads is not None:
            overrides.append(f"solver.threads={args.threads}")
        if overrides:
            cfg = cfg.with_overrides(overrides)
        sc = Scenario(cfg)
        lines_text = sc.lines_text
        sc.lines  # noqa: B018  (parse errors are config errors)
    except (cfgmod.ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        result = SUBCOMMANDS[args.subcommand](sc)
    except (NumericalError, DomainError) as exc:
        print(f"{args.subcommand}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    out_dir = args.out or os.path.join("out", args.subcommand)
    os.makedirs(out_dir, exist_ok=True)
    effective = _effective_config(cfg)
    check = bool(args.check)
    for name, text in sorted(result.files.items()):
        with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    with open(os.path.join(out_dir, "config.ini"), "w", encoding="utf-8") as fh:
        fh.write(effective)
    with open(os.path.join(out_dir, "manifest"), "w", encoding="utf-8") as fh:
        fh.write(manifest_text(args.subcommand, effective, lines_text, result.files))
    summary = summary_text(args.subcommand, result, check)
    with open(os.path.join(out_dir, "SUMMARY"), "w", encoding="utf-8") as fh:
        fh.write(summary)
    sys.stdout.write(summary)
    if check and not all(c.ok for c in result.checks):
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
