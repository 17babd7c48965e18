"""Command-line front end.

Subcommands map one-to-one onto the analysis layers:

  phase-budget   static rotation-phase budget for the mounted loop
  noise-sweep    thermal floor across the (temperature, Q_d) grid
  plan           measurement-time table for resolving frame dragging
  simulate       time-domain run (ensemble statistics when n_trials >= 100)
  optimize       geometry search minimizing the rotation-noise floor

All outputs are plain CSV with columns fixed by data/csv_schema.toml,
plus a short printed summary.  Runs are deterministic: no timestamps,
and every stochastic path is seeded.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - python < 3.11
    import tomli as tomllib

from . import __version__
from .circuit import CircuitModel, GyrometerGeometry, OperatingPoint
from .dynamics import monte_carlo, simulate
from .errors import DomainError, GyroError, ValidationError
from .noise import measurement_time, noise_report, sweep
from .physconst import load_constants
from .relativity import (
    orientation_sensitivity,
    phase_budget,
    pickup_axis,
    precession_rates,
)
from .scenario import _GEOMETRY_KEYS, load_scenario, scenario_to_toml

_SECONDS_PER_DAY = 86400.0

# design-search feasibility limits
_OPT_BETA_MAX = 0.95
_OPT_MODE_SEPARATION = 2.0
_OPT_FREQ_BAND_HZ = (50.0, 500.0)
_OPT_PRESAMPLES = 128
_INFEASIBLE_PENALTY = 1.0e3

_csv_schema_cache: dict | None = None


def default_scenario_path() -> Path:
    return Path(str(resources.files("hegyro").joinpath("data/baseline_scenario.toml")))


def _csv_columns(table: str) -> list[str]:
    global _csv_schema_cache
    if _csv_schema_cache is None:
        schema_path = resources.files("hegyro").joinpath("data/csv_schema.toml")
        with open(str(schema_path), "rb") as fh:
            _csv_schema_cache = tomllib.load(fh)
    return list(_csv_schema_cache[table]["columns"])


def _cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return repr(float(value))


def _write_csv(path: Path, table: str, rows) -> None:
    columns = _csv_columns(table)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise GyroError(f"internal: row width {len(row)} != schema {table}")
            writer.writerow([_cell(v) for v in row])


def _load_common(args):
    scenario_path = args.scenario or default_scenario_path()
    sc = load_scenario(scenario_path)
    constants = load_constants(args.constants or sc.constants_path)
    outdir = Path(args.out or sc.output_dir or "gyro_out")
    outdir.mkdir(parents=True, exist_ok=True)
    return sc, constants, outdir


def cmd_phase_budget(args) -> int:
    sc, constants, outdir = _load_common(args)
    budget = phase_budget(sc.orientation, sc.geometry.pickup_area_m2, sc.ppn, constants)
    rates = precession_rates(sc.orientation, sc.ppn, constants)
    axis = pickup_axis(sc.orientation)
    sens = orientation_sensitivity(sc.orientation, sc.geometry.pickup_area_m2, sc.ppn, constants)

    terms = [
        ("earth_rotation", rates.earth_rotation_rad_per_s, budget.sagnac_rad, budget.dtau_sagnac_s),
        ("frame_dragging", rates.frame_dragging_rad_per_s, budget.frame_dragging_rad,
         budget.dtau_frame_dragging_s),
        ("geodetic", rates.geodetic_rad_per_s, budget.geodetic_rad, budget.dtau_geodetic_s),
        ("thomas", rates.thomas_rad_per_s, budget.thomas_rad, budget.dtau_thomas_s),
        ("total", rates.total_rotation_rad_per_s, budget.total_rad, budget.dtau_total_s),
    ]
    rows = [
        (name, float(np.dot(vec, axis)), phase, dtau)
        for name, vec, phase, dtau in terms
    ]
    _write_csv(outdir / "phase_budget.csv", "phase_budget", rows)

    print(f"rotation-phase budget  (pickup area {sc.geometry.pickup_area_m2:.3e} m^2, "
          f"gamma={sc.ppn.gamma}, alpha1={sc.ppn.alpha1})")
    print(f"{'term':<16}{'rate.axis [rad/s]':>20}{'phase [rad]':>16}{'proper time [s]':>18}")
    for name, rate, phase, dtau in rows:
        print(f"{name:<16}{rate:>20.6e}{phase:>16.6e}{dtau:>18.6e}")
    print(f"kinematic phase scale: {budget.sagnac_scale_rad:.6e} rad full-turn")
    tol_arcsec = math.degrees(sens.theta_tolerance_rad) * 3600.0
    print(f"d(phase)/d(theta) = {sens.dphi_dtheta_rad:.6e} rad/rad; "
          f"tilt budget to keep frame dragging resolvable: "
          f"{sens.theta_tolerance_rad:.3e} rad ({tol_arcsec:.3e} arcsec)")
    print(f"wrote {outdir / 'phase_budget.csv'}")
    return 0


def _diagnostics_rows(model: CircuitModel, op: OperatingPoint):
    rows = [(key, value) for key, value in model.diagnostics(op).items()]
    rep = noise_report(model, op)
    rows += [
        ("sqrt_s_omega_rad_per_s_rthz", rep.sqrt_s_omega_rad_per_s_rthz),
        ("sqrt_s_tau_s_rthz", rep.sqrt_s_tau_s_rthz),
        ("sqrt_s_x_m_rthz", rep.sqrt_s_x_m_rthz),
        ("loaded_quality_factor", rep.quality_factor),
        ("loss_regime", rep.regime),
    ]
    return rows


def cmd_noise_sweep(args) -> int:
    sc, constants, outdir = _load_common(args)
    if sc.sweep is None:
        raise ValidationError("scenario has no [sweep] table; noise-sweep needs one")
    model = CircuitModel(sc.geometry, constants)

    for label, fluid in (("solid", True), ("dashed", False)):
        points = sweep(model, sc.operating, sc.sweep, include_fluid_losses=fluid)
        rows = [
            (pt.temperature_K, pt.diaphragm_quality, pt.sqrt_s_omega_rad_per_s_rthz,
             pt.sqrt_s_tau_s_rthz, pt.quality_factor, pt.regime, pt.errata)
            for pt in points
        ]
        _write_csv(outdir / f"noise_sweep_{label}.csv", "noise_sweep", rows)
        n_bad = sum(1 for pt in points if pt.errata)
        print(f"noise_sweep_{label}.csv: {len(rows)} rows"
              + (f" ({n_bad} outside model domain)" if n_bad else ""))

    _write_csv(outdir / "diagnostics.csv", "diagnostics", _diagnostics_rows(model, sc.operating))
    rep = noise_report(model, sc.operating)
    print(f"operating point: sqrt_S_Omega = {rep.sqrt_s_omega_rad_per_s_rthz:.3e} rad/s/rtHz, "
          f"Q = {rep.quality_factor:.3e}, regime = {rep.regime}")
    print(f"wrote {outdir / 'diagnostics.csv'}")
    return 0


def cmd_plan(args) -> int:
    sc, constants, outdir = _load_common(args)
    if sc.sweep is None:
        raise ValidationError("scenario has no [sweep] table; plan needs one")
    rel = args.target_rel_err
    rates = precession_rates(sc.orientation, sc.ppn, constants)
    axis = pickup_axis(sc.orientation)
    signal = abs(float(np.dot(rates.frame_dragging_rad_per_s, axis)))
    model = CircuitModel(sc.geometry, constants)

    rows = []
    skipped = 0
    for quality in sc.sweep.diaphragm_quality_factors:
        for temperature in sc.sweep.temperatures_K:
            op = OperatingPoint(sc.operating.phi0_rad, sc.operating.phi_amplitude_rad, temperature)
            try:
                rep = noise_report(model, op, diaphragm_quality=quality)
            except DomainError:
                skipped += 1
                continue
            t_meas = measurement_time(rep.sqrt_s_omega_rad_per_s_rthz, signal, rel)
            rows.append((temperature, quality, rep.sqrt_s_omega_rad_per_s_rthz,
                         signal, rel, t_meas, t_meas / _SECONDS_PER_DAY))
    if not rows:
        raise DomainError("no sweep point lies inside the model's temperature window")
    _write_csv(outdir / "plan.csv", "plan", rows)

    best = min(rows, key=lambda r: r[5])
    print(f"target: frame-dragging rate along loop axis = {signal:.4e} rad/s "
          f"at {rel:.1e} relative error")
    print(f"fastest grid point: T = {best[0]:g} K, Q_d = {best[1]:.1e} "
          f"-> {best[5]:.4g} s ({best[6]:.4g} days)")
    if skipped:
        print(f"skipped {skipped} grid points outside the model temperature window")
    print(f"wrote {outdir / 'plan.csv'} ({len(rows)} rows)")
    return 0


def cmd_simulate(args) -> int:
    sc, constants, outdir = _load_common(args)
    if sc.sim is None:
        raise ValidationError("scenario has no [sim] table; simulate needs one")
    cfg = sc.sim
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    model = CircuitModel(sc.geometry, constants)

    ensemble = cfg.n_trials >= 100 and cfg.impulse_amplitude_rad > 0.0
    if ensemble:
        mc = monte_carlo(model, sc.operating, cfg)
        _write_csv(outdir / "mc_summary.csv", "mc_summary", [(
            mc.n_trials, mc.n_aborted, mc.trial_duration_s, mc.noise_scale,
            mc.omega_mean_rad_per_s, mc.omega_std_rad_per_s,
            mc.rotation_noise_density_rad_per_s_rthz,
            mc.analytic_density_rad_per_s_rthz, mc.density_ratio,
        )])
        print(f"ensemble: {mc.n_trials} trials, {mc.n_aborted} aborted; "
              f"rotation-noise density {mc.rotation_noise_density_rad_per_s_rthz:.3e} "
              f"vs analytic {mc.analytic_density_rad_per_s_rthz:.3e} "
              f"(ratio {mc.density_ratio:.2f})")
        print(f"wrote {outdir / 'mc_summary.csv'}")
        res = simulate(model, sc.operating, replace(cfg, n_trials=1))
    else:
        res = simulate(model, sc.operating, cfg)

    rows = zip(res.time_s, res.phi_rad, res.position_m)
    _write_csv(outdir / "trajectory.csv", "trajectory", rows)
    print(f"trajectory: {len(res.time_s)} samples over {cfg.duration_s:g} s, "
          f"mode frequency {res.omega_h_rad_per_s / (2.0 * math.pi):.2f} Hz")
    print(f"wrote {outdir / 'trajectory.csv'}")
    return 0


def _load_design_space(path: str | None, geometry: GyrometerGeometry) -> dict[str, tuple[float, float]]:
    if path is None:
        # default search box: factor 3 both ways around the four main knobs
        bounds = {}
        for key in ("line_cross_section_m2", "diaphragm_area_m2",
                    "spring_constant_N_per_m", "critical_current_kg_per_s"):
            x = getattr(geometry, key)
            bounds[key] = (x / 3.0, x * 3.0)
        return bounds
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"design-space file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"design-space file {path} is not valid TOML: {exc}")
    unknown = sorted(set(raw) - {"schema_version", "bounds"})
    if unknown:
        raise ValidationError(f"unknown keys {unknown} in design-space file")
    if raw.get("schema_version") != 1:
        raise ValidationError("design-space schema_version must be 1")
    table = raw.get("bounds")
    if not isinstance(table, dict) or not table:
        raise ValidationError("design-space file needs a nonempty [bounds] table")
    bounds = {}
    for key, pair in table.items():
        if key not in _GEOMETRY_KEYS:
            raise ValidationError(f"[bounds] {key} is not a geometry key")
        if (not isinstance(pair, list) or len(pair) != 2
                or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in pair)):
            raise ValidationError(f"[bounds] {key} must be a [low, high] pair")
        lo, hi = float(pair[0]), float(pair[1])
        if not (0.0 < lo <= hi) or not math.isfinite(hi):
            raise ValidationError(f"[bounds] {key}: need 0 < low <= high, got [{lo}, {hi}]")
        bounds[key] = (lo, hi)
    return bounds


def _design_metrics(geometry: GyrometerGeometry, op: OperatingPoint, constants):
    """Objective and constraint values; raises GyroError when the model
    itself rejects the geometry (hysteretic loop, broken assumptions)."""
    model = CircuitModel(geometry, constants)
    omega_h = model.helmholtz_frequency(op.phi0_rad)
    rep = noise_report(model, op)
    return {
        "sqrt_s_omega": rep.sqrt_s_omega_rad_per_s_rthz,
        "beta": model.hysteresis_beta,
        "f_h_hz": omega_h / (2.0 * math.pi),
        "mode_separation": geometry.diaphragm_resonance_hz / (omega_h / (2.0 * math.pi)),
    }


def _constraint_violation(metrics: dict) -> float:
    lo_hz, hi_hz = _OPT_FREQ_BAND_HZ
    viol = 0.0
    if metrics["beta"] > _OPT_BETA_MAX:
        viol += metrics["beta"] - _OPT_BETA_MAX
    if metrics["mode_separation"] < _OPT_MODE_SEPARATION:
        viol += _OPT_MODE_SEPARATION - metrics["mode_separation"]
    if metrics["f_h_hz"] < lo_hz:
        viol += (lo_hz - metrics["f_h_hz"]) / lo_hz
    if metrics["f_h_hz"] > hi_hz:
        viol += (metrics["f_h_hz"] - hi_hz) / hi_hz
    return viol


def cmd_optimize(args) -> int:
    sc, constants, outdir = _load_common(args)
    geometry0 = sc.geometry
    op = sc.operating
    bounds = _load_design_space(args.design_space, geometry0)
    keys = sorted(bounds)
    z_lo = np.array([math.log10(bounds[k][0]) for k in keys])
    z_hi = np.array([math.log10(bounds[k][1]) for k in keys])
    z_span = z_hi - z_lo
    singleton = bool(np.all(z_span == 0.0))

    def geometry_at(z: np.ndarray) -> GyrometerGeometry:
        fields = {k: getattr(geometry0, k) for k in _GEOMETRY_KEYS}
        for k, zk in zip(keys, z):
            fields[k] = 10.0**zk
        return GyrometerGeometry(**fields)

    def penalized(z: np.ndarray) -> float:
        if np.any(z < z_lo) or np.any(z > z_hi):
            overshoot = float(np.sum(np.maximum(z_lo - z, 0.0) + np.maximum(z - z_hi, 0.0)))
            return _INFEASIBLE_PENALTY * (1.0 + overshoot)
        try:
            metrics = _design_metrics(geometry_at(z), op, constants)
        except GyroError:
            return _INFEASIBLE_PENALTY
        viol = _constraint_violation(metrics)
        if viol > 0.0:
            return _INFEASIBLE_PENALTY * (1.0 + viol)
        return math.log10(metrics["sqrt_s_omega"])

    try:
        metrics0 = _design_metrics(geometry0, op, constants)
        start_viol = _constraint_violation(metrics0)
    except GyroError:
        metrics0 = None
        start_viol = math.inf

    # clip the scenario's own design into the box for the starting point
    z0 = np.clip(
        np.array([math.log10(getattr(geometry0, k)) for k in keys]), z_lo, z_hi
    )
    if singleton:
        z_best = z_lo.copy()
        if penalized(z_best) >= _INFEASIBLE_PENALTY:
            raise DomainError("the singleton design space is infeasible")
    else:
        rng = np.random.default_rng(args.seed)
        candidates = [z0] + list(z_lo + rng.random((_OPT_PRESAMPLES, len(keys))) * z_span)
        scored = [(penalized(z), i) for i, z in enumerate(candidates)]
        best_score, best_i = min(scored)
        if best_score >= _INFEASIBLE_PENALTY:
            raise DomainError(
                "no feasible design found in the search box "
                f"({_OPT_PRESAMPLES} samples); widen the bounds or relax the scenario"
            )
        sol = minimize(
            penalized, candidates[best_i], method="Nelder-Mead",
            options={"maxiter": 600, "xatol": 1e-5, "fatol": 1e-9},
        )
        z_best = np.clip(sol.x, z_lo, z_hi)

    geometry_best = geometry_at(z_best)
    metrics_best = _design_metrics(geometry_best, op, constants)

    rows = [("objective", "sqrt_s_omega_rad_per_s_rthz",
             metrics0["sqrt_s_omega"] if metrics0 else math.nan,
             metrics_best["sqrt_s_omega"], "", "", "")]
    for k, zk in zip(keys, z_best):
        lo, hi = bounds[k]
        span = math.log10(hi) - math.log10(lo)
        at = ""
        if span > 0.0:
            if zk - math.log10(lo) < 0.01 * span:
                at = "lower"
            elif math.log10(hi) - zk < 0.01 * span:
                at = "upper"
        rows.append(("variable", k, getattr(geometry0, k), 10.0**zk, lo, hi, at))
    lo_hz, hi_hz = _OPT_FREQ_BAND_HZ
    for name, value0, value, lo, hi in (
        ("hysteresis_beta", metrics0["beta"] if metrics0 else math.nan,
         metrics_best["beta"], "", _OPT_BETA_MAX),
        ("helmholtz_frequency_hz", metrics0["f_h_hz"] if metrics0 else math.nan,
         metrics_best["f_h_hz"], lo_hz, hi_hz),
        ("mode_separation", metrics0["mode_separation"] if metrics0 else math.nan,
         metrics_best["mode_separation"], _OPT_MODE_SEPARATION, ""),
    ):
        active = ""
        if isinstance(hi, float) and value > 0.99 * hi:
            active = "active"
        if isinstance(lo, float) and value < 1.01 * lo:
            active = "active"
        rows.append(("constraint", name, value0, value, lo, hi, active))
    _write_csv(outdir / "optimize_report.csv", "optimize_report", rows)

    optimized = replace(sc, geometry=geometry_best)
    (outdir / "optimized_scenario.toml").write_text(scenario_to_toml(optimized))

    if metrics0 is not None:
        gain = metrics0["sqrt_s_omega"] / metrics_best["sqrt_s_omega"]
        print(f"floor: {metrics0['sqrt_s_omega']:.4e} -> "
              f"{metrics_best['sqrt_s_omega']:.4e} rad/s/rtHz (x{gain:.2f} better)")
    else:
        print(f"floor: (infeasible start) -> {metrics_best['sqrt_s_omega']:.4e} rad/s/rtHz")
    for row in rows[1:]:
        if row[0] == "variable":
            tag = f"  [{row[6]}]" if row[6] else ""
            print(f"  {row[1]}: {row[2]:.4e} -> {row[3]:.4e}{tag}")
    print(f"wrote {outdir / 'optimize_report.csv'} and {outdir / 'optimized_scenario.toml'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gyro",
        description="design and noise-budget tools for a superfluid helium "
                    "Josephson-junction gyrometer",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--scenario", metavar="FILE",
                        help="scenario TOML (default: packaged baseline)")
        sp.add_argument("--constants", metavar="FILE",
                        help="constants TOML override")
        sp.add_argument("--out", metavar="DIR",
                        help="output directory (default: scenario setting or ./gyro_out)")

    sp = sub.add_parser("phase-budget", help="static rotation-phase budget")
    add_common(sp)
    sp.set_defaults(func=cmd_phase_budget)

    sp = sub.add_parser("noise-sweep", help="thermal floor over the sweep grid")
    add_common(sp)
    sp.set_defaults(func=cmd_noise_sweep)

    sp = sub.add_parser("plan", help="measurement-time table for frame dragging")
    add_common(sp)
    sp.add_argument("--target-rel-err", type=float, default=2e-3,
                    help="relative precision goal on the signal (default 2e-3)")
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("simulate", help="time-domain run from the scenario's [sim] table")
    add_common(sp)
    sp.add_argument("--seed", type=int, help="override the scenario seed")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("optimize", help="search geometry for the lowest noise floor")
    add_common(sp)
    sp.add_argument("--design-space", metavar="FILE",
                    help="TOML [bounds] table of geometry search ranges "
                         "(default: x3 box around four main knobs)")
    sp.add_argument("--seed", type=int, default=0, help="presample seed (default 0)")
    sp.set_defaults(func=cmd_optimize)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GyroError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
