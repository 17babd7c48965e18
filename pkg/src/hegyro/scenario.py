"""Scenario files: one TOML per instrument configuration.

A scenario bundles everything the command-line tools need: geometry,
mounting orientation, gravity-theory parameters, operating point, and
optional sweep and simulation settings.  Parsing is strict: unknown
tables or keys raise ValidationError so a typo cannot silently fall
back to a default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - python < 3.11
    import tomli as tomllib

from .circuit import GyrometerGeometry, OperatingPoint
from .dynamics import SimConfig
from .errors import ValidationError
from .noise import SweepSpec
from .relativity import Orientation, PPNParams

SCHEMA_VERSION = 1

_GEOMETRY_KEYS = (
    "pickup_area_m2",
    "line_length_m",
    "line_cross_section_m2",
    "diaphragm_area_m2",
    "spring_constant_N_per_m",
    "diaphragm_resonance_hz",
    "diaphragm_quality_factor",
    "critical_current_kg_per_s",
)
_SIM_KEYS = (
    "duration_s",
    "dt_s",
    "seed",
    "n_trials",
    "decimation",
    "impulse_amplitude_rad",
    "noise_scale",
    "phase_bias_offset_rad",
    "total_resistance_override_J_s_per_kg2",
)


@dataclass(frozen=True)
class Scenario:
    """Validated scenario contents, ready to feed the model layers."""

    geometry: GyrometerGeometry
    orientation: Orientation
    ppn: PPNParams
    operating: OperatingPoint
    sweep: SweepSpec | None = None
    sim: SimConfig | None = None
    constants_path: str | None = None
    output_dir: str | None = None


def _check_keys(table: dict, allowed, where: str):
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ValidationError(f"unknown keys {unknown} in [{where}]")


def _number(table: dict, key: str, where: str) -> float:
    if key not in table:
        raise ValidationError(f"missing key '{key}' in [{where}]")
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"[{where}] {key} must be a number, got {v!r}")
    if not math.isfinite(float(v)):
        raise ValidationError(f"[{where}] {key} must be finite, got {v!r}")
    return float(v)


def _integer(table: dict, key: str, where: str) -> int:
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValidationError(f"[{where}] {key} must be an integer, got {v!r}")
    return v


def _number_list(table: dict, key: str, where: str) -> tuple:
    if key not in table:
        raise ValidationError(f"missing key '{key}' in [{where}]")
    v = table[key]
    if not isinstance(v, list) or not v:
        raise ValidationError(f"[{where}] {key} must be a nonempty list")
    out = []
    for item in v:
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ValidationError(f"[{where}] {key} entries must be numbers, got {item!r}")
        out.append(float(item))
    return tuple(out)


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate a scenario TOML file."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"scenario file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"scenario file {path} is not valid TOML: {exc}")

    _check_keys(
        raw,
        ("schema_version", "constants", "geometry", "orientation", "ppn",
         "operating", "sweep", "sim", "output"),
        "top level",
    )
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ValidationError(
            f"scenario schema_version must be {SCHEMA_VERSION}, got {raw.get('schema_version')!r}"
        )
    for name in ("geometry", "orientation", "operating"):
        if name not in raw or not isinstance(raw[name], dict):
            raise ValidationError(f"scenario needs a [{name}] table")

    geo_tab = raw["geometry"]
    _check_keys(geo_tab, _GEOMETRY_KEYS, "geometry")
    geometry = GyrometerGeometry(**{k: _number(geo_tab, k, "geometry") for k in _GEOMETRY_KEYS})

    ori_tab = raw["orientation"]
    _check_keys(ori_tab, ("theta_deg", "chi_deg", "psi_deg"), "orientation")
    orientation = Orientation.from_degrees(
        _number(ori_tab, "theta_deg", "orientation"),
        _number(ori_tab, "chi_deg", "orientation"),
        _number(ori_tab, "psi_deg", "orientation"),
    )

    ppn_tab = raw.get("ppn", {})
    _check_keys(ppn_tab, ("gamma", "alpha1"), "ppn")
    ppn = PPNParams(
        gamma=_number(ppn_tab, "gamma", "ppn") if "gamma" in ppn_tab else 1.0,
        alpha1=_number(ppn_tab, "alpha1", "ppn") if "alpha1" in ppn_tab else 0.0,
    )

    op_tab = raw["operating"]
    _check_keys(op_tab, ("phi0_rad", "phi_amplitude_rad", "temperature_K"), "operating")
    operating = OperatingPoint(
        phi0_rad=_number(op_tab, "phi0_rad", "operating"),
        phi_amplitude_rad=_number(op_tab, "phi_amplitude_rad", "operating"),
        temperature_K=_number(op_tab, "temperature_K", "operating"),
    )

    sweep = None
    if "sweep" in raw:
        sw = raw["sweep"]
        _check_keys(sw, ("temperatures_K", "diaphragm_quality_factors"), "sweep")
        sweep = SweepSpec(
            temperatures_K=_number_list(sw, "temperatures_K", "sweep"),
            diaphragm_quality_factors=_number_list(sw, "diaphragm_quality_factors", "sweep"),
        )

    sim = None
    if "sim" in raw:
        sim_tab = raw["sim"]
        _check_keys(sim_tab, _SIM_KEYS, "sim")
        for req in ("duration_s", "dt_s"):
            if req not in sim_tab:
                raise ValidationError(f"missing key '{req}' in [sim]")
        kwargs = {
            "duration_s": _number(sim_tab, "duration_s", "sim"),
            "dt_s": _number(sim_tab, "dt_s", "sim"),
        }
        for key in ("seed", "n_trials", "decimation"):
            if key in sim_tab:
                kwargs[key] = _integer(sim_tab, key, "sim")
        for key in ("impulse_amplitude_rad", "noise_scale", "phase_bias_offset_rad",
                    "total_resistance_override_J_s_per_kg2"):
            if key in sim_tab:
                kwargs[key] = _number(sim_tab, key, "sim")
        sim = SimConfig(**kwargs)

    constants_path = None
    if "constants" in raw:
        con = raw["constants"]
        _check_keys(con, ("file",), "constants")
        if "file" not in con or not isinstance(con["file"], str):
            raise ValidationError("[constants] needs a string key 'file'")
        # relative paths resolve against the scenario's own directory
        cp = Path(con["file"])
        constants_path = str(cp if cp.is_absolute() else (path.parent / cp))

    output_dir = None
    if "output" in raw:
        out = raw["output"]
        _check_keys(out, ("directory",), "output")
        if "directory" in out:
            if not isinstance(out["directory"], str):
                raise ValidationError("[output] directory must be a string")
            output_dir = out["directory"]

    return Scenario(
        geometry=geometry,
        orientation=orientation,
        ppn=ppn,
        operating=operating,
        sweep=sweep,
        sim=sim,
        constants_path=constants_path,
        output_dir=output_dir,
    )


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def scenario_to_toml(s: Scenario) -> str:
    """Serialize back to scenario TOML (round-trips through load_scenario)."""
    lines = [f"schema_version = {SCHEMA_VERSION}", ""]
    if s.constants_path is not None:
        lines += ["[constants]", f'file = "{s.constants_path}"', ""]
    lines.append("[geometry]")
    for key in _GEOMETRY_KEYS:
        lines.append(f"{key} = {_fmt(getattr(s.geometry, key))}")
    lines += [
        "",
        "[orientation]",
        f"theta_deg = {_fmt(math.degrees(s.orientation.theta_rad))}",
        f"chi_deg = {_fmt(math.degrees(s.orientation.chi_rad))}",
        f"psi_deg = {_fmt(math.degrees(s.orientation.psi_rad))}",
        "",
        "[ppn]",
        f"gamma = {_fmt(s.ppn.gamma)}",
        f"alpha1 = {_fmt(s.ppn.alpha1)}",
        "",
        "[operating]",
        f"phi0_rad = {_fmt(s.operating.phi0_rad)}",
        f"phi_amplitude_rad = {_fmt(s.operating.phi_amplitude_rad)}",
        f"temperature_K = {_fmt(s.operating.temperature_K)}",
    ]
    if s.sweep is not None:
        temps = ", ".join(_fmt(t) for t in s.sweep.temperatures_K)
        quals = ", ".join(_fmt(q) for q in s.sweep.diaphragm_quality_factors)
        lines += [
            "",
            "[sweep]",
            f"temperatures_K = [{temps}]",
            f"diaphragm_quality_factors = [{quals}]",
        ]
    if s.sim is not None:
        lines += ["", "[sim]"]
        for key in _SIM_KEYS:
            value = getattr(s.sim, key)
            if value is None:
                continue
            lines.append(f"{key} = {_fmt(value)}")
    if s.output_dir is not None:
        lines += ["", "[output]", f'directory = "{s.output_dir}"']
    return "\n".join(lines) + "\n"
