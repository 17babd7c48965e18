"""Thermal noise floor and measurement-time planning.

The readout detects the working-point shift of the Helmholtz mode, so the
rotation-equivalent noise floor follows from the Langevin force on the
mode (one-sided potential PSD S_mu = 4 k_B T R_tot) referred back through
the phase-to-rotation gain:

    sqrt(S_Omega) = (1/A) sqrt(k_B T L_J0 / (Q_H omega_oo)) eps / phi_A

with the working-point factor

    eps(phi0, beta) = beta (cos phi0 + 1/beta)^(5/4) / sin(phi0)

Proper-time-equivalent and diaphragm-position-equivalent densities are
affine images of the same floor.  `sweep` maps the floor over grids of
temperature and diaphragm quality, with and without the fluid loss
channels, for the loss-budget families the design study plots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .circuit import CircuitModel, OperatingPoint
from .errors import DomainError, ValidationError

REGIME_DIAPHRAGM = "diaphragm"
REGIME_FLUID = "fluid"


def working_point_factor(phi0_rad: float, hysteresis_beta: float) -> float:
    """eps(phi0, beta) = beta (cos phi0 + 1/beta)^(5/4) / sin(phi0).

    Satisfies eps sin(phi0) beta^(1/4) = (1 + beta cos phi0)^(5/4); small
    at large phi0 (transfer gain grows toward the stability edge), large
    near phi0 = 0 or pi where the junction response is flat.
    """
    if not (0.0 < phi0_rad < math.pi):
        raise DomainError(f"working-point factor needs phi0 in (0, pi), got {phi0_rad}")
    margin = math.cos(phi0_rad) + 1.0 / hysteresis_beta
    if margin <= 0.0:
        raise DomainError(f"phi0 = {phi0_rad} is beyond the stable branch")
    return hysteresis_beta * margin**1.25 / math.sin(phi0_rad)


@dataclass(frozen=True)
class NoiseReport:
    """Thermal-noise floor of one operating condition."""

    temperature_K: float
    diaphragm_quality: float
    include_fluid_losses: bool
    omega_h_rad_per_s: float
    bare_resonance_rad_per_s: float
    quality_factor: float
    total_resistance_J_s_per_kg2: float
    epsilon: float
    sqrt_s_omega_rad_per_s_rthz: float
    sqrt_s_tau_s_rthz: float
    sqrt_s_x_m_rthz: float
    regime: str


def noise_report(
    model: CircuitModel,
    op: OperatingPoint,
    diaphragm_quality: float | None = None,
    include_fluid_losses: bool = True,
) -> NoiseReport:
    """Evaluate the full noise floor at one working point.

    `diaphragm_quality` overrides the geometry's value (sweep use);
    `include_fluid_losses=False` keeps only the diaphragm loss channel,
    the idealized family of the loss-budget plots.
    """
    phi0 = op.phi0_rad
    t = op.temperature_K
    omega_h = model.helmholtz_frequency(phi0)
    r_d = model.diaphragm_resistance(diaphragm_quality)
    if include_fluid_losses:
        re_fluid = model.parallel_branch_impedance(phi0, t, omega_h).real
    else:
        re_fluid = 0.0
    r_tot = r_d + re_fluid
    q_h = omega_h * model.parallel_inductance(phi0) / r_tot

    u = model.constants.universal
    eps = working_point_factor(phi0, model.hysteresis_beta)
    area = model.geometry.pickup_area_m2
    sqrt_s_omega = (
        (1.0 / area)
        * math.sqrt(
            u.boltzmann_constant * t * model.josephson_inductance0
            / (q_h * model.bare_resonance_rad_per_s)
        )
        * eps
        / op.phi_amplitude_rad
    )
    sqrt_s_tau = 2.0 * area / u.speed_of_light**2 * sqrt_s_omega
    sqrt_s_x = math.sqrt(4.0 * u.boltzmann_constant * t / r_tot) / (
        omega_h * model.constants.helium.density * model.geometry.diaphragm_area_m2
    )
    regime = REGIME_DIAPHRAGM if r_d >= re_fluid else REGIME_FLUID
    return NoiseReport(
        temperature_K=t,
        diaphragm_quality=(
            model.geometry.diaphragm_quality_factor if diaphragm_quality is None else diaphragm_quality
        ),
        include_fluid_losses=include_fluid_losses,
        omega_h_rad_per_s=omega_h,
        bare_resonance_rad_per_s=model.bare_resonance_rad_per_s,
        quality_factor=q_h,
        total_resistance_J_s_per_kg2=r_tot,
        epsilon=eps,
        sqrt_s_omega_rad_per_s_rthz=sqrt_s_omega,
        sqrt_s_tau_s_rthz=sqrt_s_tau,
        sqrt_s_x_m_rthz=sqrt_s_x,
        regime=regime,
    )


def measurement_time(
    sqrt_s_omega_rad_per_s_rthz: float,
    signal_rad_per_s: float,
    target_rel_err: float,
) -> float:
    """Averaging time (s) to resolve `signal` at the given relative error:
    T = (sqrt_S / (signal * rel_err))^2."""
    if sqrt_s_omega_rad_per_s_rthz < 0.0:
        raise ValidationError("noise density must be >= 0")
    if signal_rad_per_s <= 0.0:
        raise ValidationError(f"signal must be positive, got {signal_rad_per_s}")
    if not (0.0 < target_rel_err < 1.0):
        raise ValidationError(f"target relative error must be in (0, 1), got {target_rel_err}")
    return (sqrt_s_omega_rad_per_s_rthz / (signal_rad_per_s * target_rel_err)) ** 2


@dataclass(frozen=True)
class SweepSpec:
    """Grids for the loss-budget sweep; both must be positive and strictly
    increasing."""

    temperatures_K: tuple[float, ...]
    diaphragm_quality_factors: tuple[float, ...]

    def __post_init__(self):
        for name in ("temperatures_K", "diaphragm_quality_factors"):
            grid = tuple(float(v) for v in getattr(self, name))
            if len(grid) == 0:
                raise ValidationError(f"sweep grid {name} is empty")
            if any(v <= 0.0 for v in grid):
                raise ValidationError(f"sweep grid {name} must be positive")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValidationError(f"sweep grid {name} must be strictly increasing")
            object.__setattr__(self, name, grid)


@dataclass(frozen=True)
class SweepPoint:
    """One sweep row; `errata` holds the failure message for rows whose
    evaluation left the model's domain (values are then NaN)."""

    temperature_K: float
    diaphragm_quality: float
    include_fluid_losses: bool
    sqrt_s_omega_rad_per_s_rthz: float
    sqrt_s_tau_s_rthz: float
    quality_factor: float
    regime: str
    errata: str


def sweep(
    model: CircuitModel,
    op: OperatingPoint,
    spec: SweepSpec,
    include_fluid_losses: bool = True,
) -> list[SweepPoint]:
    """Noise floor over the (Q_d, T) grid, ordered by quality factor then
    temperature.  Domain failures of single rows are recorded in their
    errata field instead of aborting the sweep."""
    rows = []
    for q_d in spec.diaphragm_quality_factors:
        for t in spec.temperatures_K:
            point = OperatingPoint(op.phi0_rad, op.phi_amplitude_rad, t)
            try:
                report = noise_report(model, point, q_d, include_fluid_losses)
                rows.append(
                    SweepPoint(
                        temperature_K=t,
                        diaphragm_quality=q_d,
                        include_fluid_losses=include_fluid_losses,
                        sqrt_s_omega_rad_per_s_rthz=report.sqrt_s_omega_rad_per_s_rthz,
                        sqrt_s_tau_s_rthz=report.sqrt_s_tau_s_rthz,
                        quality_factor=report.quality_factor,
                        regime=report.regime,
                        errata="",
                    )
                )
            except DomainError as exc:
                rows.append(
                    SweepPoint(
                        temperature_K=t,
                        diaphragm_quality=q_d,
                        include_fluid_losses=include_fluid_losses,
                        sqrt_s_omega_rad_per_s_rthz=math.nan,
                        sqrt_s_tau_s_rthz=math.nan,
                        quality_factor=math.nan,
                        regime="",
                        errata=str(exc),
                    )
                )
    return rows
