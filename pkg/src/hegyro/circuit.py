"""Lumped hydrodynamic circuit of the single-junction superfluid loop.

The sensing cell is a torus of superfluid closed by a weak-link aperture
array and shunted by a soft diaphragm.  In mass-current convention
(current in kg/s, potential mu/m4 in J/kg) it maps onto an rf-SQUID-like
circuit: the tube is an inertial inductance, the diaphragm a capacitance,
the weak link a phase-dependent Josephson inductance, and three loss
channels enter as series resistances:

* `line_fluid_resistance`: phonon bulk attenuation along the tube,
* `junction_phonon_resistance`: phonon radiation at the aperture plane,
* `diaphragm_resistance`: mechanical loss of the diaphragm, set by its
  quality factor.

Everything here is static circuit sizing; noise budgets live in `noise`
and time-domain behavior in `dynamics`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .errors import DomainError, StabilityError, ValidationError
from .physconst import Constants, entropy_density

# cos(phi) below this is treated as the inductance singularity
_COS_SINGULARITY = 1e-12


@dataclass(frozen=True)
class GyrometerGeometry:
    """Cell geometry and junction strength.

    Attributes
    ----------
    pickup_area_m2 : float
        Area of the rotation pickup loop.
    line_length_m : float
        Tube length around the loop.
    line_cross_section_m2 : float
        Tube cross-section.
    diaphragm_area_m2 : float
        Diaphragm piston area.
    spring_constant_N_per_m : float
        Diaphragm restoring stiffness.
    diaphragm_resonance_hz : float
        Mechanical resonance of the bare diaphragm (its loss reference).
    diaphragm_quality_factor : float
        Mechanical quality factor of the diaphragm.
    critical_current_kg_per_s : float
        Josephson critical mass current of the weak link.
    """

    pickup_area_m2: float
    line_length_m: float
    line_cross_section_m2: float
    diaphragm_area_m2: float
    spring_constant_N_per_m: float
    diaphragm_resonance_hz: float
    diaphragm_quality_factor: float
    critical_current_kg_per_s: float

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValidationError(f"geometry field {name} must be finite and positive, got {value!r}")


@dataclass(frozen=True)
class OperatingPoint:
    """Static working point of the junction.

    phi0_rad is the static junction phase, phi_amplitude_rad the readout
    oscillation amplitude, temperature_K the bath temperature.  Stability
    of phi0 depends on the circuit's hysteresis parameter and is enforced
    by the model, not here.
    """

    phi0_rad: float
    phi_amplitude_rad: float
    temperature_K: float

    def __post_init__(self):
        if not (0.0 < self.phi0_rad < math.pi):
            raise ValidationError(f"phi0 = {self.phi0_rad} must lie in (0, pi)")
        if not (0.0 < self.phi_amplitude_rad < math.pi / 2.0):
            raise ValidationError(
                f"drive amplitude {self.phi_amplitude_rad} must lie in (0, pi/2)"
            )
        if not (self.temperature_K >= 0.0 and math.isfinite(self.temperature_K)):
            raise ValidationError(f"temperature {self.temperature_K} must be >= 0")


def aperture_critical_velocity(
    critical_current_kg_per_s: float, aperture_diameter_m: float, constants: Constants
) -> float:
    """Superfluid velocity at which a circular aperture carries the
    critical current: v = I_c / (rho * pi * (d/2)^2)."""
    if aperture_diameter_m <= 0.0:
        raise ValidationError(f"aperture diameter must be positive, got {aperture_diameter_m}")
    area = math.pi * (0.5 * aperture_diameter_m) ** 2
    return critical_current_kg_per_s / (constants.helium.density * area)


def static_phase(phase_bias_rad: float, hysteresis_beta: float) -> float:
    """Equilibrium junction phase for a given external phase bias.

    Solves phi + beta sin(phi) + bias = 0.  For beta < 1 the left side is
    strictly increasing, so the root is unique; at beta >= 1 the relation
    becomes multivalued (hysteretic) and this solver refuses it.
    """
    if not (0.0 < hysteresis_beta < 1.0):
        raise DomainError(
            f"static phase is single-valued only for hysteresis parameter in (0, 1), "
            f"got {hysteresis_beta}"
        )
    f = lambda phi: phi + hysteresis_beta * math.sin(phi) + phase_bias_rad
    lo = -phase_bias_rad - hysteresis_beta
    hi = -phase_bias_rad + hysteresis_beta
    if f(lo) > 0.0 or f(hi) < 0.0:  # degenerate bracket from roundoff
        return -phase_bias_rad
    return float(brentq(f, lo, hi, xtol=1e-15, rtol=8.9e-16))


@dataclass(frozen=True)
class CircuitModel:
    """Lumped-element model: geometry + material constants."""

    geometry: GyrometerGeometry
    constants: Constants

    # ------------------------------------------------------------ elements

    @property
    def line_inductance(self) -> float:
        """Inertial inductance of the tube, l / (rho a_l)."""
        g = self.geometry
        return g.line_length_m / (self.constants.helium.density * g.line_cross_section_m2)

    @property
    def diaphragm_capacitance(self) -> float:
        """Capacitance of the spring-loaded diaphragm, (a_d rho)^2 / k_d."""
        g = self.geometry
        return (g.diaphragm_area_m2 * self.constants.helium.density) ** 2 / g.spring_constant_N_per_m

    @property
    def josephson_inductance0(self) -> float:
        """Zero-phase Josephson inductance kappa4 / (2 pi I_c)."""
        return self.constants.circulation_quantum / (
            2.0 * math.pi * self.geometry.critical_current_kg_per_s
        )

    def josephson_inductance(self, phi_rad: float) -> float:
        """Phase-dependent junction inductance L_J0 / cos(phi).

        Negative values past phi = pi/2 are physical (the junction acts
        as an inverting element); the singularity itself is rejected.
        """
        c = math.cos(phi_rad)
        if abs(c) < _COS_SINGULARITY:
            raise DomainError(f"josephson inductance singular at phi = {phi_rad}")
        return self.josephson_inductance0 / c

    @property
    def hysteresis_beta(self) -> float:
        """Ratio of line to junction inductance; < 1 means single-valued."""
        return self.line_inductance / self.josephson_inductance0

    @property
    def bare_resonance_rad_per_s(self) -> float:
        """Helmholtz rate with the junction at zero phase, 1/sqrt(L_J0 C_d)."""
        return 1.0 / math.sqrt(self.josephson_inductance0 * self.diaphragm_capacitance)

    @property
    def diaphragm_omega_rad_per_s(self) -> float:
        return 2.0 * math.pi * self.geometry.diaphragm_resonance_hz

    # ------------------------------------------------------------ resonance

    def stability_margin(self, phi0_rad: float) -> float:
        """cos(phi0) + 1/beta; positive at any stable working point."""
        return math.cos(phi0_rad) + 1.0 / self.hysteresis_beta

    def _stable_margin(self, phi0_rad: float) -> float:
        u = self.stability_margin(phi0_rad)
        if u <= 0.0:
            raise StabilityError(
                f"phi0 = {phi0_rad} is beyond the stable branch "
                f"(cos phi0 + 1/beta = {u:.3e} <= 0)"
            )
        return u

    def helmholtz_frequency(self, phi0_rad: float) -> float:
        """Plasma (Helmholtz) angular frequency at the working point,
        omega_oo sqrt(cos phi0 + 1/beta)."""
        return self.bare_resonance_rad_per_s * math.sqrt(self._stable_margin(phi0_rad))

    def parallel_inductance(self, phi0_rad: float) -> float:
        """L_J(phi0) in parallel with the line, L_J0 / (cos phi0 + 1/beta)."""
        return self.josephson_inductance0 / self._stable_margin(phi0_rad)

    def phase_bias_for(self, phi0_rad: float) -> float:
        """External phase bias that pins the equilibrium at phi0:
        bias = -(phi0 + beta sin phi0)."""
        return -(phi0_rad + self.hysteresis_beta * math.sin(phi0_rad))

    # ------------------------------------------------------------ losses

    def line_fluid_resistance(self, temperature_K: float, omega_rad_per_s: float) -> float:
        """Series resistance of the tube from phonon bulk attenuation.

        R_l = (c1 / rho a_l) * (pi^3/60) (G+1)^2 / (rho hbar^3 c1^6)
              * (k_B T)^4 * omega * l

        scaling exactly as T^4 and linearly in the probe frequency.
        """
        hel = self.constants.helium
        if not (0.0 <= temperature_K <= hel.max_model_temperature):
            raise DomainError(
                f"temperature {temperature_K} K outside phonon model window "
                f"[0, {hel.max_model_temperature}] K"
            )
        if omega_rad_per_s < 0.0:
            raise ValidationError(f"omega must be >= 0, got {omega_rad_per_s}")
        g = self.geometry
        u = self.constants.universal
        char_impedance = hel.first_sound_speed / (hel.density * g.line_cross_section_m2)
        attenuation = (
            (math.pi**3 / 60.0)
            * (hel.gruneisen_constant + 1.0) ** 2
            / (hel.density * u.hbar**3 * hel.first_sound_speed**6)
            * (u.boltzmann_constant * temperature_K) ** 4
            * omega_rad_per_s
        )
        return char_impedance * attenuation * g.line_length_m

    def junction_phonon_resistance(self, temperature_K: float) -> float:
        """Series resistance of the weak link from phonon emission,
        sqrt(pi / a_l^3) l s(T) T / (2 rho^2 c1)."""
        g = self.geometry
        hel = self.constants.helium
        s = entropy_density(temperature_K, self.constants)
        return (
            math.sqrt(math.pi / g.line_cross_section_m2**3)
            * g.line_length_m
            * s
            * temperature_K
            / (2.0 * hel.density**2 * hel.first_sound_speed)
        )

    def diaphragm_resistance(self, quality_factor: float | None = None) -> float:
        """Series resistance of the diaphragm, 1 / (C_d omega_d Q_d)."""
        q = self.geometry.diaphragm_quality_factor if quality_factor is None else quality_factor
        if q <= 0.0:
            raise ValidationError(f"diaphragm quality factor must be positive, got {q}")
        return 1.0 / (self.diaphragm_capacitance * self.diaphragm_omega_rad_per_s * q)

    # ------------------------------------------------------------ impedance

    def branch_impedances(
        self, phi0_rad: float, temperature_K: float, omega_rad_per_s: float
    ) -> tuple[complex, complex]:
        """(Z_junction, Z_line) at the probe frequency, exact complex."""
        z_j = complex(
            self.junction_phonon_resistance(temperature_K),
            omega_rad_per_s * self.josephson_inductance(phi0_rad),
        )
        z_l = complex(
            self.line_fluid_resistance(temperature_K, omega_rad_per_s),
            omega_rad_per_s * self.line_inductance,
        )
        return z_j, z_l

    def parallel_branch_impedance(
        self, phi0_rad: float, temperature_K: float, omega_rad_per_s: float
    ) -> complex:
        """Junction and line in parallel, Z_J Z_l / (Z_J + Z_l)."""
        z_j, z_l = self.branch_impedances(phi0_rad, temperature_K, omega_rad_per_s)
        return z_j * z_l / (z_j + z_l)

    def total_resistance(
        self,
        phi0_rad: float,
        temperature_K: float,
        diaphragm_quality: float | None = None,
        omega_rad_per_s: float | None = None,
    ) -> float:
        """All loss channels as one series resistance at the probe
        frequency (defaults to the Helmholtz frequency of phi0)."""
        omega = self.helmholtz_frequency(phi0_rad) if omega_rad_per_s is None else omega_rad_per_s
        return self.diaphragm_resistance(diaphragm_quality) + self.parallel_branch_impedance(
            phi0_rad, temperature_K, omega
        ).real

    def quality_factor(
        self,
        phi0_rad: float,
        temperature_K: float,
        diaphragm_quality: float | None = None,
    ) -> float:
        """Loaded quality factor of the Helmholtz mode,
        omega_H L_par / R_total."""
        omega = self.helmholtz_frequency(phi0_rad)
        return (
            omega
            * self.parallel_inductance(phi0_rad)
            / self.total_resistance(phi0_rad, temperature_K, diaphragm_quality)
        )

    # ------------------------------------------------------------ reporting

    def diagnostics(self, op: OperatingPoint) -> dict[str, float]:
        """Flat key-value dump of every lumped element at a working point."""
        phi0 = op.phi0_rad
        t = op.temperature_K
        omega_h = self.helmholtz_frequency(phi0)
        r_line = self.line_fluid_resistance(t, omega_h)
        r_junction = self.junction_phonon_resistance(t)
        r_diaphragm = self.diaphragm_resistance()
        re_parallel = self.parallel_branch_impedance(phi0, t, omega_h).real
        r_total = r_diaphragm + re_parallel
        l_par = self.parallel_inductance(phi0)
        return {
            "line_inductance_m2_per_kg": self.line_inductance,
            "josephson_inductance0_m2_per_kg": self.josephson_inductance0,
            "josephson_inductance_m2_per_kg": self.josephson_inductance(phi0),
            "parallel_inductance_m2_per_kg": l_par,
            "diaphragm_capacitance_kg2_per_J": self.diaphragm_capacitance,
            "hysteresis_beta": self.hysteresis_beta,
            "stability_margin": self.stability_margin(phi0),
            "bare_resonance_rad_per_s": self.bare_resonance_rad_per_s,
            "helmholtz_rad_per_s": omega_h,
            "helmholtz_hz": omega_h / (2.0 * math.pi),
            "phase_bias_rad": self.phase_bias_for(phi0),
            "line_resistance_J_s_per_kg2": r_line,
            "junction_resistance_J_s_per_kg2": r_junction,
            "diaphragm_resistance_J_s_per_kg2": r_diaphragm,
            "parallel_branch_re_J_s_per_kg2": re_parallel,
            "total_resistance_J_s_per_kg2": r_total,
            "quality_factor": omega_h * l_par / r_total,
            "energy_decay_time_s": 2.0 * l_par / r_total,
        }
