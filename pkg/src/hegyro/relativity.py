"""Rotation-rate and interferometer-phase budget for a lab fixed on Earth.

A superfluid loop of pickup area A threaded by a rotation rate Omega picks
up a phase 2 (m4/hbar) Omega . A.  Beyond the kinematic Sagnac term from
the Earth spin, the post-Newtonian environment of the rotating Earth
contributes three small corrections: frame dragging (gravitomagnetic),
the geodetic term, and the Thomas term from the support acceleration of
the lab.  This module evaluates all of them as 3-vectors in an
Earth-centered frame, projects them onto the loop axis, and converts the
resulting phases into proper-time equivalents.

Two free parameters (`gamma`, `alpha1`) tag the metric terms so that
deviations from general relativity propagate through the budget; GR is
`gamma = 1`, `alpha1 = 0`.

Frame convention: z along the Earth spin axis, the lab position in the
x-z plane.  The loop axis direction is fixed by three angles:

* theta: loop axis vs Earth spin axis,
* chi:   local vertical vs Earth spin axis (geographic colatitude),
* psi:   loop axis vs local vertical.

A triple (theta, chi, psi) is realizable only if the Gram matrix of the
three directions is positive semidefinite; `Orientation` enforces that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .physconst import Constants, newtonian_potential_at_surface

# tolerance on the Gram determinant: exactly coplanar direction triples
# land at -1e-16 in floats and must be accepted
_GRAM_TOL = 1e-9

_DEFAULT_CONTOUR_SEGMENTS = 10_000


@dataclass(frozen=True)
class Orientation:
    """Mutual angles (rad) between loop axis, Earth spin axis and vertical."""

    theta_rad: float
    chi_rad: float
    psi_rad: float

    def __post_init__(self):
        for name in ("theta_rad", "chi_rad", "psi_rad"):
            value = getattr(self, name)
            if not (0.0 <= value <= math.pi):
                raise ValidationError(f"orientation angle {name} = {value} not in [0, pi]")
        if self.gram_determinant() < -_GRAM_TOL:
            raise DomainError(
                f"orientation (theta={self.theta_rad}, chi={self.chi_rad}, "
                f"psi={self.psi_rad}) is not realizable by any direction triple"
            )

    @classmethod
    def from_degrees(cls, theta_deg: float, chi_deg: float, psi_deg: float) -> "Orientation":
        return cls(math.radians(theta_deg), math.radians(chi_deg), math.radians(psi_deg))

    def gram_determinant(self) -> float:
        """det of the Gram matrix of the three unit directions.

        With pairwise cosines a = cos(theta) (axis.spin), b = cos(chi)
        (vertical.spin), c = cos(psi) (axis.vertical):

            det = 1 + 2abc - a^2 - b^2 - c^2

        Nonnegative iff some triple of unit vectors has these angles.
        """
        a = math.cos(self.theta_rad)
        b = math.cos(self.chi_rad)
        c = math.cos(self.psi_rad)
        return 1.0 + 2.0 * a * b * c - a * a - b * b - c * c


@dataclass(frozen=True)
class PPNParams:
    """Parametrized post-Newtonian coefficients entering the budget."""

    gamma: float = 1.0
    alpha1: float = 0.0


@dataclass(frozen=True, eq=False)
class LabKinematics:
    """State of the lab in the Earth-centered frame.

    `proper_acceleration_m_per_s2` is the support force per unit mass
    (gravity reaction plus centripetal correction), the acceleration that
    sources the Thomas term.
    """

    position_m: np.ndarray
    velocity_m_per_s: np.ndarray
    proper_acceleration_m_per_s2: np.ndarray


@dataclass(frozen=True, eq=False)
class PrecessionRates:
    """Rotation-rate 3-vectors (rad/s) seen by the lab, plus the scalar
    residual coefficient of the radial metric term (1/m, identically zero
    for a surface lab whose velocity is horizontal)."""

    earth_rotation_rad_per_s: np.ndarray
    frame_dragging_rad_per_s: np.ndarray
    geodetic_rad_per_s: np.ndarray
    thomas_rad_per_s: np.ndarray
    total_rotation_rad_per_s: np.ndarray
    k_coeff_per_m: float


@dataclass(frozen=True)
class PhaseBudget:
    """Static interferometer phases (rad) and proper-time equivalents (s).

    `sagnac_scale_rad` is the full-turn scale 2 (m4/hbar) Omega_E A that
    multiplies every orientation factor.
    """

    sagnac_rad: float
    frame_dragging_rad: float
    geodetic_rad: float
    thomas_rad: float
    total_rad: float
    dtau_sagnac_s: float
    dtau_frame_dragging_s: float
    dtau_geodetic_s: float
    dtau_thomas_s: float
    dtau_total_s: float
    sagnac_scale_rad: float


@dataclass(frozen=True)
class OrientationSensitivity:
    """Leading-order sensitivity of the big kinematic phase to theta."""

    dphi_dtheta_rad: float
    theta_tolerance_rad: float


def pickup_axis(orient: Orientation) -> np.ndarray:
    """Unit vector of the loop axis in the Earth-centered frame.

    Component along the spin axis is cos(theta); the in-plane component
    follows from the angle to the vertical; the out-of-plane component is
    fixed up to sign by normalization and chosen nonnegative.  Raises
    DomainError if no unit vector matches the angles (degenerate with the
    Gram criterion, but guarded independently for roundoff).
    """
    ct, cc, cp = (
        math.cos(orient.theta_rad),
        math.cos(orient.chi_rad),
        math.cos(orient.psi_rad),
    )
    sc = math.sin(orient.chi_rad)
    if abs(sc) < 1e-15:
        # vertical parallel to spin axis: theta and psi must agree and any
        # azimuth works, take the x-z plane
        return np.array([math.sin(orient.theta_rad), 0.0, ct])
    a1 = (cp - ct * cc) / sc
    a2_sq = 1.0 - a1 * a1 - ct * ct
    if a2_sq < -_GRAM_TOL:
        raise DomainError("orientation angles admit no unit loop axis")
    return np.array([a1, math.sqrt(max(0.0, a2_sq)), ct])


def vertical_axis(orient: Orientation) -> np.ndarray:
    """Unit vector of the local vertical (outward radial direction)."""
    return np.array([math.sin(orient.chi_rad), 0.0, math.cos(orient.chi_rad)])


def lab_kinematics(orient: Orientation, constants: Constants) -> LabKinematics:
    """Position, velocity and proper acceleration of the surface lab.

    r = R rhat, v = Omega_E x r, and the support acceleration

        a = (G M / r^3) r + Omega_E x v

    i.e. the reaction to gravity plus the centripetal term.
    """
    earth = constants.earth
    omega_vec = np.array([0.0, 0.0, earth.rotation_rate])
    position = earth.mean_radius * vertical_axis(orient)
    velocity = np.cross(omega_vec, position)
    gm = constants.universal.gravitational_constant * earth.mass
    acceleration = gm / earth.mean_radius**3 * position + np.cross(omega_vec, velocity)
    return LabKinematics(position, velocity, acceleration)


def precession_rates(
    orient: Orientation, ppn: PPNParams, constants: Constants
) -> PrecessionRates:
    """Evaluate the three post-Newtonian rotation rates at the lab.

    frame dragging:  (1 + gamma + alpha1/4) (G M R^2 / 5 c^2 r^3)
                     [3 (Omega_E . rhat) rhat - Omega_E]
    geodetic:        ((2 gamma + 1) / 2) (G M / c^2 r^3) (r x v)
    Thomas:          (a x v) / (2 c^2)

    The residual radial-term coefficient is

        k = (gamma / c^3) (v . grad U),   grad U = -(G M / r^2) rhat

    which vanishes for a surface lab (v perpendicular to rhat).  The total
    rate seen by the interferometer is Omega_E minus the three corrections.
    """
    kin = lab_kinematics(orient, constants)
    earth = constants.earth
    c = constants.universal.speed_of_light
    gm = constants.universal.gravitational_constant * earth.mass
    r = earth.mean_radius
    omega_vec = np.array([0.0, 0.0, earth.rotation_rate])
    rhat = vertical_axis(orient)

    fd_prefactor = (1.0 + ppn.gamma + ppn.alpha1 / 4.0) * gm * r**2 / (5.0 * c**2 * r**3)
    frame_dragging = fd_prefactor * (3.0 * float(omega_vec @ rhat) * rhat - omega_vec)

    geodetic = (
        (2.0 * ppn.gamma + 1.0)
        / 2.0
        * gm
        / (c**2 * r**3)
        * np.cross(kin.position_m, kin.velocity_m_per_s)
    )

    thomas = np.cross(kin.proper_acceleration_m_per_s2, kin.velocity_m_per_s) / (2.0 * c**2)

    k_coeff = ppn.gamma / c**3 * float(
        kin.velocity_m_per_s @ (-gm / r**2 * rhat)
    )

    total = omega_vec - frame_dragging - geodetic - thomas
    return PrecessionRates(
        earth_rotation_rad_per_s=omega_vec,
        frame_dragging_rad_per_s=frame_dragging,
        geodetic_rad_per_s=geodetic,
        thomas_rad_per_s=thomas,
        total_rotation_rad_per_s=total,
        k_coeff_per_m=k_coeff,
    )


def proper_time_equivalent(phi_rad: float, constants: Constants) -> float:
    """Proper-time offset (s) equivalent to a junction phase (rad):
    dtau = hbar phi / (m4 c^2)."""
    u = constants.universal
    return u.hbar * phi_rad / (constants.helium.atom_mass * u.speed_of_light**2)


def _budget_from_projections(
    projections: dict, scale: float, constants: Constants
) -> PhaseBudget:
    total = sum(projections.values())
    dtau = {k: proper_time_equivalent(v, constants) for k, v in projections.items()}
    return PhaseBudget(
        sagnac_rad=projections["sagnac"],
        frame_dragging_rad=projections["frame_dragging"],
        geodetic_rad=projections["geodetic"],
        thomas_rad=projections["thomas"],
        total_rad=total,
        dtau_sagnac_s=dtau["sagnac"],
        dtau_frame_dragging_s=dtau["frame_dragging"],
        dtau_geodetic_s=dtau["geodetic"],
        dtau_thomas_s=dtau["thomas"],
        dtau_total_s=proper_time_equivalent(total, constants),
        sagnac_scale_rad=scale,
    )


def phase_budget(
    orient: Orientation,
    pickup_area_m2: float,
    ppn: PPNParams,
    constants: Constants,
) -> PhaseBudget:
    """Static phase offset of the loop, split by physical origin.

    The loop reads phi = -2 (m4/hbar) Omega_tot . A with
    Omega_tot = Omega_E - Omega_fd - Omega_g - Omega_t, so the Earth spin
    enters with a minus sign and each correction term with a plus sign.
    """
    if pickup_area_m2 <= 0.0:
        raise ValidationError(f"pickup area must be positive, got {pickup_area_m2}")
    rates = precession_rates(orient, ppn, constants)
    axis = pickup_axis(orient)
    u = constants.universal
    two_m_area = 2.0 * constants.helium.atom_mass * pickup_area_m2 / u.hbar
    projections = {
        "sagnac": -two_m_area * float(rates.earth_rotation_rad_per_s @ axis),
        "frame_dragging": two_m_area * float(rates.frame_dragging_rad_per_s @ axis),
        "geodetic": two_m_area * float(rates.geodetic_rad_per_s @ axis),
        "thomas": two_m_area * float(rates.thomas_rad_per_s @ axis),
    }
    scale = two_m_area * constants.earth.rotation_rate
    return _budget_from_projections(projections, scale, constants)


def radial_field_loop_integral(
    k_coeff_per_m: float,
    pickup_area_m2: float,
    constants: Constants,
    n_segments: int = _DEFAULT_CONTOUR_SEGMENTS,
) -> float:
    """Discrete loop integral of the radial metric term, as a phase (rad).

    phi_k = -(m4/hbar) c k * sum R_mid . dR over a closed polygon.  The
    summand is a total differential of R^2/2, so the sum telescopes to
    zero exactly (up to float cancellation) for any closed contour; kept
    as a separate entry point so that null property is testable with a
    synthetic nonzero k.
    """
    radius = math.sqrt(pickup_area_m2 / math.pi)
    angles = np.linspace(0.0, 2.0 * math.pi, n_segments + 1)
    points = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    mid = 0.5 * (points[:-1] + points[1:])
    seg = np.diff(points, axis=0)
    total = float(np.sum(mid[:, 0] * seg[:, 0] + mid[:, 1] * seg[:, 1]))
    u = constants.universal
    m_over_hbar = constants.helium.atom_mass / u.hbar
    return -m_over_hbar * u.speed_of_light * k_coeff_per_m * total


def phase_budget_by_contour(
    orient: Orientation,
    pickup_area_m2: float,
    ppn: PPNParams,
    constants: Constants,
    n_segments: int = _DEFAULT_CONTOUR_SEGMENTS,
) -> PhaseBudget:
    """Phase budget by midpoint-rule quadrature around the physical loop.

    Independent cross-check of `phase_budget`: the loop is modeled as an
    inscribed regular n-gon of the same area-defining radius in the plane
    normal to the pickup axis, and each rotation-rate field Omega
    contributes sum (Omega x R_mid) . dR.  For uniform fields the polygon
    sum is exact up to the inscribed-area deficit, which scales as n^-2.
    The radial metric term is included via `radial_field_loop_integral`
    and contributes zero on a closed loop.
    """
    if pickup_area_m2 <= 0.0:
        raise ValidationError(f"pickup area must be positive, got {pickup_area_m2}")
    if n_segments < 3:
        raise ValidationError(f"contour needs at least 3 segments, got {n_segments}")
    rates = precession_rates(orient, ppn, constants)
    axis = pickup_axis(orient)

    # orthonormal in-plane basis
    helper = np.array([1.0, 0.0, 0.0])
    if abs(float(helper @ axis)) > 0.9:
        helper = np.array([0.0, 1.0, 0.0])
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)

    radius = math.sqrt(pickup_area_m2 / math.pi)
    angles = np.linspace(0.0, 2.0 * math.pi, n_segments + 1)
    points = radius * (
        np.outer(np.cos(angles), e1) + np.outer(np.sin(angles), e2)
    )
    mid = 0.5 * (points[:-1] + points[1:])
    seg = np.diff(points, axis=0)

    u = constants.universal
    m_over_hbar = constants.helium.atom_mass / u.hbar

    def loop_sum(field: np.ndarray) -> float:
        return float(np.einsum("ij,ij->", np.cross(field, mid), seg))

    projections = {
        "sagnac": -m_over_hbar * loop_sum(rates.earth_rotation_rad_per_s),
        "frame_dragging": m_over_hbar * loop_sum(rates.frame_dragging_rad_per_s),
        "geodetic": m_over_hbar * loop_sum(rates.geodetic_rad_per_s),
        "thomas": m_over_hbar * loop_sum(rates.thomas_rad_per_s),
    }
    projections["thomas"] += radial_field_loop_integral(
        rates.k_coeff_per_m, pickup_area_m2, constants, n_segments
    )
    scale = 2.0 * constants.helium.atom_mass * pickup_area_m2 / u.hbar * constants.earth.rotation_rate
    return _budget_from_projections(projections, scale, constants)


def orientation_sensitivity(
    orient: Orientation,
    pickup_area_m2: float,
    ppn: PPNParams,
    constants: Constants,
) -> OrientationSensitivity:
    """How fast the kinematic phase moves with theta, and the theta
    tolerance at which that drift equals the frame-dragging phase.

    The kinematic term is phi_s = -scale cos(theta), so
    d phi_s / d theta = scale sin(theta); the tolerance is
    |phi_fd| / |d phi_s / d theta| (infinite at the poles of theta where
    the kinematic term is stationary).
    """
    budget = phase_budget(orient, pickup_area_m2, ppn, constants)
    dphi_dtheta = budget.sagnac_scale_rad * math.sin(orient.theta_rad)
    if dphi_dtheta == 0.0:
        tolerance = math.inf
    else:
        tolerance = abs(budget.frame_dragging_rad) / abs(dphi_dtheta)
    return OrientationSensitivity(dphi_dtheta_rad=dphi_dtheta, theta_tolerance_rad=tolerance)
