"""Time-domain integration of the junction-loop-diaphragm circuit.

State per trial is the junction phase phi and the displaced mass q on the
diaphragm.  In mass-current convention the equations of motion are

    dq/dt          = I_tot(phi)
    (hbar/m4) dphi/dt = -( q/C_d + R_tot I_tot(phi) - mu_noise )

with the total branch current

    I_tot(phi) = I_c sin(phi) + (hbar/m4) (phi + bias) / L_l

whose zero reproduces the static relation phi + beta sin(phi) + bias = 0.
The conservative part is integrated with a leapfrog (kick-drift-kick)
splitting, which is symplectic for the circuit Hamiltonian

    H = q^2 / 2 C_d + (hbar/m4) I_c (1 - cos phi)
        + (hbar/m4)^2 (phi + bias)^2 / 2 L_l

so lossless runs conserve energy to a bounded roundoff-level wobble.
Dissipation and the Langevin kick enter as a separate substep per time
step; the thermal drive is white with one-sided PSD S_mu = 4 k_B T R_tot,
which discretizes to a per-step variance of S_mu / (2 dt), i.e.
stationary energy k_B T / 2 per quadrature.

The module also provides the readout chain used by the design study:
fit a ringdown for the mode frequency, invert the frequency for the
working-point phase, the phase for the flux bias, and the bias for the
rotation rate; `monte_carlo` runs trial ensembles of that chain to
cross-check the analytic noise floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .circuit import CircuitModel, OperatingPoint, static_phase
from .errors import DomainError, SimulationAbort, ValidationError

# hard floor on time resolution: steps per Helmholtz period
_MIN_STEPS_PER_PERIOD = 200
# minimum run length in Helmholtz periods
_MIN_PERIODS = 20
# per-step phase jump that flags a blown-up trial
_BLOWUP_STEP_RAD = math.pi
# acceptable fraction of blown-up trials in an ensemble
_MAX_ABORT_FRACTION = 0.01
_NOISE_CHUNK_STEPS = 4096


@dataclass(frozen=True)
class SimConfig:
    """Run settings for `simulate` and `monte_carlo`.

    noise_scale multiplies the physical thermal PSD: 0 is noiseless, 1 is
    the physical bath, large values produce a deliberately inflated bath
    for desk-scale statistics.  phase_bias_offset_rad adds a synthetic
    flux bias (a rotation-equivalent signal) on top of the working-point
    bias.  total_resistance_override_J_s_per_kg2 replaces the circuit's
    loss sum (0.0 switches dissipation off entirely); None keeps it.
    """

    duration_s: float
    dt_s: float
    seed: int = 0
    n_trials: int = 1
    decimation: int = 1
    impulse_amplitude_rad: float = 0.0
    noise_scale: float = 0.0
    phase_bias_offset_rad: float = 0.0
    total_resistance_override_J_s_per_kg2: float | None = None

    def __post_init__(self):
        if not (self.duration_s > 0.0 and math.isfinite(self.duration_s)):
            raise ValidationError(f"duration must be positive, got {self.duration_s}")
        if not (self.dt_s > 0.0 and math.isfinite(self.dt_s)):
            raise ValidationError(f"dt must be positive, got {self.dt_s}")
        if not (isinstance(self.n_trials, int) and self.n_trials >= 1):
            raise ValidationError(f"n_trials must be an integer >= 1, got {self.n_trials}")
        if not (isinstance(self.decimation, int) and self.decimation >= 1):
            raise ValidationError(f"decimation must be an integer >= 1, got {self.decimation}")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise ValidationError(f"seed must be a nonnegative integer, got {self.seed}")
        if not (0.0 <= self.impulse_amplitude_rad < math.pi / 2.0):
            raise ValidationError(
                f"impulse amplitude {self.impulse_amplitude_rad} must lie in [0, pi/2)"
            )
        if self.noise_scale < 0.0:
            raise ValidationError(f"noise_scale must be >= 0, got {self.noise_scale}")
        override = self.total_resistance_override_J_s_per_kg2
        if override is not None and override < 0.0:
            raise ValidationError(f"resistance override must be >= 0, got {override}")


@dataclass(frozen=True, eq=False)
class SimResult:
    """Decimated trajectories (first trial) plus the full trial ensemble.

    all_phi_rad and all_charge_kg have shape (n_samples, n_trials);
    columns of blown-up trials are NaN from the blow-up step onward.
    """

    time_s: np.ndarray
    phi_rad: np.ndarray
    charge_kg: np.ndarray
    position_m: np.ndarray
    energy_J: np.ndarray
    all_phi_rad: np.ndarray
    all_charge_kg: np.ndarray
    omega_h_rad_per_s: float
    total_resistance_J_s_per_kg2: float
    phase_bias_rad: float
    equilibrium_phi_rad: float
    aborted_trials: int


@dataclass(frozen=True)
class RingdownFit:
    """Decaying-sinusoid fit y = offset + exp(-kappa t)(a cos + b sin)."""

    omega_rad_per_s: float
    decay_rate_per_s: float
    amplitude_rad: float
    offset_rad: float
    residual_rms: float


@dataclass(frozen=True, eq=False)
class MonteCarloResult:
    """Ensemble ringdown statistics vs the analytic noise floor."""

    n_trials: int
    n_aborted: int
    trial_duration_s: float
    noise_scale: float
    omega_mean_rad_per_s: float
    omega_std_rad_per_s: float
    rotation_noise_density_rad_per_s_rthz: float
    analytic_density_rad_per_s_rthz: float
    density_ratio: float
    trial_omega_rad_per_s: np.ndarray
    trial_rotation_rad_per_s: np.ndarray


class _Params:
    """Scalar ingredients of the update rule, precomputed once."""

    def __init__(self, model: CircuitModel, op: OperatingPoint, config: SimConfig):
        u = model.constants.universal
        self.hbar_over_m = u.hbar / model.constants.helium.atom_mass
        self.m_over_hbar = 1.0 / self.hbar_over_m
        self.ic = model.geometry.critical_current_kg_per_s
        self.c_d = model.diaphragm_capacitance
        self.line_coeff = self.hbar_over_m / model.line_inductance
        self.bias = model.phase_bias_for(op.phi0_rad) + config.phase_bias_offset_rad
        self.phi_eq = static_phase(self.bias, model.hysteresis_beta)
        self.omega_h = model.helmholtz_frequency(self.phi_eq)
        self.l_par = model.parallel_inductance(self.phi_eq)
        override = config.total_resistance_override_J_s_per_kg2
        if override is None:
            self.r_tot = model.total_resistance(
                op.phi0_rad, op.temperature_K, omega_rad_per_s=self.omega_h
            )
        else:
            self.r_tot = override
        # per-step Langevin kick on phi: variance (m/hbar)^2 S_mu dt / 2
        psd = 4.0 * u.boltzmann_constant * op.temperature_K * self.r_tot * config.noise_scale
        self.noise_std = self.m_over_hbar * math.sqrt(0.5 * psd * config.dt_s)
        self.impulse_charge = (
            config.impulse_amplitude_rad
            * self.hbar_over_m
            * math.sqrt(self.c_d / self.l_par)
        )

    def current(self, phi):
        return self.ic * np.sin(phi) + self.line_coeff * (phi + self.bias)

    def current_scalar(self, phi: float) -> float:
        return self.ic * math.sin(phi) + self.line_coeff * (phi + self.bias)

    def energy(self, phi, charge):
        josephson = self.hbar_over_m * self.ic * (1.0 - np.cos(phi))
        line = 0.5 * self.line_coeff * self.hbar_over_m * (phi + self.bias) ** 2
        return charge**2 / (2.0 * self.c_d) + josephson + line


def _validate_against_mode(config: SimConfig, omega_h: float):
    period = 2.0 * math.pi / omega_h
    if config.dt_s > period / _MIN_STEPS_PER_PERIOD:
        raise ValidationError(
            f"dt = {config.dt_s} too coarse: need <= {period / _MIN_STEPS_PER_PERIOD:.3e} s "
            f"({_MIN_STEPS_PER_PERIOD} steps per period)"
        )
    if config.duration_s < _MIN_PERIODS * period:
        raise ValidationError(
            f"duration = {config.duration_s} too short: need >= {_MIN_PERIODS * period:.3e} s "
            f"({_MIN_PERIODS} periods)"
        )


def _integrate_scalar(p: _Params, config: SimConfig, rng) -> tuple:
    """Single-trial float loop; fast path for long noiseless runs."""
    n_steps = int(round(config.duration_s / config.dt_s))
    dt = config.dt_s
    half = 0.5 * dt
    drift = dt * p.m_over_hbar / p.c_d
    damp = dt * p.m_over_hbar * p.r_tot
    noisy = p.noise_std > 0.0
    noise_std = p.noise_std
    dissipative = p.r_tot > 0.0
    decim = config.decimation
    sin = math.sin
    ic, line_coeff, bias = p.ic, p.line_coeff, p.bias
    normal = rng.standard_normal

    phi = p.phi_eq
    q = p.impulse_charge
    out_phi = [phi]
    out_q = [q]
    for k in range(1, n_steps + 1):
        i_tot = ic * sin(phi) + line_coeff * (phi + bias)
        q_half = q + half * i_tot
        phi_new = phi - drift * q_half
        i_new = ic * sin(phi_new) + line_coeff * (phi_new + bias)
        q = q_half + half * i_new
        if dissipative:
            phi_new -= damp * i_new
        if noisy:
            phi_new += noise_std * normal()
        if abs(phi_new - phi) > _BLOWUP_STEP_RAD:
            raise SimulationAbort(
                f"trajectory blew up at step {k} (|dphi| = {abs(phi_new - phi):.3e} rad)"
            )
        phi = phi_new
        if k % decim == 0:
            out_phi.append(phi)
            out_q.append(q)
    phi_arr = np.array(out_phi)[:, None]
    q_arr = np.array(out_q)[:, None]
    return phi_arr, q_arr, 0


def _integrate_vector(p: _Params, config: SimConfig, rng) -> tuple:
    """Trial-ensemble loop on (n_trials,) arrays with chunked noise."""
    n_steps = int(round(config.duration_s / config.dt_s))
    n_trials = config.n_trials
    dt = config.dt_s
    half = 0.5 * dt
    drift = dt * p.m_over_hbar / p.c_d
    damp = dt * p.m_over_hbar * p.r_tot
    noisy = p.noise_std > 0.0
    dissipative = p.r_tot > 0.0
    decim = config.decimation
    ic, line_coeff, bias = p.ic, p.line_coeff, p.bias

    phi = np.full(n_trials, p.phi_eq)
    q = np.full(n_trials, p.impulse_charge)
    n_out = n_steps // decim + 1
    out_phi = np.empty((n_out, n_trials))
    out_q = np.empty((n_out, n_trials))
    out_phi[0] = phi
    out_q[0] = q
    aborted = np.zeros(n_trials, dtype=bool)

    row = 1
    noise_block = None
    block_top = 0
    for k in range(1, n_steps + 1):
        i_tot = ic * np.sin(phi) + line_coeff * (phi + bias)
        q_half = q + half * i_tot
        phi_new = phi - drift * q_half
        i_new = ic * np.sin(phi_new) + line_coeff * (phi_new + bias)
        q = q_half + half * i_new
        if dissipative:
            phi_new -= damp * i_new
        if noisy:
            if k > block_top:
                count = min(_NOISE_CHUNK_STEPS, n_steps - block_top)
                noise_block = rng.standard_normal((count, n_trials))
                block_base = block_top
                block_top += count
            phi_new += p.noise_std * noise_block[k - 1 - block_base]
        fresh = np.abs(phi_new - phi) > _BLOWUP_STEP_RAD
        if fresh.any():
            aborted |= fresh
            phi_new[fresh] = np.nan
            q[fresh] = np.nan
        phi = phi_new
        if k % decim == 0:
            out_phi[row] = phi
            out_q[row] = q
            row += 1
    return out_phi, out_q, int(aborted.sum())


def _run(model: CircuitModel, op: OperatingPoint, config: SimConfig):
    p = _Params(model, op, config)
    _validate_against_mode(config, p.omega_h)
    rng = np.random.default_rng(config.seed)
    if config.n_trials == 1:
        phi, q, n_aborted = _integrate_scalar(p, config, rng)
    else:
        phi, q, n_aborted = _integrate_vector(p, config, rng)
    n_out = phi.shape[0]
    time = np.arange(n_out) * (config.dt_s * config.decimation)
    return p, time, phi, q, n_aborted


def simulate(model: CircuitModel, op: OperatingPoint, config: SimConfig) -> SimResult:
    """Integrate the circuit and return decimated trajectories.

    Deterministic: the same (model, op, config) including the seed gives
    bit-identical output.  A phase jump above pi in one step aborts the
    run with SimulationAbort.
    """
    p, time, phi, q, n_aborted = _run(model, op, config)
    if n_aborted > 0:
        raise SimulationAbort(f"{n_aborted} of {config.n_trials} trials blew up")
    rho_area = model.constants.helium.density * model.geometry.diaphragm_area_m2
    return SimResult(
        time_s=time,
        phi_rad=phi[:, 0].copy(),
        charge_kg=q[:, 0].copy(),
        position_m=q[:, 0] / rho_area,
        energy_J=p.energy(phi[:, 0], q[:, 0]),
        all_phi_rad=phi,
        all_charge_kg=q,
        omega_h_rad_per_s=p.omega_h,
        total_resistance_J_s_per_kg2=p.r_tot,
        phase_bias_rad=p.bias,
        equilibrium_phi_rad=p.phi_eq,
        aborted_trials=0,
    )


def fit_ringdown(
    time_s: np.ndarray,
    phi_rad: np.ndarray,
    omega_guess_rad_per_s: float,
    decay_guess_per_s: float = 0.0,
) -> RingdownFit:
    """Least-squares fit of offset + exp(-kappa t)(a cos wt + b sin wt)."""
    t = np.asarray(time_s, dtype=float)
    y = np.asarray(phi_rad, dtype=float)
    if t.shape != y.shape or t.size < 8:
        raise ValidationError("ringdown fit needs matching arrays of at least 8 samples")
    offset0 = float(np.mean(y))
    a0 = float(y[0] - offset0)
    spread = 0.5 * float(np.max(y) - np.min(y))
    if abs(a0) < 0.1 * spread:
        a0 = spread

    def residual(params):
        offset, a, b, omega, kappa = params
        envelope = np.exp(-kappa * t)
        return offset + envelope * (a * np.cos(omega * t) + b * np.sin(omega * t)) - y

    sol = least_squares(
        residual,
        x0=(offset0, a0, 0.0, omega_guess_rad_per_s, decay_guess_per_s),
        method="lm",
    )
    offset, a, b, omega, kappa = sol.x
    return RingdownFit(
        omega_rad_per_s=float(abs(omega)),
        decay_rate_per_s=float(kappa),
        amplitude_rad=float(math.hypot(a, b)),
        offset_rad=float(offset),
        residual_rms=float(np.sqrt(np.mean(sol.fun**2))),
    )


def phase_from_frequency(omega_rad_per_s: float, model: CircuitModel) -> float:
    """Invert omega_H(phi0): phi0 = arccos((omega/omega_oo)^2 - 1/beta)."""
    arg = (omega_rad_per_s / model.bare_resonance_rad_per_s) ** 2 - 1.0 / model.hysteresis_beta
    if not (-1.0 <= arg <= 1.0):
        raise DomainError(
            f"frequency {omega_rad_per_s} rad/s maps outside the junction's phase range"
        )
    return math.acos(arg)


def rotation_from_ringdown(
    omega_rad_per_s: float, model: CircuitModel, reference_bias_rad: float
) -> float:
    """Full readout chain: mode frequency -> working-point phase -> flux
    bias -> rotation rate relative to the reference bias.

    Rotation maps to bias as dbias = -2 (m4/hbar) A Omega_n, so
    Omega_n = -(hbar / 2 m4 A) (bias - bias_ref).  Exact (no
    linearization), hence usable for large synthetic signals too.
    """
    phi0 = phase_from_frequency(omega_rad_per_s, model)
    bias = -(phi0 + model.hysteresis_beta * math.sin(phi0))
    u = model.constants.universal
    scale = u.hbar / (
        2.0 * model.constants.helium.atom_mass * model.geometry.pickup_area_m2
    )
    return -scale * (bias - reference_bias_rad)


def monte_carlo(model: CircuitModel, op: OperatingPoint, config: SimConfig) -> MonteCarloResult:
    """Trial ensemble of the full readout chain against the thermal bath.

    Each trial rings the mode with the configured impulse, evolves it in
    the (possibly inflated) bath, fits the ringdown frequency, and runs
    the frequency back to a rotation estimate.  The scatter of those
    estimates, scaled by sqrt(2 T_trial), is the ensemble's
    rotation-noise density, reported against the analytic floor for the
    same bath.  Needs at least 100 trials; aborts if more than 1% of
    trials blow up.
    """
    if config.n_trials < 100:
        raise ValidationError(f"monte_carlo needs n_trials >= 100, got {config.n_trials}")
    if config.impulse_amplitude_rad <= 0.0:
        raise ValidationError("monte_carlo needs a ringing impulse (impulse_amplitude_rad > 0)")
    p, time, phi, q, n_aborted = _run(model, op, config)
    if n_aborted > _MAX_ABORT_FRACTION * config.n_trials:
        raise SimulationAbort(
            f"{n_aborted} of {config.n_trials} trials blew up (> 1% tolerated)"
        )
    kappa_guess = p.r_tot / (2.0 * p.l_par)
    omegas = []
    rotations = []
    for j in range(config.n_trials):
        column = phi[:, j]
        if np.isnan(column[-1]):
            continue
        fit = fit_ringdown(time, column, p.omega_h, kappa_guess)
        omegas.append(fit.omega_rad_per_s)
        rotations.append(rotation_from_ringdown(fit.omega_rad_per_s, model, p.bias))
    omegas = np.array(omegas)
    rotations = np.array(rotations)
    omega_std = float(np.std(omegas, ddof=1))
    rotation_std = float(np.std(rotations, ddof=1))
    density = rotation_std * math.sqrt(2.0 * config.duration_s)

    # analytic floor for the same bath: thermal PSD scale applied to the
    # working-point formula, with the resistance actually simulated
    u = model.constants.universal
    q_h = p.omega_h * p.l_par / p.r_tot if p.r_tot > 0.0 else math.inf
    from .noise import working_point_factor

    eps = working_point_factor(p.phi_eq, model.hysteresis_beta)
    analytic = (
        (1.0 / model.geometry.pickup_area_m2)
        * math.sqrt(
            u.boltzmann_constant
            * op.temperature_K
            * config.noise_scale
            * model.josephson_inductance0
            / (q_h * model.bare_resonance_rad_per_s)
        )
        * eps
        / config.impulse_amplitude_rad
    )
    return MonteCarloResult(
        n_trials=config.n_trials,
        n_aborted=n_aborted,
        trial_duration_s=config.duration_s,
        noise_scale=config.noise_scale,
        omega_mean_rad_per_s=float(np.mean(omegas)),
        omega_std_rad_per_s=omega_std,
        rotation_noise_density_rad_per_s_rthz=density,
        analytic_density_rad_per_s_rthz=analytic,
        density_ratio=density / analytic if analytic > 0.0 else math.inf,
        trial_omega_rad_per_s=omegas,
        trial_rotation_rad_per_s=rotations,
    )
