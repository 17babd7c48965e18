"""Integrator, readout-chain, and Monte Carlo ensemble tests.

Tolerances here were calibrated against longer reference runs; the
configs are frozen so the suite stays fast and deterministic.
"""

import math

import numpy as np
import pytest

from hegyro.circuit import CircuitModel, OperatingPoint
from hegyro.dynamics import (
    MonteCarloResult,
    SimConfig,
    fit_ringdown,
    monte_carlo,
    phase_from_frequency,
    rotation_from_ringdown,
    simulate,
)
from hegyro.errors import DomainError, SimulationAbort, ValidationError
from hegyro.physconst import load_constants

from test_circuit import baseline_geometry


@pytest.fixture(scope="module")
def constants():
    return load_constants()


@pytest.fixture(scope="module")
def model(constants):
    return CircuitModel(baseline_geometry(), constants)


@pytest.fixture(scope="module")
def op():
    return OperatingPoint(phi0_rad=2.3, phi_amplitude_rad=0.2, temperature_K=0.010)


@pytest.fixture(scope="module")
def period(model):
    return 2.0 * math.pi / model.helmholtz_frequency(2.3)


def lossless(duration_s, dt_s, impulse, **kw):
    return SimConfig(
        duration_s=duration_s,
        dt_s=dt_s,
        impulse_amplitude_rad=impulse,
        total_resistance_override_J_s_per_kg2=0.0,
        **kw,
    )


class TestConfigValidation:
    def test_rejects_bad_scalars(self):
        good = dict(duration_s=1.0, dt_s=1e-4)
        with pytest.raises(ValidationError):
            SimConfig(duration_s=0.0, dt_s=1e-4)
        with pytest.raises(ValidationError):
            SimConfig(duration_s=1.0, dt_s=-1e-4)
        with pytest.raises(ValidationError):
            SimConfig(**good, n_trials=0)
        with pytest.raises(ValidationError):
            SimConfig(**good, decimation=0)
        with pytest.raises(ValidationError):
            SimConfig(**good, seed=-1)
        with pytest.raises(ValidationError):
            SimConfig(**good, impulse_amplitude_rad=-0.1)
        with pytest.raises(ValidationError):
            SimConfig(**good, impulse_amplitude_rad=math.pi / 2.0)
        with pytest.raises(ValidationError):
            SimConfig(**good, noise_scale=-1.0)
        with pytest.raises(ValidationError):
            SimConfig(**good, total_resistance_override_J_s_per_kg2=-5.0)

    def test_rejects_coarse_dt(self, model, op, period):
        cfg = SimConfig(duration_s=1.0, dt_s=period / 100.0)
        with pytest.raises(ValidationError, match="too coarse"):
            simulate(model, op, cfg)

    def test_rejects_short_run(self, model, op, period):
        cfg = SimConfig(duration_s=10.0 * period, dt_s=period / 300.0)
        with pytest.raises(ValidationError, match="too short"):
            simulate(model, op, cfg)


class TestDeterminism:
    def test_same_seed_bit_identical(self, model, op):
        cfg = SimConfig(
            duration_s=0.3, dt_s=5e-5, seed=42, n_trials=2, decimation=10,
            impulse_amplitude_rad=0.05, noise_scale=1e6,
        )
        a = simulate(model, op, cfg)
        b = simulate(model, op, cfg)
        assert np.array_equal(a.all_phi_rad, b.all_phi_rad)
        assert np.array_equal(a.all_charge_kg, b.all_charge_kg)

    def test_different_seed_differs(self, model, op):
        base = dict(
            duration_s=0.3, dt_s=5e-5, n_trials=2, decimation=10,
            impulse_amplitude_rad=0.05, noise_scale=1e6,
        )
        a = simulate(model, op, SimConfig(seed=1, **base))
        b = simulate(model, op, SimConfig(seed=2, **base))
        assert not np.array_equal(a.all_phi_rad, b.all_phi_rad)

    def test_scalar_and_vector_paths_agree(self, model, op, period):
        # noiseless, so the rng never fires and trials are exact clones
        one = simulate(model, op, lossless(0.4, period / 300.0, 0.1, decimation=7))
        many = simulate(model, op, lossless(0.4, period / 300.0, 0.1, n_trials=3, decimation=7))
        assert np.allclose(one.phi_rad, many.all_phi_rad[:, 0], rtol=1e-12, atol=0.0)
        assert np.allclose(one.charge_kg, many.all_charge_kg[:, 2], rtol=1e-12, atol=0.0)


class TestConservativeDynamics:
    def test_energy_drift_stays_below_budget(self, model, op, period):
        # symplectic splitting: energy wobbles but must not drift
        cfg = lossless(1000.0 * period, period / 1500.0, 0.2, decimation=100)
        res = simulate(model, op, cfg)
        e = res.energy_J - res.energy_J[0]
        mean_e = float(np.mean(res.energy_J))
        slope = np.polyfit(res.time_s, e, 1)[0]
        rel_drift = abs(slope) * cfg.duration_s / mean_e
        assert rel_drift < 1e-8
        assert np.max(np.abs(e)) / mean_e < 1e-6

    def test_small_amplitude_frequency_matches_mode(self, model, op, period):
        cfg = lossless(60.0 * period, period / 500.0, 0.005)
        res = simulate(model, op, cfg)
        fit = fit_ringdown(res.time_s, res.phi_rad, res.omega_h_rad_per_s)
        assert fit.omega_rad_per_s == pytest.approx(res.omega_h_rad_per_s, rel=1e-3)

    def test_impulse_sets_diaphragm_amplitude(self, model, op, period, constants):
        cfg = lossless(0.3, period / 400.0, 0.2)
        res = simulate(model, op, cfg)
        hbar_over_m = constants.universal.hbar / constants.helium.atom_mass
        l_par = model.parallel_inductance(res.equilibrium_phi_rad)
        dq = 0.2 * hbar_over_m * math.sqrt(model.diaphragm_capacitance / l_par)
        x_expect = dq / (constants.helium.density * model.geometry.diaphragm_area_m2)
        x_amp = 0.5 * (res.position_m.max() - res.position_m.min())
        assert x_amp == pytest.approx(x_expect, rel=1e-6)
        # phase swing approx the requested amplitude, up to anharmonic distortion
        phi_amp = 0.5 * (res.phi_rad.max() - res.phi_rad.min())
        assert phi_amp == pytest.approx(0.2, rel=0.02)

    def test_blowup_aborts(self, model, op):
        cfg = SimConfig(duration_s=0.3, dt_s=5e-5, seed=1, noise_scale=1e28)
        with pytest.raises(SimulationAbort, match="blew up"):
            simulate(model, op, cfg)


class TestDissipativeDynamics:
    def test_ringdown_decay_rate_matches_resistance(self, model, op, period):
        r_override = 50.0
        cfg = SimConfig(
            duration_s=3.0, dt_s=period / 300.0, impulse_amplitude_rad=0.1,
            total_resistance_override_J_s_per_kg2=r_override,
        )
        res = simulate(model, op, cfg)
        l_par = model.parallel_inductance(res.equilibrium_phi_rad)
        kappa_expect = r_override / (2.0 * l_par)
        fit = fit_ringdown(res.time_s, res.phi_rad, res.omega_h_rad_per_s, kappa_expect)
        assert fit.decay_rate_per_s == pytest.approx(kappa_expect, rel=0.02)

    def test_thermal_equipartition(self, model, op):
        # inflate nothing: physical bath against an override resistance,
        # check k_B T / 2 lands in each quadrature after the ring-down
        cfg = SimConfig(
            duration_s=12.0, dt_s=5e-5, seed=11, n_trials=256, decimation=20,
            noise_scale=1.0, total_resistance_override_J_s_per_kg2=100.0,
        )
        res = simulate(model, op, cfg)
        c = model.constants
        settled = res.time_s > 2.0
        phi = res.all_phi_rad[settled]
        q = res.all_charge_kg[settled]
        hbar_over_m = c.universal.hbar / c.helium.atom_mass
        l_par = model.parallel_inductance(res.equilibrium_phi_rad)
        e_spring = 0.5 * hbar_over_m**2 * np.var(phi) / l_par
        e_cap = np.var(q) / (2.0 * model.diaphragm_capacitance)
        kt_half = 0.5 * c.universal.boltzmann_constant * 0.010
        assert e_spring / kt_half == pytest.approx(1.0, rel=0.10)
        assert e_cap / kt_half == pytest.approx(1.0, rel=0.10)


class TestRingdownFit:
    def test_recovers_synthetic_parameters(self):
        t = np.linspace(0.0, 2.0, 3000)
        y = 2.31 + 0.17 * np.exp(-0.9 * t) * np.cos(600.0 * t + 0.3)
        fit = fit_ringdown(t, y, 550.0)
        assert fit.omega_rad_per_s == pytest.approx(600.0, rel=1e-9)
        assert fit.decay_rate_per_s == pytest.approx(0.9, rel=1e-9)
        assert fit.amplitude_rad == pytest.approx(0.17, rel=1e-9)
        assert fit.offset_rad == pytest.approx(2.31, rel=1e-9)
        assert fit.residual_rms < 1e-12

    def test_rejects_short_input(self):
        with pytest.raises(ValidationError):
            fit_ringdown(np.arange(5.0), np.arange(5.0), 100.0)


class TestReadoutChain:
    def test_phase_frequency_roundtrip(self, model):
        omega = model.helmholtz_frequency(2.3)
        assert phase_from_frequency(omega, model) == pytest.approx(2.3, rel=1e-12)

    def test_out_of_band_frequency_rejected(self, model):
        w_oo = model.bare_resonance_rad_per_s
        with pytest.raises(DomainError):
            phase_from_frequency(3.0 * w_oo, model)
        with pytest.raises(DomainError):
            phase_from_frequency(0.1 * w_oo, model)

    def test_bias_offset_shifts_frequency_with_known_slope(self, model, op, period):
        # d omega / d bias = [w_oo sin(phi0) / 2 sqrt(u)] / (1 + beta cos(phi0))
        beta = model.hysteresis_beta
        u = model.stability_margin(2.3)
        slope_expect = (
            model.bare_resonance_rad_per_s * math.sin(2.3) / (2.0 * math.sqrt(u))
        ) / (1.0 + beta * math.cos(2.3))
        delta = 0.01
        fits = {}
        for s in (+1, -1):
            cfg = lossless(0.6, period / 400.0, 0.02, phase_bias_offset_rad=s * delta)
            res = simulate(model, op, cfg)
            fits[s] = fit_ringdown(res.time_s, res.phi_rad, res.omega_h_rad_per_s)
        slope = (fits[+1].omega_rad_per_s - fits[-1].omega_rad_per_s) / (2.0 * delta)
        assert slope > 0.0
        assert slope == pytest.approx(slope_expect, rel=0.01)

    def test_recovers_injected_rotation_within_one_percent(self, model, op, period, constants):
        # inject a rotation-equivalent flux bias, read it back through the
        # full chain; differencing two runs cancels the integrator's own
        # small frequency bias
        omega_true = 1e-8
        area = model.geometry.pickup_area_m2
        offset = -2.0 * constants.helium.atom_mass * area / constants.universal.hbar * omega_true
        ref = simulate(model, op, lossless(0.6, period / 400.0, 0.02))
        inj = simulate(model, op, lossless(0.6, period / 400.0, 0.02, phase_bias_offset_rad=offset))
        f_ref = fit_ringdown(ref.time_s, ref.phi_rad, ref.omega_h_rad_per_s)
        f_inj = fit_ringdown(inj.time_s, inj.phi_rad, inj.omega_h_rad_per_s)
        phi_ref = phase_from_frequency(f_ref.omega_rad_per_s, model)
        bias_ref = -(phi_ref + model.hysteresis_beta * math.sin(phi_ref))
        recovered = rotation_from_ringdown(f_inj.omega_rad_per_s, model, bias_ref)
        assert recovered == pytest.approx(omega_true, rel=0.01)


class TestMonteCarlo:
    @staticmethod
    def mc_config(duration_s=2.0, noise_scale=1e6, seed=7, n_trials=100):
        return SimConfig(
            duration_s=duration_s, dt_s=5e-5, seed=seed, n_trials=n_trials,
            decimation=10, impulse_amplitude_rad=0.02, noise_scale=noise_scale,
        )

    def test_rejects_small_ensemble_and_missing_impulse(self, model, op):
        with pytest.raises(ValidationError, match="n_trials"):
            monte_carlo(model, op, self.mc_config(n_trials=99))
        cfg = SimConfig(duration_s=2.0, dt_s=5e-5, n_trials=100, noise_scale=1e6)
        with pytest.raises(ValidationError, match="impulse"):
            monte_carlo(model, op, cfg)

    def test_ensemble_bookkeeping(self, model, op):
        res = monte_carlo(model, op, self.mc_config())
        assert isinstance(res, MonteCarloResult)
        assert res.n_aborted == 0
        assert res.trial_omega_rad_per_s.shape == (100,)
        assert res.omega_mean_rad_per_s == pytest.approx(
            model.helmholtz_frequency(2.3), rel=1e-3
        )
        assert res.density_ratio == pytest.approx(
            res.rotation_noise_density_rad_per_s_rthz / res.analytic_density_rad_per_s_rthz
        )

    def test_same_seed_same_density(self, model, op):
        a = monte_carlo(model, op, self.mc_config())
        b = monte_carlo(model, op, self.mc_config())
        assert a.rotation_noise_density_rad_per_s_rthz == b.rotation_noise_density_rad_per_s_rthz

    def test_density_scales_as_sqrt_of_bath_psd(self, model, op):
        quiet = monte_carlo(model, op, self.mc_config(noise_scale=1e6, seed=7))
        loud = monte_carlo(model, op, self.mc_config(noise_scale=4e6, seed=8))
        ratio = (
            loud.rotation_noise_density_rad_per_s_rthz
            / quiet.rotation_noise_density_rad_per_s_rthz
        )
        assert 1.6 < ratio < 2.4

    def test_density_independent_of_trial_duration(self, model, op):
        short = monte_carlo(model, op, self.mc_config(duration_s=2.0, seed=9))
        long = monte_carlo(model, op, self.mc_config(duration_s=4.0, seed=10))
        ratio = (
            long.rotation_noise_density_rad_per_s_rthz
            / short.rotation_noise_density_rad_per_s_rthz
        )
        assert 0.7 < ratio < 1.4

    def test_blown_up_ensemble_aborts(self, model, op):
        with pytest.raises(SimulationAbort, match="tolerated"):
            monte_carlo(model, op, self.mc_config(noise_scale=1e28))
