import math

import numpy as np
import pytest

from hegyro.errors import DomainError, StabilityError, ValidationError
from hegyro.physconst import load_constants
from hegyro.circuit import (
    CircuitModel,
    GyrometerGeometry,
    OperatingPoint,
    aperture_critical_velocity,
    static_phase,
)

PHI0 = 2.3


def baseline_geometry(**overrides):
    fields = dict(
        pickup_area_m2=3.0e-2,
        line_length_m=2.0 * math.pi * 0.1,
        line_cross_section_m2=3.0e-4,
        diaphragm_area_m2=2.0e-4,
        spring_constant_N_per_m=1.0e4,
        diaphragm_resonance_hz=3000.0,
        diaphragm_quality_factor=1.0e5,
        critical_current_kg_per_s=9.2e-10,
    )
    fields.update(overrides)
    return GyrometerGeometry(**fields)


@pytest.fixture(scope="module")
def const():
    return load_constants()


@pytest.fixture(scope="module")
def model(const):
    return CircuitModel(baseline_geometry(), const)


# ---------------------------------------------------------------- elements


def test_element_goldens(model):
    assert model.line_inductance == pytest.approx(14.444104154, rel=1e-9)
    assert model.josephson_inductance0 == pytest.approx(17.246275707, rel=1e-9)
    assert model.diaphragm_capacitance == pytest.approx(8.41e-8, rel=1e-12)
    assert model.hysteresis_beta == pytest.approx(0.837520193, rel=1e-9)
    assert model.bare_resonance_rad_per_s == pytest.approx(830.336903, rel=1e-9)


def test_josephson_inductance_phase_dependence(model):
    lj0 = model.josephson_inductance0
    assert model.josephson_inductance(0.0) == lj0
    # inverted branch past pi/2 has negative inductance
    ratio = model.josephson_inductance(PHI0) / lj0
    assert ratio == pytest.approx(-1.500879467, rel=1e-9)
    assert model.josephson_inductance(-PHI0) == model.josephson_inductance(PHI0)


def test_josephson_inductance_singularity(model):
    with pytest.raises(DomainError):
        model.josephson_inductance(math.pi / 2.0)
    # just off the singularity is finite
    assert math.isfinite(model.josephson_inductance(math.pi / 2.0 + 1e-5))


def test_geometry_validation(const):
    with pytest.raises(ValidationError):
        baseline_geometry(line_cross_section_m2=0.0)
    with pytest.raises(ValidationError):
        baseline_geometry(critical_current_kg_per_s=-1e-10)
    with pytest.raises(ValidationError):
        baseline_geometry(spring_constant_N_per_m=math.inf)


def test_operating_point_validation():
    OperatingPoint(PHI0, 0.2, 0.010)
    with pytest.raises(ValidationError):
        OperatingPoint(0.0, 0.2, 0.010)
    with pytest.raises(ValidationError):
        OperatingPoint(PHI0, 0.0, 0.010)
    with pytest.raises(ValidationError):
        OperatingPoint(PHI0, math.pi / 2.0, 0.010)
    with pytest.raises(ValidationError):
        OperatingPoint(PHI0, 0.2, -0.001)


# ---------------------------------------------------------------- resonance


def test_resonance_goldens(model):
    assert model.stability_margin(PHI0) == pytest.approx(0.527725041, rel=1e-9)
    omega_h = model.helmholtz_frequency(PHI0)
    assert omega_h == pytest.approx(603.195636, rel=1e-9)
    assert omega_h / (2.0 * math.pi) == pytest.approx(96.0016, rel=1e-6)
    assert model.parallel_inductance(PHI0) == pytest.approx(32.680419463, rel=1e-9)


def test_helmholtz_within_ten_percent_of_design_target(model):
    # design target for this cell is 101 Hz
    assert model.helmholtz_frequency(PHI0) / (2.0 * math.pi) == pytest.approx(101.0, rel=0.10)


def test_parallel_inductance_is_parallel_combination(model):
    lj = model.josephson_inductance(PHI0)
    ll = model.line_inductance
    assert model.parallel_inductance(PHI0) == pytest.approx(lj * ll / (lj + ll), rel=1e-12)


def test_helmholtz_monotone_in_phase(model):
    # for beta < 1 every phase is stable; omega_H falls as cos(phi0) drops
    grid = np.linspace(0.05, math.pi - 0.05, 200)
    values = [model.helmholtz_frequency(p) for p in grid]
    assert all(b < a for a, b in zip(values, values[1:]))


def test_unstable_point_raises(const):
    # triple the junction strength: beta > 1 and phi0 = 2.3 destabilizes
    strong = CircuitModel(baseline_geometry(critical_current_kg_per_s=2.76e-9), const)
    assert strong.hysteresis_beta > 1.0
    assert strong.stability_margin(PHI0) < 0.0
    with pytest.raises(StabilityError):
        strong.helmholtz_frequency(PHI0)
    with pytest.raises(StabilityError):
        strong.parallel_inductance(PHI0)


# ---------------------------------------------------------------- statics


def test_phase_bias_golden(model):
    assert model.phase_bias_for(PHI0) == pytest.approx(-2.924543173, rel=1e-9)


def test_static_phase_example():
    # at beta = 0.8 a bias of -2.896564 rad parks the junction at 2.3 rad
    bias = -(2.3 + 0.8 * math.sin(2.3))
    assert bias == pytest.approx(-2.896564, abs=5e-7)
    assert static_phase(bias, 0.8) == pytest.approx(2.3, abs=1e-12)


def test_static_phase_random_biases():
    rng = np.random.default_rng(99)
    for _ in range(1000):
        beta = rng.uniform(0.05, 0.999)
        bias = rng.uniform(-10.0, 10.0)
        phi = static_phase(bias, beta)
        assert abs(phi + beta * math.sin(phi) + bias) < 1e-12


def test_static_phase_rejects_hysteretic_beta():
    with pytest.raises(DomainError):
        static_phase(-2.9, 1.0)
    with pytest.raises(DomainError):
        static_phase(-2.9, 1.7)


def test_static_phase_roundtrip(model):
    bias = model.phase_bias_for(PHI0)
    assert static_phase(bias, model.hysteresis_beta) == pytest.approx(PHI0, abs=1e-12)


# ---------------------------------------------------------------- losses


def test_loss_goldens(model):
    omega_h = model.helmholtz_frequency(PHI0)
    assert model.line_fluid_resistance(0.010, omega_h) == pytest.approx(
        1.857639678e-7, rel=1e-9
    )
    assert model.line_fluid_resistance(0.010, 2.0 * math.pi * 100.0) == pytest.approx(
        1.935009743e-7, rel=1e-9
    )
    assert model.junction_phonon_resistance(0.010) == pytest.approx(2.158842549e-7, rel=1e-9)
    assert model.diaphragm_resistance() == pytest.approx(6.308162628e-3, rel=1e-9)
    assert model.diaphragm_resistance(1e9) == pytest.approx(6.308162628e-7, rel=1e-9)


def test_line_resistance_scaling(model):
    omega = 600.0
    r10 = model.line_fluid_resistance(0.010, omega)
    assert model.line_fluid_resistance(0.020, omega) / r10 == pytest.approx(16.0, rel=1e-12)
    assert model.line_fluid_resistance(0.010, 2.0 * omega) / r10 == pytest.approx(2.0, rel=1e-12)
    assert model.line_fluid_resistance(0.0, omega) == 0.0


def test_junction_resistance_scaling(model):
    r10 = model.junction_phonon_resistance(0.010)
    assert model.junction_phonon_resistance(0.020) / r10 == pytest.approx(16.0, rel=1e-12)
    assert model.junction_phonon_resistance(0.0) == 0.0


def test_loss_temperature_window(model):
    with pytest.raises(DomainError):
        model.line_fluid_resistance(0.7, 600.0)
    with pytest.raises(DomainError):
        model.junction_phonon_resistance(0.61)


def test_diaphragm_resistance_exact_inverse_scaling(model):
    assert model.diaphragm_resistance(1e6) / model.diaphragm_resistance(1e5) == pytest.approx(
        0.1, rel=1e-12
    )
    with pytest.raises(ValidationError):
        model.diaphragm_resistance(0.0)


# ---------------------------------------------------------------- impedance


def test_parallel_branch_golden(model):
    omega_h = model.helmholtz_frequency(PHI0)
    zp = model.parallel_branch_impedance(PHI0, 0.010, omega_h)
    assert zp.real == pytest.approx(1.295068405e-6, rel=1e-9)


def test_parallel_branch_small_resistance_formula(model):
    # with resistances scaled down 1000x the exact complex result matches
    # the quadratic small-R formula to 1e-9 relative
    omega = model.helmholtz_frequency(PHI0)
    scale = 1e-3
    r_j = model.junction_phonon_resistance(0.010) * scale
    r_l = model.line_fluid_resistance(0.010, omega) * scale
    x_j = omega * model.josephson_inductance(PHI0)
    x_l = omega * model.line_inductance
    exact = (complex(r_j, x_j) * complex(r_l, x_l) / complex(r_j + r_l, x_j + x_l)).real
    approx = (r_j * x_l**2 + r_l * x_j**2) / ((x_j + x_l) ** 2 + (r_j + r_l) ** 2)
    assert approx == pytest.approx(exact, rel=1e-9)


def test_total_resistance_composition(model):
    omega_h = model.helmholtz_frequency(PHI0)
    expected = (
        model.diaphragm_resistance()
        + model.parallel_branch_impedance(PHI0, 0.010, omega_h).real
    )
    assert model.total_resistance(PHI0, 0.010) == expected


# ---------------------------------------------------------------- quality


def test_quality_factor_goldens(model):
    assert model.quality_factor(PHI0, 0.010) == pytest.approx(3.124308e6, rel=1e-6)
    assert model.quality_factor(PHI0, 0.010, 1e9) == pytest.approx(1.023565e10, rel=1e-6)


def test_quality_factor_zero_temperature_diaphragm_only(model):
    # fluid channels vanish at T = 0; only the diaphragm damps the mode
    q = model.quality_factor(PHI0, 0.0)
    omega_h = model.helmholtz_frequency(PHI0)
    expected = omega_h * model.parallel_inductance(PHI0) / model.diaphragm_resistance()
    assert q == pytest.approx(expected, rel=1e-15)


# ---------------------------------------------------------------- misc


def test_aperture_critical_velocity(const):
    v = aperture_critical_velocity(9.2e-10, 2.0e-6, const)
    assert v == pytest.approx(2.019621, rel=1e-6)
    assert v == pytest.approx(2.0, rel=0.05)
    with pytest.raises(ValidationError):
        aperture_critical_velocity(9.2e-10, 0.0, const)


def test_diagnostics_report(model):
    report = model.diagnostics(OperatingPoint(PHI0, 0.2, 0.010))
    assert report["helmholtz_hz"] == pytest.approx(96.0016, rel=1e-6)
    assert report["quality_factor"] == pytest.approx(model.quality_factor(PHI0, 0.010), rel=1e-12)
    assert report["total_resistance_J_s_per_kg2"] == pytest.approx(
        report["diaphragm_resistance_J_s_per_kg2"] + report["parallel_branch_re_J_s_per_kg2"],
        rel=1e-15,
    )
    assert all(isinstance(v, float) for v in report.values())
