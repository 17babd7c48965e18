"""Physical constants, Earth parameters and helium material data.

Everything downstream (circuit sizing, relativistic rates, noise budgets,
time-domain runs) pulls its numbers from the frozen bundle built here, so a
single load controls the whole pipeline.  Constants come from a versioned
TOML file; the packaged default can be overridden per call, via the
``GYRO_CONSTANTS`` environment variable, or per scenario.

Derived quantities (hbar, the circulation quantum, the compressibility)
are computed from the stored fields instead of being stored redundantly,
which keeps identities like h = 2*pi*hbar exact by construction.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import DomainError, ValidationError

_SCHEMA_VERSION = 1

ENV_CONSTANTS = "GYRO_CONSTANTS"

# sanity band for the Earth surface potential, relative to c^2
_SURFACE_POTENTIAL_OVER_C2 = 6.9e-10
_SURFACE_POTENTIAL_RTOL = 0.05


@dataclass(frozen=True)
class UniversalConstants:
    """SI universal constants.

    Attributes
    ----------
    gravitational_constant : float
        Newtonian constant G, m^3 kg^-1 s^-2.
    speed_of_light : float
        c, m/s.
    planck_constant : float
        h, J s.
    boltzmann_constant : float
        k_B, J/K.
    """

    gravitational_constant: float
    speed_of_light: float
    planck_constant: float
    boltzmann_constant: float

    @property
    def hbar(self) -> float:
        """Reduced Planck constant h / (2 pi), J s."""
        return self.planck_constant / (2.0 * math.pi)


@dataclass(frozen=True)
class EarthParams:
    """Earth model used for the rotation and gravity environment.

    Attributes
    ----------
    mass : float
        kg.
    mean_radius : float
        m.
    rotation_rate : float
        Sidereal spin rate, rad/s.
    """

    mass: float
    mean_radius: float
    rotation_rate: float


@dataclass(frozen=True)
class HeliumProperties:
    """Superfluid helium-4 material data in the phonon regime.

    Attributes
    ----------
    atom_mass : float
        Bare He-4 atom mass, kg.
    density : float
        Liquid density rho, kg/m^3.
    first_sound_speed : float
        First sound speed, m/s.
    gruneisen_constant : float
        Dimensionless Grueneisen parameter of the phonon gas.
    max_model_temperature : float
        Upper validity bound (K) of the phonon-only transport model.
    """

    atom_mass: float
    density: float
    first_sound_speed: float
    gruneisen_constant: float
    max_model_temperature: float

    @property
    def compressibility(self) -> float:
        """Adiabatic compressibility 1 / (rho c1^2), Pa^-1."""
        return 1.0 / (self.density * self.first_sound_speed**2)


@dataclass(frozen=True)
class Constants:
    """Full constants bundle: universal + Earth + helium + source path."""

    universal: UniversalConstants
    earth: EarthParams
    helium: HeliumProperties
    source: str

    @property
    def circulation_quantum(self) -> float:
        """Quantum of circulation h / m4 from this bundle, m^2/s."""
        return self.universal.planck_constant / self.helium.atom_mass


def default_constants_path() -> Path:
    """Path of the packaged constants file."""
    return Path(str(resources.files("hegyro").joinpath("data/constants.toml")))


def _require_table(raw: dict, name: str, keys: dict) -> dict:
    """Pull table `name` from `raw`, enforcing the exact key set in `keys`.

    `keys` maps key name -> predicate(value) for validity; all values must
    be real numbers.  Returns {key: float}.
    """
    if name not in raw:
        raise ValidationError(f"constants file: missing table [{name}]")
    table = raw[name]
    if not isinstance(table, dict):
        raise ValidationError(f"constants file: [{name}] must be a table")
    unknown = set(table) - set(keys)
    if unknown:
        raise ValidationError(
            f"constants file: unknown key(s) in [{name}]: {sorted(unknown)}"
        )
    out = {}
    for key, pred in keys.items():
        if key not in table:
            raise ValidationError(f"constants file: [{name}] missing key {key!r}")
        value = table[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"constants file: [{name}].{key} must be a number")
        value = float(value)
        if not math.isfinite(value) or not pred(value):
            raise ValidationError(f"constants file: [{name}].{key} = {value} is out of range")
        out[key] = value
    return out


def load_constants(path: str | os.PathLike | None = None) -> Constants:
    """Load a constants bundle from a TOML file.

    Resolution order: explicit `path` argument, then the ``GYRO_CONSTANTS``
    environment variable, then the packaged default.  The file schema is
    strict: the version must match, all keys must be present, and no
    unknown keys are tolerated.  Loading the same file twice returns
    bit-identical bundles.
    """
    if path is None:
        env = os.environ.get(ENV_CONSTANTS)
        path = Path(env) if env else default_constants_path()
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"constants file {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"constants file {path}: TOML parse error: {exc}") from exc

    version = raw.get("schema_version")
    if version != _SCHEMA_VERSION:
        raise ValidationError(
            f"constants file {path}: schema_version {version!r} "
            f"(expected {_SCHEMA_VERSION})"
        )
    unknown_tables = set(raw) - {"schema_version", "universal", "earth", "helium"}
    if unknown_tables:
        raise ValidationError(
            f"constants file {path}: unknown table(s) {sorted(unknown_tables)}"
        )

    positive = lambda v: v > 0.0
    uni = _require_table(
        raw,
        "universal",
        {
            "newtonian_G_m3_per_kg_s2": positive,
            "speed_of_light_m_per_s": positive,
            "planck_h_J_s": positive,
            "boltzmann_k_J_per_K": positive,
        },
    )
    earth = _require_table(
        raw,
        "earth",
        {
            "mass_kg": positive,
            "mean_radius_m": positive,
            "sidereal_rotation_rate_rad_per_s": positive,
        },
    )
    helium = _require_table(
        raw,
        "helium",
        {
            "atom_mass_kg": positive,
            "density_kg_per_m3": positive,
            "first_sound_speed_m_per_s": positive,
            "gruneisen_constant": positive,
            "max_model_temperature_K": positive,
        },
    )

    constants = Constants(
        universal=UniversalConstants(
            gravitational_constant=uni["newtonian_G_m3_per_kg_s2"],
            speed_of_light=uni["speed_of_light_m_per_s"],
            planck_constant=uni["planck_h_J_s"],
            boltzmann_constant=uni["boltzmann_k_J_per_K"],
        ),
        earth=EarthParams(
            mass=earth["mass_kg"],
            mean_radius=earth["mean_radius_m"],
            rotation_rate=earth["sidereal_rotation_rate_rad_per_s"],
        ),
        helium=HeliumProperties(
            atom_mass=helium["atom_mass_kg"],
            density=helium["density_kg_per_m3"],
            first_sound_speed=helium["first_sound_speed_m_per_s"],
            gruneisen_constant=helium["gruneisen_constant"],
            max_model_temperature=helium["max_model_temperature_K"],
        ),
        source=str(path),
    )

    # sanity bound on the Earth data: surface potential must sit at the
    # known 6.9e-10 of c^2 within 5%, else the file is physically bogus
    ratio = newtonian_potential_at_surface(constants) / constants.universal.speed_of_light**2
    if not math.isclose(ratio, _SURFACE_POTENTIAL_OVER_C2, rel_tol=_SURFACE_POTENTIAL_RTOL):
        raise ValidationError(
            f"constants file {path}: surface potential / c^2 = {ratio:.3e}, "
            f"outside {_SURFACE_POTENTIAL_OVER_C2} +/- 5%"
        )
    return constants


def newtonian_potential_at_surface(constants: Constants) -> float:
    """Newtonian potential magnitude U = G M / R at the Earth surface, J/kg."""
    u = constants.universal
    e = constants.earth
    return u.gravitational_constant * e.mass / e.mean_radius


def entropy_density(temperature: float, constants: Constants) -> float:
    """Phonon entropy density of He II, J K^-1 m^-3.

    s(T) = 2 pi^2 k_B^4 T^3 / (45 hbar^3 c1^3)

    Valid only in the phonon-dominated window 0 <= T <= the helium table's
    max_model_temperature (rotons excluded); outside it raises DomainError.
    """
    hel = constants.helium
    if not (0.0 <= temperature <= hel.max_model_temperature):
        raise DomainError(
            f"temperature {temperature} K outside phonon model window "
            f"[0, {hel.max_model_temperature}] K"
        )
    u = constants.universal
    kb = u.boltzmann_constant
    return (
        2.0
        * math.pi**2
        * kb**4
        * temperature**3
        / (45.0 * u.hbar**3 * hel.first_sound_speed**3)
    )
