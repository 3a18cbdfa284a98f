"""Free-space channel attenuation.

Every loss mechanism is returned in dB and is clamped to be non-negative.
Per-kilometre rates (Mie, rain, Rayleigh, molecular absorption) are scaled
by the path length in :func:`total_budget`; geometric spreading and
turbulence are already totals over the path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

# 10*log10(e): converts a natural-log extinction coefficient to dB.
DB_PER_NEPER = 10.0 * math.log10(math.e)

PLANCK_H = 6.62607015e-34  # J s
LIGHT_C = 2.99792458e8  # m / s
BOLTZMANN_K = 1.380649e-23  # J / K
WIEN_B_UM_K = 2897.77  # um K


class DomainError(ValueError):
    """Raised when an empirical fit is evaluated outside its range."""


@dataclass(frozen=True)
class OpticalCarrier:
    """Optical source wavelength with its derived wavenumbers."""

    wavelength_nm: float
    label: str = ""

    def __post_init__(self):
        if not self.wavelength_nm > 0:
            raise ValueError(f"wavelength_nm must be > 0, got {self.wavelength_nm}")
        if not self.label:
            object.__setattr__(self, "label", f"{self.wavelength_nm:g}nm")

    @property
    def wavenumber_per_cm(self) -> float:
        # 1e4 / lambda[um] == 1e7 / lambda[nm]
        return 1e7 / self.wavelength_nm

    @property
    def angular_wavenumber_per_m(self) -> float:
        return 2.0 * math.pi / (self.wavelength_nm * 1e-9)


NIR800 = OpticalCarrier(800.0, "NIR800")
NIR1550 = OpticalCarrier(1557.7, "NIR1550")
MIR4000 = OpticalCarrier(3998.6, "MIR4000")


@dataclass(frozen=True)
class PathGeometry:
    """Link length and telescope radius (transmitter and receiver identical)."""

    distance_km: float
    telescope_radius_m: float = 0.25

    def __post_init__(self):
        if self.distance_km < 0:
            raise ValueError(f"distance_km must be >= 0, got {self.distance_km}")
        if not self.telescope_radius_m > 0:
            raise ValueError(
                f"telescope_radius_m must be > 0, got {self.telescope_radius_m}"
            )


@dataclass(frozen=True)
class WeatherScenario:
    visibility_km: float = 40.0
    rain_rate_mm_per_h: float = 0.0
    turbulence_enabled: bool = False
    cn2: float = 1e-14

    def __post_init__(self):
        if not self.visibility_km > 0:
            raise ValueError(f"visibility_km must be > 0, got {self.visibility_km}")
        if self.rain_rate_mm_per_h < 0:
            raise ValueError(
                f"rain_rate_mm_per_h must be >= 0, got {self.rain_rate_mm_per_h}"
            )
        if self.cn2 < 0:
            raise ValueError(f"cn2 must be >= 0, got {self.cn2}")


WEATHER_PRESETS: dict[str, WeatherScenario] = {
    "CLEAR": WeatherScenario(40.0, 0.0, False),
    "CLEAR_TURB": WeatherScenario(40.0, 0.0, True),
    "RAIN": WeatherScenario(6.0, 2.5, False),
    "RAIN_TURB": WeatherScenario(6.0, 2.5, True),
    "FOG": WeatherScenario(1.0, 0.0, False),
    "FOG_TURB": WeatherScenario(1.0, 0.0, True),
}


def weather_preset(name: str) -> WeatherScenario:
    try:
        return WEATHER_PRESETS[name.upper()]
    except KeyError:
        valid = ", ".join(WEATHER_PRESETS)
        raise KeyError(f"unknown weather preset {name!r}; valid: {valid}") from None


@dataclass(frozen=True)
class AbsorptionTable:
    """Molecular absorption in dB/km keyed by carrier label.

    The defaults are local minima in the 1.6 um and 4 um transmission
    windows. 800 nm has no tabulated value and defaults to zero, so clear-air
    extinction there is carried by the Rayleigh term alone.
    """

    entries: Mapping[str, float] = field(
        default_factory=lambda: {"NIR800": 0.0, "NIR1550": 1e-3, "MIR4000": 1.9e-3}
    )

    def __post_init__(self):
        for label, value in self.entries.items():
            if value < 0:
                raise ValueError(f"absorption for {label!r} must be >= 0, got {value}")

    def with_entry(self, label: str, value: float) -> "AbsorptionTable":
        return AbsorptionTable({**self.entries, label: value})


@dataclass(frozen=True)
class AttenuationBudget:
    geometric_db: float
    mie_db: float
    rain_db: float
    rayleigh_db: float
    turbulence_db: float
    absorption_db: float

    COMPONENTS = (
        "geometric_db",
        "mie_db",
        "rain_db",
        "rayleigh_db",
        "turbulence_db",
        "absorption_db",
    )

    @property
    def total_db(self) -> float:
        return math.fsum(getattr(self, name) for name in self.COMPONENTS)

    @property
    def transmittance(self) -> float:
        return 10.0 ** (-self.total_db / 10.0)

    def as_dict(self) -> dict[str, float]:
        out = {name: getattr(self, name) for name in self.COMPONENTS}
        out["total_db"] = self.total_db
        out["transmittance"] = self.transmittance
        return out


def rayleigh_range_km(geom: PathGeometry, carrier: OpticalCarrier) -> float:
    """Rayleigh range of a beam whose waist radius is r/sqrt(2).

    With the waist placed mid-link, the beam fills the receiver aperture
    exactly at twice this distance.
    """
    lam_m = carrier.wavelength_nm * 1e-9
    return math.pi * geom.telescope_radius_m**2 / (2.0 * lam_m) / 1e3


def geometric_loss_db(geom: PathGeometry, carrier: OpticalCarrier) -> float:
    """Beam-spreading loss: ratio of beam area to aperture area, in dB.

    Zero until the beam outgrows the receiver (``d > 2 Z``).
    """
    z = rayleigh_range_km(geom, carrier)
    d = geom.distance_km
    if d <= 2.0 * z:
        return 0.0
    area_ratio = 0.5 * (1.0 + ((d - z) / z) ** 2)
    return max(0.0, 10.0 * math.log10(area_ratio))


def mie_exponent(visibility_km: float) -> float:
    """Size-distribution exponent of the visibility model (Kim branch for V < 6 km)."""
    if visibility_km > 50.0:
        return 1.6
    if visibility_km >= 6.0:
        return 1.3
    return 0.585 * visibility_km ** (1.0 / 3.0)


def mie_loss_db_per_km(carrier: OpticalCarrier, visibility_km: float) -> float:
    if not visibility_km > 0:
        raise ValueError(f"visibility_km must be > 0, got {visibility_km}")
    p = mie_exponent(visibility_km)
    ratio = carrier.wavelength_nm / 550.0
    return DB_PER_NEPER * (3.91 / visibility_km) * ratio ** (-p)


def rain_loss_db_per_km(rain_rate_mm_per_h: float) -> float:
    """Wavelength-independent rain attenuation, 1.076 R^0.67."""
    if rain_rate_mm_per_h < 0:
        raise ValueError(f"rain rate must be >= 0, got {rain_rate_mm_per_h}")
    if rain_rate_mm_per_h == 0:
        return 0.0
    return 1.076 * rain_rate_mm_per_h**0.67


def rayleigh_scatter_db_per_km(carrier: OpticalCarrier) -> float:
    nu = carrier.wavenumber_per_cm
    denom = 9.26799e18 - 1.07123e9 * nu**2
    if denom <= 0:
        raise DomainError(
            f"Rayleigh fit undefined at {carrier.wavelength_nm} nm "
            f"(wavenumber {nu:.1f} cm^-1 too large)"
        )
    return nu**4 / denom


def turbulence_loss_db(carrier: OpticalCarrier, distance_km: float, cn2: float) -> float:
    """Scintillation loss over the whole path, 2*sqrt(Rytov variance).

    SI units throughout: k in 1/m and the distance in metres.
    """
    if distance_km < 0:
        raise ValueError(f"distance_km must be >= 0, got {distance_km}")
    k = carrier.angular_wavenumber_per_m
    d_m = distance_km * 1e3
    rytov = 1.23 * k ** (7.0 / 6.0) * cn2 * d_m ** (11.0 / 6.0)
    return 2.0 * math.sqrt(rytov)


def absorption_db_per_km(carrier: OpticalCarrier, table: AbsorptionTable) -> float:
    try:
        return table.entries[carrier.label]
    except KeyError:
        raise KeyError(
            f"no molecular absorption entry for carrier {carrier.label!r}"
        ) from None


def total_budget(
    carrier: OpticalCarrier,
    geom: PathGeometry,
    weather: WeatherScenario,
    table: AbsorptionTable | None = None,
) -> AttenuationBudget:
    table = AbsorptionTable() if table is None else table
    d = geom.distance_km
    turb = (
        turbulence_loss_db(carrier, d, weather.cn2) if weather.turbulence_enabled else 0.0
    )
    return AttenuationBudget(
        geometric_db=geometric_loss_db(geom, carrier),
        mie_db=max(0.0, mie_loss_db_per_km(carrier, weather.visibility_km) * d),
        rain_db=max(0.0, rain_loss_db_per_km(weather.rain_rate_mm_per_h) * d),
        rayleigh_db=max(0.0, rayleigh_scatter_db_per_km(carrier) * d),
        turbulence_db=max(0.0, turb),
        absorption_db=max(0.0, absorption_db_per_km(carrier, table) * d),
    )


def blackbody_spectral_radiance(temperature_k: float, wavelength_um: float) -> float:
    """Planck spectral radiance in W m^-2 sr^-1 um^-1."""
    if not temperature_k > 0 or not wavelength_um > 0:
        raise ValueError("temperature and wavelength must be positive")
    lam = wavelength_um * 1e-6
    x = PLANCK_H * LIGHT_C / (lam * BOLTZMANN_K * temperature_k)
    prefactor = 2.0 * PLANCK_H * LIGHT_C**2 / lam**5
    # expm1 overflows past ~709; the Wien tail is exact there
    per_m = prefactor * math.exp(-x) if x > 700 else prefactor / math.expm1(x)
    return per_m * 1e-6


def wien_peak_um(temperature_k: float) -> float:
    if not temperature_k > 0:
        raise ValueError("temperature must be positive")
    return WIEN_B_UM_K / temperature_k
