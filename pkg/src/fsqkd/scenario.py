"""Scenario files, distance sweeps, intensity search and CSV/JSON output.

Scenario files are INI-style (``[section]`` headers, ``key = value`` lines,
``#`` or ``;`` comments). Every section is optional::

    [link]
    trace = NIR1550          # hardware preset: carrier + receiver
    wavelength_nm = 1557.7   # custom carrier (overrides the trace carrier)
    label = NIR1550          # carrier label used for the absorption lookup
    absorption_db_per_km = 1e-3
    telescope_radius_m = 0.25

    [weather]
    preset = CLEAR           # CLEAR, CLEAR_TURB, RAIN, RAIN_TURB, FOG, FOG_TURB
    visibility_km = 40
    rain_rate_mm_per_h = 0
    turbulence = off
    cn2 = 1e-14

    [receiver]
    efficiency = 0.9
    dark_count_rate_hz = 1
    dead_time_s = 25e-9
    z_insertion_db = 1
    x_insertion_db = 3
    interferometer_visibility = 0.98

    [source]
    mu1 = 0.5
    mu2 = 0.25
    p_basis_z = 0.5
    p_mu1 = 0.5
    clock_rate_hz = 1e9
    misalignment_error = 0.01

    [security]
    eps_sec = 1e-15
    eps_cor = 1e-15
    n_z = 1e8

    [sweep]
    d_start = 0
    d_end = 100
    d_step = 1               # omit for 1 km steps to 50 km, 10 km beyond

    [output]
    path = sweep.csv
    format = csv
    seed = 0
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from . import __version__
from .atmosphere import (
    AbsorptionTable,
    DomainError,
    OpticalCarrier,
    PathGeometry,
    WeatherScenario,
    total_budget,
    weather_preset,
)
from .detstats import InfeasibleError, SourceModel
from .finitekey import EPS_SPLIT, KeyRateResult, SecurityBudget
from .pipeline import key_rate_for_budget
from .receiver import ReceiverModel, preset, with_detector


class ScenarioError(ValueError):
    """Malformed or invalid scenario file."""


@dataclass(frozen=True)
class SweepSpec:
    d_start: float = 0.0
    d_end: float = 100.0
    d_step: float | None = None

    def __post_init__(self):
        if self.d_start < 0:
            raise ValueError(f"d_start must be >= 0, got {self.d_start}")
        if self.d_start > self.d_end:
            raise ValueError(f"need d_start <= d_end, got {self.d_start} > {self.d_end}")
        if self.d_step is not None and not self.d_step > 0:
            raise ValueError(f"d_step must be > 0, got {self.d_step}")

    def distances(self) -> list[float]:
        """Sweep grid; integer stepping avoids float drift in the endpoints."""
        if self.d_step is None:
            fine = [d for d in range(0, 51) if self.d_start <= d <= self.d_end]
            coarse = [d for d in range(60, int(self.d_end) + 1, 10) if d >= self.d_start]
            grid = sorted({float(d) for d in fine + coarse} | {self.d_start, self.d_end})
            return grid
        n = int(math.floor((self.d_end - self.d_start) / self.d_step + 1e-9))
        return [round(self.d_start + i * self.d_step, 12) for i in range(n + 1)]


@dataclass(frozen=True)
class ScenarioFile:
    trace: str = "NIR1550"
    carrier: OpticalCarrier = field(default_factory=lambda: preset("NIR1550")[1])
    receiver: ReceiverModel = field(default_factory=lambda: preset("NIR1550")[0])
    telescope_radius_m: float = 0.25
    weather_name: str = "CLEAR"
    weather: WeatherScenario = field(default_factory=WeatherScenario)
    absorption: AbsorptionTable = field(default_factory=AbsorptionTable)
    source: SourceModel = field(default_factory=SourceModel)
    security: SecurityBudget = field(default_factory=SecurityBudget)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    output_path: str | None = None
    output_format: str = "csv"
    seed: int = 0

    def with_trace(self, name: str) -> "ScenarioFile":
        rx, carrier = preset(name)
        return replace(self, trace=name.upper(), receiver=rx, carrier=carrier)

    def with_weather(self, name: str) -> "ScenarioFile":
        return replace(self, weather_name=name.upper(), weather=weather_preset(name))

    def metadata(self) -> dict:
        """Every resolved parameter, defaults included."""
        return {
            "tool": "fsqkd",
            "version": __version__,
            "trace": self.trace,
            "carrier": asdict(self.carrier),
            "telescope_radius_m": self.telescope_radius_m,
            "weather_name": self.weather_name,
            "weather": asdict(self.weather),
            "absorption_db_per_km": dict(self.absorption.entries),
            "receiver": asdict(self.receiver),
            "source": asdict(self.source),
            "security": asdict(self.security),
            "eps_split": EPS_SPLIT,
            "eps_statistical": self.security.eps_statistical,
            "sweep": asdict(self.sweep),
            "seed": self.seed,
        }


_SECTIONS = {
    "link": {"trace", "wavelength_nm", "label", "absorption_db_per_km", "telescope_radius_m"},
    "weather": {"preset", "visibility_km", "rain_rate_mm_per_h", "turbulence", "cn2"},
    "receiver": {
        "efficiency", "dark_count_rate_hz", "dead_time_s",
        "z_insertion_db", "x_insertion_db", "interferometer_visibility",
    },
    "source": {"mu1", "mu2", "p_basis_z", "p_mu1", "clock_rate_hz", "misalignment_error"},
    "security": {"eps_sec", "eps_cor", "n_z"},
    "sweep": {"d_start", "d_end", "d_step"},
    "output": {"path", "format", "seed"},
}


def _line_of(text: str, section: str, key: str) -> int | None:
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"\[(.+)\]", s)
        if m:
            current = m.group(1).strip().lower()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", s, re.I):
            return lineno
    return None


def parse_scenario(text: str) -> ScenarioFile:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"parse error: {exc}") from exc

    def where(section, key):
        line = _line_of(text, section, key)
        return f"[{section}] {key}" + (f" (line {line})" if line else "")

    for section in parser.sections():
        if section not in _SECTIONS:
            raise ScenarioError(f"unknown section [{section}]")
        for key in parser[section]:
            if key not in _SECTIONS[section]:
                raise ScenarioError(f"unknown key {where(section, key)}")

    def get(section, key, conv=float):
        if not parser.has_option(section, key):
            return None
        raw = parser.get(section, key)
        try:
            return conv(raw)
        except ValueError as exc:
            raise ScenarioError(f"bad value {raw!r} for {where(section, key)}: {exc}") from exc

    def boolean(raw):
        v = raw.strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ValueError("expected on/off")

    try:
        sc = ScenarioFile()
        trace = get("link", "trace", str)
        if trace:
            sc = sc.with_trace(trace.strip())
        weather_name = get("weather", "preset", str)
        if weather_name:
            sc = sc.with_weather(weather_name.strip())

        carrier = sc.carrier
        wavelength = get("link", "wavelength_nm")
        label = get("link", "label", str)
        if wavelength is not None or label:
            wl = carrier.wavelength_nm if wavelength is None else wavelength
            default_label = carrier.label if wavelength is None else ""
            carrier = OpticalCarrier(wl, (label or default_label).strip())
        absorption = sc.absorption
        abs_value = get("link", "absorption_db_per_km")
        if abs_value is not None:
            absorption = absorption.with_entry(carrier.label, abs_value)
        elif carrier.label not in absorption.entries:
            raise ScenarioError(
                f"no molecular absorption for carrier {carrier.label!r}; "
                "set [link] absorption_db_per_km"
            )
        radius = get("link", "telescope_radius_m")

        w = sc.weather
        turbulence = get("weather", "turbulence", boolean)
        weather = WeatherScenario(
            visibility_km=_pick(get("weather", "visibility_km"), w.visibility_km),
            rain_rate_mm_per_h=_pick(get("weather", "rain_rate_mm_per_h"), w.rain_rate_mm_per_h),
            turbulence_enabled=_pick(turbulence, w.turbulence_enabled),
            cn2=_pick(get("weather", "cn2"), w.cn2),
        )

        det_changes = {
            k: v
            for k in ("efficiency", "dark_count_rate_hz", "dead_time_s")
            if (v := get("receiver", k)) is not None
        }
        rx = with_detector(sc.receiver, **det_changes) if det_changes else sc.receiver
        rx_changes = {
            k: v
            for k in ("z_insertion_db", "x_insertion_db", "interferometer_visibility")
            if (v := get("receiver", k)) is not None
        }
        rx = replace(rx, **rx_changes) if rx_changes else rx

        src_changes = {
            k: v for k in _SECTIONS["source"] if (v := get("source", k)) is not None
        }
        source = replace(sc.source, **src_changes)
        sec_changes = {
            k: v for k in _SECTIONS["security"] if (v := get("security", k)) is not None
        }
        security = replace(sc.security, **sec_changes)

        sweep = SweepSpec(
            d_start=_pick(get("sweep", "d_start"), 0.0),
            d_end=_pick(get("sweep", "d_end"), 100.0),
            d_step=get("sweep", "d_step"),
        )
        fmt = (get("output", "format", str) or "csv").strip().lower()
        if fmt not in ("csv", "json"):
            raise ScenarioError(f"format must be csv or json, got {fmt!r} at {where('output', 'format')}")
        path = get("output", "path", str)
        seed = get("output", "seed", int)
        return replace(
            sc,
            carrier=carrier,
            receiver=rx,
            telescope_radius_m=_pick(radius, sc.telescope_radius_m),
            weather=weather,
            absorption=absorption,
            source=source,
            security=security,
            sweep=sweep,
            output_path=path.strip() if path else None,
            output_format=fmt,
            seed=_pick(seed, 0),
        )
    except ScenarioError:
        raise
    except (KeyError, ValueError) as exc:
        msg = exc.args[0] if exc.args else str(exc)
        raise ScenarioError(f"validation error: {msg}") from exc


def _pick(value, default):
    return default if value is None else value


def load_scenario(path: str | Path) -> ScenarioFile:
    return parse_scenario(Path(path).read_text())


@dataclass(frozen=True)
class SweepRow:
    distance_km: float
    geometric_db: float
    mie_db: float
    rain_db: float
    rayleigh_db: float
    turbulence_db: float
    absorption_db: float
    total_db: float
    transmittance: float
    qber_z: float
    qber_x: float
    s_z0_lower: float
    s_z1_lower: float
    phi_z_upper: float
    skl_bits: int
    skr_per_pulse: float
    feasible: bool


COLUMNS = tuple(f.name for f in fields(SweepRow))


def evaluate_point(sc: ScenarioFile, distance_km: float) -> KeyRateResult:
    geom = PathGeometry(distance_km, sc.telescope_radius_m)
    budget = total_budget(sc.carrier, geom, sc.weather, sc.absorption)
    return key_rate_for_budget(budget, sc.source, sc.receiver, sc.security)


def _row(sc: ScenarioFile, d: float) -> SweepRow:
    nan = math.nan
    try:
        res = evaluate_point(sc, d)
    except (DomainError, InfeasibleError, ValueError, OverflowError):
        return SweepRow(d, *([nan] * 8), 0.5, 0.5, nan, nan, 0.5, 0, 0.0, False)
    b = res.budget_breakdown
    bd = res.bounds
    return SweepRow(
        distance_km=d,
        geometric_db=b.geometric_db,
        mie_db=b.mie_db,
        rain_db=b.rain_db,
        rayleigh_db=b.rayleigh_db,
        turbulence_db=b.turbulence_db,
        absorption_db=b.absorption_db,
        total_db=b.total_db,
        transmittance=b.transmittance,
        qber_z=res.q_z,
        qber_x=res.q_x,
        s_z0_lower=bd.s_z0_lower if bd else 0.0,
        s_z1_lower=bd.s_z1_lower if bd else 0.0,
        phi_z_upper=bd.phi_z_upper if bd else 0.5,
        skl_bits=res.skl_bits,
        skr_per_pulse=res.skr_per_pulse,
        feasible=res.feasible,
    )


def run_sweep(sc: ScenarioFile, workers: int = 1) -> list[SweepRow]:
    """One row per distance, ordered by distance; failing rows are infeasible."""
    grid = sc.sweep.distances()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda d: _row(sc, d), grid))
    return [_row(sc, d) for d in grid]


def cutoff_distance(rows: list[SweepRow]) -> float | None:
    """Largest swept distance that still yields a key."""
    feasible = [r.distance_km for r in rows if r.feasible]
    return max(feasible) if feasible else None


def optimize_intensities(
    sc: ScenarioFile,
    distance_km: float,
    mu1_grid,
    mu2_grid,
) -> tuple[float, float, float]:
    """Grid search for the (mu1, mu2) pair maximising the key rate per pulse.

    Pairs with ``mu1 <= mu2`` are skipped. Ties go to larger mu1, then larger
    mu2. Raises :class:`InfeasibleError` if no pair yields a key.
    """
    best = None
    for mu1 in mu1_grid:
        for mu2 in mu2_grid:
            if not mu1 > mu2 > 0:
                continue
            trial = replace(sc, source=replace(sc.source, mu1=float(mu1), mu2=float(mu2)))
            res = evaluate_point(trial, distance_km)
            if not res.feasible:
                continue
            key = (res.skr_per_pulse, mu1, mu2)
            if best is None or key > best:
                best = key
    if best is None:
        raise InfeasibleError(f"no feasible intensity pair at {distance_km} km")
    skr, mu1, mu2 = best
    return float(mu1), float(mu2), skr


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _flatten(meta: dict, prefix: str = "") -> list[tuple[str, object]]:
    out = []
    for k, v in meta.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.extend(_flatten(v, key + "."))
        else:
            out.append((key, v))
    return out


def to_csv(rows: list[SweepRow], metadata: dict) -> str:
    buf = io.StringIO()
    for key, value in _flatten(metadata):
        buf.write(f"# {key} = {_fmt(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_fmt(getattr(row, c)) for c in COLUMNS])
    return buf.getvalue()


def to_json(rows: list[SweepRow], metadata: dict) -> str:
    payload = {"metadata": metadata, "rows": [asdict(r) for r in rows]}
    return json.dumps(payload, indent=2, allow_nan=True) + "\n"


def emit(rows: list[SweepRow], fmt: str, path: str | Path | None, metadata: dict) -> str:
    """Render rows as CSV or JSON; write to ``path`` when given."""
    if not rows:
        raise ValueError("nothing to emit: no sweep rows")
    if fmt == "csv":
        text = to_csv(rows, metadata)
    elif fmt == "json":
        text = to_json(rows, metadata)
    else:
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    if path is not None:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return text


def read_csv(text: str) -> tuple[dict[str, str], list[dict[str, str]]]:
    meta = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            meta[key.strip()] = value.strip()
        else:
            body.append(line)
    return meta, list(csv.DictReader(body))
