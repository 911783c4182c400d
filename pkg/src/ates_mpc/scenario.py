"""Scenario configuration, demand series handling and results persistence.

Config files are flat UTF-8 ``key = value`` text with units spelled out in
the key names; every field has a default matching the reference
parameterization, so an empty file is a valid scenario.  Demand series are
two-column CSV (ISO-8601 UTC timestamp, power in W, positive = heat demand).
"""

from __future__ import annotations

import csv
import datetime as _dt
import math
from dataclasses import dataclass, field

import numpy as np

from .controller import OcpConfig
from .errors import ScenarioError
from .grid import AquiferParams, RadialGrid, build_grid
from .heat_exchanger import HxParams
from .observer import UkfConfig
from .plant import TruthConfig

HOURS_PER_YEAR = 8760
_J_PER_MWH = 3.6e9


@dataclass(frozen=True)
class Scenario:
    grid: RadialGrid
    params: AquiferParams
    hx: HxParams
    ocp: OcpConfig
    ukf: UkfConfig
    truth: TruthConfig
    demand: np.ndarray = field(repr=False)          # W, hourly
    timestamps: np.ndarray = field(repr=False)      # seconds since start
    start: _dt.datetime = _dt.datetime(2004, 10, 1, tzinfo=_dt.timezone.utc)
    duration: int = HOURS_PER_YEAR
    seed: int = 0

    def __post_init__(self):
        if self.demand.size < self.duration:
            raise ScenarioError(
                f"demand series ({self.demand.size} h) shorter than the run "
                f"duration ({self.duration} h)")


_DEFAULTS: dict[str, float] = {
    "r0_m": 0.4,
    "r_inf_m": 60.0,
    "nu": 20,
    "filter_length_m": 38.0,
    "porosity": 0.3,
    "c_w_j_per_m3_k": 4.2e6,
    "c_r_j_per_m3_k": 4.575e6,
    "lambda_w_per_m_k": 3.5,
    "t_amb_k": 284.85,
    "q_b_m3_per_s": 0.1,
    "t_building_heating_k": 274.0,
    "t_building_cooling_k": 293.0,
    "u_max_m3_per_s": 0.0277,
    "dt_s": 3600.0,
    "horizon_steps": 12,
    "block_1_steps": 1,
    "block_2_steps": 4,
    "block_3_steps": 7,
    "warm_min_k": 284.85,
    "warm_max_k": 293.15,
    "cold_min_k": 273.15,
    "cold_max_k": 284.85,
    "q_u": 1.0,
    "q_d": 1994.4e-6,
    "q_e": 0.001,
    "balance_window_h": 80.0,
    "slack_weight_per_k2": 1e6,
    "ukf_kappa": 5.0,
    "process_noise_var_k2": 0.05**2,
    "measurement_noise_var_k2": 0.01**2,
    "nu_fine": 200,
    "lambda_min_w_per_m_k": 3.0,
    "lambda_max_w_per_m_k": 5.0,
    "t_amb_noise_amp_k": 0.1,
    "sensor_sigma_k": 0.01,
    "seed": 0,
    "duration_steps": HOURS_PER_YEAR,
    "demand_heat_total_mwh": 3800.0,
    "demand_cold_total_mwh": 2200.0,
}
_STRING_KEYS = {"demand_csv"}
_INT_KEYS = {"nu", "nu_fine", "horizon_steps", "seed", "duration_steps",
             "block_1_steps", "block_2_steps", "block_3_steps"}


def _parse_config_text(text: str) -> dict:
    values: dict[str, object] = dict(_DEFAULTS)
    values["demand_csv"] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = (part.strip() for part in line.partition("="))
        if key in _STRING_KEYS:
            values[key] = val
            continue
        if key not in _DEFAULTS:
            raise ScenarioError(f"line {lineno}: unknown config key {key!r}")
        try:
            values[key] = int(val) if key in _INT_KEYS else float(val)
        except ValueError as exc:
            raise ScenarioError(f"line {lineno}: bad value for {key!r}: {val!r}") from exc
    return values


def scenario_from_values(values: dict) -> Scenario:
    grid = build_grid(values["r0_m"], values["r_inf_m"], values["nu"],
                      values["filter_length_m"])
    params = AquiferParams.from_constituents(
        values["porosity"], values["c_w_j_per_m3_k"], values["c_r_j_per_m3_k"],
        values["lambda_w_per_m_k"], values["t_amb_k"])
    hx = HxParams(values["q_b_m3_per_s"], values["t_building_heating_k"],
                  values["t_building_cooling_k"])
    ocp = OcpConfig(
        horizon=values["horizon_steps"], dt=values["dt_s"],
        blocks=(values["block_1_steps"], values["block_2_steps"],
                values["block_3_steps"]),
        u_min=-values["u_max_m3_per_s"], u_max=values["u_max_m3_per_s"],
        warm_bounds=(values["warm_min_k"], values["warm_max_k"]),
        cold_bounds=(values["cold_min_k"], values["cold_max_k"]),
        q_u=values["q_u"], q_d=values["q_d"], q_e=values["q_e"],
        balance_hours=values["balance_window_h"],
        slack_weight=values["slack_weight_per_k2"])
    ukf = UkfConfig.for_grid(values["nu"], kappa=values["ukf_kappa"],
                             process_var=values["process_noise_var_k2"],
                             measurement_var=values["measurement_noise_var_k2"])
    truth = TruthConfig(
        nu_fine=values["nu_fine"],
        lambda_bounds=(values["lambda_min_w_per_m_k"], values["lambda_max_w_per_m_k"]),
        t_amb_noise_amp=values["t_amb_noise_amp_k"],
        sensor_sigma=values["sensor_sigma_k"], seed=values["seed"])

    duration = values["duration_steps"]
    if values.get("demand_csv"):
        demand = load_demand_csv(values["demand_csv"])
    else:
        demand = gen_synthetic_demand(
            values["seed"], max(HOURS_PER_YEAR, duration),
            values["demand_heat_total_mwh"] * _J_PER_MWH,
            values["demand_cold_total_mwh"] * _J_PER_MWH)
    timestamps = np.arange(demand.size) * values["dt_s"]
    return Scenario(grid, params, hx, ocp, ukf, truth, demand, timestamps,
                    duration=duration, seed=values["seed"])


def load_scenario(path: str | None = None) -> Scenario:
    """Parse a config file (or build the all-defaults scenario for None)."""
    if path is None:
        return scenario_from_values(_parse_config_text(""))
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario config {path!r}: {exc}") from exc
    return scenario_from_values(_parse_config_text(text))


def _parse_timestamp(text: str) -> _dt.datetime:
    try:
        stamp = _dt.datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as exc:
        raise ScenarioError(f"bad ISO-8601 timestamp {text!r}") from exc
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=_dt.timezone.utc)
    return stamp


def load_demand_csv(path: str) -> np.ndarray:
    """Hourly demand in W; empty value fields are linearly interpolated."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ScenarioError(f"cannot read demand CSV {path!r}: {exc}") from exc
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if rows and rows[0] and not _looks_like_timestamp(rows[0][0]):
        rows = rows[1:]  # header
    if not rows:
        raise ScenarioError(f"demand CSV {path!r} contains no data rows")
    stamps = []
    values = []
    for r in rows:
        if len(r) < 2:
            raise ScenarioError(f"demand CSV row needs timestamp and value: {r!r}")
        stamps.append(_parse_timestamp(r[0].strip()))
        cell = r[1].strip()
        values.append(float(cell) if cell else math.nan)
    for a, b in zip(stamps, stamps[1:]):
        if b <= a:
            raise ScenarioError(f"demand timestamps must be strictly increasing "
                                f"({a.isoformat()} then {b.isoformat()})")
    series = np.asarray(values, dtype=float)
    missing = np.isnan(series)
    if missing.all():
        raise ScenarioError("demand CSV has no numeric values")
    if missing.any():
        idx = np.arange(series.size)
        series[missing] = np.interp(idx[missing], idx[~missing], series[~missing])
    return series


def _looks_like_timestamp(cell: str) -> bool:
    try:
        _parse_timestamp(cell.strip())
        return True
    except ScenarioError:
        return False


def write_demand_csv(path: str, demand: np.ndarray,
                     start: _dt.datetime | None = None) -> None:
    start = start or _dt.datetime(2004, 10, 1, tzinfo=_dt.timezone.utc)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "demand_w"])
        for k, value in enumerate(np.asarray(demand, dtype=float)):
            stamp = start + _dt.timedelta(hours=k)
            writer.writerow([stamp.isoformat(), repr(float(value))])


def gen_synthetic_demand(seed: int, year_hours: int = HOURS_PER_YEAR,
                         heat_total: float = 3800.0 * _J_PER_MWH,
                         cold_total: float = 2200.0 * _J_PER_MWH) -> np.ndarray:
    """Seasonal + daily synthetic demand [W], positive = heat demand.

    Hour 0 is the start of October, so the heating season comes first and
    the year closes at the end of the cooling season; the square-rooted
    seasonal shape switches seasons within days rather than weeks, and the
    daily cycle and noise are multiplicative so a season's demand keeps its
    sign between the switchovers (a district network carries a base load).
    Positive and negative parts are scaled separately to hit the requested
    annual totals exactly.
    """
    if heat_total < 0.0 or cold_total < 0.0:
        raise ScenarioError("annual energy totals must be nonnegative")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xDE11A)))
    hours = np.arange(year_hours)
    # Mid-January heating peak for an October start.
    season = np.cos(2.0 * np.pi * (hours - 2560.0) / HOURS_PER_YEAR)
    seasonal = np.sign(season) * np.sqrt(np.abs(season))
    daily = 1.0 + 0.25 * np.cos(2.0 * np.pi * (hours % 24 - 14.0) / 24.0)
    noise = np.clip(1.0 + 0.15 * rng.standard_normal(year_hours), 0.0, None)
    raw = seasonal * daily * noise
    pos = np.clip(raw, 0.0, None)
    neg = np.clip(raw, None, 0.0)
    dt = 3600.0
    pos_sum = pos.sum() * dt
    neg_sum = -neg.sum() * dt
    demand = np.zeros(year_hours)
    if pos_sum > 0.0 and heat_total > 0.0:
        demand += pos * (heat_total / pos_sum)
    if neg_sum > 0.0 and cold_total > 0.0:
        demand += neg * (cold_total / neg_sum)
    return demand


RESULT_COLUMNS = [
    "t", "u_applied", "mode", "P_bilinear", "P_linear", "D", "B_past",
    "warm_borehole_truth", "warm_borehole_est",
    "cold_borehole_truth", "cold_borehole_est",
    "slack", "ocp_cost", "solve_ms",
    "y_warm_r0", "y_warm_far", "y_cold_r0", "y_cold_far",
]


def write_results(path: str, records: list[dict], summary: dict | None = None) -> None:
    """Write per-step records as CSV plus a sidecar summary text file."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(RESULT_COLUMNS)
            for rec in records:
                writer.writerow([_format_cell(rec.get(col)) for col in RESULT_COLUMNS])
    except OSError as exc:
        raise ScenarioError(f"cannot write results to {path!r}: {exc}") from exc
    if summary is not None:
        with open(path + ".summary.txt", "w", encoding="utf-8") as fh:
            for key, value in summary.items():
                fh.write(f"{key}: {value}\n")


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))  # shortest lossless form, numpy scalars included
    return str(value)


def read_results(path: str) -> list[dict]:
    """Re-parse a results CSV into per-step records (floats where possible)."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        records = []
        for row in reader:
            rec = {}
            for key, cell in row.items():
                if key == "mode":
                    rec[key] = cell
                elif cell in ("", None):
                    rec[key] = None
                else:
                    rec[key] = float(cell)
            records.append(rec)
    return records
