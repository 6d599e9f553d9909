"""Synthetic Nova Scotia scenario: ports, climates and two years of AIS traffic.

Climate parameters are chosen so the standard pipeline reproduces the
scenario's similarity levels (Rotterdam/Halifax near 0.80, Gothenburg/Sydney
near 0.77) while six subtropical ports form a separate environmental group.
Traffic combines transatlantic loops into Halifax, feeders through St. John's,
and a coastal Halifax -> Canso -> Sydney circuit.
"""

import logging
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from invasionrisk.core.climate import MONTHS
from invasionrisk.utils.helpers import format_timestamp, month_index_of, save_json_file

logger = logging.getLogger(__name__)

HOUR = 3600.0
START = datetime(2023, 1, 1, tzinfo=timezone.utc).timestamp()
END = datetime(2025, 1, 1, tzinfo=timezone.utc).timestamp()

DEFAULT_DWELL_HOURS = 24
SPRING_DWELL_HOURS = 60
SPRING_MONTHS = (3, 4, 5)
PORT_REPORT_HOURS = 2
TRANSIT_OFFSET_DEG = 0.5
HIGH_LATITUDE = 40.0
WARMING_DEG = 1.0


@dataclass(frozen=True)
class FixturePort:
    port_id: str
    name: str
    latitude: float
    longitude: float
    capacity: float
    sst: Tuple[float, float, int]
    sss: Tuple[float, float, int]


# (mean, amplitude, peak month 0..11) per variable; southern peaks sit in austral summer.
FIXTURE_PORTS: Tuple[FixturePort, ...] = (
    FixturePort("HFX", "Halifax", 44.65, -63.57, 120.0, (9.0, 7.0, 7), (31.0, 0.8, 3)),
    FixturePort("SYD", "Sydney NS", 46.14, -60.19, 40.0, (8.7, 7.15, 7), (30.8, 0.85, 3)),
    FixturePort("CNS", "Canso", 45.33, -60.99, 15.0, (8.85, 7.05, 7), (30.9, 0.825, 3)),
    FixturePort("RTM", "Rotterdam", 51.95, 4.13, 300.0, (9.4, 6.9, 7), (31.2, 0.775, 3)),
    FixturePort("GOT", "Gothenburg", 57.70, 11.95, 150.0, (9.15, 7.2, 7), (30.55, 0.875, 3)),
    FixturePort("SJN", "St. John's", 47.56, -52.71, 35.0, (8.3, 6.95, 7), (31.45, 0.75, 3)),
    FixturePort("MIA", "Miami", 25.77, -80.19, 200.0, (27.0, 2.5, 7), (36.0, 0.35, 3)),
    FixturePort("SSZ", "Santos", -23.96, -46.33, 180.0, (25.0, 2.8, 1), (35.2, 0.4, 9)),
    FixturePort("DUR", "Durban", -29.87, 31.03, 160.0, (24.2, 3.0, 1), (35.4, 0.35, 9)),
    FixturePort("SIN", "Singapore", 1.26, 103.84, 400.0, (28.4, 1.2, 7), (34.0, 0.3, 3)),
    FixturePort("JED", "Jeddah", 21.48, 39.17, 150.0, (28.0, 3.2, 7), (37.5, 0.4, 3)),
    FixturePort("HNL", "Honolulu", 21.31, -157.87, 60.0, (25.6, 1.8, 7), (35.0, 0.3, 3)),
)

NOVA_SCOTIA = ("HFX", "SYD", "CNS")


@dataclass(frozen=True)
class Route:
    """A vessel looping over stops; each stop carries the sailing hours to the next."""

    name: str
    mmsi: int
    stops: Tuple[Tuple[str, int], ...]
    offset_hours: int = 0
    months: Optional[Tuple[int, ...]] = None


ROUTES: Tuple[Route, ...] = (
    Route("liner-1", 244100001, (("RTM", 216), ("HFX", 216)), 0),
    Route("liner-2", 244100002, (("RTM", 216), ("HFX", 216)), 160),
    Route("liner-3", 244100003, (("RTM", 216), ("HFX", 216)), 320),
    Route("spring-liner", 244110000, (("RTM", 216), ("HFX", 216)), 80, (2, 3, 4, 5)),
    Route("feeder-hfx-1", 316200001, (("RTM", 168), ("SJN", 48), ("HFX", 216)), 0),
    Route("feeder-hfx-2", 316200002, (("RTM", 168), ("SJN", 48), ("HFX", 216)), 250),
    Route("feeder-syd-1", 316200003, (("RTM", 168), ("SJN", 60), ("SYD", 220)), 100),
    Route("feeder-syd-2", 316200004, (("RTM", 168), ("SJN", 60), ("SYD", 220)), 350),
    Route("coastal-1", 316300001, (("HFX", 14), ("CNS", 10), ("SYD", 20)), 0),
    Route("coastal-2", 316300002, (("HFX", 14), ("CNS", 10), ("SYD", 20)), 60),
    Route("coastal-summer", 316310000, (("HFX", 14), ("CNS", 10), ("SYD", 20)), 30, (7, 8)),
    Route("baltic-1", 265400001, (("GOT", 240), ("SYD", 240)), 0),
    Route("baltic-2", 265400002, (("GOT", 240), ("SYD", 240)), 260),
    Route("spring-baltic", 265410000, (("GOT", 230), ("HFX", 230)), 40, (2, 3, 4, 5)),
    Route(
        "southern-loop",
        538500001,
        (("MIA", 300), ("SSZ", 320), ("DUR", 360), ("SIN", 300), ("JED", 500)),
        0,
    ),
    Route("red-sea", 538500002, (("JED", 220), ("SIN", 220)), 50),
    Route("pacific", 538500003, (("HNL", 400), ("MIA", 400)), 120),
    Route("euro-gulf", 244500001, (("RTM", 260), ("MIA", 260)), 200),
)


@dataclass(frozen=True)
class FixtureFiles:
    root: Path
    ports: Path
    climate: Path
    scenario_climate: Path
    ais: Path
    config: Path


def _series(mean: float, amplitude: float, peak: int) -> List[float]:
    return [
        mean + amplitude * math.cos(2 * math.pi * (t - peak) / MONTHS)
        for t in range(MONTHS)
    ]


def climate_frame(warming: float = 0.0) -> pd.DataFrame:
    """Long-format climate; warming is added to sst at high-latitude ports."""
    rows = []
    for port in FIXTURE_PORTS:
        shift = warming if abs(port.latitude) >= HIGH_LATITUDE else 0.0
        for variable, params in (("sss", port.sss), ("sst", port.sst)):
            values = _series(*params)
            if variable == "sst":
                values = [v + shift for v in values]
            for month, value in enumerate(values):
                rows.append((port.port_id, variable, month, value))
    return pd.DataFrame(rows, columns=["port_id", "variable", "month", "value"])


def registry_frame() -> pd.DataFrame:
    return pd.DataFrame(
        [(p.port_id, p.name, p.latitude, p.longitude, p.capacity) for p in FIXTURE_PORTS],
        columns=["port_id", "name", "latitude", "longitude", "capacity"],
    )


def dwell_hours(origin: Optional[str], port: str, arrival: float) -> int:
    """Long stays only for transatlantic arrivals at Halifax in spring."""
    month = month_index_of(arrival) % 12
    if origin == "RTM" and port == "HFX" and month in SPRING_MONTHS:
        return SPRING_DWELL_HOURS
    return DEFAULT_DWELL_HOURS


def _season_windows(route: Route) -> List[Tuple[int, float, float]]:
    """(mmsi, start, end) per active period; seasonal routes get one vessel per year."""
    if route.months is None:
        return [(route.mmsi, START, END)]
    windows = []
    for year in (2023, 2024):
        first, last = min(route.months), max(route.months)
        start = datetime(year, first + 1, 1, tzinfo=timezone.utc).timestamp()
        end_year, end_month = (year, last + 2) if last < 11 else (year + 1, 1)
        end = datetime(end_year, end_month, 1, tzinfo=timezone.utc).timestamp()
        windows.append((route.mmsi + year % 100, start, end))
    return windows


def simulate_route(route: Route, rng: np.random.Generator) -> List[Tuple[int, float, float, float, float, float]]:
    """AIS rows (mmsi, timestamp, lat, lon, sog, cog) for one route."""
    coords = {p.port_id: (p.latitude, p.longitude) for p in FIXTURE_PORTS}
    rows = []
    for mmsi, start, end in _season_windows(route):
        clock = start + (route.offset_hours + int(rng.integers(0, 6))) * HOUR
        origin: Optional[str] = None
        k = 0
        while True:
            port, sail = route.stops[k % len(route.stops)]
            dwell = dwell_hours(origin, port, clock)
            departure = clock + dwell * HOUR
            if departure >= end:
                break
            lat0, lon0 = coords[port]
            for step in range(0, dwell + 1, PORT_REPORT_HOURS):
                rows.append(
                    (
                        mmsi,
                        clock + step * HOUR,
                        round(lat0 + float(rng.uniform(-0.004, 0.004)), 6),
                        round(lon0 + float(rng.uniform(-0.004, 0.004)), 6),
                        round(float(rng.uniform(0.0, 0.4)), 1),
                        None,
                    )
                )
            next_port, _ = route.stops[(k + 1) % len(route.stops)]
            leg = sail + int(rng.integers(-3, 4))
            lat1, lon1 = coords[next_port]
            cog = round(math.degrees(math.atan2(lon1 - lon0, lat1 - lat0)) % 360.0, 1)
            rows.append((mmsi, departure + 2 * HOUR, lat0 + TRANSIT_OFFSET_DEG, lon0, 12.5, cog))
            arrival = departure + leg * HOUR
            rows.append((mmsi, arrival - 2 * HOUR, lat1 + TRANSIT_OFFSET_DEG, lon1, 11.0, cog))
            origin, clock, k = port, arrival, k + 1
    return rows


def ais_frame(seed: int = 0, routes: Sequence[Route] = ROUTES) -> pd.DataFrame:
    rng = np.random.default_rng(seed)
    rows = [row for route in routes for row in simulate_route(route, rng)]
    frame = pd.DataFrame(rows, columns=["mmsi", "timestamp", "lat", "lon", "sog", "cog"])
    frame = frame.sort_values(["timestamp", "mmsi"], kind="mergesort").reset_index(drop=True)
    frame["timestamp"] = [format_timestamp(ts) for ts in frame["timestamp"]]
    return frame


def fixture_config() -> Dict[str, object]:
    return {
        "inputs": {
            "ports": "ports.csv",
            "climate": "climate.csv",
            "scenario_climate": "climate_warming.csv",
            "ais": "ais.csv",
            "ais_format": "csv",
        },
        "clustering": {"min_cluster_size": 5, "min_samples": 5},
        "kernel": {"eta": 1.0, "beta": 0.5, "clamp": True, "similarity_source": "base"},
        "forecast": {"tau": 0.0, "delta": 1, "lags": 3},
        "risk": {
            "gamma": 0.6,
            "hops": 3,
            "path_hops": 3,
            "top_n": 20,
            "what_if": [
                {"name": "halifax-inbound-inspection", "multiplier": 0.5, "inbound": ["HFX"]}
            ],
            "target_reduction": 0.2,
        },
        "output_dir": "out",
    }


def generate_fixture(out_dir: Path, seed: int = 0) -> FixtureFiles:
    """Write the scenario inputs and a ready-to-run config.json into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = FixtureFiles(
        root=out_dir,
        ports=out_dir / "ports.csv",
        climate=out_dir / "climate.csv",
        scenario_climate=out_dir / "climate_warming.csv",
        ais=out_dir / "ais.csv",
        config=out_dir / "config.json",
    )
    registry_frame().to_csv(files.ports, index=False, lineterminator="\n")
    climate_frame().to_csv(files.climate, index=False, lineterminator="\n")
    climate_frame(WARMING_DEG).to_csv(files.scenario_climate, index=False, lineterminator="\n")
    ais = ais_frame(seed)
    ais.to_csv(files.ais, index=False, lineterminator="\n")
    config = fixture_config()
    config["seed"] = seed
    save_json_file(config, files.config)
    logger.info(f"Wrote fixture with {len(FIXTURE_PORTS)} ports and {len(ais)} AIS rows to {out_dir}")
    return files
