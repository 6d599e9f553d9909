"""AIS ingestion: AIVDM decoding, trajectories, port calls and voyages."""

import logging
import re
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from invasionrisk.core.climate import PortRecord
from invasionrisk.utils.exceptions import (
    AisDecodeError,
    ChecksumError,
    ConfigurationError,
    DataIntegrityError,
    EmptyDatasetError,
    NmeaParseError,
    OrderingError,
    UnavailableFieldError,
    UnsupportedSentenceError,
)
from invasionrisk.utils.helpers import month_index_of

logger = logging.getLogger(__name__)

EARTH_RADIUS_KM = 6371.0088

TALKERS = ("!AIVDM", "!AIVDO")
CHANNELS = ("A", "B", "1", "2", "")
POSITION_TYPES = (1, 2, 3, 18)
STATIC_TYPE = 5

LAT_UNAVAILABLE = 91 * 600000
LON_UNAVAILABLE = 181 * 600000
SOG_UNAVAILABLE = 1023
COG_UNAVAILABLE = 3600
POSITION_BITS = 168
STATIC_BITS = 232

CSV_COLUMNS = ("mmsi", "timestamp", "lat", "lon", "sog", "cog")
AIS_FORMATS = ("auto", "nmea", "csv")

_TAG_BLOCK = re.compile(r"^\\(?P<body>[^\\*]*)\*(?P<sum>[0-9A-Fa-f]{2})\\")


@dataclass(frozen=True)
class AisMessage:
    mmsi: int
    timestamp: float
    lat: float
    lon: float
    sog: float
    cog: Optional[float] = None

    def __post_init__(self) -> None:
        if not 0 <= self.mmsi <= 999999999:
            raise DataIntegrityError(f"MMSI {self.mmsi} is not a 9-digit identifier")
        if not -90.0 <= self.lat <= 90.0:
            raise DataIntegrityError(f"Latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon < 180.0:
            raise DataIntegrityError(f"Longitude {self.lon} outside [-180, 180)")
        if not 0.0 <= self.sog < 102.3:
            raise DataIntegrityError(f"Speed {self.sog} outside [0, 102.3)")
        if self.cog is not None and not 0.0 <= self.cog < 360.0:
            raise DataIntegrityError(f"Course {self.cog} outside [0, 360)")


@dataclass(frozen=True)
class CallParams:
    radius_km: float = 10.0
    sog_max_knots: float = 1.0
    min_dwell_hours: float = 2.0
    gap_split_hours: float = 6.0

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if not value > 0:
                raise ConfigurationError(f"{name} must be > 0, got {value}")


@dataclass(frozen=True)
class PortCall:
    mmsi: int
    port_id: str
    arrival: float
    departure: float

    def __post_init__(self) -> None:
        if not self.departure > self.arrival:
            raise DataIntegrityError(
                f"Call of {self.mmsi} at {self.port_id} departs before it arrives"
            )

    @property
    def dwell_hours(self) -> float:
        return (self.departure - self.arrival) / 3600.0


@dataclass(frozen=True)
class Voyage:
    mmsi: int
    origin: str
    destination: str
    depart: float
    arrive: float
    dwell_hours: float = 0.0

    def __post_init__(self) -> None:
        if self.origin == self.destination:
            raise DataIntegrityError(
                f"Voyage of {self.mmsi} starts and ends at {self.origin}"
            )
        if not self.arrive > self.depart:
            raise DataIntegrityError(
                f"Voyage of {self.mmsi} {self.origin}->{self.destination} "
                "arrives before it departs"
            )

    @property
    def month_index(self) -> int:
        return month_index_of(self.arrive)


@dataclass(frozen=True)
class VesselInfo:
    mmsi: int
    callsign: str
    shipname: str


class NmeaFragment(NamedTuple):
    bits: str
    fragment_count: int
    fragment_number: int
    message_id: str
    channel: str
    timestamp: Optional[float]


class PositionFields(NamedTuple):
    """Raw integers of a position report before scaling."""

    msg_type: int
    mmsi: int
    sog: int
    lon: int
    lat: int
    cog: int


@dataclass
class IngestStats:
    lines: int = 0
    decoded: int = 0
    checksum_failures: int = 0
    parse_failures: int = 0
    unsupported: int = 0
    skipped_types: int = 0
    unavailable: int = 0
    untimed: int = 0
    static_reports: int = 0

    @property
    def skipped(self) -> int:
        return (
            self.checksum_failures
            + self.parse_failures
            + self.unsupported
            + self.skipped_types
            + self.unavailable
            + self.untimed
        )

    def as_dict(self) -> Dict[str, int]:
        return {**asdict(self), "skipped": self.skipped}


@dataclass
class AisIngest:
    messages: List[AisMessage] = field(default_factory=list)
    vessels: Dict[int, VesselInfo] = field(default_factory=dict)
    stats: IngestStats = field(default_factory=IngestStats)


# 6-bit armoring


def _char_value(char: str) -> int:
    code = ord(char)
    if 48 <= code <= 87:
        return code - 48
    if 96 <= code <= 119:
        return code - 56
    raise NmeaParseError(f"Invalid payload character {char!r}")


def disarmor(payload: str, fill_bits: int = 0) -> str:
    """Payload characters to a '0'/'1' bit string, fill bits removed."""
    if not 0 <= fill_bits <= 5:
        raise NmeaParseError(f"Fill bits {fill_bits} outside 0..5")
    bits = "".join(format(_char_value(c), "06b") for c in payload)
    if fill_bits > len(bits):
        raise NmeaParseError("Fill bits exceed payload length")
    return bits[: len(bits) - fill_bits] if fill_bits else bits


def armor(bits: str) -> Tuple[str, int]:
    """Bit string to payload characters and the number of fill bits."""
    fill = (-len(bits)) % 6
    padded = bits + "0" * fill
    chars = []
    for i in range(0, len(padded), 6):
        value = int(padded[i : i + 6], 2)
        chars.append(chr(value + 48 if value < 40 else value + 56))
    return "".join(chars), fill


def nmea_checksum(body: str) -> str:
    value = 0
    for char in body:
        value ^= ord(char)
    return f"{value:02X}"


def _unsigned(bits: str, start: int, length: int) -> int:
    return int(bits[start : start + length], 2)


def _signed(bits: str, start: int, length: int) -> int:
    value = _unsigned(bits, start, length)
    return value - (1 << length) if bits[start] == "1" else value


def _text(bits: str, start: int, length: int) -> str:
    chars = []
    for i in range(start, start + length, 6):
        value = int(bits[i : i + 6], 2)
        chars.append(chr(value + 64 if value < 32 else value))
    return "".join(chars).split("@", 1)[0].rstrip()


# Sentences


def split_timestamp(line: str) -> Tuple[Optional[float], str]:
    """Separate an NMEA 4.10 tag block or leading time token from the sentence."""
    text = line.strip()
    timestamp: Optional[float] = None

    match = _TAG_BLOCK.match(text)
    if match:
        body = match.group("body")
        if nmea_checksum(body) != match.group("sum").upper():
            raise ChecksumError("Tag block checksum mismatch")
        for part in body.split(","):
            key, _, value = part.partition(":")
            if key == "c":
                try:
                    timestamp = float(value)
                except ValueError:
                    raise NmeaParseError(f"Bad tag block time {value!r}")
        return timestamp, text[match.end() :]

    if not text.startswith(("!", "$")):
        token, _, rest = text.partition(" ")
        if rest:
            timestamp = _parse_time_token(token)
            text = rest.strip()
    return timestamp, text


def _parse_time_token(token: str) -> float:
    try:
        return float(token)
    except ValueError:
        pass
    try:
        parsed = pd.Timestamp(token)
    except ValueError:
        raise NmeaParseError(f"Unrecognised time token {token!r}")
    if parsed.tzinfo is None:
        parsed = parsed.tz_localize("UTC")
    return parsed.timestamp()


def decode_nmea_line(line: str) -> NmeaFragment:
    """Validate one sentence and return its de-armored payload fragment."""
    timestamp, sentence = split_timestamp(line)
    star = sentence.rfind("*")
    if not sentence or sentence[0] not in "!$" or star < 0:
        if sentence.startswith(("!", "$")):
            raise NmeaParseError("Sentence has no checksum")
        raise UnsupportedSentenceError("Not an NMEA sentence")

    supplied = sentence[star + 1 :]
    # hex digits compared case-insensitively
    if len(supplied) != 2 or nmea_checksum(sentence[1:star]) != supplied.upper():
        raise ChecksumError(f"Checksum mismatch, got {supplied!r}")

    fields = sentence[:star].split(",")
    if fields[0] not in TALKERS:
        raise UnsupportedSentenceError(f"Unsupported sentence {fields[0]!r}")
    if len(fields) != 7:
        raise NmeaParseError(f"Expected 7 fields, got {len(fields)}")

    _, count_s, number_s, message_id, channel, payload, fill_s = fields
    try:
        count, number, fill = int(count_s), int(number_s), int(fill_s)
    except ValueError:
        raise NmeaParseError("Non-numeric fragment metadata")
    if not 1 <= count <= 9 or not 1 <= number <= count:
        raise NmeaParseError(f"Fragment {number} of {count} is invalid")
    if message_id and not message_id.isdigit():
        raise NmeaParseError(f"Bad sequential message id {message_id!r}")
    if channel not in CHANNELS:
        raise NmeaParseError(f"Unknown channel {channel!r}")
    if not payload:
        raise NmeaParseError("Empty payload")

    return NmeaFragment(
        bits=disarmor(payload, fill),
        fragment_count=count,
        fragment_number=number,
        message_id=message_id,
        channel=channel,
        timestamp=timestamp,
    )


class FragmentAssembler:
    """Reassembles multi-fragment messages keyed by (channel, message id)."""

    def __init__(self) -> None:
        self._slots: Dict[Tuple[str, str], List[NmeaFragment]] = {}
        self.discarded = 0

    def add(self, fragment: NmeaFragment) -> Optional[Tuple[str, Optional[float]]]:
        """Bits and time of a complete message, or None while incomplete.

        A first fragment arriving while its slot is still pending replaces
        the pending group, which is counted in ``discarded``.
        """
        if fragment.fragment_count == 1:
            return fragment.bits, fragment.timestamp

        key = (fragment.channel, fragment.message_id)
        slot = self._slots.get(key)
        if fragment.fragment_number == 1:
            if slot is not None:
                self.discarded += 1
                logger.debug(f"Discarding incomplete group {key} replaced by a new first fragment")
            self._slots[key] = [fragment]
            return None
        if (
            slot is None
            or slot[-1].fragment_number + 1 != fragment.fragment_number
            or slot[0].fragment_count != fragment.fragment_count
        ):
            self._slots.pop(key, None)
            raise NmeaParseError(
                f"Fragment {fragment.fragment_number}/{fragment.fragment_count} "
                "arrived out of order"
            )
        slot.append(fragment)
        if fragment.fragment_number < fragment.fragment_count:
            return None
        del self._slots[key]
        return "".join(f.bits for f in slot), slot[0].timestamp

    @property
    def pending(self) -> int:
        return len(self._slots)


def message_type(bits: str) -> int:
    if len(bits) < 6:
        raise NmeaParseError("Payload shorter than a message type")
    return _unsigned(bits, 0, 6)


def position_fields(bits: str) -> Optional[PositionFields]:
    """Raw fields of a type 1/2/3/18 report; None for other types."""
    msg_type = message_type(bits)
    if msg_type not in POSITION_TYPES:
        return None
    if len(bits) < POSITION_BITS:
        raise NmeaParseError(
            f"Type {msg_type} payload has {len(bits)} bits, expected {POSITION_BITS}"
        )
    mmsi = _unsigned(bits, 8, 30)
    if msg_type == 18:
        return PositionFields(
            msg_type,
            mmsi,
            sog=_unsigned(bits, 46, 10),
            lon=_signed(bits, 57, 28),
            lat=_signed(bits, 85, 27),
            cog=_unsigned(bits, 112, 12),
        )
    return PositionFields(
        msg_type,
        mmsi,
        sog=_unsigned(bits, 50, 10),
        lon=_signed(bits, 61, 28),
        lat=_signed(bits, 89, 27),
        cog=_unsigned(bits, 116, 12),
    )


def decode_position_report(bits: str, timestamp: float = 0.0) -> Optional[AisMessage]:
    """Scaled position report, or None when the type is not a position report."""
    raw = position_fields(bits)
    if raw is None:
        return None
    if raw.lat == LAT_UNAVAILABLE or raw.lon == LON_UNAVAILABLE:
        raise UnavailableFieldError(f"Position not available for {raw.mmsi}")
    if raw.sog == SOG_UNAVAILABLE:
        raise UnavailableFieldError(f"Speed not available for {raw.mmsi}")
    lat = raw.lat / 600000.0
    lon = raw.lon / 600000.0
    if not -90.0 <= lat <= 90.0 or not -180.0 <= lon < 180.0:
        raise NmeaParseError(f"Position ({lat}, {lon}) out of range for {raw.mmsi}")
    cog = None if raw.cog >= COG_UNAVAILABLE else raw.cog / 10.0
    return AisMessage(
        mmsi=raw.mmsi, timestamp=timestamp, lat=lat, lon=lon, sog=raw.sog / 10.0, cog=cog
    )


def decode_static_report(bits: str) -> Optional[VesselInfo]:
    """Call sign and ship name of a type 5 report; None if absent or short."""
    if len(bits) < STATIC_BITS or message_type(bits) != STATIC_TYPE:
        return None
    return VesselInfo(
        mmsi=_unsigned(bits, 8, 30),
        callsign=_text(bits, 70, 42),
        shipname=_text(bits, 112, 120),
    )


def read_nmea_lines(lines: Iterable[str]) -> AisIngest:
    """Decode a stream of sentences, counting and skipping bad lines."""
    result = AisIngest()
    stats = result.stats
    assembler = FragmentAssembler()

    for number, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        stats.lines += 1
        try:
            fragment = decode_nmea_line(line)
            complete = assembler.add(fragment)
            if complete is None:
                continue
            bits, timestamp = complete
            msg_type = message_type(bits)
            # Static and voyage data
            if msg_type == STATIC_TYPE:
                info = decode_static_report(bits)
                if info is None:
                    stats.skipped_types += 1
                else:
                    stats.static_reports += 1
                    result.vessels[info.mmsi] = info
                continue
            if msg_type not in POSITION_TYPES:
                stats.skipped_types += 1
                continue
            # Positions need a receive time
            if timestamp is None:
                position_fields(bits)
                stats.untimed += 1
                continue
            message = decode_position_report(bits, timestamp)
            if message is not None:
                result.messages.append(message)
                stats.decoded += 1
        except ChecksumError as e:
            stats.checksum_failures += 1
            logger.debug(f"line {number}: {e}")
        except UnsupportedSentenceError as e:
            stats.unsupported += 1
            logger.debug(f"line {number}: {e}")
        except UnavailableFieldError as e:
            stats.unavailable += 1
            logger.debug(f"line {number}: {e}")
        except (AisDecodeError, DataIntegrityError) as e:
            stats.parse_failures += 1
            logger.debug(f"line {number}: {e}")

    # Unfinished and replaced groups
    stats.parse_failures += assembler.pending + assembler.discarded
    return result


def read_nmea(path: Path) -> AisIngest:
    with open(path, "r", encoding="utf-8", errors="replace") as f:
        result = read_nmea_lines(f)
    logger.info(f"Decoded {result.stats.decoded} of {result.stats.lines} lines in {path}")
    return result


def read_decoded_csv(path: Path) -> AisIngest:
    """Read pre-decoded messages ``mmsi,timestamp,lat,lon,sog,cog``."""
    try:
        frame = pd.read_csv(path, dtype={"timestamp": str}, comment="#", encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise EmptyDatasetError("AIS CSV is empty", source=str(path))
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataIntegrityError(f"Unreadable AIS CSV: {e}", source=str(path))
    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise DataIntegrityError(
            f"Missing columns {missing} in header", source=str(path), line=1
        )

    result = AisIngest()
    stats = result.stats
    for offset, row in enumerate(frame[list(CSV_COLUMNS)].itertuples(index=False)):
        line = offset + 2
        stats.lines += 1
        try:
            mmsi = int(row.mmsi)
            timestamp = _parse_time_token(str(row.timestamp).strip())
            lat, lon, sog = float(row.lat), float(row.lon), float(row.sog)
        except (TypeError, ValueError, NmeaParseError):
            raise DataIntegrityError("Unparseable AIS row", source=str(path), line=line)
        if not np.all(np.isfinite([timestamp, lat, lon, sog])):
            raise DataIntegrityError(
                "Non-finite timestamp, lat, lon or sog", source=str(path), line=line
            )
        if lat == 91.0 or lon == 181.0 or sog >= 102.3:
            stats.unavailable += 1
            continue
        cog = None if pd.isna(row.cog) or float(row.cog) >= 360.0 else float(row.cog)
        try:
            result.messages.append(AisMessage(mmsi, timestamp, lat, lon, sog, cog))
        except DataIntegrityError as e:
            raise DataIntegrityError(e.message, source=str(path), line=line)
        stats.decoded += 1

    logger.info(f"Read {stats.decoded} decoded AIS messages from {path}")
    return result


def detect_ais_format(path: Path) -> str:
    with open(path, "r", encoding="utf-8", errors="replace") as f:
        for line in f:
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            return "nmea" if "!AIVD" in text or text.startswith(("!", "\\")) else "csv"
    raise EmptyDatasetError("AIS input has no content", source=str(path))


def read_ais(path: Path, fmt: str = "auto") -> AisIngest:
    if fmt not in AIS_FORMATS:
        raise ConfigurationError(f"ais_format must be one of {AIS_FORMATS}, got {fmt!r}")
    if fmt == "auto":
        fmt = detect_ais_format(path)
    return read_nmea(path) if fmt == "nmea" else read_decoded_csv(path)


# Trajectories


def haversine_km(
    lat1: np.ndarray, lon1: np.ndarray, lat2: np.ndarray, lon2: np.ndarray
) -> np.ndarray:
    """Great-circle distance in kilometres (broadcasting)."""
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dphi = p2 - p1
    dlam = np.radians(lon2) - np.radians(lon1)
    a = np.sin(dphi / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


class PortLocator:
    """Port coordinates ordered by port_id so argmin breaks ties lexicographically."""

    def __init__(self, ports: Sequence[PortRecord]):
        ordered = sorted(ports, key=lambda p: p.port_id)
        self.port_ids = [p.port_id for p in ordered]
        self.lat = np.array([p.latitude for p in ordered], dtype=float)
        self.lon = np.array([p.longitude for p in ordered], dtype=float)

    def distances(self, lat: np.ndarray, lon: np.ndarray) -> np.ndarray:
        return haversine_km(lat[:, None], lon[:, None], self.lat[None, :], self.lon[None, :])


def _track_arrays(track: Sequence[AisMessage]) -> Tuple[np.ndarray, ...]:
    ts = np.array([m.timestamp for m in track], dtype=float)
    lat = np.array([m.lat for m in track], dtype=float)
    lon = np.array([m.lon for m in track], dtype=float)
    sog = np.array([m.sog for m in track], dtype=float)
    return ts, lat, lon, sog


def _runs(mask: np.ndarray) -> List[Tuple[int, int]]:
    runs, start = [], None
    for i, flag in enumerate(mask):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(mask) - 1))
    return runs


def detect_port_calls(
    track: Sequence[AisMessage],
    ports: Sequence[PortRecord],
    params: Optional[CallParams] = None,
    locator: Optional[PortLocator] = None,
) -> List[PortCall]:
    """Stationary runs near a port, split at transmission gaps."""
    params = params or CallParams()
    if not track:
        return []
    if len({m.mmsi for m in track}) != 1:
        raise DataIntegrityError("Track mixes several vessels")
    ts, lat, lon, sog = _track_arrays(track)
    if np.any(np.diff(ts) < 0):
        raise OrderingError(f"Track of {track[0].mmsi} is not sorted by time")

    locator = locator or PortLocator(ports)
    if not locator.port_ids:
        return []
    dist = locator.distances(lat, lon)
    near = dist <= params.radius_km
    candidate = near.any(axis=1) & (sog <= params.sog_max_knots)

    gaps = np.flatnonzero(np.diff(ts) > params.gap_split_hours * 3600.0) + 1
    bounds = np.concatenate([[0], gaps, [len(ts)]])
    calls: List[PortCall] = []
    min_dwell = params.min_dwell_hours * 3600.0
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        for start, end in _runs(candidate[lo:hi]):
            first, last = lo + start, lo + end
            span = ts[last] - ts[first]
            if span < min_dwell or span <= 0:
                continue
            mid = first + (last - first) // 2
            masked = np.where(near[mid], dist[mid], np.inf)
            port_id = locator.port_ids[int(np.argmin(masked))]
            calls.append(PortCall(track[0].mmsi, port_id, float(ts[first]), float(ts[last])))
    return calls


def extract_voyages(calls: Sequence[PortCall]) -> List[Voyage]:
    """Chain consecutive calls into voyages, merging repeated calls at one port."""
    return chain_voyages(calls)[0]


def chain_voyages(calls: Sequence[PortCall]) -> Tuple[List[Voyage], int]:
    """Voyages between consecutive calls and the number of zero-length legs dropped.

    Duplicated timestamps can end one call at the instant the next begins;
    such legs carry no transit time and are skipped.
    """
    if not calls:
        return [], 0
    if len({c.mmsi for c in calls}) != 1:
        raise DataIntegrityError("Calls mix several vessels")
    for prev, nxt in zip(calls, calls[1:]):
        if nxt.arrival < prev.arrival:
            raise OrderingError(f"Calls of {prev.mmsi} are not sorted by arrival")
        if nxt.arrival < prev.departure:
            raise DataIntegrityError(
                f"Calls of {prev.mmsi} at {prev.port_id} and {nxt.port_id} overlap"
            )

    # Merge repeated calls at one port
    merged: List[PortCall] = [calls[0]]
    for call in calls[1:]:
        last = merged[-1]
        if call.port_id == last.port_id:
            merged[-1] = PortCall(last.mmsi, last.port_id, last.arrival, call.departure)
        else:
            merged.append(call)

    voyages: List[Voyage] = []
    dropped = 0
    for a, b in zip(merged, merged[1:]):
        if not b.arrival > a.departure:
            dropped += 1
            logger.debug(f"Skipping zero-length leg {a.port_id}->{b.port_id} of {a.mmsi}")
            continue
        voyages.append(
            Voyage(
                mmsi=a.mmsi,
                origin=a.port_id,
                destination=b.port_id,
                depart=a.departure,
                arrive=b.arrival,
                dwell_hours=b.dwell_hours,
            )
        )
    return voyages, dropped


def group_tracks(messages: Iterable[AisMessage]) -> Dict[int, List[AisMessage]]:
    """Per-vessel tracks sorted by time (remaining fields break ties)."""
    tracks: Dict[int, List[AisMessage]] = defaultdict(list)
    for message in messages:
        tracks[message.mmsi].append(message)
    for track in tracks.values():
        track.sort(key=lambda m: (m.timestamp, m.lat, m.lon, m.sog, -1.0 if m.cog is None else m.cog))
    return dict(sorted(tracks.items()))


def ingest_voyages(
    messages: Iterable[AisMessage],
    ports: Sequence[PortRecord],
    params: Optional[CallParams] = None,
    threads: int = 1,
) -> Tuple[List[PortCall], List[Voyage]]:
    """Port calls and voyages of every vessel, ordered by vessel then time."""
    params = params or CallParams()
    tracks = group_tracks(messages)
    locator = PortLocator(ports)

    def _one(track: List[AisMessage]) -> Tuple[List[PortCall], List[Voyage], int]:
        calls = detect_port_calls(track, ports, params, locator)
        return (calls, *chain_voyages(calls))

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(_one, tracks.values()))

    calls = [c for vessel_calls, _, _ in results for c in vessel_calls]
    voyages = [v for _, vessel_voyages, _ in results for v in vessel_voyages]
    dropped = sum(n for _, _, n in results)
    if dropped:
        logger.warning(f"Skipped {dropped} zero-length legs from duplicated timestamps")
    logger.info(
        f"{len(tracks)} vessels, {len(calls)} port calls, {len(voyages)} voyages"
    )
    return calls, voyages
