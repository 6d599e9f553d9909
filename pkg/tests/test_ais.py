import pandas as pd
import pytest
from hypothesis import given
from hypothesis import strategies as st

from invasionrisk.core.ais import (
    AisMessage,
    CallParams,
    PortCall,
    armor,
    chain_voyages,
    decode_nmea_line,
    decode_position_report,
    detect_ais_format,
    detect_port_calls,
    disarmor,
    extract_voyages,
    ingest_voyages,
    nmea_checksum,
    read_ais,
    read_nmea_lines,
)
from invasionrisk.core.climate import PortRecord
from invasionrisk.utils.exceptions import (
    ChecksumError,
    ConfigurationError,
    DataIntegrityError,
    NmeaParseError,
    OrderingError,
    UnavailableFieldError,
    UnsupportedSentenceError,
)

HOUR = 3600.0
T0 = 1_700_000_000.0
HFX = PortRecord("HFX", "Halifax", 44.65, -63.57)
SYD = PortRecord("SYD", "Sydney", 46.14, -60.19)
PORTS = [HFX, SYD]
SENTENCE = "!AIVDM,1,1,,A,139Lg00P1T0a<f0NqRP4d?wp0000,0*6D"


@pytest.fixture
def golden(data_dir):
    with open(data_dir / "aivdm_golden.nmea", encoding="utf-8") as f:
        return read_nmea_lines(f)


def test_golden_counters(golden):
    assert golden.stats.as_dict() == {
        "lines": 20,
        "decoded": 10,
        "checksum_failures": 1,
        "parse_failures": 1,
        "unsupported": 1,
        "skipped_types": 1,
        "unavailable": 2,
        "untimed": 1,
        "static_reports": 2,
        "skipped": 7,
    }


def test_golden_positions(golden, data_dir):
    expected = pd.read_csv(data_dir / "aivdm_golden_expected.csv")
    expected = expected[expected["outcome"] == "position"]
    assert len(golden.messages) == len(expected)
    for message, row in zip(golden.messages, expected.itertuples(index=False)):
        assert message.mmsi == int(row.mmsi)
        assert message.timestamp == pytest.approx(float(row.timestamp))
        assert message.lat == pytest.approx(row.lat / 600000.0)
        assert message.lon == pytest.approx(row.lon / 600000.0)
        assert message.sog == pytest.approx(row.sog / 10.0)
        if row.cog >= 3600:
            assert message.cog is None
        else:
            assert message.cog == pytest.approx(row.cog / 10.0)


def test_golden_static_reports(golden):
    assert golden.vessels[265316000].callsign == "SEIM"
    assert golden.vessels[265316000].shipname == "S.T OLOF"
    assert golden.vessels[249849000].shipname == "WILSON LEITH"


def test_checksum_of_valid_sentence():
    star = SENTENCE.rfind("*")
    assert nmea_checksum(SENTENCE[1:star]) == SENTENCE[star + 1 :]
    assert decode_nmea_line(SENTENCE).fragment_count == 1


@given(
    position=st.integers(min_value=1, max_value=SENTENCE.rfind("*") - 1),
    replacement=st.sampled_from("0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijkl,<>?:;`"),
)
def test_single_character_corruption_fails_checksum(position, replacement):
    if SENTENCE[position] == replacement:
        return
    corrupted = SENTENCE[:position] + replacement + SENTENCE[position + 1 :]
    with pytest.raises(ChecksumError):
        decode_nmea_line(corrupted)


def test_non_ais_sentence_is_unsupported():
    with pytest.raises(UnsupportedSentenceError):
        decode_nmea_line("$GPGGA,123519,4807.038,N,01131.000,E,1,08,0.9,545.4,M,46.9,M,,*47")


@given(st.text(alphabet="01", max_size=600))
def test_armor_round_trip(bits):
    payload, fill = armor(bits)
    assert 0 <= fill <= 5
    assert disarmor(payload, fill) == bits


def position_bits(msg_type=1, mmsi=316001234, sog=123, lon=-38142000, lat=26790000, cog=3600, length=168):
    def field(value, width):
        return format(value & ((1 << width) - 1), f"0{width}b")

    bits = field(msg_type, 6) + "00" + field(mmsi, 30) + "0" * 12
    bits += field(sog, 10) + "0" + field(lon, 28) + field(lat, 27) + field(cog, 12)
    return (bits + "0" * length)[:length]


def test_decode_position_report_scales_fields():
    message = decode_position_report(position_bits(), timestamp=T0)
    assert message.mmsi == 316001234
    assert message.lat == pytest.approx(44.65, abs=1e-9)
    assert message.lon == pytest.approx(-63.57, abs=1e-9)
    assert message.sog == pytest.approx(12.3)
    assert message.cog is None
    assert message.timestamp == T0


def test_decode_position_report_edge_cases():
    assert decode_position_report(position_bits(msg_type=4)) is None
    with pytest.raises(NmeaParseError):
        decode_position_report(position_bits(length=150))
    with pytest.raises(UnavailableFieldError):
        decode_position_report(position_bits(lat=91 * 600000))


def test_lowercase_checksum_is_accepted():
    assert decode_nmea_line(SENTENCE[:-2] + SENTENCE[-2:].lower()).fragment_count == 1


def sentence(body):
    return f"!{body}*{nmea_checksum(body)}"


def test_restarted_fragment_group_counts_one_failure():
    payload, fill = armor(position_bits())
    head, tail = payload[:14], payload[14:]
    lines = [
        f"{T0:.0f} " + sentence(f"AIVDM,2,1,3,A,{head},0"),
        f"{T0 + 60:.0f} " + sentence(f"AIVDM,2,1,3,A,{head},0"),
        sentence(f"AIVDM,2,2,3,A,{tail},{fill}"),
    ]
    ingest = read_nmea_lines(lines)
    assert ingest.stats.decoded == 1
    assert ingest.stats.parse_failures == 1
    assert ingest.messages[0].timestamp == T0 + 60
    assert ingest.messages[0].mmsi == 316001234


def test_format_detection(write_text):
    assert detect_ais_format(write_text("a.nmea", "# comment\n" + SENTENCE + "\n")) == "nmea"
    assert detect_ais_format(write_text("a.csv", "mmsi,timestamp,lat,lon,sog,cog\n")) == "csv"
    with pytest.raises(ConfigurationError):
        read_ais(write_text("b.csv", "x\n"), "json")


def test_decoded_csv_reader(write_text):
    path = write_text(
        "ais.csv",
        "mmsi,timestamp,lat,lon,sog,cog\n"
        "316000001,2024-04-01T00:00:00Z,44.66,-63.57,0.1,\n"
        "316000001,1711929600,91,181,0.0,\n",
    )
    ingest = read_ais(path)
    assert ingest.stats.decoded == 1
    assert ingest.stats.unavailable == 1
    assert ingest.messages[0].timestamp == 1711929600.0
    assert ingest.messages[0].cog is None


def test_decoded_csv_rejects_bad_row(write_text):
    path = write_text("ais.csv", "mmsi,timestamp,lat,lon,sog,cog\n1,yesterday-ish,0,0,0,\n")
    with pytest.raises(DataIntegrityError) as exc:
        read_ais(path, "csv")
    assert exc.value.line == 2


def test_decoded_csv_rejects_missing_timestamp(write_text):
    path = write_text("ais.csv", "mmsi,timestamp,lat,lon,sog,cog\n1,,45.0,-63.0,0.5,10\n")
    with pytest.raises(DataIntegrityError) as exc:
        read_ais(path, "csv")
    assert exc.value.line == 2


def test_decoded_csv_rejects_non_finite_position(write_text):
    path = write_text(
        "ais.csv",
        "mmsi,timestamp,lat,lon,sog,cog\n"
        "1,1711929600,44.66,-63.57,0.1,\n"
        "1,1711930200,nan,-63.57,0.1,\n",
    )
    with pytest.raises(DataIntegrityError) as exc:
        read_ais(path, "csv")
    assert exc.value.line == 3


def stay(mmsi, start, hours, lat, lon, every_minutes=10, sog=0.2):
    steps = int(hours * 60 / every_minutes)
    return [
        AisMessage(mmsi, start + i * every_minutes * 60.0, lat, lon, sog)
        for i in range(steps + 1)
    ]


def test_three_hour_stay_is_one_call():
    # about 2 km north of the port
    track = stay(316000001, T0, 3.0, HFX.latitude + 0.018, HFX.longitude)
    calls = detect_port_calls(track, PORTS, CallParams())
    assert len(calls) == 1
    assert calls[0].port_id == "HFX"
    assert calls[0].dwell_hours == pytest.approx(3.0)


def test_short_stay_is_not_a_call():
    track = stay(316000001, T0, 1.0, HFX.latitude, HFX.longitude)
    assert detect_port_calls(track, PORTS, CallParams()) == []


def test_moving_vessel_is_not_a_call():
    track = stay(316000001, T0, 3.0, HFX.latitude, HFX.longitude, sog=5.0)
    assert detect_port_calls(track, PORTS, CallParams()) == []


def test_gap_splits_calls_and_voyage_merges_them():
    first = stay(316000001, T0, 3.0, HFX.latitude, HFX.longitude)
    second = stay(316000001, T0 + 10 * HOUR, 3.0, HFX.latitude, HFX.longitude)
    calls = detect_port_calls(first + second, PORTS, CallParams())
    assert len(calls) == 2
    assert extract_voyages(calls) == []


def test_unsorted_track_rejected():
    track = stay(316000001, T0, 3.0, HFX.latitude, HFX.longitude)
    with pytest.raises(OrderingError):
        detect_port_calls(track[::-1], PORTS)


def test_voyages_chain_consecutive_calls():
    calls = [
        PortCall(1, "HFX", T0, T0 + 5 * HOUR),
        PortCall(1, "SYD", T0 + 20 * HOUR, T0 + 30 * HOUR),
        PortCall(1, "HFX", T0 + 50 * HOUR, T0 + 52 * HOUR),
    ]
    voyages = extract_voyages(calls)
    assert [(v.origin, v.destination) for v in voyages] == [("HFX", "SYD"), ("SYD", "HFX")]
    assert voyages[0].dwell_hours == pytest.approx(10.0)
    assert voyages[1].depart == T0 + 30 * HOUR


def test_overlapping_calls_rejected():
    calls = [PortCall(1, "HFX", T0, T0 + 5 * HOUR), PortCall(1, "SYD", T0 + HOUR, T0 + 9 * HOUR)]
    with pytest.raises(DataIntegrityError):
        extract_voyages(calls)


def test_zero_length_leg_is_skipped_and_counted():
    calls = [
        PortCall(1, "HFX", T0, T0 + 5 * HOUR),
        PortCall(1, "SYD", T0 + 5 * HOUR, T0 + 9 * HOUR),
        PortCall(1, "HFX", T0 + 20 * HOUR, T0 + 22 * HOUR),
    ]
    voyages, dropped = chain_voyages(calls)
    assert dropped == 1
    assert [(v.origin, v.destination) for v in voyages] == [("SYD", "HFX")]
    assert extract_voyages(calls) == voyages


def test_ingest_voyages_per_vessel():
    a = stay(1, T0, 3.0, HFX.latitude, HFX.longitude) + stay(1, T0 + 20 * HOUR, 3.0, SYD.latitude, SYD.longitude)
    b = stay(2, T0, 4.0, SYD.latitude, SYD.longitude) + stay(2, T0 + 30 * HOUR, 3.0, HFX.latitude, HFX.longitude)
    calls, voyages = ingest_voyages(list(reversed(a + b)), PORTS, CallParams(), threads=2)
    assert len(calls) == 4
    assert [(v.mmsi, v.origin, v.destination) for v in voyages] == [(1, "HFX", "SYD"), (2, "SYD", "HFX")]


def test_call_params_must_be_positive():
    with pytest.raises(ConfigurationError):
        CallParams(radius_km=0.0)
