import gzip

import pytest
from hypothesis import given, strategies as st

from foe_predict.event_log import (UNDEFINED, CsvMapping, EventLog, FormatError, Timestamp,
                                   attribute, load_csv, load_xes, make_trace, parse_iso_ms,
                                   value_key, write_xes)

XES = """<?xml version="1.0" encoding="UTF-8"?>
<log xes.version="1.0">
  <extension name="Concept" prefix="concept" uri="http://www.xes-standard.org/concept.xesext"/>
  <global scope="event"><string key="concept:name" value="x"/></global>
  <classifier name="Activity" keys="concept:name"/>
  <string key="concept:name" value="whole log"/>
  <trace>
    <string key="concept:name" value="A1"/>
    <event>
      <string key="concept:name" value="Accepted"/>
      <string key="org:resource" value="Bob"/>
      <date key="time:timestamp" value="2012-04-03T16:55:38.000+02:00"/>
      <int key="amount" value="10800000"/>
      <float key="ratio" value="0.25"/>
      <boolean key="urgent" value="true"/>
      <id key="ident" value="abc-1"/>
      <list key="tags"><string key="t" value="x"/></list>
    </event>
    <event>
      <string key="concept:name" value="Queued">
        <string key="meta" value="ignored"/>
      </string>
      <date key="time:timestamp" value="2012-04-03T15:00:00Z"/>
    </event>
  </trace>
  <trace>
    <event><string key="concept:name" value="Solo"/></event>
  </trace>
</log>
"""


def test_trace_positions_and_prefix():
    # the worked trace <e3, e7, e6, e4, e5>
    t = make_trace("t", [{"id": name} for name in ("e3", "e7", "e6", "e4", "e5")])
    assert len(t) == 5
    assert t.event(3).get("id") == "e6"
    assert [e.get("id") for e in t.prefix(2)] == ["e3", "e7"]
    with pytest.raises(IndexError):
        t.event(0)
    with pytest.raises(IndexError):
        t.event(6)


def test_attribute_is_total():
    t = make_trace("t", [{"a": 1.0}, {}])
    assert attribute(t, 1, "a") == 1.0
    assert attribute(t, 2, "a") is UNDEFINED
    assert attribute(t, 0, "a") is UNDEFINED
    assert attribute(t, 9, "a") is UNDEFINED
    assert not UNDEFINED


def test_log_rejects_duplicates_and_empty_traces():
    t = make_trace("same", [{}])
    with pytest.raises(ValueError):
        EventLog((t, t))
    with pytest.raises(ValueError):
        make_trace("empty", [])
    log = EventLog((t,))
    with pytest.raises(KeyError):
        log.trace("other")


def test_value_key_separates_kinds():
    assert value_key(1.0) == value_key(1)
    assert value_key(True) != value_key(1.0)
    assert value_key("1") != value_key(1.0)
    assert value_key(Timestamp(5)) != value_key(5.0)


def test_parse_iso_ms():
    assert parse_iso_ms("1970-01-01T00:00:00Z") == 0
    assert parse_iso_ms("1970-01-01T00:00:01.5") == 1500
    assert parse_iso_ms("1970-01-01T01:00:00+01:00") == 0
    assert parse_iso_ms("1970-01-01T00:00:00.123999Z") == 123
    with pytest.raises(ValueError):
        parse_iso_ms("yesterday")


def test_load_xes(tmp_path):
    path = tmp_path / "log.xes"
    path.write_text(XES)
    log = load_xes(path)
    assert [t.id for t in log] == ["A1", "2"]
    first = log.trace("A1").event(1)
    assert first.get("concept:name") == "Accepted"
    assert first.get("amount") == 10800000.0
    assert first.get("ratio") == 0.25
    assert first.get("urgent") is True
    assert first.get("ident") == "abc-1"
    assert first.get("tags") is UNDEFINED
    assert first.get("time:timestamp") == Timestamp(parse_iso_ms("2012-04-03T14:55:38Z"))
    second = log.trace("A1").event(2)
    assert second.get("meta") is UNDEFINED
    assert second.get("concept:name") == "Queued"
    assert log.n_events == 3


def test_load_xes_gz_matches_plain(tmp_path):
    plain = tmp_path / "log.xes"
    plain.write_text(XES)
    packed = tmp_path / "log.xes.gz"
    with gzip.open(packed, "wt") as fh:
        fh.write(XES)
    assert load_xes(packed) == load_xes(plain)


@pytest.mark.parametrize("body, fragment", [
    ("<log><trace><event><bogus/></event></trace></log>", "bogus"),
    ("<log><trace><event></trace></log>", ""),
    ("<log><trace><string key='concept:name' value='a'/><event/></trace>"
     "<trace><string key='concept:name' value='a'/><event/></trace></log>", "a"),
])
def test_malformed_xes_reports_position(tmp_path, body, fragment):
    path = tmp_path / "bad.xes"
    path.write_text(body)
    with pytest.raises(FormatError) as info:
        load_xes(path)
    assert info.value.line is not None and info.value.column is not None
    assert fragment in str(info.value)


def test_missing_file_is_oserror(tmp_path):
    with pytest.raises(OSError):
        load_xes(tmp_path / "nope.xes")


_text = st.text(alphabet=st.characters(blacklist_categories=("Cs", "Cc")), max_size=8)
_value = st.one_of(_text, st.booleans(), st.floats(allow_nan=False, allow_infinity=False),
                   st.integers(0, 2**41).map(Timestamp))
_event = st.dictionaries(st.sampled_from(["concept:name", "org:resource", "cost", "flag"]),
                         _value, max_size=4)


@given(st.lists(st.lists(_event, min_size=1, max_size=4), min_size=1, max_size=4))
def test_xes_round_trip(tmp_path_factory, traces):
    log = EventLog(tuple(make_trace(f"c{i}", evs, {"concept:name": f"c{i}"})
                         for i, evs in enumerate(traces)))
    path = tmp_path_factory.mktemp("rt") / "log.xes"
    write_xes(log, path)
    assert load_xes(path) == log


def test_load_csv_groups_and_sorts(tmp_path):
    path = tmp_path / "log.csv"
    path.write_text(
        "case,activity,ts,amount,code\n"
        "c2,b,1970-01-01T00:00:02Z,3,007\n"
        "c1,z,1970-01-01T00:00:05Z,,1_000\n"
        "c1,a,1970-01-01T00:00:01Z,2.5,12\n"
    )
    mapping = CsvMapping("case", "ts", rename={"activity": "concept:name"}, text_columns=("code",))
    log = load_csv(path, mapping)
    assert [t.id for t in log] == ["c2", "c1"]
    c1 = log.trace("c1")
    assert [e.get("concept:name") for e in c1] == ["a", "z"]
    assert c1.event(1).get("amount") == 2.5
    assert c1.event(2).get("amount") is UNDEFINED
    assert c1.event(1).get("code") == "12"
    assert c1.event(1).get("time:timestamp") == Timestamp(1000)
    assert "case" not in c1.event(1).attributes


def test_load_csv_millisecond_timestamps(tmp_path):
    path = tmp_path / "log.csv"
    path.write_text("case,t,x\nc,20,1_0\nc,10,2\n")
    log = load_csv(path, CsvMapping("case", "t", timestamp_format="ms"))
    assert [e.get("x") for e in log.trace("c")] == [2.0, "1_0"]


def test_load_csv_bad_timestamp(tmp_path):
    path = tmp_path / "log.csv"
    path.write_text("case,t\nc,soon\n")
    with pytest.raises(FormatError):
        load_csv(path, CsvMapping("case", "t"))
