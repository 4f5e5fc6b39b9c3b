from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from codai.errors import ConfigError, DataError
from codai.registry import (FirmRecord, SizeClass, classify_size, join_wideband, load_firms,
                            write_firms)

HEADER = "firm_id,url,nace,employees,founding_year,nuts3,municipality,macro_region,urban_pole\n"


def _write(tmp_path, rows, header=HEADER):
    path = tmp_path / "registry.csv"
    path.write_text(header + "".join(r + "\n" for r in rows), encoding="utf-8")
    return path


def _firm(**kw):
    base = dict(firm_id="F1", homepage_url="https://www.acme.it/", nace_section="C", nuts3_code="ITC11",
                municipality_code="001272", macro_region="North", urban_pole=True, employees=12,
                founding_year=1990)
    base.update(kw)
    return FirmRecord(**base)


def test_malformed_employees_rejected_with_reason(tmp_path):
    path = _write(tmp_path, [
        "A,https://a.it/,C,5,2000,ITC11,001,North,1",
        "B,https://b.it/,G,abc,2001,ITC11,001,North,0",
        "C,https://c.it/,G,60,1999,ITF33,002,South,0",
        "D,https://d.it/,J,300,1980,ITI43,003,Centre,1",
    ])
    report = load_firms(path)
    assert [r.firm_id for r in report.records] == ["A", "C", "D"]
    assert len(report.rejects) == 1
    assert report.rejects[0].line == 3
    assert "non-numeric employees" in report.rejects[0].reason


def test_missing_scheme_defaults_to_http(tmp_path):
    path = _write(tmp_path, ["A,example.it,C,5,2000,ITC11,001,North,1"])
    report = load_firms(path)
    assert report.records[0].homepage_url == "http://example.it"
    assert "A" in report.notes


def test_missing_column_is_config_error(tmp_path):
    path = _write(tmp_path, ["A,https://a.it/,C"], header="firm_id,url,nace\n")
    with pytest.raises(ConfigError, match="missing required column"):
        load_firms(path)


def test_schema_remaps_columns(tmp_path):
    header = "id,site,nace,employees,founding_year,nuts3,municipality,macro_region,urban_pole\n"
    path = _write(tmp_path, ["A,https://a.it/,C,5,2000,ITC11,001,North,1"], header=header)
    report = load_firms(path, schema={"firm_id": "id", "homepage_url": "site"})
    assert report.records[0].firm_id == "A"


def test_duplicate_firm_id_rejected(tmp_path):
    path = _write(tmp_path, ["A,https://a.it/,C,5,2000,ITC11,001,North,1",
                             "A,https://b.it/,C,5,2000,ITC11,001,North,1"])
    report = load_firms(path)
    assert len(report.records) == 1 and "duplicate" in report.rejects[0].reason


@pytest.mark.parametrize("employees,expected", [
    (0, SizeClass.MICRO), (9, SizeClass.MICRO), (10, SizeClass.SMALL), (49, SizeClass.SMALL),
    (50, SizeClass.MEDIUM), (249, SizeClass.MEDIUM), (250, SizeClass.LARGE), (10_000, SizeClass.LARGE),
])
def test_size_boundaries(employees, expected):
    assert classify_size(employees) is expected


@given(st.integers(0, 5000), st.integers(0, 5000))
def test_size_class_is_monotone(a, b):
    lo, hi = sorted((a, b))
    assert classify_size(lo).rank <= classify_size(hi).rank


def test_negative_employees_invalid():
    with pytest.raises(ValueError):
        classify_size(-1)


_ids = st.text("ABCDEFGHIJ0123456789", min_size=1, max_size=8)


@given(st.lists(st.builds(
    lambda fid, emp, year, share, urban, region: _firm(firm_id=fid, employees=emp, founding_year=year,
                                                       wideband_share=share, urban_pole=urban,
                                                       macro_region=region),
    _ids, st.one_of(st.none(), st.integers(0, 10_000)), st.one_of(st.none(), st.integers(1800, 2024)),
    st.one_of(st.none(), st.floats(0, 1)), st.booleans(), st.sampled_from(["North", "Centre", "South"]),
), max_size=20, unique_by=lambda r: r.firm_id))
def test_write_load_round_trip(tmp_path_factory, records):
    path = tmp_path_factory.mktemp("rt") / "firms.csv"
    write_firms(records, path)
    first = path.read_bytes()
    loaded = load_firms(path)
    assert loaded.rejects == []
    assert loaded.records == records
    write_firms(loaded.records, path)
    assert path.read_bytes() == first


def test_join_wideband():
    firms = [_firm(firm_id="A", municipality_code="X"), _firm(firm_id="B", municipality_code="Y")]
    joined, report = join_wideband(firms, {"X": 0.8})
    assert joined[0].wideband_share == 0.8
    assert joined[1].wideband_share is None
    assert report.matched == 1 and report.unmatched_ids == ["B"]
    # other fields are untouched
    assert joined[0].__dict__ | {"wideband_share": None} == firms[0].__dict__


def test_join_rejects_share_outside_unit_interval():
    with pytest.raises(DataError):
        join_wideband([_firm()], {"001272": 1.3})
