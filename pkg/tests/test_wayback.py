from __future__ import annotations

import os

import pytest
import requests
from hypothesis import given, strategies as st

from codai.wayback import (WaybackClient, WaybackUnavailable, first_snapshot_year, parse_cdx, read_cache,
                           years_old)


class _Resp:
    def __init__(self, status=200, text=""):
        self.status_code = status
        self.text = text

    def json(self):
        import json
        return json.loads(self.text)


class _Session:
    """Stands in for requests; records each query."""

    def __init__(self, responses):
        self.responses = dict(responses)
        self.calls = []

    def get(self, url, params=None, timeout=None):
        self.calls.append(params["url"])
        out = self.responses[params["url"]]
        if isinstance(out, Exception):
            raise out
        return out


def test_cache_hit(tmp_path):
    cache = tmp_path / "wb.csv"
    cache.write_text("host,first_year\nwww.acme.it,1998\nnever.it,\n", encoding="utf-8")
    client = WaybackClient(cache, live=False)
    hit = first_snapshot_year("https://www.acme.it/", client)
    assert (hit.first_year, hit.source) == (1998, "cache")
    absent = first_snapshot_year("http://never.it", client)
    assert (absent.first_year, absent.source) == (None, "absent")


def test_offline_miss_is_absent_without_network(tmp_path):
    client = WaybackClient(tmp_path / "wb.csv", live=False, session=_Session({}))
    assert first_snapshot_year("https://new.it/", client).source == "absent"
    assert client.session.calls == []


def test_live_lookup_is_cached_and_appended(tmp_path):
    cache = tmp_path / "wb.csv"
    session = _Session({"acme.it": _Resp(text='[["timestamp"],["20050101000000"]]'),
                        "ghost.it": _Resp(text="[]")})
    client = WaybackClient(cache, session=session, min_interval=0)
    assert first_snapshot_year("https://acme.it/", client).first_year == 2005
    assert first_snapshot_year("https://acme.it/x", client).source == "cache"
    assert first_snapshot_year("https://ghost.it/", client).source == "absent"
    assert session.calls == ["acme.it", "ghost.it"]
    assert read_cache(cache) == {"acme.it": 2005, "ghost.it": None}
    # a fresh client reads the same cache without any network access
    again = WaybackClient(cache, live=False)
    assert first_snapshot_year("https://acme.it/", again).first_year == 2005


def test_cache_last_line_wins(tmp_path):
    cache = tmp_path / "wb.csv"
    cache.write_text("host,first_year\na.it,\na.it,2001\n", encoding="utf-8")
    assert read_cache(cache) == {"a.it": 2001}


def test_network_failure_is_retryable_not_absent(tmp_path):
    session = _Session({"down.it": requests.ConnectionError("refused"), "busy.it": _Resp(503)})
    client = WaybackClient(tmp_path / "wb.csv", session=session, min_interval=0)
    for host in ("down.it", "busy.it"):
        with pytest.raises(WaybackUnavailable):
            first_snapshot_year(f"https://{host}/", client)
    assert not (tmp_path / "wb.csv").exists()


def test_parse_cdx():
    assert parse_cdx([["timestamp"], ["19990203040506"], ["19980101000000"]]) == 1998
    assert parse_cdx([]) is None
    assert parse_cdx([["timestamp"], ["garbage"]]) is None


@pytest.mark.parametrize("first,ref,cap,expected", [(2005, 2021, 25, 16), (1994, 2021, 25, 25),
                                                    (None, 2021, 25, 0), (2021, 2021, 25, 0)])
def test_years_old(first, ref, cap, expected):
    assert years_old(first, ref, cap) == expected


def test_years_old_rejects_future_capture():
    with pytest.raises(ValueError):
        years_old(2022, 2021)


@given(st.integers(1991, 2021), st.integers(1991, 2021), st.integers(2021, 2030))
def test_years_old_is_monotone(a, b, ref):
    early, late = sorted((a, b))
    assert years_old(early, ref) >= years_old(late, ref)
    assert 0 <= years_old(early, ref) <= 25


@pytest.mark.live
@pytest.mark.skipif(not os.environ.get("CODAI_LIVE"), reason="set CODAI_LIVE=1 for network tests")
def test_live_archive_lookup(tmp_path):
    from datetime import date
    hit = first_snapshot_year("https://www.istat.it/", WaybackClient(tmp_path / "wb.csv"))
    assert hit.first_year is not None and hit.first_year <= date.today().year
