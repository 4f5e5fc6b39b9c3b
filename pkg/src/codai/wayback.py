"""Website age from the earliest Wayback Machine capture of a host.

Live lookups use the CDX index API::

    GET https://web.archive.org/cdx/search/cdx?url=<host>&output=json&fl=timestamp&limit=1

Results are sorted oldest first, so the single returned row is the earliest
capture. A JSON body of ``[]`` means the host was never archived; otherwise the
body is ``[["timestamp"], ["YYYYMMDDhhmmss"]]`` and the year is the first four
digits of the 14-digit timestamp.

The cache file is comma-separated ``host,first_year`` lines under a
``host,first_year`` header; an empty year records a confirmed absence. Lines are
only ever appended and the last line for a host wins.
"""

from __future__ import annotations

import csv
import re
import threading
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from urllib.parse import urlsplit

import requests

from .crawler import HostThrottle
from .errors import CodaiError

CDX_ENDPOINT = "https://web.archive.org/cdx/search/cdx"
DEFAULT_CAP = 25
_TIMESTAMP = re.compile(r"^\d{14}$")


class WaybackUnavailable(CodaiError):
    """Live lookup failed at the network level; retrying may succeed."""


@dataclass(frozen=True)
class SnapshotLookup:
    url: str
    first_year: int | None
    source: str  # "live", "cache" or "absent"

    def __post_init__(self):
        if self.first_year is not None and self.first_year > date.today().year:
            raise ValueError(f"first_year {self.first_year} is in the future")


def lookup_host(url: str) -> str:
    host = urlsplit(url).hostname if "://" in url else url
    return (host or "").lower().rstrip(".")


def parse_cdx(payload) -> int | None:
    """Earliest year from a CDX JSON payload (already decoded), or None."""
    rows = [r for r in payload if r and r != ["timestamp"]]
    years = []
    for row in rows:
        stamp = str(row[0])
        if _TIMESTAMP.match(stamp):
            years.append(int(stamp[:4]))
    return min(years) if years else None


class WaybackClient:
    """Cache-first lookup handle; `live=False` never touches the network."""

    def __init__(self, cache_path=None, live: bool = True, session=None,
                 min_interval: float = 1.0, timeout: float = 30.0, endpoint: str = CDX_ENDPOINT):
        self.cache_path = Path(cache_path) if cache_path else None
        self.live = live
        self.session = session
        self.timeout = timeout
        self.endpoint = endpoint
        self._throttle = HostThrottle(min_interval)
        self._lock = threading.Lock()
        self._cache: dict[str, int | None] = {}
        if self.cache_path and self.cache_path.is_file():
            self._cache.update(read_cache(self.cache_path))

    def cached(self, host: str) -> tuple[bool, int | None]:
        with self._lock:
            if host in self._cache:
                return True, self._cache[host]
        return False, None

    def remember(self, host: str, year: int | None) -> None:
        with self._lock:
            self._cache[host] = year
            if self.cache_path is not None:
                new = not self.cache_path.exists() or self.cache_path.stat().st_size == 0
                with self.cache_path.open("a", newline="", encoding="utf-8") as fh:
                    writer = csv.writer(fh, lineterminator="\n")
                    if new:
                        writer.writerow(["host", "first_year"])
                    writer.writerow([host, "" if year is None else year])

    def query(self, host: str) -> int | None:
        session = self.session or requests
        params = {"url": host, "output": "json", "fl": "timestamp", "limit": "1"}
        self._throttle.wait(urlsplit(self.endpoint).hostname or "archive")
        try:
            resp = session.get(self.endpoint, params=params, timeout=self.timeout)
        except (requests.RequestException, OSError) as exc:
            raise WaybackUnavailable(f"archive lookup for {host} failed: {exc}") from exc
        if resp.status_code >= 500 or resp.status_code == 429:
            raise WaybackUnavailable(f"archive lookup for {host} returned HTTP {resp.status_code}")
        if resp.status_code != 200:
            return None
        text = resp.text.strip()
        if not text:
            return None
        try:
            payload = resp.json()
        except ValueError:
            payload = [[line.split()[0]] for line in text.splitlines() if line.strip()]
        return parse_cdx(payload)


def read_cache(path) -> dict[str, int | None]:
    out: dict[str, int | None] = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0] == "host":
                continue
            year = row[1].strip() if len(row) > 1 else ""
            out[row[0].strip().lower()] = int(year) if year else None
    return out


def first_snapshot_year(url: str, client: WaybackClient) -> SnapshotLookup:
    host = lookup_host(url)
    hit, year = client.cached(host)
    if hit:
        return SnapshotLookup(url, year, "cache" if year is not None else "absent")
    if not client.live:
        return SnapshotLookup(url, None, "absent")
    year = client.query(host)
    client.remember(host, year)
    return SnapshotLookup(url, year, "live" if year is not None else "absent")


def years_old(first_year: int | None, reference_year: int, cap: int = DEFAULT_CAP) -> int:
    if first_year is None:
        return 0
    if reference_year < first_year:
        raise ValueError(f"reference year {reference_year} precedes first capture {first_year}")
    return min(reference_year - first_year, cap)
