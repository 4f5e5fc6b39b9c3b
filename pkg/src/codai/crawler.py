"""Homepage fetching with timing capture, per-host politeness and offline replay.

A crawl corpus is a directory with one subdirectory per firm::

    <corpus>/<quoted firm_id>/head.txt   # metadata + response headers, UTF-8
    <corpus>/<quoted firm_id>/body       # raw body bytes, as received

``head.txt`` holds ``key: value`` metadata lines, one blank line, then the
response headers in wire order (``Name: value``), e.g.::

    requested_url: https://acme.it/
    final_url: https://www.acme.it/
    http_status: 200
    failure:
    ttfb_seconds: 0.081
    total_seconds: 0.42
    redirect_count: 1
    fetched_at: 2021-03-02T10:15:00+00:00
    note:

    Content-Type: text/html; charset=utf-8
    Strict-Transport-Security: max-age=63072000

Floats are written with ``repr`` so values survive a round trip exactly.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import time
import urllib.robotparser
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator
from urllib.parse import quote, unquote, urljoin, urlsplit

import requests

from .errors import NotFoundError

logger = logging.getLogger(__name__)

TIMEOUT = "timeout"
ROBOTS_EXCLUDED = "robots-excluded"
REDIRECT_CODES = {301, 302, 303, 307, 308}


class Headers:
    """Case-insensitive multimap that keeps wire order and repeated names."""

    def __init__(self, items: Iterable[tuple[str, str]] = ()):
        self._items = tuple((str(k), str(v)) for k, v in items)

    def get_all(self, name: str) -> list[str]:
        name = name.lower()
        return [v for k, v in self._items if k.lower() == name]

    def get(self, name: str, default=None):
        values = self.get_all(name)
        return values[0] if values else default

    def __contains__(self, name) -> bool:
        return bool(self.get_all(name))

    def items(self):
        return list(self._items)

    def __len__(self):
        return len(self._items)

    def __eq__(self, other):
        return isinstance(other, Headers) and self._items == other._items

    def __hash__(self):
        return hash(self._items)

    def __repr__(self):
        return f"Headers({list(self._items)!r})"

    def digest(self) -> str:
        text = "\n".join(f"{k.lower()}: {v}" for k, v in self._items)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CrawlPolicy:
    timeout_seconds: float = 30.0
    per_host_min_interval_seconds: float = 1.0
    max_redirects: int = 5
    user_agent: str = "codai-crawler/0.1 (+research; homepage only)"
    respect_robots: bool = True
    max_body_bytes: int = 10 * 2**20

    def __post_init__(self):
        if not self.timeout_seconds > 0:
            raise ValueError("timeout_seconds must be positive")
        if self.per_host_min_interval_seconds < 0 or self.max_redirects < 0:
            raise ValueError("interval and max_redirects must be nonnegative")

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class CrawlResult:
    firm_id: str
    requested_url: str
    final_url: str
    http_status: int | None
    ttfb_seconds: float
    total_seconds: float
    response_headers: Headers = field(default_factory=Headers)
    body: bytes = b""
    fetched_at: str = ""
    redirect_count: int = 0
    failure: str | None = None  # TIMEOUT or ROBOTS_EXCLUDED
    note: str = ""

    def __post_init__(self):
        if (self.http_status is None) == (self.failure is None):
            raise ValueError("exactly one of http_status and failure must be set")
        if self.failure is not None and self.body:
            raise ValueError("failed fetches carry no body")
        if not 0 <= self.ttfb_seconds <= self.total_seconds:
            raise ValueError(f"need 0 <= ttfb ({self.ttfb_seconds}) <= total ({self.total_seconds})")

    @property
    def scheme(self) -> str:
        return urlsplit(self.final_url).scheme.lower()

    @property
    def timed_out(self) -> bool:
        return self.failure == TIMEOUT

    @property
    def robots_excluded(self) -> bool:
        return self.failure == ROBOTS_EXCLUDED


def is_valid(result: CrawlResult) -> bool:
    return result.http_status == 200 and len(result.body) > 0


def _now() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


class HostThrottle:
    """Serializes request starts per host so they are spaced by `interval` seconds."""

    def __init__(self, interval: float, clock=time.monotonic, sleep=time.sleep):
        self.interval = interval
        self._clock = clock
        self._sleep = sleep
        self._guard = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}
        self._last: dict[str, float] = {}
        self.history: dict[str, list[float]] = {}

    def _lock_for(self, host: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(host, threading.Lock())

    def wait(self, host: str) -> float:
        """Block until `host` may be contacted; returns the granted start time."""
        host = host.lower()
        with self._lock_for(host):
            last = self._last.get(host)
            if last is not None:
                delay = last + self.interval - self._clock()
                while delay > 0:
                    self._sleep(delay)
                    delay = last + self.interval - self._clock()
            start = self._clock()
            self._last[host] = start
            self.history.setdefault(host, []).append(start)
            return start


class Crawler:
    """Fetches homepages under one policy; share one instance across threads."""

    def __init__(self, policy: CrawlPolicy | None = None, session: requests.Session | None = None):
        self.policy = policy or CrawlPolicy()
        self.throttle = HostThrottle(self.policy.per_host_min_interval_seconds)
        self._session = session
        self._local = threading.local()
        self._robots: dict[str, urllib.robotparser.RobotFileParser | None] = {}
        self._robots_lock = threading.Lock()
        self._robots_pending: dict[str, threading.Lock] = {}

    @property
    def session(self) -> requests.Session:
        if self._session is not None:
            return self._session
        if not hasattr(self._local, "session"):
            s = requests.Session()
            s.headers["User-Agent"] = self.policy.user_agent
            self._local.session = s
        return self._local.session

    def _robots_for(self, url: str):
        parts = urlsplit(url)
        origin = f"{parts.scheme}://{parts.netloc}"
        with self._robots_lock:
            if origin in self._robots:
                return self._robots[origin]
            lock = self._robots_pending.setdefault(origin, threading.Lock())
        with lock:  # one robots.txt request per origin, even under concurrency
            with self._robots_lock:
                if origin in self._robots:
                    return self._robots[origin]
            return self._load_robots(origin, parts.hostname or "")

    def _load_robots(self, origin: str, host: str):
        parser = urllib.robotparser.RobotFileParser(origin + "/robots.txt")
        try:
            self.throttle.wait(host)
            resp = self.session.get(origin + "/robots.txt", timeout=self.policy.timeout_seconds,
                                    headers={"User-Agent": self.policy.user_agent})
            if resp.status_code in (401, 403):
                parser.disallow_all = True
            elif resp.status_code >= 400:
                parser.allow_all = True
            else:
                parser.parse(resp.text.splitlines())
        except requests.RequestException:
            parser = None  # unreachable robots.txt: no restriction known
        with self._robots_lock:
            self._robots[origin] = parser
        return parser

    def allowed(self, url: str) -> bool:
        parser = self._robots_for(url)
        return parser is None or parser.can_fetch(self.policy.user_agent, url)

    def fetch(self, url: str, firm_id: str = "") -> CrawlResult:
        """Fetch one homepage. Network failures come back as TIMEOUT results."""
        policy = self.policy
        fetched_at = _now()
        if urlsplit(url).scheme not in ("http", "https"):
            raise ValueError(f"not an http(s) URL: {url!r}")
        if policy.respect_robots and not self.allowed(url):
            return CrawlResult(firm_id, url, url, None, 0.0, 0.0, fetched_at=fetched_at,
                               failure=ROBOTS_EXCLUDED, note="disallowed by robots.txt")
        current = url
        redirects = 0
        start = None
        try:
            while True:
                self.throttle.wait(urlsplit(current).hostname or "")
                if start is None:
                    start = time.perf_counter()
                resp = self.session.get(current, stream=True, allow_redirects=False,
                                        timeout=policy.timeout_seconds,
                                        headers={"User-Agent": policy.user_agent})
                ttfb = time.perf_counter() - start
                location = resp.headers.get("Location")
                if resp.status_code in REDIRECT_CODES and location and redirects < policy.max_redirects:
                    resp.close()
                    current = urljoin(current, location)
                    redirects += 1
                    continue
                break
            chunks = []
            size = 0
            for chunk in resp.iter_content(chunk_size=65536):
                chunks.append(chunk)
                size += len(chunk)
                if time.perf_counter() - start > policy.timeout_seconds:
                    raise requests.Timeout("body not received within timeout")
                if size > policy.max_body_bytes:
                    break
            total = time.perf_counter() - start
            headers = Headers(resp.raw.headers.items())
            status = resp.status_code
            resp.close()
        except (requests.RequestException, OSError) as exc:
            elapsed = 0.0 if start is None else time.perf_counter() - start
            logger.info("fetch failed for %s: %s", url, exc)
            return CrawlResult(firm_id, url, current, None, elapsed, elapsed, fetched_at=fetched_at,
                               redirect_count=redirects, failure=TIMEOUT,
                               note=f"{type(exc).__name__}: {exc}")
        note = ""
        if status in REDIRECT_CODES:
            note = f"stopped after {redirects} redirects"
        return CrawlResult(firm_id, url, current, status, ttfb, max(total, ttfb), headers,
                           b"".join(chunks), fetched_at, redirects, note=note)

    def crawl(self, targets: Iterable[tuple[str, str]], workers: int = 8) -> list[CrawlResult]:
        """Fetch (firm_id, url) pairs concurrently; output order follows input order."""
        targets = list(targets)
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            return list(pool.map(lambda t: self.fetch(t[1], firm_id=t[0]), targets))


def fetch_homepage(url: str, policy: CrawlPolicy | None = None, firm_id: str = "") -> CrawlResult:
    return Crawler(policy).fetch(url, firm_id=firm_id)


# --- corpus persistence -------------------------------------------------------

_META_KEYS = ("requested_url", "final_url", "http_status", "failure", "ttfb_seconds",
              "total_seconds", "redirect_count", "fetched_at", "note")


def entry_dir(root: Path, firm_id: str) -> Path:
    return root / quote(firm_id, safe="")


def _one_line(text: str) -> str:
    return " ".join(str(text).splitlines())


def write_entry(corpus, result: CrawlResult) -> Path:
    """Store a result in the corpus layout; returns the body file path."""
    entry = entry_dir(Path(corpus), result.firm_id)
    entry.mkdir(parents=True, exist_ok=True)
    meta = {
        "requested_url": result.requested_url,
        "final_url": result.final_url,
        "http_status": "" if result.http_status is None else str(result.http_status),
        "failure": result.failure or "",
        "ttfb_seconds": repr(float(result.ttfb_seconds)),
        "total_seconds": repr(float(result.total_seconds)),
        "redirect_count": str(result.redirect_count),
        "fetched_at": result.fetched_at,
        "note": _one_line(result.note),
    }
    lines = [f"{k}: {meta[k]}" for k in _META_KEYS]
    lines.append("")
    lines.extend(f"{k}: {_one_line(v)}" for k, v in result.response_headers.items())
    (entry / "head.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    body_path = entry / "body"
    body_path.write_bytes(result.body)
    return body_path


def _parse_head(text: str) -> tuple[dict, list[tuple[str, str]]]:
    meta_part, _, header_part = text.partition("\n\n")
    meta = {}
    for line in meta_part.splitlines():
        key, _, value = line.partition(":")
        meta[key.strip()] = value.strip()
    headers = []
    for line in header_part.splitlines():
        if not line.strip():
            continue
        key, _, value = line.partition(":")
        headers.append((key.strip(), value.strip()))
    return meta, headers


class Corpus:
    """Read-only handle on a stored crawl corpus."""

    def __init__(self, root):
        self.root = Path(root)
        if not self.root.is_dir():
            raise NotFoundError(f"corpus directory {self.root} does not exist")

    def __contains__(self, firm_id: str) -> bool:
        return (entry_dir(self.root, firm_id) / "head.txt").is_file()

    def firm_ids(self) -> list[str]:
        return sorted(unquote(p.parent.name) for p in self.root.glob("*/head.txt"))

    def load(self, firm_id: str) -> CrawlResult:
        entry = entry_dir(self.root, firm_id)
        head = entry / "head.txt"
        if not head.is_file():
            raise NotFoundError(f"no corpus entry for firm {firm_id!r} in {self.root}")
        meta, headers = _parse_head(head.read_text(encoding="utf-8"))
        body_path = entry / "body"
        body = body_path.read_bytes() if body_path.is_file() else b""
        status = meta.get("http_status", "")
        return CrawlResult(
            firm_id=firm_id,
            requested_url=meta["requested_url"],
            final_url=meta.get("final_url") or meta["requested_url"],
            http_status=int(status) if status else None,
            ttfb_seconds=float(meta.get("ttfb_seconds") or 0.0),
            total_seconds=float(meta.get("total_seconds") or 0.0),
            response_headers=Headers(headers),
            body=body,
            fetched_at=meta.get("fetched_at", ""),
            redirect_count=int(meta.get("redirect_count") or 0),
            failure=meta.get("failure") or None,
            note=meta.get("note", ""),
        )

    def __iter__(self) -> Iterator[CrawlResult]:
        for firm_id in self.firm_ids():
            yield self.load(firm_id)


def replay_fetch(corpus, firm_id: str) -> CrawlResult:
    if not isinstance(corpus, Corpus):
        corpus = Corpus(corpus)
    return corpus.load(firm_id)


def log_record(result: CrawlResult, body_ref: str) -> str:
    """One JSON line for the crawl log."""
    return json.dumps({
        "firm_id": result.firm_id,
        "http_status": result.http_status,
        "failure": result.failure,
        "valid": is_valid(result),
        "ttfb_seconds": result.ttfb_seconds,
        "total_seconds": result.total_seconds,
        "requested_url": result.requested_url,
        "final_url": result.final_url,
        "redirect_count": result.redirect_count,
        "header_digest": result.response_headers.digest(),
        "body_sha256": hashlib.sha256(result.body).hexdigest(),
        "body_file": body_ref,
        "note": result.note,
    }, sort_keys=True)
