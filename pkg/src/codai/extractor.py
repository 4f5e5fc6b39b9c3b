"""The ten homepage features, computed from a stored or live CrawlResult.

The best-practices score is a static ten-check audit; each check is worth 0.1:

 1. a document type declaration is present
 2. a character set is declared (``<meta charset>`` or an http-equiv content type)
 3. no deprecated presentational tags (``font``, ``center``, ``marquee``)
 4. the ``<html>`` element carries a non-empty ``lang`` attribute
 5. a ``<meta name="viewport">`` is present
 6. the final URL uses https
 7. no subresource (``src`` attributes, stylesheet/icon/preload links, ``object data``)
    is loaded over plain http
 8. every ``<img>`` has an ``alt`` attribute (empty alt is allowed)
 9. a non-blank ``<title>`` is present
10. every ``<iframe>`` has a non-empty ``title`` attribute

The security score counts missing protections, so 0 is best and 15 is worst:

=============================  ======
Strict-Transport-Security      +3
Content-Security-Policy        +3
X-Frame-Options                +2
X-Content-Type-Options         +2
Referrer-Policy                +2
Permissions-Policy             +1
a Set-Cookie without Secure    +1
final scheme is plain http     +1
=============================  ======
"""

from __future__ import annotations

import codecs
import re
from dataclasses import astuple, dataclass, fields
from html.parser import HTMLParser
from urllib.parse import urljoin, urlsplit

from .crawler import CrawlResult, Headers, is_valid
from .errors import EncodingError
from .psl import registrable_domain

# internal name -> column header used in feature files
FEATURE_COLUMNS = {
    "unique_links_in": "unique_links_in",
    "unique_links_out": "unique_links_out",
    "best_practices": "best-practices",
    "length_url": "length_url",
    "facebook": "Facebook",
    "instagram": "Instagram",
    "linkedin": "LinkedIn",
    "years_old": "years_old",
    "request_time": "request_time",
    "security_header_int": "security_header_int",
}
FEATURES = tuple(FEATURE_COLUMNS)
SOCIAL_FEATURES = ("facebook", "instagram", "linkedin")
SOCIAL_DOMAINS = {"facebook": "facebook.com", "instagram": "instagram.com", "linkedin": "linkedin.com"}

SECURITY_WEIGHTS = {
    "strict-transport-security": 3,
    "content-security-policy": 3,
    "x-frame-options": 2,
    "x-content-type-options": 2,
    "referrer-policy": 2,
    "permissions-policy": 1,
}
INSECURE_COOKIE_PENALTY = 1
PLAIN_HTTP_PENALTY = 1
SECURITY_MAX = sum(SECURITY_WEIGHTS.values()) + INSECURE_COOKIE_PENALTY + PLAIN_HTTP_PENALTY

BEST_PRACTICE_CHECKS = (
    "doctype", "charset", "no_deprecated_tags", "html_lang", "viewport",
    "https", "no_mixed_content", "img_alt", "title", "iframe_title",
)
DEPRECATED_TAGS = {"font", "center", "marquee"}
_RESOURCE_LINK_RELS = {"stylesheet", "icon", "shortcut", "preload", "modulepreload", "apple-touch-icon", "manifest"}


@dataclass(frozen=True)
class RawFeatures:
    unique_links_in: int
    unique_links_out: int
    best_practices: float
    length_url: int
    facebook: int
    instagram: int
    linkedin: int
    years_old: int
    request_time: float
    security_header_int: int

    def __post_init__(self):
        if not 0.0 <= self.best_practices <= 1.0:
            raise ValueError(f"best_practices outside [0,1]: {self.best_practices}")
        if not 0 <= self.security_header_int <= SECURITY_MAX:
            raise ValueError(f"security_header_int outside [0,{SECURITY_MAX}]: {self.security_header_int}")
        for name in SOCIAL_FEATURES:
            if getattr(self, name) not in (0, 1):
                raise ValueError(f"{name} must be 0 or 1")
        if self.unique_links_in < 0 or self.unique_links_out < 0 or self.years_old < 0:
            raise ValueError("counts must be nonnegative")

    def values(self) -> tuple:
        return astuple(self)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data) -> "RawFeatures":
        return cls(
            unique_links_in=int(data["unique_links_in"]),
            unique_links_out=int(data["unique_links_out"]),
            best_practices=float(data["best_practices"]),
            length_url=int(data["length_url"]),
            facebook=int(data["facebook"]),
            instagram=int(data["instagram"]),
            linkedin=int(data["linkedin"]),
            years_old=int(data["years_old"]),
            request_time=float(data["request_time"]),
            security_header_int=int(data["security_header_int"]),
        )


# --- decoding -----------------------------------------------------------------

_META_CHARSET = re.compile(rb"""<meta[^>]+charset\s*=\s*["']?\s*([A-Za-z0-9_.:-]+)""", re.I)
_HEADER_CHARSET = re.compile(r"charset\s*=\s*[\"']?([A-Za-z0-9_.:-]+)", re.I)


def decode_body(body: bytes, headers: Headers | None = None, firm_id: str = "") -> str:
    """Decode using BOM, then Content-Type charset, then <meta> charset, then UTF-8."""
    candidates = []
    for bom, enc in ((codecs.BOM_UTF8, "utf-8-sig"), (codecs.BOM_UTF16_LE, "utf-16"),
                     (codecs.BOM_UTF16_BE, "utf-16")):
        if body.startswith(bom):
            candidates.append(enc)
    if headers is not None:
        m = _HEADER_CHARSET.search(headers.get("Content-Type", "") or "")
        if m:
            candidates.append(m.group(1))
    m = _META_CHARSET.search(body[:4096])
    if m:
        candidates.append(m.group(1).decode("ascii"))
    candidates.append("utf-8")
    for enc in candidates:
        try:
            return body.decode(enc)
        except (LookupError, UnicodeDecodeError):
            continue
    who = f" for firm {firm_id!r}" if firm_id else ""
    raise EncodingError(f"cannot decode body{who}; tried {', '.join(dict.fromkeys(candidates))}")


# --- parsing ------------------------------------------------------------------

class _PageScanner(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.anchors: list[str] = []
        self.doctype = False
        self.charset = False
        self.deprecated = 0
        self.html_lang = False
        self.viewport = False
        self.insecure_resources: list[str] = []
        self.img_missing_alt = 0
        self.iframe_missing_title = 0
        self._title_parts: list[str] | None = None
        self.title_text = ""

    def handle_decl(self, decl):
        if decl.lower().startswith("doctype"):
            self.doctype = True

    def handle_startendtag(self, tag, attrs):
        self.handle_starttag(tag, attrs)

    def handle_starttag(self, tag, attrs):
        a = {k.lower(): (v or "") for k, v in attrs}
        if tag == "a" and "href" in a:
            self.anchors.append(a["href"])
        elif tag == "html":
            self.html_lang = self.html_lang or bool(a.get("lang", "").strip())
        elif tag == "meta":
            if "charset" in a:
                self.charset = True
            elif a.get("http-equiv", "").lower() == "content-type" and "charset=" in a.get("content", "").lower():
                self.charset = True
            if a.get("name", "").lower() == "viewport":
                self.viewport = True
        elif tag == "title":
            self._title_parts = []
        elif tag == "img" and "alt" not in a:
            self.img_missing_alt += 1
        elif tag == "iframe" and not a.get("title", "").strip():
            self.iframe_missing_title += 1
        if tag in DEPRECATED_TAGS:
            self.deprecated += 1
        refs = []
        if "src" in a:
            refs.append(a["src"])
        if tag == "link" and _RESOURCE_LINK_RELS & set(a.get("rel", "").lower().split()):
            refs.append(a.get("href", ""))
        if tag == "object" and "data" in a:
            refs.append(a["data"])
        self.insecure_resources.extend(r for r in refs if r.strip().lower().startswith("http://"))

    def handle_endtag(self, tag):
        if tag == "title" and self._title_parts is not None:
            self.title_text += "".join(self._title_parts)
            self._title_parts = None

    def handle_data(self, data):
        if self._title_parts is not None:
            self._title_parts.append(data)

    def close(self):
        super().close()
        if self._title_parts is not None:
            self.title_text += "".join(self._title_parts)
            self._title_parts = None


def _scan(body, headers: Headers | None = None, firm_id: str = "") -> _PageScanner:
    text = body if isinstance(body, str) else decode_body(body, headers, firm_id)
    scanner = _PageScanner()
    scanner.feed(text)
    scanner.close()
    return scanner


# --- features -----------------------------------------------------------------

def url_length(url: str) -> int:
    """Characters after dropping the scheme prefix and one trailing slash; "www." counts."""
    text = url.strip()
    lowered = text.lower()
    for prefix in ("https://", "http://"):
        if lowered.startswith(prefix):
            text = text[len(prefix):]
            break
    if text.endswith("/"):
        text = text[:-1]
    return len(text)


def resolve_anchors(hrefs, base_url: str) -> list[str]:
    """Resolved http(s) targets, deduplicated by exact string, first-seen order."""
    seen = {}
    for href in hrefs:
        href = href.strip()
        if not href:
            continue
        try:
            target = urljoin(base_url, href)
            parts = urlsplit(target)
        except ValueError:
            continue
        if parts.scheme.lower() in ("http", "https") and parts.hostname:
            seen.setdefault(target, None)
    return list(seen)


def _split_links(targets, base_url: str) -> tuple[int, int]:
    home = registrable_domain(urlsplit(base_url).hostname)
    n_in = sum(1 for t in targets if registrable_domain(urlsplit(t).hostname) == home)
    return n_in, len(targets) - n_in


def extract_links(body, base_url: str, headers: Headers | None = None, firm_id: str = "") -> tuple[int, int]:
    """(unique internal, unique external) anchor targets of a page."""
    scanner = _scan(body, headers, firm_id)
    return _split_links(resolve_anchors(scanner.anchors, base_url), base_url)


def _host_matches(host: str, domain: str) -> bool:
    return host == domain or host.endswith("." + domain)


def _social_flags(hrefs) -> tuple[int, int, int]:
    hosts = set()
    for href in hrefs:
        try:
            host = urlsplit(href.strip()).hostname
        except ValueError:
            continue
        if host:
            hosts.add(host.lower().rstrip("."))
    return tuple(int(any(_host_matches(h, SOCIAL_DOMAINS[s]) for h in hosts)) for s in SOCIAL_FEATURES)


def detect_social(body, headers: Headers | None = None, firm_id: str = "") -> tuple[int, int, int]:
    """(facebook, instagram, linkedin) presence flags from anchor hosts."""
    return _social_flags(_scan(body, headers, firm_id).anchors)


def best_practice_checks(scanner: _PageScanner, scheme: str) -> dict[str, bool]:
    return {
        "doctype": scanner.doctype,
        "charset": scanner.charset,
        "no_deprecated_tags": scanner.deprecated == 0,
        "html_lang": scanner.html_lang,
        "viewport": scanner.viewport,
        "https": scheme == "https",
        "no_mixed_content": not scanner.insecure_resources,
        "img_alt": scanner.img_missing_alt == 0,
        "title": bool(scanner.title_text.strip()),
        "iframe_title": scanner.iframe_missing_title == 0,
    }


def audit_best_practices(body, result: CrawlResult) -> dict[str, bool]:
    """Pass/fail per check, keyed by the names in BEST_PRACTICE_CHECKS."""
    return best_practice_checks(_scan(body, result.response_headers, result.firm_id), result.scheme)


def score_best_practices(body, result: CrawlResult) -> float:
    checks = audit_best_practices(body, result)
    return sum(checks.values()) / len(BEST_PRACTICE_CHECKS)


def _cookie_is_secure(cookie: str) -> bool:
    attrs = [part.strip().lower() for part in cookie.split(";")[1:]]
    return "secure" in attrs


def score_security(headers: Headers, scheme: str) -> int:
    penalty = sum(w for name, w in SECURITY_WEIGHTS.items() if name not in headers)
    if any(not _cookie_is_secure(c) for c in headers.get_all("Set-Cookie")):
        penalty += INSECURE_COOKIE_PENALTY
    if scheme.lower() != "https":
        penalty += PLAIN_HTTP_PENALTY
    return penalty


def request_time(result: CrawlResult, mode: str = "total") -> float:
    if not is_valid(result):
        raise ValueError(f"request_time needs a valid crawl result (firm {result.firm_id!r})")
    if mode == "total":
        return result.total_seconds
    if mode == "ttfb":
        return result.ttfb_seconds
    raise ValueError(f"unknown request_time mode {mode!r}")


def extract_features(result: CrawlResult, years_old: int, request_time_mode: str = "total") -> RawFeatures:
    if not is_valid(result):
        raise ValueError(f"cannot extract features from an invalid crawl result (firm {result.firm_id!r})")
    scanner = _scan(result.body, result.response_headers, result.firm_id)
    n_in, n_out = _split_links(resolve_anchors(scanner.anchors, result.final_url), result.final_url)
    facebook, instagram, linkedin = _social_flags(scanner.anchors)
    checks = best_practice_checks(scanner, result.scheme)
    return RawFeatures(
        unique_links_in=n_in,
        unique_links_out=n_out,
        best_practices=sum(checks.values()) / len(BEST_PRACTICE_CHECKS),
        length_url=url_length(result.requested_url),
        facebook=facebook,
        instagram=instagram,
        linkedin=linkedin,
        years_old=int(years_old),
        request_time=request_time(result, request_time_mode),
        security_header_int=score_security(result.response_headers, result.scheme),
    )
