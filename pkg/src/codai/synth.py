"""Synthetic homepages, crawl corpora and registries with planted properties.

Pages are generated from explicit parameters (link counts, social links,
failing audit checks, security headers), so the features they should yield
are known without running the extractor.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import urlsplit

import numpy as np

from .crawler import CrawlResult, Headers, write_entry
from .extractor import BEST_PRACTICE_CHECKS, SECURITY_WEIGHTS, SOCIAL_FEATURES
from .registry import FirmRecord, write_firms

SOCIAL_URLS = {
    "facebook": "https://www.facebook.com/{slug}",
    "instagram": "https://www.instagram.com/{slug}/",
    "linkedin": "https://it.linkedin.com/company/{slug}",
}
HEADER_VALUES = {
    "strict-transport-security": ("Strict-Transport-Security", "max-age=63072000; includeSubDomains"),
    "content-security-policy": ("Content-Security-Policy", "default-src 'self'"),
    "x-frame-options": ("X-Frame-Options", "SAMEORIGIN"),
    "x-content-type-options": ("X-Content-Type-Options", "nosniff"),
    "referrer-policy": ("Referrer-Policy", "strict-origin-when-cross-origin"),
    "permissions-policy": ("Permissions-Policy", "geolocation=()"),
}


@dataclass
class PagePlan:
    """Everything needed to render a page and to know its features."""
    firm_id: str
    url: str
    n_internal: int = 5
    n_external: int = 2
    social: tuple[str, ...] = ()
    failing: frozenset = frozenset()  # names from BEST_PRACTICE_CHECKS, except "https"
    protections: frozenset = frozenset(SECURITY_WEIGHTS)
    insecure_cookie: bool = False
    ttfb: float = 0.05
    total: float = 0.2
    first_year: int | None = 2010
    duplicate_anchors: bool = True
    extra_headers: tuple[tuple[str, str], ...] = field(default_factory=tuple)

    @property
    def scheme(self) -> str:
        return urlsplit(self.url).scheme

    def expected_checks(self) -> int:
        failing = set(self.failing) | ({"https"} if self.scheme != "https" else set())
        return len(BEST_PRACTICE_CHECKS) - len(failing)

    def expected_security(self) -> int:
        score = sum(w for h, w in SECURITY_WEIGHTS.items() if h not in self.protections)
        return score + int(self.insecure_cookie) + int(self.scheme != "https")


def render_page(plan: PagePlan) -> bytes:
    if "https" in plan.failing:
        raise ValueError("the https check follows the URL scheme; change the URL instead")
    slug = plan.firm_id.lower()
    f = plan.failing
    head = []
    if "charset" not in f:
        head.append('<meta charset="utf-8">')
    if "viewport" not in f:
        head.append('<meta name="viewport" content="width=device-width, initial-scale=1">')
    if "title" not in f:
        head.append(f"<title>{plan.firm_id} homepage</title>")
    body = []
    anchors = [f'<a href="/p{i}/">Page {i}</a>' for i in range(plan.n_internal)]
    anchors += [f'<a href="https://partner{i}-{slug}.example.org/">Partner {i}</a>' for i in range(plan.n_external)]
    anchors += [f'<a href="{SOCIAL_URLS[s].format(slug=slug)}">{s}</a>' for s in SOCIAL_FEATURES if s in plan.social]
    if plan.duplicate_anchors:
        anchors += anchors
    anchors += ['<a href="mailto:info@example.it">mail</a>', '<a href="tel:+39000000">call</a>',
                '<a href="javascript:void(0)">menu</a>', "<a>no target</a>"]
    body.append("<nav>" + "\n".join(anchors) + "</nav>")
    body.append('<img src="/logo.png">' if "img_alt" in f else '<img src="/logo.png" alt="logo">')
    if "no_mixed_content" in f:
        body.append('<img src="http://cdn.static-assets.net/banner.jpg" alt="">')
    if "no_deprecated_tags" in f:
        body.append('<font color="red">Offerte</font>')
    body.append('<iframe src="/map.html"></iframe>' if "iframe_title" in f
                else '<iframe src="/map.html" title="map"></iframe>')
    html_open = "<html>" if "html_lang" in f else '<html lang="it">'
    doctype = "" if "doctype" in f else "<!DOCTYPE html>\n"
    text = (f"{doctype}{html_open}\n<head>\n" + "\n".join(head) + "\n</head>\n<body>\n"
            + "\n".join(body) + "\n</body>\n</html>\n")
    return text.encode("utf-8")


def plan_headers(plan: PagePlan) -> Headers:
    items = [("Content-Type", "text/html; charset=utf-8")]
    items += [HEADER_VALUES[h] for h in SECURITY_WEIGHTS if h in plan.protections]
    if plan.insecure_cookie:
        items.append(("Set-Cookie", "session=abc; Path=/; HttpOnly"))
    items += list(plan.extra_headers)
    return Headers(items)


def plan_result(plan: PagePlan, fetched_at: str = "2021-03-01T09:00:00+00:00", status: int = 200) -> CrawlResult:
    body = render_page(plan) if status == 200 else b""
    return CrawlResult(plan.firm_id, plan.url, plan.url, status, plan.ttfb, plan.total,
                       plan_headers(plan), body, fetched_at, 0)


def expected_features(plan: PagePlan, reference_year: int = 2021, cap: int = 25) -> dict:
    years = 0 if plan.first_year is None else min(reference_year - plan.first_year, cap)
    rest = plan.url.split("://", 1)[1]
    return {
        "unique_links_in": plan.n_internal,
        "unique_links_out": plan.n_external + len(plan.social),
        "best_practices": plan.expected_checks() / 10,
        "length_url": len(rest[:-1] if rest.endswith("/") else rest),
        "facebook": int("facebook" in plan.social),
        "instagram": int("instagram" in plan.social),
        "linkedin": int("linkedin" in plan.social),
        "years_old": years,
        "request_time": plan.total,
        "security_header_int": plan.expected_security(),
    }


# --- planted two-region population -------------------------------------------

@dataclass
class RegionProfile:
    internal_rate: float
    external_rate: float
    social_p: tuple[float, float, float]
    https_p: float
    check_fail_p: float
    protection_p: float
    insecure_cookie_p: float
    mean_seconds: float
    first_year_range: tuple[int, int]


NORTH = RegionProfile(40, 8, (0.6, 0.35, 0.35), 0.95, 0.08, 0.7, 0.1, 0.8, (1998, 2010))
SOUTH = RegionProfile(12, 2, (0.3, 0.1, 0.05), 0.4, 0.4, 0.15, 0.6, 3.5, (2008, 2020))


@dataclass
class SyntheticStudy:
    firms: list[FirmRecord]
    plans: dict[str, PagePlan]
    failed: dict[str, str]  # firm_id -> failure kind


def planted_study(n_firms: int = 600, n_provinces: int = 20, seed: int = 7,
                  invalid_share: float = 0.05) -> SyntheticStudy:
    """Firms split evenly between North and South provinces with planted gaps."""
    rng = np.random.default_rng(seed)
    firms, plans, failed = [], {}, {}
    checks = [c for c in BEST_PRACTICE_CHECKS if c != "https"]
    for i in range(n_firms):
        province = i % n_provinces
        north = province < n_provinces // 2
        prof = NORTH if north else SOUTH
        firm_id = f"F{i:04d}"
        scheme = "https" if rng.random() < prof.https_p else "http"
        name = "".join(rng.choice(list("abcdefghilmnoprstuvz"), size=int(rng.integers(4, 14))))
        url = f"{scheme}://www.{name}{i}.it/"
        first = int(rng.integers(*prof.first_year_range)) if rng.random() < 0.95 else None
        plan = PagePlan(
            firm_id=firm_id,
            url=url,
            n_internal=int(rng.poisson(prof.internal_rate)),
            n_external=int(rng.poisson(prof.external_rate)),
            social=tuple(s for s, p in zip(SOCIAL_FEATURES, prof.social_p) if rng.random() < p),
            failing=frozenset(c for c in checks if rng.random() < prof.check_fail_p),
            protections=frozenset(h for h in SECURITY_WEIGHTS if rng.random() < prof.protection_p),
            insecure_cookie=bool(rng.random() < prof.insecure_cookie_p),
            total=round(float(rng.lognormal(np.log(prof.mean_seconds), 0.35)), 3),
            first_year=first,
        )
        plan.ttfb = round(plan.total * float(rng.uniform(0.1, 0.5)), 3)
        plans[firm_id] = plan
        if rng.random() < invalid_share:
            failed[firm_id] = "timeout" if rng.random() < 0.5 else "404"
        code = f"{'N' if north else 'S'}{province:02d}"
        firms.append(FirmRecord(
            firm_id=firm_id, homepage_url=url,
            nace_section=str(rng.choice(list("ACFGHIJKLMNS"))),
            nuts3_code=code, municipality_code=f"{code}-{int(rng.integers(0, 3))}",
            macro_region="North" if north else "South",
            urban_pole=bool(rng.random() < (0.5 if north else 0.3)),
            employees=int(rng.integers(1, 400)), founding_year=int(rng.integers(1960, 2020)),
            wideband_share=round(float(rng.uniform(0.5, 0.95) if north else rng.uniform(0.2, 0.7)), 3),
        ))
    return SyntheticStudy(firms, plans, failed)


def write_study(study: SyntheticStudy, root, fetched_at: str = "2021-03-01T09:00:00+00:00") -> dict[str, Path]:
    """Write registry.csv, corpus/ and wayback_cache.csv under `root`."""
    root = Path(root)
    corpus = root / "corpus"
    corpus.mkdir(parents=True, exist_ok=True)
    write_firms(study.firms, root / "registry.csv")
    for firm_id, plan in study.plans.items():
        kind = study.failed.get(firm_id)
        if kind == "timeout":
            result = CrawlResult(firm_id, plan.url, plan.url, None, plan.total, plan.total,
                                 fetched_at=fetched_at, failure="timeout", note="ReadTimeout")
        elif kind == "404":
            result = plan_result(plan, fetched_at, status=404)
        else:
            result = plan_result(plan, fetched_at)
        write_entry(corpus, result)
    cache = root / "wayback_cache.csv"
    with cache.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["host", "first_year"])
        for plan in study.plans.values():
            writer.writerow([urlsplit(plan.url).hostname, "" if plan.first_year is None else plan.first_year])
    return {"registry": root / "registry.csv", "corpus": corpus, "wayback_cache": cache}
