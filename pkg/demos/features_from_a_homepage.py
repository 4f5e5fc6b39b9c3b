"""
Features from a single homepage
===============================

A stored response is enough to compute all ten homepage features. Here the
page is rendered from a plan so we know in advance what it contains.
"""

from __future__ import annotations

from codai.extractor import audit_best_practices, extract_features, score_security
from codai.synth import PagePlan, plan_result

# A firm with six internal pages, two partners, a Facebook and a LinkedIn link,
# no viewport tag and no Content-Security-Policy header.
plan = PagePlan(
    "F0001", "https://www.officine-meccaniche.it/",
    n_internal=6, n_external=2, social=("facebook", "linkedin"),
    failing=frozenset({"viewport"}),
    protections=frozenset({"strict-transport-security", "x-frame-options", "x-content-type-options",
                           "referrer-policy", "permissions-policy"}),
    ttfb=0.08, total=0.41, first_year=2004,
)
result = plan_result(plan)
print(result.body.decode()[:300], "...\n")

# The audit lists each static check separately; the score is the passing share.
for name, ok in audit_best_practices(result.body, result).items():
    print(f"  {'pass' if ok else 'FAIL'}  {name}")

# Missing headers add penalty points, so lower is safer.
print("security penalty:", score_security(result.response_headers, result.scheme))

# years_old comes from the archive lookup; 2021 - 2004 here.
features = extract_features(result, years_old=17)
for name, value in features.as_dict().items():
    print(f"{name:>20}  {value}")
