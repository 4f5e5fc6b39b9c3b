"""Registrable-domain lookup against the bundled Public Suffix List snapshot."""

from __future__ import annotations

import functools
import ipaddress
from importlib import resources


@functools.lru_cache(maxsize=1)
def _rules() -> tuple[frozenset, frozenset, frozenset]:
    exact, wildcard, exception = set(), set(), set()
    text = resources.files("codai").joinpath("data/public_suffix_list.dat").read_text(encoding="utf-8")
    for line in text.splitlines():
        rule = line.strip().split(" ")[0]
        if not rule or rule.startswith("//"):
            continue
        rule = rule.encode("idna").decode("ascii") if not rule.isascii() else rule
        rule = rule.lower()
        if rule.startswith("!"):
            exception.add(rule[1:])
        elif rule.startswith("*."):
            wildcard.add(rule[2:])
        else:
            exact.add(rule)
    return frozenset(exact), frozenset(wildcard), frozenset(exception)


def public_suffix(host: str) -> str:
    exact, wildcard, exception = _rules()
    labels = host.lower().rstrip(".").split(".")
    # longest matching rule wins; exceptions beat wildcards
    for i in range(len(labels)):
        candidate = ".".join(labels[i:])
        if candidate in exception:
            return ".".join(labels[i + 1:])
        parent = ".".join(labels[i + 1:])
        if i + 1 < len(labels) and parent in wildcard:
            return candidate
        if candidate in exact:
            return candidate
    return labels[-1]  # implicit "*" rule


@functools.lru_cache(maxsize=65536)
def registrable_domain(host: str | None) -> str:
    """eTLD+1 of `host`; IP literals and bare suffixes are returned unchanged."""
    if not host:
        return ""
    host = host.lower().rstrip(".")
    try:
        ipaddress.ip_address(host.strip("[]"))
        return host
    except ValueError:
        pass
    suffix = public_suffix(host)
    if host == suffix:
        return host
    rest = host[: -len(suffix) - 1]
    return rest.rsplit(".", 1)[-1] + "." + suffix
