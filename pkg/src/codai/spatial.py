"""Territorial aggregation of firm-level features and index values."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .extractor import FEATURES, SOCIAL_FEATURES

LEVELS = ("nuts3", "municipality")
DEFAULT_MIN_COUNT = {"nuts3": 1, "municipality": 10}


@dataclass
class RegionAggregate:
    region_code: str
    level: str
    n_firms: int
    values: dict[str, float]  # mean per continuous feature, adoption share per social flag
    mean_index: float | None = None


@dataclass
class ExclusionReport:
    missing_region: list[str] = field(default_factory=list)  # firm ids
    below_threshold: dict[str, int] = field(default_factory=dict)  # region -> firm count

    @property
    def excluded_rows(self) -> int:
        return len(self.missing_region) + sum(self.below_threshold.values())


def aggregate(rows: Iterable[Mapping], level: str, min_count: int | None = None,
              features: tuple[str, ...] = FEATURES, index_key: str = "index") -> tuple[list[RegionAggregate], ExclusionReport]:
    """Group firm rows by their `level` region code.

    Each row maps ``level`` to a region code, every name in `features` to a
    value and, optionally, `index_key` to the firm's index. Regions with fewer
    than `min_count` firms are dropped and listed in the exclusion report.
    """
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}, got {level!r}")
    if min_count is None:
        min_count = DEFAULT_MIN_COUNT[level]
    groups: dict[str, list[Mapping]] = {}
    report = ExclusionReport()
    for row in rows:
        code = str(row.get(level) or "").strip()
        if not code:
            report.missing_region.append(str(row.get("firm_id", "")))
            continue
        groups.setdefault(code, []).append(row)

    out = []
    for code in sorted(groups):
        members = groups[code]
        if len(members) < min_count:
            report.below_threshold[code] = len(members)
            continue
        values = {}
        for name in features:
            column = [float(m[name]) for m in members]
            if name in SOCIAL_FEATURES and any(v not in (0.0, 1.0) for v in column):
                raise ValueError(f"{name} must be a 0/1 flag in region {code}")
            # fsum/n can drift an ulp past the extremes; clamp back
            values[name] = min(max(math.fsum(column) / len(column), min(column)), max(column))
        idx = [float(m[index_key]) for m in members if m.get(index_key) not in (None, "")]
        mean_index = math.fsum(idx) / len(idx) if idx else None
        out.append(RegionAggregate(code, level, len(members), values, mean_index))
    return out, report
