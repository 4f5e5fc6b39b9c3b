from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from codai.extractor import FEATURES
from codai.spatial import aggregate


def _row(fid, region, i=0, fb=0, index=None, level="municipality"):
    row = {name: float(i) for name in FEATURES}
    row.update(firm_id=fid, facebook=fb, instagram=0, linkedin=0)
    row[level] = region
    if index is not None:
        row["index"] = index
    return row


def test_means_and_shares():
    rows = [_row("a", "R1", 1, fb=1, index=1.0, level="nuts3"), _row("b", "R1", 3, fb=1, index=2.0, level="nuts3"),
            _row("c", "R1", 5, fb=1, level="nuts3"), _row("d", "R1", 7, fb=0, index=4.0, level="nuts3")]
    (region,), report = aggregate(rows, "nuts3")
    assert region.n_firms == 4 and region.values["unique_links_in"] == 4.0
    assert region.values["facebook"] == 0.75
    assert region.mean_index == pytest.approx(7 / 3)
    assert report.excluded_rows == 0


def test_municipality_threshold():
    rows = [_row(f"a{i}", "M9") for i in range(9)] + [_row(f"b{i}", "M10") for i in range(10)]
    regions, report = aggregate(rows, "municipality")
    assert [r.region_code for r in regions] == ["M10"]
    assert report.below_threshold == {"M9": 9}
    regions, _ = aggregate(rows, "municipality", min_count=1)
    assert [r.region_code for r in regions] == ["M10", "M9"]


def test_missing_region_is_reported():
    rows = [_row("a", "R1", level="nuts3"), _row("b", "", level="nuts3")]
    regions, report = aggregate(rows, "nuts3")
    assert report.missing_region == ["b"] and regions[0].n_firms == 1


def test_unknown_level():
    with pytest.raises(ValueError):
        aggregate([], "province")


_regions = st.sampled_from(["R1", "R2", "R3", "R4"])


@given(st.lists(st.tuples(_regions, st.integers(0, 1), st.integers(0, 100)), max_size=60), st.integers(1, 6))
def test_counts_reconcile_and_shares_are_exact(spec, min_count):
    rows = [_row(f"F{i}", r, v, fb=fb, level="nuts3") for i, (r, fb, v) in enumerate(spec)]
    regions, report = aggregate(rows, "nuts3", min_count=min_count)
    assert sum(r.n_firms for r in regions) + report.excluded_rows == len(rows)
    for r in regions:
        members = [fb for reg, fb, _ in spec if reg == r.region_code]
        assert r.n_firms >= min_count
        assert r.values["facebook"] == sum(members) / len(members)


@given(st.lists(st.tuples(_regions, st.floats(0, 1e3)), min_size=1, max_size=40), st.integers(1, 8))
def test_means_scale_with_the_data(spec, c):
    rows = [_row(f"F{i}", r, v, level="nuts3") for i, (r, v) in enumerate(spec)]
    scaled = [{**row, "request_time": row["request_time"] * c} for row in rows]
    a = {r.region_code: r.values["request_time"] for r in aggregate(rows, "nuts3")[0]}
    b = {r.region_code: r.values["request_time"] for r in aggregate(scaled, "nuts3")[0]}
    assert b == pytest.approx({k: v * c for k, v in a.items()}, rel=1e-12)
    for region in aggregate(rows, "nuts3")[0]:
        vals = [v for r, v in spec if r == region.region_code]
        assert min(vals) <= region.values["request_time"] <= max(vals)
