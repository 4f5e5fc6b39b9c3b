"""
One population, three index schemes
====================================

Raw features live on very different scales. MinMax normalization maps each to
[0, 1], flipping the ones where a larger raw value is worse, and a scheme then
groups and divides them into a composite score.
"""

from __future__ import annotations

import numpy as np

from codai.extractor import FEATURES
from codai.index import CODAI, SUM10, WAI2001, fit_bounds, normalize, score_population
from codai.synth import expected_features, planted_study

study = planted_study(n_firms=200, seed=1)
rows = {fid: np.array([expected_features(plan)[f] for f in FEATURES], dtype=float)
        for fid, plan in study.plans.items()}

bounds = fit_bounds(list(rows.values()))
print("feature               min      max   inverted")
for name, lo, hi, inv in zip(FEATURES, bounds.mins, bounds.maxs, bounds.invert):
    print(f"{name:<20} {lo:6.2f} {hi:8.2f}   {'yes' if inv else ''}")

# Each scheme reuses the same normalized matrix but groups it differently.
for scheme in (CODAI, WAI2001, SUM10):
    scores, _ = score_population(rows, scheme)
    totals = np.array([s.total for s in scores])
    print(f"\n{scheme.name}: max possible {scheme.max_total():.3f}, "
          f"observed {totals.min():.3f} .. {totals.max():.3f}, mean {totals.mean():.3f}")
    first = scores[0]
    for dim, value in first.dimension_scored.items():
        print(f"   {first.firm_id} {dim:<24} {value:.3f}")

# Mean divisors turn each dimension into an average, so CoDAI tops out at 4.
print("\nmean-divisor variant max:", CODAI.with_mean_divisors().max_total())

# Values beyond the fitted range are clamped, never extrapolated.
extreme = np.array(list(rows.values())[0]) * 100
print("clamped:", np.round(normalize(extreme, bounds), 3))
