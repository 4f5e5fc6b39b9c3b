"""
Clustering provinces by their firms' websites
=============================================

Firm features are averaged per province, rescaled column by column, and
grouped with k-means. The elbow curve suggests a number of groups.
"""

from __future__ import annotations

import numpy as np

from codai.extractor import FEATURES
from codai.pipeline import minmax_columns
from codai.spatial import aggregate
from codai.stats import elbow
from codai.synth import expected_features, planted_study

study = planted_study(n_firms=600, n_provinces=20, seed=7)
rows = []
for firm in study.firms:
    row = dict(expected_features(study.plans[firm.firm_id]))
    row.update(firm_id=firm.firm_id, nuts3=firm.nuts3_code, municipality=firm.municipality_code)
    rows.append(row)

regions, report = aggregate(rows, "nuts3")
print(f"{len(regions)} provinces, {report.excluded_rows} firms excluded")

# Municipalities need ten firms each; most synthetic ones are smaller.
towns, town_report = aggregate(rows, "municipality")
print(f"{len(towns)} municipalities kept, {len(town_report.below_threshold)} below the threshold")

X = minmax_columns(np.array([[r.values[f] for f in FEATURES] for r in regions]))
curve = elbow(X, range(1, 7), seed=0)
for k, inertia in curve.table():
    bar = "#" * int(40 * inertia / curve.inertias[0])
    print(f"k={k}  {inertia:7.3f}  {bar}")
print("suggested k:", curve.suggested_k)

model = curve.models[3]
for label in range(3):
    members = [r.region_code for r, lab in zip(regions, model.labels) if lab == label]
    print(f"cluster {label}: {' '.join(members)}")
