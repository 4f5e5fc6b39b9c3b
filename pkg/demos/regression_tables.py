"""
Firm traits and website features
================================

Each feature is regressed on firm size, sector, age and territorial controls.
Binary social-media flags use a logit model, everything else OLS.
"""

from __future__ import annotations

from codai.report import coefficient_table
from codai.stats import build_design, logit_fit, ols_fit
from codai.stats.regression import RegressionSpec
from codai.synth import expected_features, planted_study

study = planted_study(n_firms=600, seed=7)
rows = []
for firm in study.firms:
    row = expected_features(study.plans[firm.firm_id])
    row.update(firm_id=firm.firm_id, employees=firm.employees, nace_section=firm.nace_section,
               founding_year=firm.founding_year, urban_pole=int(firm.urban_pole),
               macro_region=firm.macro_region, wideband_share=firm.wideband_share)
    rows.append(row)

# The synthetic registry has no Centre firms, so South is the baseline here.
terms = dict(firm_terms=("size", "firm_age"), territory_terms=("urban", "north", "wideband"))
fits = {}
for dep in ("best_practices", "security_header_int", "request_time"):
    design = build_design(rows, RegressionSpec(dep, **terms), reference_year=2021)
    fits[dep] = ols_fit(design.X, design.y, design.columns)
print(coefficient_table(fits))

design = build_design(rows, RegressionSpec("facebook", "logit", **terms), reference_year=2021)
print(coefficient_table({"facebook": logit_fit(design.X, design.y, design.columns)}))
