"""Table rendering in the layout of published regression tables."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .stats.regression import FitResult

STAR_LEVELS = ((0.001, "***"), (0.01, "**"), (0.05, "*"))

TERM_LABELS = {
    "const": "Constant",
    "micro": "Micro firms",
    "medium": "Mid-sized firms",
    "large": "Large firms",
    "firm_age": "Firm age",
    "urban": "Urban area",
    "north": "North",
    "south": "South",
    "wideband": "Wide_band",
}


def stars(p: float) -> str:
    for threshold, mark in STAR_LEVELS:
        if p < threshold:
            return mark
    return ""


def _fmt3(x: float) -> str:
    return f"{x:.3f}"


def render_coefficient(coef: float, se: float, p: float, sep: str = " ") -> str:
    """'-0.075*** (0.002)'; pass sep='\\n' for the two-line cell layout."""
    if se < 0:
        raise ValueError("standard error must be nonnegative")
    return f"{_fmt3(coef)}{stars(p)}{sep}({_fmt3(se)})"


def term_label(term: str) -> str:
    if term.startswith("sector_"):
        return f"NACE sector {term[len('sector_'):]}"
    return TERM_LABELS.get(term, term)


def coefficient_table(fits: Mapping[str, FitResult]) -> str:
    """Plain-text table, one column per fitted model, one row per term."""
    names = list(fits)
    terms: list[str] = []
    for f in fits.values():
        terms.extend(t for t in f.terms if t not in terms)
    header = [""] + names
    body = []
    for term in terms:
        cells = [term_label(term)]
        for f in fits.values():
            if term in f.terms:
                j = f.terms.index(term)
                cells.append(render_coefficient(f.coef[j], f.se[j], f.p_values[j]))
            else:
                cells.append("")
        body.append(cells)
    footer = []
    if any(f.model == "ols" for f in fits.values()):
        footer.append(["R-squared:"] + [_opt(f.r_squared) for f in fits.values()])
        footer.append(["Adj. R-squared:"] + [_opt(f.adj_r_squared) for f in fits.values()])
    if any(f.model == "logit" for f in fits.values()):
        footer.append(["Pseudo R-squared:"] + [_opt(f.pseudo_r2) for f in fits.values()])
    footer.append(["AIC"] + [f"{f.aic:.1f}" for f in fits.values()])
    footer.append(["BIC"] + [f"{f.bic:.1f}" for f in fits.values()])
    footer.append(["N. of observations"] + [f"{f.n_obs:,}" for f in fits.values()])
    return _grid(header, body, footer)


def _opt(x) -> str:
    return "" if x is None else f"{x:.3f}"


def _grid(header, body, footer) -> str:
    rows = [header] + body + footer
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]

    def line(r):
        return "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))).rstrip()

    rule = "-" * (sum(widths) + 2 * (len(widths) - 1))
    out = [rule, line(header), rule] + [line(r) for r in body] + [rule]
    if footer:
        out += [line(r) for r in footer] + [rule]
    return "\n".join(out) + "\n"


def describe(columns: Mapping[str, Sequence[float]]) -> list[tuple[str, float, float, float, float]]:
    """(name, min, max, mean, sample std) per column."""
    out = []
    for name, values in columns.items():
        v = np.asarray(values, dtype=float)
        std = float(v.std(ddof=1)) if len(v) > 1 else 0.0
        out.append((name, float(v.min()), float(v.max()), float(v.mean()), std))
    return out


def describe_table(columns: Mapping[str, Sequence[float]]) -> str:
    body = [[n, f"{lo:.3f}", f"{hi:.3f}", f"{mu:.3f}", f"{sd:.3f}"] for n, lo, hi, mu, sd in describe(columns)]
    return _grid(["", "min", "max", "mean", "std"], body, [])


def correlation_matrix(columns: Mapping[str, Sequence[float]]) -> tuple[list[str], np.ndarray]:
    """Pearson correlations; a constant column correlates as NaN."""
    names = list(columns)
    M = np.asarray([np.asarray(columns[n], dtype=float) for n in names])
    with np.errstate(divide="ignore", invalid="ignore"):
        C = np.corrcoef(M) if M.shape[1] > 1 else np.full((len(names), len(names)), np.nan)
    return names, np.atleast_2d(C)


def correlation_table(columns: Mapping[str, Sequence[float]]) -> str:
    names, C = correlation_matrix(columns)
    body = [[n] + [f"{c:.3f}" for c in C[i]] for i, n in enumerate(names)]
    return _grid([""] + names, body, [])
