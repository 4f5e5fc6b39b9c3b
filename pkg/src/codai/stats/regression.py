"""Design matrices with dummy encodings, OLS via QR, and logit via IRLS."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg
from scipy import stats as sps
from scipy.special import expit

from ..errors import ConfigError, DegenerateResponseError, RankDeficientError, SeparationError
from ..registry import SizeClass, classify_size

LISTED_SECTORS = ("A", "C", "F", "G", "H", "I", "J", "K", "L", "M")
FIRM_TERMS = ("size", "sector", "firm_age")
TERRITORY_TERMS = ("urban", "north", "south", "wideband")
# canonical column order: intercept, size, sectors, age, territory dummies, wideband
_TERM_ORDER = FIRM_TERMS + TERRITORY_TERMS
_RAW_FIELDS = {
    "size": "employees", "sector": "nace_section", "firm_age": "founding_year",
    "urban": "urban_pole", "north": "macro_region", "south": "macro_region", "wideband": "wideband_share",
}


@dataclass(frozen=True)
class RegressionSpec:
    dependent: str
    model: str = "ols"
    firm_terms: tuple[str, ...] = FIRM_TERMS
    territory_terms: tuple[str, ...] = TERRITORY_TERMS
    intercept: bool = True
    sectors: tuple[str, ...] = LISTED_SECTORS
    cov_type: str = "nonrobust"  # or "HC1"

    def __post_init__(self):
        if self.model not in ("ols", "logit"):
            raise ConfigError(f"model must be 'ols' or 'logit', got {self.model!r}")
        if self.cov_type not in ("nonrobust", "HC1"):
            raise ConfigError(f"unknown cov_type {self.cov_type!r}")
        terms = list(self.firm_terms) + list(self.territory_terms)
        for t in self.firm_terms:
            if t not in FIRM_TERMS:
                raise ConfigError(f"unknown firm term {t!r}; expected one of {FIRM_TERMS}")
        for t in self.territory_terms:
            if t not in TERRITORY_TERMS:
                raise ConfigError(f"unknown territory term {t!r}; expected one of {TERRITORY_TERMS}")
        dupes = {t for t in terms if terms.count(t) > 1}
        if dupes:
            raise ConfigError(f"duplicated terms: {sorted(dupes)}")
        if len(set(self.sectors)) != len(self.sectors):
            raise ConfigError("duplicated sector dummies")

    @property
    def terms(self) -> list[str]:
        chosen = set(self.firm_terms) | set(self.territory_terms)
        return [t for t in _TERM_ORDER if t in chosen]

    def columns(self) -> list[str]:
        cols = ["const"] if self.intercept else []
        for term in self.terms:
            if term == "size":
                cols += ["micro", "medium", "large"]
            elif term == "sector":
                cols += [f"sector_{s}" for s in sorted(self.sectors)]
            else:
                cols.append(term)
        return cols


@dataclass
class Design:
    X: np.ndarray
    y: np.ndarray
    columns: list[str]
    keys: list[str]
    excluded: dict[str, str] = field(default_factory=dict)  # row key -> reason


def _encode_row(row: Mapping, spec: RegressionSpec, reference_year: int | None) -> list[float]:
    out = [1.0] if spec.intercept else []
    for term in spec.terms:
        if term == "size":
            size = classify_size(int(row["employees"]))
            out += [float(size is SizeClass.MICRO), float(size is SizeClass.MEDIUM), float(size is SizeClass.LARGE)]
        elif term == "sector":
            sec = str(row["nace_section"]).upper()
            out += [float(sec == s) for s in sorted(spec.sectors)]
        elif term == "firm_age":
            if row.get("firm_age") not in (None, ""):
                out.append(float(row["firm_age"]))
            else:
                if reference_year is None:
                    raise ConfigError("firm_age needs a reference year")
                out.append(float(reference_year - int(row["founding_year"])))
        elif term == "urban":
            out.append(float(bool(int(row["urban_pole"]))))
        elif term == "north":
            out.append(float(row["macro_region"] == "North"))
        elif term == "south":
            out.append(float(row["macro_region"] == "South"))
        elif term == "wideband":
            out.append(float(row["wideband_share"]))
    return out


def _missing(value) -> bool:
    return value is None or value == "" or (isinstance(value, float) and math.isnan(value))


def build_design(rows: Iterable[Mapping], spec: RegressionSpec, reference_year: int | None = None,
                 key: str = "firm_id") -> Design:
    """Encode `rows` (dicts of firm fields plus the dependent) for `spec`.

    Rows lacking employees are always dropped, as are rows missing any value a
    requested term needs or the dependent itself; each drop is recorded.
    """
    columns = spec.columns()
    used_fields = {_RAW_FIELDS[t] for t in spec.terms}
    if spec.dependent in set(columns) | used_fields | {"employees"}:
        raise ConfigError(f"dependent {spec.dependent!r} is also a regressor")
    need = used_fields | {"employees", spec.dependent}
    if "firm_age" in spec.terms:
        need.discard("founding_year")
    X, y, keys, excluded = [], [], [], {}
    for i, row in enumerate(rows):
        k = str(row.get(key, i))
        absent = sorted(f for f in need if _missing(row.get(f)))
        if "firm_age" in spec.terms and _missing(row.get("firm_age")) and _missing(row.get("founding_year")):
            absent.append("founding_year")
        if absent:
            excluded[k] = "missing " + ", ".join(absent)
            continue
        X.append(_encode_row(row, spec, reference_year))
        y.append(float(row[spec.dependent]))
        keys.append(k)
    Xa = np.asarray(X, dtype=float).reshape(len(X), len(columns))
    return Design(Xa, np.asarray(y, dtype=float), columns, keys, excluded)


@dataclass
class FitResult:
    model: str
    terms: list[str]
    coef: np.ndarray
    se: np.ndarray
    stat: np.ndarray
    p_values: np.ndarray
    n_obs: int
    df_resid: int
    aic: float
    bic: float
    llf: float | None = None
    r_squared: float | None = None
    adj_r_squared: float | None = None
    pseudo_r2: float | None = None
    resid: np.ndarray | None = None
    cov: np.ndarray | None = None
    iterations: int = 0
    converged: bool = True

    def params(self) -> dict[str, float]:
        return dict(zip(self.terms, self.coef.tolist()))

    def rows(self) -> list[tuple[str, float, float, float, float]]:
        return list(zip(self.terms, self.coef.tolist(), self.se.tolist(), self.stat.tolist(), self.p_values.tolist()))


def _names(columns, p):
    return list(columns) if columns is not None else [f"x{i}" for i in range(p)]


def _check_rank(X: np.ndarray, names: list[str]) -> None:
    _, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(X.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int((diag > tol).sum())
    if rank < X.shape[1]:
        # columns carrying weight in some null-space direction
        _, _, Vt = np.linalg.svd(X, full_matrices=False)
        null = np.abs(Vt[rank:])
        involved = np.any(null > 1e-8 * null.max(axis=1, keepdims=True), axis=0)
        bad = [names[j] for j in np.flatnonzero(involved)] or [names[j] for j in sorted(piv[rank:])]
        raise RankDeficientError(f"design matrix is rank deficient; collinear columns: {bad}", bad)


def _has_intercept(X: np.ndarray) -> bool:
    return bool(np.any(np.all(X == 1.0, axis=0)))


def ols_fit(X, y, columns: Sequence[str] | None = None, cov_type: str = "nonrobust") -> FitResult:
    """Least squares through a Householder QR of X; classical errors by default."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    names = _names(columns, p)
    if n <= p:
        raise ValueError(f"need more rows than columns (n={n}, p={p})")
    _check_rank(X, names)
    Q, R = np.linalg.qr(X)
    beta = scipy.linalg.solve_triangular(R, Q.T @ y)
    resid = y - X @ beta
    ssr = float(resid @ resid)
    df = n - p
    R_inv = scipy.linalg.solve_triangular(R, np.eye(p))
    bread = R_inv @ R_inv.T  # (X'X)^-1
    if cov_type == "HC1":
        meat = (X * resid[:, None] ** 2).T @ X
        cov = bread @ meat @ bread * n / df
    else:
        cov = bread * (ssr / df)
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = beta / se
    pvals = 2 * sps.t.sf(np.abs(t), df)
    intercept = _has_intercept(X)
    sst = float(((y - y.mean()) ** 2).sum()) if intercept else float(y @ y)
    r2 = 1.0 - ssr / sst if sst > 0 else float("nan")
    adj = 1.0 - (1.0 - r2) * ((n - 1) if intercept else n) / df
    with np.errstate(divide="ignore"):
        log_ssr = math.log(ssr / n) if ssr > 0 else -math.inf
    return FitResult(
        model="ols", terms=names, coef=beta, se=se, stat=t, p_values=np.nan_to_num(pvals, nan=1.0),
        n_obs=n, df_resid=df, aic=n * log_ssr + 2 * p, bic=n * log_ssr + p * math.log(n),
        r_squared=r2, adj_r_squared=adj, resid=resid, cov=cov,
    )


def logit_loglik(beta, X, y) -> float:
    eta = X @ beta
    # log(1+e^eta) computed stably
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def logit_score(beta, X, y) -> np.ndarray:
    return X.T @ (y - expit(X @ beta))


def _separating_column(X, y, names):
    for j, name in enumerate(names):
        col = X[:, j]
        if np.ptp(col) == 0:
            continue
        lo0, hi0 = col[y == 0].min(), col[y == 0].max()
        lo1, hi1 = col[y == 1].min(), col[y == 1].max()
        if hi0 <= lo1 or hi1 <= lo0:
            return name
    return None


def logit_fit(X, y, columns: Sequence[str] | None = None, max_iter: int = 100, tol: float = 1e-10) -> FitResult:
    """Maximum likelihood logit by iteratively reweighted least squares.

    Stops when the log-likelihood changes by less than `tol` or after
    `max_iter` iterations. Standard errors come from the inverse information.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    names = _names(columns, p)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("logit response must be 0/1")
    if y.min() == y.max():
        raise DegenerateResponseError(f"response is constant ({int(y[0])}); nothing to fit")
    if n <= p:
        raise ValueError(f"need more rows than columns (n={n}, p={p})")
    _check_rank(X, names)
    sep = _separating_column(X, y, names)
    if sep is not None:
        raise SeparationError(f"column {sep!r} separates the response; coefficients diverge", sep)

    beta = np.zeros(p)
    ll = logit_loglik(beta, X, y)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        mu = expit(X @ beta)
        w = mu * (1.0 - mu)
        sw = np.sqrt(w)
        # weighted least squares step: solve (sqrt(W) X) delta = (y - mu) / sqrt(W)
        delta, *_ = np.linalg.lstsq(X * sw[:, None], (y - mu) / np.where(sw > 0, sw, 1.0), rcond=None)
        step = 1.0
        new_ll = logit_loglik(beta + delta, X, y)
        while new_ll < ll and step > 1e-8:
            step /= 2.0
            new_ll = logit_loglik(beta + step * delta, X, y)
        beta = beta + step * delta
        change = abs(new_ll - ll)
        ll = new_ll
        if change < tol:
            converged = True
            break

    eta = X @ beta
    if not converged or np.max(np.abs(eta)) > 30 or ll > -1e-8:
        scale = np.abs(beta) * X.std(axis=0)
        worst = names[int(np.argmax(scale))]
        raise SeparationError(f"logit did not converge; coefficients diverge along {worst!r}", worst)

    mu = expit(eta)
    info = (X * (mu * (1 - mu))[:, None]).T @ X
    cov = np.linalg.inv(info)
    se = np.sqrt(np.diag(cov))
    z = beta / se
    pvals = 2 * sps.norm.sf(np.abs(z))
    ybar = y.mean()
    ll0 = n * (ybar * math.log(ybar) + (1 - ybar) * math.log(1 - ybar))
    return FitResult(
        model="logit", terms=names, coef=beta, se=se, stat=z, p_values=pvals, n_obs=n, df_resid=n - p,
        aic=-2 * ll + 2 * p, bic=-2 * ll + p * math.log(n), llf=ll, pseudo_r2=1.0 - ll / ll0,
        cov=cov, iterations=it, converged=True,
    )


def fit(design: Design, spec: RegressionSpec) -> FitResult:
    if spec.model == "logit":
        return logit_fit(design.X, design.y, design.columns)
    return ols_fit(design.X, design.y, design.columns, cov_type=spec.cov_type)
