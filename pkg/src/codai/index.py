"""MinMax normalization and weighted dimension indices (CoDAI, WAI, plain sum).

Normalized values always lie in [0, 1]. A feature whose population minimum
equals its maximum carries no information and is mapped to 0 for every firm,
inverted or not. Values outside the fitted bounds (scoring new data with old
bounds) are clamped before inversion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError
from .extractor import FEATURES, RawFeatures

DEFAULT_INVERT = frozenset({"length_url", "facebook", "request_time", "security_header_int"})


@dataclass(frozen=True)
class NormalizationBounds:
    mins: np.ndarray
    maxs: np.ndarray
    invert: np.ndarray  # bool mask in FEATURES order

    def __post_init__(self):
        if np.any(self.mins > self.maxs):
            raise ValueError("min must not exceed max for any feature")

    def to_json(self) -> str:
        return json.dumps({
            name: {"min": float(lo), "max": float(hi), "invert": bool(inv)}
            for name, lo, hi, inv in zip(FEATURES, self.mins, self.maxs, self.invert)
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "NormalizationBounds":
        data = json.loads(text)
        return cls(
            np.array([data[n]["min"] for n in FEATURES], dtype=float),
            np.array([data[n]["max"] for n in FEATURES], dtype=float),
            np.array([data[n]["invert"] for n in FEATURES], dtype=bool),
        )


def as_matrix(population) -> np.ndarray:
    """Stack RawFeatures (or rows already in FEATURES order) into an (n, 10) array."""
    if isinstance(population, np.ndarray):
        out = np.asarray(population, dtype=float)
        return out.reshape(1, -1) if out.ndim == 1 else out
    rows = [p.values() if isinstance(p, RawFeatures) else p for p in population]
    return np.asarray(rows, dtype=float).reshape(len(rows), len(FEATURES))


def fit_bounds(population, invert_set: Iterable[str] = DEFAULT_INVERT) -> NormalizationBounds:
    X = as_matrix(population)
    if X.shape[0] == 0:
        raise ValueError("cannot fit bounds on an empty population")
    invert_set = set(invert_set)
    unknown = invert_set - set(FEATURES)
    if unknown:
        raise ConfigError(f"unknown features in invert set: {sorted(unknown)}")
    invert = np.array([name in invert_set for name in FEATURES])
    return NormalizationBounds(X.min(axis=0), X.max(axis=0), invert)


def normalize(raw, bounds: NormalizationBounds) -> np.ndarray:
    """Map one row (or an (n, 10) matrix) onto [0, 1] per feature."""
    if isinstance(raw, RawFeatures):
        raw = raw.values()
    elif isinstance(raw, (list, tuple)) and raw and isinstance(raw[0], RawFeatures):
        raw = as_matrix(raw)
    X = np.asarray(raw, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    span = bounds.maxs - bounds.mins
    degenerate = span <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = (X - bounds.mins) / np.where(degenerate, 1.0, span)
    scaled = np.clip(scaled, 0.0, 1.0)
    scaled = np.where(bounds.invert, 1.0 - scaled, scaled)
    scaled = np.where(degenerate, 0.0, scaled)
    return scaled[0] if single else scaled


@dataclass(frozen=True)
class Dimension:
    name: str
    members: tuple[str, ...]
    divisor: float


@dataclass(frozen=True)
class DimensionScheme:
    name: str
    groups: tuple[Dimension, ...]
    invert_set: frozenset = DEFAULT_INVERT

    def __post_init__(self):
        seen: list[str] = []
        for g in self.groups:
            if not g.divisor > 0:
                raise ConfigError(f"scheme {self.name!r}: divisor of {g.name!r} must be positive")
            seen.extend(g.members)
        unknown = set(seen) - set(FEATURES)
        dupes = {m for m in seen if seen.count(m) > 1}
        missing = set(FEATURES) - set(seen)
        if unknown or dupes or missing:
            raise ConfigError(
                f"scheme {self.name!r} must place each of the ten features in exactly one group "
                f"(unknown={sorted(unknown)}, repeated={sorted(dupes)}, missing={sorted(missing)})"
            )

    @property
    def dimension_names(self) -> list[str]:
        return [g.name for g in self.groups]

    def with_mean_divisors(self) -> "DimensionScheme":
        groups = tuple(Dimension(g.name, g.members, float(len(g.members))) for g in self.groups)
        return DimensionScheme(self.name, groups, self.invert_set)

    def max_total(self) -> float:
        return sum(len(g.members) / g.divisor for g in self.groups)


CODAI = DimensionScheme("codai", (
    Dimension("stakeholder_engagement", ("unique_links_out", "facebook", "instagram", "linkedin"), 2.0),
    Dimension("technical_capabilities", ("best_practices", "security_header_int", "request_time"), 3.0),
    Dimension("internal_organization", ("length_url", "unique_links_in"), 2.0),
    Dimension("digital_culture", ("years_old",), 1.0),
))

# best_practices stands in for the SEO indicator; navigability keeps its divisor of 3
WAI2001 = DimensionScheme("wai2001", (
    Dimension("accessibility", ("length_url", "best_practices", "facebook", "instagram", "linkedin"), 5.0),
    Dimension("navigability", ("unique_links_in", "unique_links_out"), 3.0),
    Dimension("speed", ("request_time",), 1.0),
    Dimension("digital_culture", ("years_old", "security_header_int"), 2.0),
))

SUM10 = DimensionScheme("sum10", (Dimension("all_features", FEATURES, 1.0),))

BUILTIN_SCHEMES = {s.name: s for s in (CODAI, WAI2001, SUM10)}


def get_scheme(name: str, mean_divisors: bool = False, extra: Mapping[str, DimensionScheme] | None = None) -> DimensionScheme:
    schemes = {**BUILTIN_SCHEMES, **(extra or {})}
    if name not in schemes:
        raise ConfigError(f"unknown scheme {name!r}; known: {sorted(schemes)}")
    scheme = schemes[name]
    return scheme.with_mean_divisors() if mean_divisors else scheme


def scheme_from_config(name: str, table: Mapping) -> DimensionScheme:
    """Build a scheme from a config table::

        [schemes.myscheme]
        invert = ["length_url", "request_time"]
        [[schemes.myscheme.groups]]
        name = "reach"
        members = ["unique_links_out", "facebook"]
        divisor = 2
    """
    try:
        groups = tuple(
            Dimension(str(g["name"]), tuple(g["members"]), float(g.get("divisor", len(g["members"]))))
            for g in table["groups"]
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"scheme {name!r}: malformed group definition ({exc})") from None
    invert = frozenset(table.get("invert", DEFAULT_INVERT))
    return DimensionScheme(name, groups, invert)


@dataclass
class IndexScores:
    firm_id: str
    normalized: np.ndarray
    dimension_raw: dict[str, float] = field(default_factory=dict)
    dimension_scored: dict[str, float] = field(default_factory=dict)
    total: float = 0.0


def dimension_scores(normalized: Sequence[float], scheme: DimensionScheme, firm_id: str = "") -> IndexScores:
    values = np.asarray(normalized, dtype=float)
    if values.shape != (len(FEATURES),):
        raise ValueError(f"expected {len(FEATURES)} normalized values, got shape {values.shape}")
    lookup = dict(zip(FEATURES, values))
    raw, scored = {}, {}
    for g in scheme.groups:
        raw[g.name] = float(sum(lookup[m] for m in g.members))
        scored[g.name] = raw[g.name] / g.divisor
    return IndexScores(firm_id, values, raw, scored, float(sum(scored.values())))


def score_population(rows: Mapping[str, RawFeatures], scheme: DimensionScheme,
                     bounds: NormalizationBounds | None = None) -> tuple[list[IndexScores], NormalizationBounds]:
    """Fit bounds on `rows` (unless given) and score every firm."""
    ids = list(rows)
    X = as_matrix([rows[i] for i in ids])
    if bounds is None:
        bounds = fit_bounds(X, scheme.invert_set)
    N = normalize(X, bounds) if ids else np.zeros((0, len(FEATURES)))
    return [dimension_scores(N[i], scheme, firm_id) for i, firm_id in enumerate(ids)], bounds


def write_bounds(bounds: NormalizationBounds, path) -> None:
    Path(path).write_text(bounds.to_json() + "\n", encoding="utf-8")


def read_bounds(path) -> NormalizationBounds:
    return NormalizationBounds.from_json(Path(path).read_text(encoding="utf-8"))
