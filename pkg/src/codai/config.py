"""Run configuration read from a TOML file.

Every key is optional. Example::

    seed = 0
    reference_year = 2021

    [crawl]
    timeout_seconds = 30
    per_host_min_interval_seconds = 1.0
    max_redirects = 5
    respect_robots = true
    workers = 8

    [registry]
    delimiter = ","
    wideband = "wideband.csv"        # municipality,share
    [registry.schema]
    homepage_url = "website"         # logical field -> column name

    [features]
    request_time_mode = "total"      # or "ttfb"
    years_cap = 25
    wayback_cache = "wayback_cache.csv"
    wayback_live = false

    [index]
    scheme = "codai"
    mean_divisors = false
    invert = ["length_url", "facebook", "request_time", "security_header_int"]

    [aggregate]
    nuts3_min_count = 1
    municipality_min_count = 10

    [cluster]
    k = 3
    k_min = 1
    k_max = 6

    [[regression]]
    dependent = "codai"
    model = "ols"
    firm_terms = ["size", "sector", "firm_age"]
    territory_terms = ["urban", "north", "south", "wideband"]
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .crawler import CrawlPolicy
from .errors import ConfigError
from .index import DimensionScheme, get_scheme, scheme_from_config
from .stats.regression import FIRM_TERMS, TERRITORY_TERMS, RegressionSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass
class Config:
    seed: int = 0
    reference_year: int | None = None
    crawl: dict = field(default_factory=dict)
    registry: dict = field(default_factory=dict)
    features: dict = field(default_factory=dict)
    index: dict = field(default_factory=dict)
    schemes: dict = field(default_factory=dict)
    aggregate: dict = field(default_factory=dict)
    cluster: dict = field(default_factory=dict)
    regression: list = field(default_factory=list)
    base_dir: Path = field(default_factory=Path.cwd, compare=False)

    def policy(self) -> CrawlPolicy:
        known = set(CrawlPolicy.__dataclass_fields__)
        return CrawlPolicy(**{k: v for k, v in self.crawl.items() if k in known})

    def path(self, value) -> Path | None:
        if not value:
            return None
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    def scheme(self, name: str | None = None) -> DimensionScheme:
        name = name or self.index.get("scheme", "codai")
        extra = {n: scheme_from_config(n, t) for n, t in self.schemes.items()}
        scheme = get_scheme(name, bool(self.index.get("mean_divisors", False)), extra)
        if "invert" in self.index:
            scheme = DimensionScheme(scheme.name, scheme.groups, frozenset(self.index["invert"]))
        return scheme

    def regression_specs(self) -> list[RegressionSpec]:
        specs = []
        for table in self.regression:
            try:
                specs.append(RegressionSpec(
                    dependent=table["dependent"],
                    model=table.get("model", "ols"),
                    firm_terms=tuple(table.get("firm_terms", FIRM_TERMS)),
                    territory_terms=tuple(table.get("territory_terms", TERRITORY_TERMS)),
                    intercept=bool(table.get("intercept", True)),
                    cov_type=table.get("cov_type", "nonrobust"),
                ))
            except KeyError as exc:
                raise ConfigError(f"regression spec lacks {exc}") from None
        return specs

    def min_count(self, level: str) -> int | None:
        return self.aggregate.get(f"{level}_min_count")

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d

    def digest(self) -> str:
        text = json.dumps(self.as_dict(), sort_keys=True, default=str)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


_SECTIONS = {"crawl", "registry", "features", "index", "schemes", "aggregate", "cluster"}


def load_config(path=None) -> Config:
    if path is None:
        return Config()
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg = Config(base_dir=path.parent.resolve())
    for key, value in data.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"{path}: [{key}] must be a table")
            setattr(cfg, key, value)
        elif key == "regression":
            cfg.regression = list(value)
        elif key in ("seed", "reference_year"):
            setattr(cfg, key, int(value))
        else:
            raise ConfigError(f"{path}: unknown key {key!r}")
    cfg.scheme()  # fail early on a bad scheme definition
    cfg.regression_specs()
    return cfg
