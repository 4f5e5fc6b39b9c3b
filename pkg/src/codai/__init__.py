"""Corporate website features, the CoDAI composite index, and territorial digital-divide analytics."""

from .crawler import CrawlPolicy, CrawlResult, Crawler, Corpus, fetch_homepage, is_valid, replay_fetch
from .extractor import FEATURES, RawFeatures, extract_features
from .index import CODAI, SUM10, WAI2001, dimension_scores, fit_bounds, normalize
from .registry import FirmRecord, SizeClass, classify_size, join_wideband, load_firms
from .report import render_coefficient
from .spatial import aggregate
from .stats import build_design, elbow, kmeans_fit, logit_fit, ols_fit
from .wayback import WaybackClient, first_snapshot_year, years_old

__version__ = "0.1.0"

__all__ = [
    "CrawlPolicy", "CrawlResult", "Crawler", "Corpus", "fetch_homepage", "is_valid", "replay_fetch",
    "FEATURES", "RawFeatures", "extract_features",
    "CODAI", "SUM10", "WAI2001", "dimension_scores", "fit_bounds", "normalize",
    "FirmRecord", "SizeClass", "classify_size", "join_wideband", "load_firms",
    "render_coefficient", "aggregate",
    "build_design", "elbow", "kmeans_fit", "logit_fit", "ols_fit",
    "WaybackClient", "first_snapshot_year", "years_old",
]
