"""File-based pipeline stages behind the command line.

Each stage reads its inputs from the output directory (or explicit paths),
writes its outputs there, and records counts in ``manifest.json``. Apart from
the manifest, outputs depend only on inputs and configuration, so reruns are
byte-identical.

Files under the output directory::

    firms.csv                 accepted registry rows (crawl)
    registry_rejects.csv      malformed registry rows (crawl)
    corpus/                   stored responses (crawl, unless replaying)
    crawl_log.jsonl           one line per attempted firm (crawl)
    features.csv              firm_id + the ten features (extract)
    extract_rejects.csv       valid crawls that yielded no features (extract)
    bounds.json, index.csv    normalization bounds and index scores (index)
    regions_<level>.csv       territorial aggregates (aggregate)
    regions_<level>_excluded.csv
    clusters_<level>.csv, centroids_<level>.csv, elbow_<level>.csv (cluster)
    regress_<dependent>.csv, regress_<dependent>.txt, regress_table.txt (regress)
    describe.txt, correlation.csv (report)
    manifest.json
"""

from __future__ import annotations

import csv
import json
import logging
import uuid
from collections import Counter
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

import numpy as np

from . import report
from .config import Config
from .crawler import Corpus, Crawler, CrawlResult, entry_dir, is_valid, log_record, write_entry
from .errors import CodaiError, NotFoundError, StageError
from .extractor import FEATURE_COLUMNS, FEATURES, SOCIAL_FEATURES, RawFeatures, extract_features
from .index import fit_bounds, normalize, dimension_scores, write_bounds
from .registry import join_wideband, load_coverage, load_firms, write_firms
from .spatial import aggregate as aggregate_rows
from .stats.kmeans import elbow, kmeans_fit
from .stats.regression import RegressionSpec, build_design, fit
from .wayback import WaybackClient, WaybackUnavailable, first_snapshot_year, years_old

logger = logging.getLogger(__name__)

COLUMN_TO_FEATURE = {v: k for k, v in FEATURE_COLUMNS.items()}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, header: list[str], rows: Iterable[Iterable]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _read_csv(path: Path, stage: str) -> list[dict]:
    if not path.is_file():
        raise StageError(f"{path} not found; run the '{stage}' stage first")
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _now() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


class Manifest:
    """Run metadata; the only output that carries timestamps."""

    def __init__(self, out: Path, cfg: Config):
        self.path = out / "manifest.json"
        if self.path.is_file():
            self.data = json.loads(self.path.read_text(encoding="utf-8"))
        else:
            self.data = {"run_id": uuid.uuid4().hex, "created": _now(), "stages": {}}
        self.data["config_digest"] = cfg.digest()
        self.data["seed"] = cfg.seed

    def record(self, stage: str, **info) -> dict:
        info = {"finished": _now(), **info}
        self.data["stages"][stage] = info
        self.path.write_text(json.dumps(self.data, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
        return info

    def get(self, key, default=None):
        return self.data.get(key, default)

    def set(self, key, value):
        self.data[key] = value


def _prepare(out) -> Path:
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise CodaiError(f"output directory {out} is not writable: {exc}") from exc
    return out


# --- crawl --------------------------------------------------------------------

def run_crawl(cfg: Config, registry_path, out, replay=None, crawler: Crawler | None = None) -> dict:
    out = _prepare(out)
    reg = cfg.registry
    loaded = load_firms(registry_path, reg.get("schema"), reg.get("delimiter", ","))
    firms = loaded.records
    join_info = None
    if reg.get("wideband"):
        firms, joined = join_wideband(firms, load_coverage(cfg.path(reg["wideband"])))
        join_info = {"matched": joined.matched, "unmatched": joined.unmatched}
    write_firms(firms, out / "firms.csv")
    _write_csv(out / "registry_rejects.csv", ["line", "reason"], ((r.line, r.reason) for r in loaded.rejects))

    corpus_dir = out / "corpus"
    if replay is not None:
        source = Corpus(replay)
        results = []
        for f in firms:
            try:
                results.append(source.load(f.firm_id))
            except NotFoundError:
                results.append(CrawlResult(f.firm_id, f.homepage_url, f.homepage_url, None, 0.0, 0.0,
                                           failure="timeout", note="not in replay corpus"))
        corpus_root = Path(replay)
    else:
        crawler = crawler or Crawler(cfg.policy())
        results = crawler.crawl([(f.firm_id, f.homepage_url) for f in firms], cfg.crawl.get("workers", 8))
        for r in results:
            write_entry(corpus_dir, r)
        corpus_root = corpus_dir

    with (out / "crawl_log.jsonl").open("w", encoding="utf-8") as fh:
        for r in results:
            ref = str(entry_dir(corpus_root, r.firm_id) / "body")
            fh.write(log_record(r, ref) + "\n")

    counts = {
        "input_rows": len(firms) + len(loaded.rejects),
        "input_firms": len(firms),
        "rejected_rows": len(loaded.rejects),
        "attempted": len(results),
        "valid": sum(is_valid(r) for r in results),
        "robots_excluded": sum(r.robots_excluded for r in results),
    }
    counts["invalid"] = counts["attempted"] - counts["valid"] - counts["robots_excluded"]
    counts["valid_share"] = counts["valid"] / counts["attempted"] if results else 0.0
    years = Counter(r.fetched_at[:4] for r in results if r.fetched_at[:4].isdigit())
    crawl_year = int(max(years)) if years else None
    manifest = Manifest(out, cfg)
    manifest.set("crawl_policy", cfg.policy().as_dict())
    manifest.set("reference_year", cfg.reference_year or crawl_year)
    manifest.set("corpus", str(corpus_root))
    info = manifest.record("crawl", replay=str(replay) if replay else None, counts=counts,
                           normalization_notes=loaded.notes, wideband_join=join_info)
    return info


# --- extract ------------------------------------------------------------------

def _corpus_for(out: Path, replay, manifest: Manifest) -> Corpus:
    root = replay or manifest.get("corpus") or out / "corpus"
    try:
        return Corpus(root)
    except NotFoundError:
        raise StageError(f"no crawl corpus at {root}; run the 'crawl' stage first or pass --replay") from None


def run_extract(cfg: Config, out, replay=None) -> dict:
    out = _prepare(out)
    manifest = Manifest(out, cfg)
    corpus = _corpus_for(out, replay, manifest)
    log = out / "crawl_log.jsonl"
    if log.is_file():
        ids = [json.loads(line)["firm_id"] for line in log.read_text(encoding="utf-8").splitlines() if line]
    else:
        ids = corpus.firm_ids()
    feats = cfg.features
    client = WaybackClient(cfg.path(feats.get("wayback_cache")), live=bool(feats.get("wayback_live", False)))
    mode = feats.get("request_time_mode", "total")
    cap = int(feats.get("years_cap", 25))
    reference_year = cfg.reference_year or manifest.get("reference_year")

    rows, rejects = [], []
    invalid = 0
    sources = Counter()
    for firm_id in ids:
        result = corpus.load(firm_id)
        if not is_valid(result):
            invalid += 1
            continue
        ref_year = int(reference_year or result.fetched_at[:4])
        try:
            lookup = first_snapshot_year(result.requested_url, client)
            sources[lookup.source] += 1
            age = years_old(lookup.first_year, ref_year, cap)
            feat = extract_features(result, age, mode)
        except WaybackUnavailable as exc:
            rejects.append((firm_id, f"wayback unavailable (retryable): {exc}"))
            continue
        except (CodaiError, ValueError) as exc:
            rejects.append((firm_id, str(exc)))
            continue
        rows.append([firm_id] + list(feat.values()))
    _write_csv(out / "features.csv", ["firm_id"] + list(FEATURE_COLUMNS.values()), rows)
    _write_csv(out / "extract_rejects.csv", ["firm_id", "reason"], rejects)
    return manifest.record("extract", counts={"firms": len(ids), "invalid_crawls": invalid,
                                              "extracted": len(rows), "rejected": len(rejects)},
                           request_time_mode=mode, years_cap=cap, wayback_sources=dict(sources))


def read_features(path) -> dict[str, RawFeatures]:
    rows = _read_csv(Path(path), "extract")
    return {r["firm_id"]: RawFeatures.from_dict({COLUMN_TO_FEATURE[c]: r[c] for c in COLUMN_TO_FEATURE})
            for r in rows}


# --- index --------------------------------------------------------------------

def run_index(cfg: Config, out, scheme_name: str | None = None) -> dict:
    out = _prepare(out)
    scheme = cfg.scheme(scheme_name)
    features = read_features(out / "features.csv")
    if not features:
        raise StageError("features.csv is empty; nothing to index")
    ids = list(features)
    X = np.array([features[i].values() for i in ids], dtype=float)
    bounds = fit_bounds(X, scheme.invert_set)
    N = normalize(X, bounds)
    write_bounds(bounds, out / "bounds.json")
    dims = scheme.dimension_names
    rows = []
    for i, firm_id in enumerate(ids):
        s = dimension_scores(N[i], scheme, firm_id)
        rows.append([firm_id] + N[i].tolist() + [s.dimension_scored[d] for d in dims] + [s.total])
    header = ["firm_id"] + list(FEATURE_COLUMNS.values()) + dims + [scheme.name]
    _write_csv(out / "index.csv", header, rows)
    totals = [r[-1] for r in rows]
    return Manifest(out, cfg).record("index", scheme=scheme.name, firms=len(rows),
                                     total_min=min(totals), total_max=max(totals),
                                     total_bound=scheme.max_total())


# --- joined firm table --------------------------------------------------------

def firm_table(out: Path) -> tuple[list[dict], str | None]:
    """Registry rows joined with raw features and index columns (by firm_id)."""
    firms = _read_csv(out / "firms.csv", "crawl")
    features = {r["firm_id"]: r for r in _read_csv(out / "features.csv", "extract")}
    index_path = out / "index.csv"
    index_rows = {r["firm_id"]: r for r in _read_csv(index_path, "index")} if index_path.is_file() else {}
    index_name = None
    if index_rows:
        header = list(next(iter(index_rows.values())))
        index_name = header[-1]
    table = []
    for f in firms:
        fid = f["firm_id"]
        if fid not in features:
            continue
        row = {
            "firm_id": fid,
            "nace_section": f["nace"],
            "employees": int(f["employees"]) if f["employees"] else None,
            "founding_year": int(f["founding_year"]) if f["founding_year"] else None,
            "nuts3": f["nuts3"],
            "municipality": f["municipality"],
            "macro_region": f["macro_region"],
            "urban_pole": int(f["urban_pole"]),
            "wideband_share": float(f["wideband_share"]) if f.get("wideband_share") else None,
        }
        for col, name in COLUMN_TO_FEATURE.items():
            row[name] = float(features[fid][col])
        if fid in index_rows:
            for col, value in index_rows[fid].items():
                if col != "firm_id" and col not in FEATURE_COLUMNS.values():
                    row[col] = float(value)
            row["index"] = row[index_name]
        table.append(row)
    return table, index_name


# --- aggregate ----------------------------------------------------------------

def run_aggregate(cfg: Config, out, level: str = "nuts3", min_count: int | None = None) -> dict:
    out = _prepare(out)
    table, index_name = firm_table(out)
    if min_count is None:
        min_count = cfg.min_count(level)
    regions, excl = aggregate_rows(table, level, min_count)
    header = ["region_code", "level", "n_firms"] + list(FEATURE_COLUMNS.values()) + ["mean_index"]
    _write_csv(out / f"regions_{level}.csv", header,
               ([r.region_code, r.level, r.n_firms] + [r.values[f] for f in FEATURES] + [r.mean_index]
                for r in regions))
    excluded = [(code, "below_min_count", n) for code, n in sorted(excl.below_threshold.items())]
    excluded += [(fid, "missing_region", 1) for fid in excl.missing_region]
    _write_csv(out / f"regions_{level}_excluded.csv", ["key", "reason", "n_firms"], excluded)
    return Manifest(out, cfg).record(f"aggregate_{level}", level=level, min_count=min_count,
                                     regions=len(regions), firms=len(table),
                                     excluded_rows=excl.excluded_rows, index=index_name)


# --- cluster ------------------------------------------------------------------

def minmax_columns(X: np.ndarray) -> np.ndarray:
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return np.where(hi > lo, (X - lo) / span, 0.0)


def _relabel(labels: np.ndarray) -> np.ndarray:
    order = {}
    for lab in labels:
        order.setdefault(int(lab), len(order))
    return np.array([order[int(lab)] for lab in labels])


def run_cluster(cfg: Config, out, level: str = "nuts3", k: int | None = None, seed: int | None = None) -> dict:
    out = _prepare(out)
    rows = _read_csv(out / f"regions_{level}.csv", "aggregate")
    if not rows:
        raise StageError(f"regions_{level}.csv holds no regions to cluster")
    codes = [r["region_code"] for r in rows]
    X = minmax_columns(np.array([[float(r[c]) for c in FEATURE_COLUMNS.values()] for r in rows]))
    k = int(k or cfg.cluster.get("k", 3))
    seed = cfg.seed if seed is None else seed
    k_min = max(1, int(cfg.cluster.get("k_min", 1)))
    k_max = min(len(X), int(cfg.cluster.get("k_max", 6)))
    curve = elbow(X, range(k_min, k_max + 1), seed=seed) if k_min <= k_max else None
    if curve is not None and k in curve.models:
        model = curve.models[k]
    else:
        model = kmeans_fit(X, k, seed=seed)
    labels = _relabel(model.labels)
    remap = {}
    for old, new in zip(model.labels, labels):
        remap[int(old)] = int(new)
    centroids = np.array([model.centroids[old] for old, _ in sorted(remap.items(), key=lambda t: t[1])])
    _write_csv(out / f"clusters_{level}.csv", ["region_code", "cluster"], zip(codes, labels.tolist()))
    _write_csv(out / f"centroids_{level}.csv", ["cluster"] + list(FEATURE_COLUMNS.values()),
               ([j] + c.tolist() for j, c in enumerate(centroids)))
    if curve is not None:
        _write_csv(out / f"elbow_{level}.csv", ["k", "inertia", "suggested"],
                   ((kk, inert, int(kk == curve.suggested_k)) for kk, inert in curve.table()))
    return Manifest(out, cfg).record(f"cluster_{level}", k=k, seed=seed, inertia=model.inertia,
                                     iterations=model.iterations_run,
                                     suggested_k=None if curve is None else curve.suggested_k)


# --- regress ------------------------------------------------------------------

def _dependent_key(name: str) -> str:
    return COLUMN_TO_FEATURE.get(name, name)


def run_regress(cfg: Config, out, specs: list[RegressionSpec] | None = None, prune: bool | None = None) -> dict:
    """Fit each spec; `prune` drops unidentifiable dummies (default: only for the built-in model)."""
    out = _prepare(out)
    table, index_name = firm_table(out)
    manifest = Manifest(out, cfg)
    reference_year = cfg.reference_year or manifest.get("reference_year")
    if prune is None:
        prune = not (specs or cfg.regression_specs())
    specs = specs or cfg.regression_specs() or [RegressionSpec(index_name or "best_practices")]
    fits = {}
    info = {}
    for spec in specs:
        dep = _dependent_key(spec.dependent)
        if table and dep not in table[0]:
            raise StageError(f"dependent {spec.dependent!r} not available; run 'index' for index columns")
        spec = RegressionSpec(dep, spec.model, spec.firm_terms, spec.territory_terms, spec.intercept,
                              spec.sectors, spec.cov_type)
        design = build_design(table, spec, reference_year)
        dropped = _prune_dummies(design) if prune else []
        if dropped:
            logger.warning("%s model: dropped dummies with no identifying variation: %s", dep, dropped)
        result = fit(design, spec)
        fits[dep] = result
        _write_csv(out / f"regress_{dep}.csv", ["term", "coef", "se", "stat", "p"], result.rows())
        (out / f"regress_{dep}.txt").write_text(report.coefficient_table({dep: result}), encoding="utf-8")
        info[dep] = {"model": spec.model, "n_obs": result.n_obs, "excluded": len(design.excluded),
                     "dropped_columns": dropped}
    (out / "regress_table.txt").write_text(report.coefficient_table(fits), encoding="utf-8")
    manifest.record("regress", fits=info, reference_year=reference_year)
    return fits


def _prune_dummies(design) -> list[str]:
    """Drop 0/1 columns the sample cannot identify.

    A dummy that never (or always) fires is removed, and when the North and
    South dummies cover every row, South is dropped so it becomes the baseline.
    """
    X, cols = design.X, list(design.columns)
    keep = []
    for j, name in enumerate(cols):
        col = X[:, j]
        binary = name not in ("const", "firm_age", "wideband")
        keep.append(not (binary and (np.all(col == 0) or np.all(col == 1))))
    if "north" in cols and "south" in cols and "const" in cols:
        n, so = cols.index("north"), cols.index("south")
        if keep[n] and keep[so] and np.all(X[:, n] + X[:, so] == 1):
            keep[so] = False
    dropped = [c for c, k in zip(cols, keep) if not k]
    design.X = X[:, keep]
    design.columns = [c for c, k in zip(cols, keep) if k]
    return dropped


def default_feature_specs(index_name: str | None = None) -> list[RegressionSpec]:
    """One model per feature (logit for the social flags) plus the index, if present."""
    specs = [RegressionSpec(f, "logit" if f in SOCIAL_FEATURES else "ols") for f in FEATURES]
    if index_name:
        specs.append(RegressionSpec(index_name))
    return specs


# --- report -------------------------------------------------------------------

def run_report(cfg: Config, out) -> dict:
    out = _prepare(out)
    rows = _read_csv(out / "features.csv", "extract")
    columns = {c: [float(r[c]) for r in rows] for c in FEATURE_COLUMNS.values()}
    if not rows:
        raise StageError("features.csv is empty; nothing to describe")
    (out / "describe.txt").write_text(report.describe_table(columns), encoding="utf-8")
    names, C = report.correlation_matrix(columns)
    _write_csv(out / "correlation.csv", [""] + names, ([n] + C[i].tolist() for i, n in enumerate(names)))
    (out / "correlation.txt").write_text(report.correlation_table(columns), encoding="utf-8")
    return Manifest(out, cfg).record("report", firms=len(rows))
