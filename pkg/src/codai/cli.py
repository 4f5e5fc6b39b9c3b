"""Command line entry point: ``codai <stage> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import pipeline
from .config import load_config
from .errors import CodaiError, ConfigError
from .stats.regression import FIRM_TERMS, TERRITORY_TERMS, RegressionSpec
from .spatial import LEVELS

LOGGER = logging.getLogger("codai")


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--seed", type=int, help="random seed (overrides config)")
    common.add_argument("--out", default="codai-out", help="output directory shared by all stages")
    common.add_argument("--scheme", help="index scheme: codai, wai2001, sum10 or one defined in the config")
    common.add_argument("--level", choices=LEVELS, default="nuts3", help="territorial level")
    common.add_argument("--replay", help="read responses from this stored corpus instead of the network")
    common.add_argument("-v", "--verbose", action="store_true")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="codai", description="Corporate website digital-divide pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("crawl", parents=[common], help="fetch (or replay) every registry homepage")
    p.add_argument("registry", help="firm registry file")

    p = sub.add_parser("extract", parents=[common], help="compute the ten features from the corpus")
    p.add_argument("--wayback-cache", help="host,first_year cache file (overrides config)")
    sub.add_parser("index", parents=[common], help="normalize features and compute the index")

    p = sub.add_parser("aggregate", parents=[common], help="aggregate firms by territory")
    p.add_argument("--min-count", type=int, help="minimum firms per region")

    p = sub.add_parser("cluster", parents=[common], help="k-means over regional aggregates")
    p.add_argument("--k", type=int, help="number of clusters (default from config, else 3)")

    p = sub.add_parser("regress", parents=[common], help="OLS/logit of features or index on firm traits")
    p.add_argument("--dependent", action="append", help="dependent variable; repeatable")
    p.add_argument("--model", choices=("ols", "logit"), help="model kind for --dependent")
    p.add_argument("--all-features", action="store_true", help="one model per feature plus the index")
    p.add_argument("--firm-terms", help="comma-separated subset of size,sector,firm_age")
    p.add_argument("--territory-terms", help="comma-separated subset of urban,north,south,wideband")

    sub.add_parser("report", parents=[common], help="descriptive statistics and correlations")

    p = sub.add_parser("run", parents=[common], help="every stage in order")
    p.add_argument("registry", help="firm registry file")
    p.add_argument("--k", type=int)
    p.add_argument("--wayback-cache", help="host,first_year cache file (overrides config)")
    p.add_argument("--min-count", type=int)
    return parser


def _terms(text: str | None, default: tuple[str, ...]) -> tuple[str, ...]:
    if text is None:
        return default
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _regress_specs(args, out) -> tuple[list[RegressionSpec] | None, bool | None]:
    """Specs from the command line, plus whether default terms may be pruned."""
    custom = args.firm_terms is not None or args.territory_terms is not None
    firm = _terms(args.firm_terms, FIRM_TERMS)
    territory = _terms(args.territory_terms, TERRITORY_TERMS)
    if args.all_features:
        _, index_name = pipeline.firm_table(out)
        deps = [(s.dependent, s.model) for s in pipeline.default_feature_specs(index_name)]
    elif args.dependent:
        deps = []
        for dep in args.dependent:
            key = pipeline.COLUMN_TO_FEATURE.get(dep, dep)
            deps.append((key, args.model or ("logit" if key in ("facebook", "instagram", "linkedin") else "ols")))
    elif custom:
        raise ConfigError("--firm-terms/--territory-terms need --dependent or --all-features")
    else:
        return None, None
    return [RegressionSpec(d, m, firm, territory) for d, m in deps], not custom


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if getattr(args, "wayback_cache", None):
            cfg.features["wayback_cache"] = str(pipeline.Path(args.wayback_cache).resolve())
        out = pipeline.Path(args.out)
        cmd = args.command
        if cmd in ("crawl", "run"):
            info = pipeline.run_crawl(cfg, args.registry, out, replay=args.replay)
            print(json.dumps(info["counts"], sort_keys=True))
        if cmd in ("extract", "run"):
            print(json.dumps(pipeline.run_extract(cfg, out, replay=args.replay)["counts"], sort_keys=True))
        if cmd in ("index", "run"):
            info = pipeline.run_index(cfg, out, args.scheme)
            print(f"index {info['scheme']}: {info['firms']} firms, totals in "
                  f"[{info['total_min']:.3f}, {info['total_max']:.3f}]")
        if cmd in ("aggregate", "run"):
            info = pipeline.run_aggregate(cfg, out, args.level, getattr(args, "min_count", None))
            print(f"{info['regions']} regions at {args.level} level, {info['excluded_rows']} rows excluded")
        if cmd in ("cluster", "run"):
            info = pipeline.run_cluster(cfg, out, args.level, args.k, cfg.seed)
            print(f"k={info['k']} inertia={info['inertia']:.4f} elbow suggests k={info['suggested_k']}")
        if cmd in ("report", "run"):
            pipeline.run_report(cfg, out)
            print((out / "describe.txt").read_text(encoding="utf-8"), end="")
        if cmd in ("regress", "run"):
            specs, prune = _regress_specs(args, out) if cmd == "regress" else (None, None)
            pipeline.run_regress(cfg, out, specs, prune)
            print((out / "regress_table.txt").read_text(encoding="utf-8"), end="")
    except CodaiError as exc:
        print(f"codai {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
