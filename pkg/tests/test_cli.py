from __future__ import annotations

import csv
import json

import pytest

from codai import pipeline
from codai.cli import main
from codai.config import load_config
from codai.errors import StageError
from codai.synth import PagePlan, planted_study, render_page, write_study

HEADER = "firm_id,url,nace,employees,founding_year,nuts3,municipality,macro_region,urban_pole\n"


def _counts(out):
    return json.loads((out / "manifest.json").read_text())["stages"]["crawl"]["counts"]


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_live_crawl_of_ten_firms(site, tmp_path, capsys):
    lines = []
    for i in range(10):
        path = f"/f{i}/"
        if i == 8:
            site.route(path, status=404, body=b"gone")
        elif i == 9:
            site.route(path, body=b"late", delay=2.0)
        else:
            site.route(path, body=render_page(PagePlan(f"F{i}", site.url(path))))
        region = "North" if i % 2 else "South"
        lines.append(f"F{i},{site.url(path)},C,{5 + i},2000,R{i % 2},M{i % 2},{region},{i % 2}\n")
    registry = tmp_path / "registry.csv"
    registry.write_text(HEADER + "".join(lines), encoding="utf-8")
    cfg = tmp_path / "cfg.toml"
    cfg.write_text("[crawl]\ntimeout_seconds = 0.5\nper_host_min_interval_seconds = 0.0\nworkers = 4\n")
    out = tmp_path / "out"
    assert main(["crawl", str(registry), "--out", str(out), "--config", str(cfg)]) == 0
    counts = _counts(out)
    assert counts["attempted"] == 10 and counts["valid"] == 8 and counts["valid_share"] == 0.8
    log = [json.loads(x) for x in (out / "crawl_log.jsonl").read_text().splitlines()]
    assert {r["firm_id"]: r["failure"] for r in log}["F9"] == "timeout"
    assert main(["extract", "--out", str(out), "--config", str(cfg)]) == 0
    assert len(_rows(out / "features.csv")) == 8


def test_empty_registry(tmp_path):
    registry = tmp_path / "registry.csv"
    registry.write_text(HEADER, encoding="utf-8")
    out = tmp_path / "out"
    assert main(["crawl", str(registry), "--out", str(out)]) == 0
    counts = _counts(out)
    assert counts["attempted"] == 0 and counts["valid_share"] == 0.0


def test_missing_upstream_stage(tmp_path, capsys):
    out = tmp_path / "out"
    with pytest.raises(StageError):
        pipeline.run_index(load_config(None), out)
    assert main(["index", "--out", str(out)]) == 2
    assert "extract" in capsys.readouterr().err


@pytest.fixture(scope="module")
def study(tmp_path_factory):
    root = tmp_path_factory.mktemp("study")
    paths = write_study(planted_study(n_firms=180, n_provinces=6, seed=3), root)
    cfg = root / "cfg.toml"
    cfg.write_text('reference_year = 2021\n[features]\nwayback_cache = "wayback_cache.csv"\n'
                   '[[regression]]\ndependent = "codai"\nfirm_terms = ["size", "firm_age"]\n'
                   'territory_terms = ["north", "urban", "wideband"]\n', encoding="utf-8")
    return root, paths, cfg


def test_replay_run_is_reproducible(study, tmp_path, capsys):
    root, paths, cfg = study
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        args = ["run", str(paths["registry"]), "--replay", str(paths["corpus"]), "--out", str(out),
                "--config", str(cfg), "--k", "3"]
        assert main(args) == 0
        outs.append(out)
    for fname in ("features.csv", "index.csv", "regions_nuts3.csv", "clusters_nuts3.csv", "regress_codai.csv"):
        assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes(), fname
    labels = {r["cluster"] for r in _rows(outs[0] / "clusters_nuts3.csv")}
    assert labels == {"0", "1", "2"}
    text = capsys.readouterr().out
    assert "Constant" in text and "North" in text and "N. of observations" in text


def test_stages_one_by_one(study, tmp_path, capsys):
    root, paths, cfg = study
    out = str(tmp_path / "o")
    common = ["--out", out, "--config", str(cfg)]
    assert main(["crawl", str(paths["registry"]), "--replay", str(paths["corpus"])] + common) == 0
    assert main(["extract"] + common) == 0
    assert main(["index", "--scheme", "wai2001"] + common) == 0
    assert _rows(tmp_path / "o" / "index.csv")[0].keys() >= {"wai2001", "navigability"}
    assert main(["aggregate", "--level", "municipality", "--min-count", "5"] + common) == 0
    assert main(["cluster", "--level", "municipality", "--k", "2"] + common) == 0
    capsys.readouterr()
    assert main(["regress", "--dependent", "Facebook", "--firm-terms", "firm_age",
                 "--territory-terms", "north,urban"] + common) == 0
    assert "Pseudo R-squared" in capsys.readouterr().out
    assert main(["report"] + common) == 0
    assert (tmp_path / "o" / "correlation.csv").is_file()


def test_unknown_scheme_is_reported(study, tmp_path, capsys):
    root, paths, cfg = study
    out = str(tmp_path / "o")
    main(["crawl", str(paths["registry"]), "--replay", str(paths["corpus"]), "--out", out])
    main(["extract", "--out", out])
    assert main(["index", "--scheme", "nope", "--out", out]) == 2
    assert "unknown scheme" in capsys.readouterr().err


def test_explicit_terms_are_not_pruned(study, tmp_path, capsys):
    root, paths, cfg = study
    out = str(tmp_path / "o")
    main(["crawl", str(paths["registry"]), "--replay", str(paths["corpus"]), "--out", out])
    main(["extract", "--out", out, "--wayback-cache", str(paths["wayback_cache"])])
    main(["index", "--out", out])
    # the built-in model drops the South dummy when no firm sits in the Centre baseline
    assert main(["regress", "--out", out]) == 0
    fits = json.loads((tmp_path / "o" / "manifest.json").read_text())["stages"]["regress"]["fits"]
    assert "south" in fits["codai"]["dropped_columns"]
    assert main(["regress", "--dependent", "codai", "--territory-terms", "north,south", "--out", out]) == 2
    assert "'north', 'south'" in capsys.readouterr().err
    assert main(["regress", "--dependent", "codai", "--firm-terms", "size", "--territory-terms", "north",
                 "--out", out]) == 0
    assert "North" in capsys.readouterr().out


def test_index_on_fixture_features(tmp_path, capsys):
    import shutil
    from pathlib import Path
    out = tmp_path / "o"
    out.mkdir()
    shutil.copy(Path(__file__).parent / "fixtures" / "golden_features.csv", out / "features.csv")
    assert main(["index", "--out", str(out)]) == 0
    totals = [float(r["codai"]) for r in _rows(out / "index.csv")]
    assert len(totals) == 20 and all(0 <= t <= 5 for t in totals)


def test_manifest_counts_reconcile(study, tmp_path):
    root, paths, cfg = study
    out = tmp_path / "o"
    assert main(["crawl", str(paths["registry"]), "--replay", str(paths["corpus"]), "--out", str(out)]) == 0
    c = _counts(out)
    assert c["valid"] + c["invalid"] + c["robots_excluded"] == c["attempted"] == 180
