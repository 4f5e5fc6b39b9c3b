"""
The whole pipeline from a stored corpus
=======================================

Crawling is the slow, non-reproducible step, so responses are stored once and
every later stage can be replayed offline. This runs the command line stages
on a synthetic corpus in a temporary directory.
"""

from __future__ import annotations

import tempfile
from pathlib import Path

from codai.cli import main
from codai.synth import planted_study, write_study

with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)
    paths = write_study(planted_study(n_firms=300, n_provinces=10, seed=2), root)
    print("corpus entries:", sum(1 for _ in paths["corpus"].iterdir()))

    # equivalent to: codai run registry.csv --replay corpus --wayback-cache wayback_cache.csv --out out
    main(["run", str(paths["registry"]), "--replay", str(paths["corpus"]),
          "--wayback-cache", str(paths["wayback_cache"]), "--out", str(root / "out"), "--k", "3"])

    print("\noutputs:")
    for f in sorted((root / "out").iterdir()):
        print("  ", f.name)
