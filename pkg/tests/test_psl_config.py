from __future__ import annotations

import pytest

from codai.config import load_config
from codai.errors import ConfigError
from codai.psl import public_suffix, registrable_domain


@pytest.mark.parametrize("host,domain", [
    ("www.acme.it", "acme.it"), ("it.linkedin.com", "linkedin.com"), ("a.b.co.uk", "b.co.uk"),
    ("ACME.IT.", "acme.it"), ("localhost", "localhost"), ("192.168.0.1", "192.168.0.1"),
    ("shop.comune.milano.it", "comune.milano.it"),
])
def test_registrable_domain(host, domain):
    assert registrable_domain(host) == domain


def test_public_suffix():
    assert public_suffix("www.example.co.uk") == "co.uk"
    assert public_suffix("www.acme.it") == "it"


def test_config_round_trip(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('seed = 4\n[crawl]\ntimeout_seconds = 10\n[aggregate]\nmunicipality_min_count = 12\n')
    cfg = load_config(path)
    assert cfg.seed == 4 and cfg.policy().timeout_seconds == 10 and cfg.min_count("municipality") == 12
    assert cfg.digest() == load_config(path).digest()


@pytest.mark.parametrize("text", ["bogus = 1\n", "crawl = 3\n", "[index]\nscheme = 'nope'\n",
                                  "[[regression]]\nmodel = 'ols'\n", "not toml ["])
def test_bad_config(tmp_path, text):
    path = tmp_path / "c.toml"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_config(path)
