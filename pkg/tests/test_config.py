import json
import math

import pytest

from rydssh.config import (TWO_PI, config_from_dict, config_hash, config_to_dict, load_config,
                           default_config)
from rydssh.errors import ConfigError


def test_default_config_values(cfg):
    assert cfg.n_cells == 20
    assert (cfg.R1, cfg.R2, cfg.R3, cfg.R3_ring) == (6.0, 3.46, 8.29, 8.61)
    assert cfg.C6 == pytest.approx(-863e3 * TWO_PI)
    assert cfg.drives["I"].rabi == pytest.approx(TWO_PI * 4.3)
    assert cfg.drives["III"].detuning == pytest.approx(TWO_PI * 68.4)
    assert cfg.Gamma == pytest.approx(1 / 0.118)
    assert cfg.gamma == pytest.approx(1 / 104)
    assert cfg.phase("c", "III") == pytest.approx(math.pi / 2)
    assert cfg.n_sites == 40


def test_round_trip_is_identity(cfg):
    doc = config_to_dict(cfg)
    again = config_from_dict(json.loads(json.dumps(doc)))
    assert again == cfg
    assert config_hash(again) == config_hash(cfg)


def test_hash_changes_with_content(cfg):
    assert config_hash(cfg.replace(master_seed=1)) != config_hash(cfg)


def test_load_default_and_file(tmp_path, cfg):
    assert load_config() == cfg
    p = tmp_path / "c.json"
    p.write_text(json.dumps(config_to_dict(cfg)))
    assert load_config(p) == cfg


@pytest.mark.parametrize("section,key,value,path", [
    ("geometry", "R1_um", -1.0, "geometry.R1_um"),
    ("geometry", "R1_um", "x", "geometry.R1_um"),
    ("geometry", "boundary", "XBC", "geometry.boundary"),
    ("geometry", "R3_um", 5.0, "geometry.R3_um"),
    ("dissipation", "tau_aux_us", 0.0, "dissipation.tau_aux_us"),
    ("disorder", "master_seed", -3, "disorder.master_seed"),
    ("dynamics", "initial_site", "z", "dynamics.initial_site"),
])
def test_schema_errors_carry_paths(cfg, section, key, value, path):
    doc = config_to_dict(cfg)
    doc[section][key] = value
    with pytest.raises(ConfigError) as exc:
        config_from_dict(doc)
    assert exc.value.path == path


def test_large_detuning_bound_enforced(cfg):
    doc = config_to_dict(cfg)
    doc["lasers"]["I"]["rabi_2pi_MHz"] = 20.0
    with pytest.raises(ConfigError, match="large-detuning"):
        config_from_dict(doc)


def test_unknown_key_rejected(cfg):
    doc = config_to_dict(cfg)
    doc["geometry"]["R9_um"] = 1.0
    with pytest.raises(ConfigError) as exc:
        config_from_dict(doc)
    assert "geometry" in str(exc.value)


def test_bad_json_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{nope")
    with pytest.raises(ConfigError, match="line 1"):
        load_config(p)


def test_flux_sign(cfg):
    assert cfg.with_flux(-1).phase("c", "III") == pytest.approx(-math.pi / 2)
    assert default_config().flux_phase == pytest.approx(math.pi / 2)
