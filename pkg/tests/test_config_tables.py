"""key=value run configuration and headed-CSV table round-trips."""

import numpy as np
import pytest

from atomlat.config import ConfigError, Sweep, load_config, parse_config
from atomlat.tables import (
    TableFormatError,
    format_float,
    output_path,
    read_table,
    write_summary,
    write_table,
)

BASE = """
# comment line
geometry.a = 0.6
geometry.n_side = 9
drive.delta = 0.5
numerics.dt = 1e-2
drive.k_perp = 0.1, -0.2
output.prefix = run1
"""


def test_parse_types():
    cfg = parse_config(BASE)
    assert cfg["geometry.a"] == 0.6
    assert cfg["geometry.n_side"] == 9
    assert cfg["drive.k_perp"] == (0.1, -0.2)
    assert cfg["output.prefix"] == "run1"


def test_sweep_parsing():
    cfg = parse_config("drive.delta = -1:1:5")
    sweep = cfg["drive.delta"]
    assert isinstance(sweep, Sweep)
    assert np.allclose(cfg.require_sweep("drive.delta"), np.linspace(-1, 1, 5))
    # a scalar is promoted to a one-point sweep, a sweep refuses scalar use
    assert parse_config("drive.delta = 0.3").require_sweep("drive.delta").tolist() == [0.3]
    with pytest.raises(ConfigError):
        cfg.require_scalar("drive.delta")


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("geometry.b = 1.0")


def test_malformed_line_rejected():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("geometry.a 0.6")


def test_missing_required_key():
    cfg = parse_config("geometry.a = 0.6")
    with pytest.raises(ConfigError, match="drive.delta required"):
        cfg.require("drive.delta")


def test_hashes_track_values():
    c1 = parse_config(BASE)
    c2 = parse_config(BASE)
    assert c1.config_hash == c2.config_hash
    c2.set_text("drive.delta", "0.6")
    assert c1.config_hash != c2.config_hash
    # geometry hash ignores drive settings, follows geometry ones
    assert c1.geometry_hash == c2.geometry_hash
    c2.set_text("geometry.a", "0.8")
    assert c1.geometry_hash != c2.geometry_hash


def test_output_keys_not_hashed():
    c1 = parse_config(BASE)
    c2 = parse_config(BASE)
    c2.set_text("output.prefix", "other")
    assert c1.config_hash == c2.config_hash


def test_load_config(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(BASE)
    assert load_config(str(p)).config_hash == parse_config(BASE).config_hash


def test_format_float_17_digits():
    assert format_float(1.0 / 3.0) == "3.3333333333333331e-01"
    assert float(format_float(np.pi)) == np.pi


def test_table_round_trip(tmp_path):
    path = str(tmp_path / "t.csv")
    rows = np.array([[1.0, np.pi], [2.0, np.e]])
    write_table(path, ["x", "y"], rows, {"config_hash": "abc", "n": 2})
    meta, cols, data = read_table(path)
    assert meta["config_hash"] == "abc"
    assert cols == ["x", "y"]
    assert np.array_equal(data, rows)  # bit-exact through 17 significant digits


def test_table_column_mismatch(tmp_path):
    with pytest.raises(TableFormatError):
        write_table(str(tmp_path / "t.csv"), ["x"], np.ones((2, 2)), {})


def test_read_table_requires_header(tmp_path):
    p = tmp_path / "bare.csv"
    p.write_text("1.0,2.0\n")
    with pytest.raises(TableFormatError):
        read_table(str(p))


def test_summary_and_output_path(tmp_path):
    path = output_path(str(tmp_path / "sub"), "pre", "thing.txt")
    write_summary(path, {"a": 1.5, "note": "ok"})
    text = open(path).read()
    assert "a" in text and "ok" in text
    assert "sub" in path and "pre" in path
