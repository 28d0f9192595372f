import pytest

from flag_synth.config import (
    DEFAULT_SEED,
    SEED_ENV,
    BetaModeChoice,
    InputFormat,
    load_config_file,
    parse_bool,
    parse_delimiter,
    parse_seed,
    resolve_config,
)
from flag_synth.errors import InputError, ParameterError
from flag_synth.models import BetaMode, LegalityMode, Pivot


@pytest.fixture(autouse=True)
def _no_seed_env(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)


def test_defaults():
    cfg = resolve_config({})
    assert cfg.resolved_seed() == DEFAULT_SEED
    assert cfg.format is InputFormat.ML1M_RATINGS
    assert cfg.pivot is Pivot.USER
    assert cfg.legality is LegalityMode.STRICT
    assert cfg.beta_mode.to_beta_mode() is BetaMode.FIXED


def test_parse_seed():
    assert parse_seed("42") == 42
    assert parse_seed("0x10") == 16
    assert 0 <= parse_seed("random") < 2 ** 64
    with pytest.raises(ParameterError):
        parse_seed("-1")
    with pytest.raises(ParameterError):
        parse_seed("abc")


def test_random_seed_resolved_once():
    cfg = resolve_config({"seed": "random"})
    assert cfg.resolved_seed() == cfg.resolved_seed()


def test_parse_helpers():
    assert parse_bool("Yes") is True
    assert parse_bool("off") is False
    with pytest.raises(ParameterError):
        parse_bool("maybe")
    assert parse_delimiter("tab") == "\t"
    assert parse_delimiter(";") == ";"


def test_config_file_typed_values(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# manifest\nalpha=0.8\nbeta-mode=searched\nmax_size=30\nscan_xmin=true\n")
    values = load_config_file(str(path))
    assert values == {"alpha": 0.8, "beta_mode": BetaModeChoice.SEARCHED, "max_size": 30, "scan_xmin": True}


def test_config_file_errors(tmp_path):
    with pytest.raises(InputError):
        load_config_file(str(tmp_path / "missing.cfg"))
    bad = tmp_path / "bad.cfg"
    bad.write_text("workers=many\n")
    with pytest.raises(ParameterError, match="workers"):
        load_config_file(str(bad))


def test_precedence(tmp_path, monkeypatch):
    path = tmp_path / "run.cfg"
    path.write_text("seed=5\nalpha=0.5\npivot=item\n")
    monkeypatch.setenv(SEED_ENV, "77")
    assert resolve_config({}).resolved_seed() == 77
    cfg = resolve_config({"alpha": 1.0}, str(path))
    assert cfg.resolved_seed() == 5
    assert cfg.alpha == 1.0
    assert cfg.pivot is Pivot.ITEM
    assert resolve_config({"seed": "6"}, str(path)).resolved_seed() == 6


@pytest.mark.parametrize(
    "flags",
    [{"beta": 0.0}, {"beta": 1.5}, {"alpha": -1.0}, {"workers": 0}, {"max_size": 0}, {"alpha_step": 0.0}],
)
def test_numeric_validation(flags):
    with pytest.raises(ParameterError):
        resolve_config(flags)


def test_column_names_and_positions():
    cfg = resolve_config({"entity_col": "user", "counterpart_col": "2"})
    assert cfg.column(cfg.entity_col) == "user"
    assert cfg.column(cfg.counterpart_col) == 2
