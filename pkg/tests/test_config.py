import pytest

from duet.config import (DEFAULT_SEED, EXPERIMENT_DEFAULTS, ConfigError, ExperimentConfig,
                         parse_config)


def test_empty_input_gives_defaults():
    cfg = parse_config(env={})
    assert cfg.experiment == "limit" and cfg.seed == DEFAULT_SEED
    assert (cfg.beta, cfg.alpha1, cfg.alpha2) == (1.5, 6 / 7, 5 / 9)
    assert cfg.n_paths == EXPERIMENT_DEFAULTS["limit"]["n_paths"]


def test_flags_override_file_and_env(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('experiment = "exit"\nseed = 5\nR = 64.0\n')
    assert parse_config(p, env={"DUET_SEED": "9"}).seed == 5
    assert parse_config(p, {"seed": 11}, env={}).seed == 11
    cfg = parse_config(p, {"R": 100.0}, env={})
    assert cfg.R == 100.0 and cfg.experiment == "exit"
    assert cfg.alpha == pytest.approx(35 / 54)


def test_env_seed_lowest_priority():
    assert parse_config(env={"DUET_SEED": "0x10"}).seed == 16
    with pytest.raises(ConfigError, match="DUET_SEED"):
        parse_config(env={"DUET_SEED": "abc"})


@pytest.mark.parametrize("text, msg", [
    ("alpha_c = 0.5\n", "alpha_c < 1/3"),
    ("beta = 1.0\n", "beta > 1"),
    ("n_paths = -3\n", "n_paths must be > 0"),
    ("potential = 'quartic'\n", "unknown potential"),
    ("experiment = 'nope'\n", "unknown experiment"),
])
def test_rejections(tmp_path, text, msg):
    p = tmp_path / "c.toml"
    p.write_text(text)
    with pytest.raises(ConfigError, match=msg):
        parse_config(p, env={})


def test_parse_errors_carry_line(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("seed = 1\nbogus = 2\n")
    with pytest.raises(ConfigError, match="line 2: unknown key 'bogus'"):
        parse_config(p, env={})
    p.write_text("seed = 1\n[table]\nx = 1\n")
    with pytest.raises(ConfigError, match="tables are not supported"):
        parse_config(p, env={})
    p.write_text("seed = = 1\n")
    with pytest.raises(ConfigError, match="line 1"):
        parse_config(p, env={})
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(tmp_path / "missing.toml", env={})


def test_type_errors(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("n_paths = 2.5\n")
    with pytest.raises(ConfigError, match="n_paths has invalid value"):
        parse_config(p, env={})


def test_digest_fields_cover_config():
    fields = set(ExperimentConfig().as_dict())
    assert {"seed", "dt", "T", "R", "epsilon", "potential", "integrator"} <= fields
