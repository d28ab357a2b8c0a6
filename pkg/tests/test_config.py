import pytest

from incmart.config import (
    ConfigError,
    ExperimentConfig,
    parse_config,
    parse_grid_spec,
)


MINIMAL = """
model = brownian_r
grid = -10:0:1000
paths = 100
seed = 1
"""


def test_minimal_config_parses():
    cfg = parse_config(MINIMAL)
    assert cfg.model.name == "brownian_r"
    assert (cfg.t_min, cfg.t_max, cfg.n_cells) == (-10.0, 0.0, 1000)
    assert cfg.n_paths == 100
    assert cfg.master_seed == 1
    assert cfg.spacing == "uniform"
    assert cfg.provided == {"model", "grid", "paths", "seed"}


def test_build_grid_uniform_and_log_tail():
    cfg = parse_config(MINIMAL)
    g = cfg.build_grid()
    assert g.n == 1001 and g.t_min == -10.0
    cfg2 = parse_config(MINIMAL + "spacing = log-tail\nlog_tail_ratio = 100\n")
    g2 = cfg2.build_grid()
    widths = g2.times[1:] - g2.times[:-1]
    assert widths[0] > widths[-1] * 50


def test_unknown_model_names_valid_set():
    with pytest.raises(ConfigError) as exc:
        parse_config("model = brwnian\n")
    msg = "; ".join(exc.value.errors)
    assert "brwnian" in msg and "brownian_r" in msg and "levy_r" in msg


def test_negative_paths_is_range_error():
    with pytest.raises(ConfigError) as exc:
        parse_config(MINIMAL.replace("paths = 100", "paths = -5"))
    assert any("paths" in e and ">= 1" in e for e in exc.value.errors)


def test_all_errors_collected_not_just_first():
    bad = "model = nope\ngrid = 1:0:50\npaths = zero\nmystery = 3\n"
    with pytest.raises(ConfigError) as exc:
        parse_config(bad)
    errors = exc.value.errors
    assert len(errors) == 4
    assert any("mystery" in e for e in errors)
    assert any("t_max > t_min" in e for e in errors)


def test_unknown_key_lists_valid_keys():
    with pytest.raises(ConfigError) as exc:
        parse_config("modl = brownian_r\n")
    assert any("modl" in e and "seed" in e for e in exc.value.errors)


def test_model_section_params():
    text = "model = levy_r\n[model]\njump_rate = 2.5\ndrift = 0.5\n"
    cfg = parse_config(text)
    assert cfg.model.params["jump_rate"] == 2.5
    assert cfg.model.params["drift"] == 0.5


def test_model_section_name_key():
    cfg = parse_config("[model]\nname = bump\nphi_max = 10\n")
    assert cfg.model.name == "bump"
    assert cfg.model.params["phi_max"] == 10


def test_model_params_without_name():
    with pytest.raises(ConfigError) as exc:
        parse_config("[model]\njump_rate = 2\n")
    assert any("without a model name" in e for e in exc.value.errors)


def test_bad_model_param_collected():
    with pytest.raises(ConfigError) as exc:
        parse_config("model = levy_r\n[model]\nnot_a_knob = 1\n")
    assert any("not_a_knob" in e for e in exc.value.errors)


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError) as exc:
        parse_config("seed = 1\nseed = 2\n")
    assert any("duplicate" in e for e in exc.value.errors)


def test_section_header_validation():
    with pytest.raises(ConfigError) as exc:
        parse_config("[grid]\nfoo = 1\n")
    assert any("unknown section" in e for e in exc.value.errors)
    with pytest.raises(ConfigError) as exc:
        parse_config("[model\nname = bump\n")
    assert any("unterminated" in e for e in exc.value.errors)


def test_comments_and_blanks_ignored():
    cfg = parse_config("# leading comment\n\nseed = 9  # trailing\n")
    assert cfg.master_seed == 9


def test_missing_equals_reported_with_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("seed = 1\njust words\n")
    assert any("line 2" in e for e in exc.value.errors)


def test_spacing_validation():
    with pytest.raises(ConfigError) as exc:
        parse_config("spacing = geometric\n")
    assert any("log-tail" in e for e in exc.value.errors)


def test_test_params_collected():
    cfg = parse_config("buckets = 7\ntol = 0.01\nprobes = 12\n")
    assert cfg.test_params == {"buckets": 7, "tol": 0.01, "probes": 12}
    with pytest.raises(ConfigError):
        parse_config("tol = -1\n")


def test_threads_and_ratio_validation():
    assert parse_config("threads = 4\n").threads == 4
    with pytest.raises(ConfigError):
        parse_config("threads = 0\n")
    with pytest.raises(ConfigError):
        parse_config("log_tail_ratio = 0.5\n")


def test_parse_grid_spec_forms():
    assert parse_grid_spec("-10:0:1000") == (-10.0, 0.0, 1000)
    assert parse_grid_spec("0:1e2:50") == (0.0, 100.0, 50)
    for bad in ("1:2", "a:b:c", "0:1:1", "1:1:10", "::"):
        with pytest.raises(ValueError):
            parse_grid_spec(bad)


def test_defaults_without_text():
    cfg = ExperimentConfig()
    grid = cfg.build_grid()
    assert grid.n == 101
    assert cfg.n_paths == 100 and cfg.threads == 1
