import csv
import io

import pytest

from celldisc.cli import main, run
from celldisc.config import dump_config, load_config, parse_config
from celldisc.errors import ConfigError
from celldisc.scenario import ExperimentConfig, SchemeSpec

TEXT = """
[experiment]
n_t = 16
n_r = 4
r_grid = 150, 300
trials = 20
calib_trials = 40
target_pf = 0.25
rbf_draws = 1
chunk = 10

[scheme m]
scheme = mubb
u = 0

[scheme d]
scheme = dbc
beta_t = 2
"""


def test_parse_and_round_trip():
    cfg = parse_config(TEXT)
    assert cfg.n_t == 16 and cfg.r_grid == (150.0, 300.0)
    assert [s.name for s in cfg.schemes] == ["m", "d"]
    assert cfg.schemes[1].beta_t == 2
    again = parse_config(dump_config(cfg))
    assert again == cfg
    assert parse_config(TEXT, seed=9).seed == 9


@pytest.mark.parametrize("bad", [
    "[experiment]\nbogus = 1\n",
    "[other]\n",
    "[experiment]\ntrials = many\n",
    "[scheme x]\nu = 1\n",
    "[scheme x]\nscheme = nope\n",
    "[scheme x]\nscheme = mubb\ncolour = red\n",
    "no section\n",
    "[experiment]\ntarget_pf = 2\n",
])
def test_bad_configs(bad):
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "none.ini")


def test_defaults_apply_without_sections():
    cfg = parse_config("", (SchemeSpec("rbf"),))
    assert cfg.schemes == (SchemeSpec("rbf"),)
    assert parse_config("") == ExperimentConfig()


def test_coherence_command():
    text, code = run(["coherence", "mubb", "--n-t", "64", "--n-r", "4", "--n-bs", "4", "--u", "1"])
    row = next(csv.DictReader(io.StringIO(text)))
    assert code == 0
    assert float(row["mu"]) == pytest.approx(float(row["closed_form"]), abs=1e-9)
    assert row["M"] == "128"
    text, _ = run(["--seed", "4", "coherence", "rbf", "--n-t", "16", "--n-bs", "2", "--draws", "3"])
    assert next(csv.DictReader(io.StringIO(text)))["closed_form"] == ""


def test_curve_command_is_byte_stable(tmp_path):
    p = tmp_path / "exp.ini"
    p.write_text(TEXT)
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["--config", str(p), "--seed", "3", "--out", str(out1), "curve"]) == 0
    assert main(["--config", str(p), "--seed", "3", "--threads", "2", "--out", str(out2), "curve"]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert out1.read_bytes().startswith(b"config_hash,scheme,M,R")


def test_rfchains_and_bfgain_commands(tmp_path):
    p = tmp_path / "exp.ini"
    p.write_text(TEXT.replace("[scheme d]\nscheme = dbc\nbeta_t = 2\n", "").replace("150, 300", "150"))
    text, code = run(["--config", str(p), "rfchains"])
    assert code == 0 and text.startswith("config_hash,n_rf")
    text, code = run(["--config", str(p), "bfgain"])
    assert code == 0 and text.startswith("config_hash,scheme,R,M,gain_value,cdf")


def test_dump_commands():
    text, code = run(["dump", "config"])
    assert code == 0 and parse_config(text).schemes[0].name == "mubb_u0"
    text, _ = run(["dump", "gram", "--scheme", "mubb", "--n-t", "16", "--n-r", "2", "--n-bs", "2"])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert {float(r["inner_product_magnitude"]) for r in rows} == {0.0, 0.25}


def test_verify_command(tmp_path):
    out = tmp_path / "v.csv"
    assert main(["--out", str(out), "verify", "theorem2_small", "--draws", "20000"]) in (0, 2)
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert rows and {r["result"] for r in rows} <= {"pass", "FAIL"}


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nwhat = 1\n")
    assert main(["--config", str(bad), "curve"]) == 3
    assert main(["coherence", "mubb", "--n-t", "12"]) == 3
    assert main(["--threads", "0", "coherence", "bs"]) == 3
    assert main(["--seed", "-1", "coherence", "bs"]) == 3
    assert main(["verify", "fig1", "--draws", "3"]) == 3
    assert "error" in capsys.readouterr().err


def test_dump_beams():
    text, code = run(["dump", "beams", "--scheme", "bs", "--n-t", "2", "--n-r", "2", "--n-bs", "1"])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert code == 0 and len(rows) == 4 + 4
    first = rows[0]
    assert (first["matrix"], first["row"], first["col"]) == ("w_r", "0", "0")
    re, im = map(float, first["value"].split(","))
    assert re == pytest.approx(2 ** -0.5) and im == 0.0
