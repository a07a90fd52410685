import json

import pytest

from duet.cli import build_parser, main
from duet.config import EXPERIMENTS


def _run(args, capsys):
    rc = main(args)
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_help_lists_every_experiment(capsys):
    with pytest.raises(SystemExit) as ex:
        build_parser().parse_args(["--help"])
    assert ex.value.code == 0
    text = capsys.readouterr().out
    for name in EXPERIMENTS:
        assert f"\n  {name}" in text


def test_missing_output_dir(tmp_path, capsys):
    missing = tmp_path / "nope"
    rc, _, err = _run(["simulate", "--out", str(missing)], capsys)
    assert rc == 1 and str(missing) in err


def test_bad_flag_is_error_not_bound_failure(capsys):
    with pytest.raises(SystemExit) as ex:
        main(["limit", "--paths", "many"])
    assert ex.value.code == 1


def test_config_violation_names_inequality(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text("alpha_c = 0.5\n")
    rc, _, err = _run(["limit", "--config", str(cfg), "--out", str(tmp_path)], capsys)
    assert rc == 1 and "alpha_t/2 < alpha_c < 1/3" in err


def test_simulate_outputs_carry_digest(tmp_path, capsys):
    rc, out, _ = _run(["simulate", "--out", str(tmp_path), "--paths", "2", "--paths-csv"], capsys)
    assert rc == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    digest = summary["config_digest"]
    for name in ("plotdata.tsv", "paths.csv", "trajectory_0.csv", "trajectory_1.csv"):
        assert digest in (tmp_path / name).read_text().splitlines()[0]
    assert summary["metadata"]["gaussian_method"]
    assert "wall_clock_s" in summary["runtime"]
    header = (tmp_path / "trajectory_0.csv").read_text().splitlines()[1]
    assert header.startswith("t,r1,r2")


def test_rerun_is_byte_identical_except_runtime(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    args = ["limit", "--paths", "70", "--T", "8", "--seed", "3"]
    _run(args + ["--out", str(a)], capsys)
    _run(args + ["--out", str(b), "--workers", "3"], capsys)
    ja, jb = (json.loads((d / "summary.json").read_text()) for d in (a, b))
    ja.pop("runtime"), jb.pop("runtime")
    assert json.dumps(ja) == json.dumps(jb)
    assert (a / "plotdata.tsv").read_bytes() == (b / "plotdata.tsv").read_bytes()


def test_failed_bound_exit_code(tmp_path, capsys):
    rc, out, _ = _run(["limit", "--paths", "4", "--T", "4", "--out", str(tmp_path)], capsys)
    assert rc == 2 and "FAIL" in out


def test_digest_changes_with_config(tmp_path, capsys):
    digests = []
    for seed in ("1", "2"):
        _run(["simulate", "--paths", "1", "--seed", seed, "--out", str(tmp_path)], capsys)
        digests.append(json.loads((tmp_path / "summary.json").read_text())["config_digest"])
    assert digests[0] != digests[1]


def test_plotdata_layout(tmp_path, capsys):
    _run(["limit", "--paths", "64", "--T", "8", "--out", str(tmp_path)], capsys)
    lines = (tmp_path / "plotdata.tsv").read_text().splitlines()
    assert lines[0].startswith("# config_digest ")
    i = lines.index("# series: ecdf_t1")
    assert lines[i + 1] == "x\ty\ty_err"
    assert len(lines[i + 2].split("\t")) == 3
