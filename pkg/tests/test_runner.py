import csv
import json
import math
import os
import re
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from cylspec.errors import ConfigurationError
from cylspec.runner import plots
from cylspec.runner.artifacts import verify_manifest
from cylspec.runner.checks import run_checks
from cylspec.runner.cli import EXIT_CONFIG, EXIT_FLAGS, EXIT_OK, main
from cylspec.runner.config import parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


@pytest.mark.parametrize("text,key", [
    ("[study]\nkind = decay\n[numeric]\nh = -1\n", "numeric.h"),
    ("[study]\nkind = decay\n[numeric]\nh = abc\n", "numeric.h"),
    ("[study]\nkind = decay\n[numeric]\nbogus = 1\n", "numeric.bogus"),
    ("[study]\nkind = decay\n[model]\ntype = torus\n", "model.type"),
    ("[study]\nkind = scaling\n[deformation]\nlambda = 0.1j, x\n", "deformation.lambda"),
    ("[study]\nkind = guide2d\n[numeric]\nboundary = robin\n", "numeric.boundary"),
    ("[study]\nkind = nonsense\n", "study.kind"),
    ("[study]\nkind = decay\nschema = 9\n", "study.schema"),
])
def test_config_errors_name_the_key(text, key):
    with pytest.raises(ConfigurationError, match=re.escape(key)):
        parse_config(text)


def test_config_unknown_section():
    with pytest.raises(ConfigurationError, match=r"\[extra\]"):
        parse_config("[study]\nkind = decay\n[extra]\na = 1\n")


def test_config_kind_mismatch():
    with pytest.raises(ConfigurationError, match="subcommand"):
        parse_config("[study]\nkind = decay\n", kind="scaling")


def test_config_echo_is_fully_explicit():
    cfg = parse_config("[study]\nkind = scaling\n[deformation]\nlambda = 0.1j, 0.2j\n")
    echo = cfg.echo()
    assert echo["deformation"]["lambda"] == [[0.0, 0.1], [0.0, 0.2]]
    assert echo["model"]["amplitude"] == 1.0 and echo["model"]["c"] == 1.0
    assert echo["study"]["seed"] == 0
    json.dumps(echo)
    guide = parse_config("[study]\nkind = guide2d\n[model]\ntype = guide\n")
    assert guide.model["amplitude"] == 5.0 and guide.model["c"] == 2.0


def test_builtin_checks_pass():
    results = run_checks()
    assert len(results) == 12
    assert all(ok for _, ok, _ in results), [r for r in results if not r[1]]


def test_cli_check_flag(capsys):
    assert main(["--check"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("PASS") == 12


def test_cli_missing_config_is_config_error(tmp_path):
    assert main(["decay", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path)]) \
        == EXIT_CONFIG


def test_cli_bad_key_is_config_error(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text("[study]\nkind = decay\n[numeric]\nh = 0\n")
    assert main(["decay", "--config", str(path), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "numeric.h" in capsys.readouterr().err


def test_cli_no_bound_state_is_config_error(tmp_path, capsys):
    path = tmp_path / "flat.ini"
    path.write_text("[study]\nkind = decay\n[model]\namplitude = 0\n[numeric]\nL = 10\nh = 0.1\n")
    assert main(["decay", "--config", str(path), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "numeric.state" in capsys.readouterr().err


def test_thresholds_study_csv(tmp_path):
    out = tmp_path / "t"
    assert main(["thresholds", "--config", str(CONFIGS / "thresholds_dirichlet.ini"),
                 "--out", str(out)]) == EXIT_OK
    rows = read_csv(out / "thresholds.csv")
    assert rows[0] == ["j", "nu", "multiplicity"]
    assert rows[1][0] == "1" and float(rows[1][1]) == math.pi ** 2 / 4
    assert rows[2][0] == "2" and float(rows[2][1]) == math.pi ** 2
    assert verify_manifest(out) == []


def test_spectrum_study_product_metric_is_empty(tmp_path):
    out = tmp_path / "s"
    assert main(["spectrum", "--config", str(CONFIGS / "spectrum_product.ini"),
                 "--out", str(out)]) == EXIT_OK
    assert read_csv(out / "eigenvalues.csv") == [["index", "E", "mu", "residual"]]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["passed"] and all(manifest["flags"].values())
    ET.parse(out / "spectrum.svg")


def test_decay_study_and_plot_annotation(tmp_path):
    out = tmp_path / "d"
    assert main(["decay", "--config", str(CONFIGS / "decay_square_well.ini"),
                 "--out", str(out)]) == EXIT_OK
    rows = read_csv(out / "decay_fit.csv")
    full = dict(zip(rows[0], rows[2]))
    gamma = float(full["gamma_hat"])
    assert abs(gamma + 1.836) < 0.01
    svg = (out / "decay.svg").read_text()
    assert f"slope = {gamma:.6g}" in svg
    ET.fromstring(svg)


def test_manifest_lists_every_file_and_detects_tampering(tmp_path):
    out = tmp_path / "g"
    main(["guide2d", "--config", str(CONFIGS / "guide2d_neumann.ini"), "--out", str(out)])
    manifest = json.loads((out / "manifest.json").read_text())
    listed = set(manifest["files"])
    on_disk = set(os.listdir(out)) - {"manifest.json"}
    assert listed == on_disk
    assert verify_manifest(out) == []
    with open(out / "guide_counts.csv", "a") as fh:
        fh.write("extra\n")
    problems = verify_manifest(out)
    assert any("checksum" in p for p in problems) and any("rows" in p for p in problems)


def test_repeat_runs_are_byte_identical(tmp_path):
    for name, kind in (("decay_square_well.ini", "decay"), ("guide2d_dirichlet.ini", "guide2d")):
        a, b = tmp_path / (name + "a"), tmp_path / (name + "b")
        for out in (a, b):
            main([kind, "--config", str(CONFIGS / name), "--out", str(out)])
        for f in sorted(os.listdir(a)):
            if f != "manifest.json":
                assert (a / f).read_bytes() == (b / f).read_bytes(), f


def test_empty_plots_are_valid_svg():
    for svg in (plots.spectrum_plane([], [], "empty"), plots.decay_plot([], [], []),
                plots.staircase([], [])):
        root = ET.fromstring(svg)
        assert root.tag.endswith("svg")


def test_spectrum_plot_points_match_data():
    pts = [1 + 1j, 2 - 0.5j, 3 + 0j]
    svg = plots.spectrum_plane([("a", pts)], [("ray", [0j, 4 - 1j])])
    assert svg.count("<circle") == 3
    ET.fromstring(svg)
