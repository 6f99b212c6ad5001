import os

import semcom
from semcom.metrics import ScoreTable
from semcom_exporter.cli import main


def _write_prompts(tmp_path, lines):
    path = tmp_path / "prompts.txt"
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def test_export_command(tmp_path, capsys):
    prompts = _write_prompts(tmp_path, ["A blue car driving through the city.",
                                        "Two dogs running across a snowy field."])
    out = str(tmp_path / "out")
    assert main(["export", "--prompts", prompts, "--out", out]) == 0
    listed = capsys.readouterr().out.splitlines()
    assert listed == [os.path.join(out, "bundle_000"), os.path.join(out, "bundle_001")]
    for path in listed:
        semcom.load_bundle(path)
    assert not os.path.exists(os.path.join(out, "scores.csv"))


def test_export_with_score_sweep(tmp_path):
    prompts = _write_prompts(tmp_path, ["A blue car driving through the city."])
    out = str(tmp_path / "out")
    assert main(["export", "--prompts", prompts, "--out", out,
                 "--score-sweep", "0,500,1000"]) == 0
    table = ScoreTable.from_csv(os.path.join(out, "scores.csv"))
    assert "a-blue-car-driving-through-the-c" in table.rows


def test_raw_flag(tmp_path):
    prompts = _write_prompts(tmp_path, ["A blue car driving through the city."])
    out = str(tmp_path / "out")
    assert main(["export", "--prompts", prompts, "--out", out, "--raw"]) == 0
    bundle = semcom.load_bundle(os.path.join(out, "bundle_000"))
    assert all(isinstance(m, semcom.RawScoreStack) for m in bundle.maps.values())


def test_missing_prompts_file_is_config_error(tmp_path):
    assert main(["export", "--prompts", str(tmp_path / "nope.txt"),
                 "--out", str(tmp_path / "out")]) == 2


def test_bad_sweep_is_config_error(tmp_path):
    prompts = _write_prompts(tmp_path, ["A blue car driving through the city."])
    assert main(["export", "--prompts", prompts, "--out", str(tmp_path / "out"),
                 "--score-sweep", "10,abc"]) == 2


def test_unsorted_sweep_is_config_error(tmp_path):
    prompts = _write_prompts(tmp_path, ["A blue car driving through the city."])
    assert main(["export", "--prompts", prompts, "--out", str(tmp_path / "out"),
                 "--score-sweep", "100,50"]) == 2


def test_empty_prompts_file_is_config_error(tmp_path):
    prompts = _write_prompts(tmp_path, [""])
    assert main(["export", "--prompts", prompts, "--out", str(tmp_path / "out")]) == 2
