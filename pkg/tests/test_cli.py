import json

import numpy as np
import pytest
from click.testing import CliRunner
from PIL import Image

from texfx.cli import cli, main
from texfx.config import PARTITION_MODES
from texfx.utils import derive_seed

FAST = ["--pyramid-depth", "2", "--iterations", "2", "--scales", "2"]


def _source(files):
    return ["--source-text", str(files / "s.png"), "--source-style", str(files / "ss.png")]


def _transfer(files, target, out, *extra):
    return main(["transfer", *_source(files), "--target-text", str(target), "--out", str(out), *FAST, *extra])


def _analyze(files, report, *extra):
    return main([
        "analyze", *_source(files), "--report", str(report),
        "--partitions", "4", "--patch-sizes", "3,5", "--samples", "30", *extra,
    ])


def test_transfer_writes_image_and_sidecar(exemplar_files):
    out = exemplar_files / "out.png"
    assert _transfer(exemplar_files, exemplar_files / "targets" / "T.png", out) == 0

    assert Image.open(out).size == (48, 48)
    sidecar = json.loads(out.with_suffix(".json").read_text())
    assert sidecar["seed"] == 0
    assert sidecar["params"]["iterations"] == 2
    assert sidecar["pyramid_depth"] == 2
    assert len(sidecar["objective"]) == 2
    assert all(len(level["sweeps"]) == 2 for level in sidecar["objective"])


def test_transfer_missing_option(exemplar_files, capsys):
    code = main([
        "transfer", "--source-text", str(exemplar_files / "s.png"),
        "--target-text", str(exemplar_files / "targets" / "T.png"), "--out", str(exemplar_files / "o.png"),
    ])
    assert code == 1
    assert "--source-style" in capsys.readouterr().err


def test_transfer_missing_file(exemplar_files, capsys):
    code = _transfer(exemplar_files, exemplar_files / "targets" / "nope.png", exemplar_files / "o.png")
    assert code == 2
    assert "nope.png" in capsys.readouterr().err


def test_transfer_blank_target_is_degenerate(exemplar_files):
    blank = exemplar_files / "blank.png"
    Image.fromarray(np.zeros((48, 48), dtype=np.uint8)).save(blank)
    assert _transfer(exemplar_files, blank, exemplar_files / "o.png") == 3


def test_transfer_target_thinner_than_a_patch(exemplar_files, capsys):
    line = np.zeros((4, 40), dtype=np.uint8)
    line[1:3, 5:35] = 255
    thin = exemplar_files / "thin.png"
    Image.fromarray(line).save(thin)
    assert _transfer(exemplar_files, thin, exemplar_files / "o.png") == 3
    assert "patch" in capsys.readouterr().err


@pytest.mark.parametrize("flag", [["--patch-size", "4"], ["--lambda1", "-1"], ["--mode", "fancy"], ["--seed", "x"]])
def test_transfer_bad_flag_value(exemplar_files, flag):
    assert _transfer(exemplar_files, exemplar_files / "targets" / "T.png", exemplar_files / "o.png", *flag) == 1


def test_params_file_overrides_defaults(exemplar_files):
    params = exemplar_files / "params.json"
    params.write_text(json.dumps({"pyramid_depth": 2, "iterations": 1, "scales": 1}))
    out = exemplar_files / "p.png"
    code = main([
        "transfer", *_source(exemplar_files), "--target-text", str(exemplar_files / "targets" / "L.png"),
        "--out", str(out), "--params", str(params),
    ])
    assert code == 0
    sidecar = json.loads(out.with_suffix(".json").read_text())
    assert sidecar["params"]["iterations"] == 1
    assert sidecar["params"]["scales"] == 1


def test_params_file_invalid(exemplar_files):
    bad = exemplar_files / "bad.json"
    bad.write_text("{not json")
    code = main([
        "transfer", *_source(exemplar_files), "--target-text", str(exemplar_files / "targets" / "L.png"),
        "--out", str(exemplar_files / "o.png"), "--params", str(bad),
    ])
    assert code == 1


def test_repetition_weight_changes_the_objective(exemplar_files):
    target = exemplar_files / "targets" / "H.png"
    free, penalized = exemplar_files / "free.png", exemplar_files / "penalized.png"
    assert _transfer(exemplar_files, target, free, "--lambda2", "0") == 0
    assert _transfer(exemplar_files, target, penalized, "--lambda2", "0.005") == 0
    a = json.loads(free.with_suffix(".json").read_text())["objective"]
    b = json.loads(penalized.with_suffix(".json").read_text())["objective"]
    assert a != b


def test_dump_debug_artifacts(exemplar_files):
    out = exemplar_files / "dbg.png"
    assert _transfer(exemplar_files, exemplar_files / "targets" / "T.png", out, "--dump-debug") == 0
    for suffix in (".distance.png", ".width.json", ".scales.png", ".posterior.json"):
        assert (exemplar_files / f"dbg{suffix}").exists()
    posterior = json.loads((exemplar_files / "dbg.posterior.json").read_text())
    assert len(posterior["posterior"]) == 2


def test_batch_runs_every_glyph(exemplar_files):
    out = exemplar_files / "results"
    code = main(["batch", *_source(exemplar_files), "--target-dir", str(exemplar_files / "targets"),
                 "--out", str(out), *FAST])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["summary"] == {"total": 3, "succeeded": 3, "failed": 0}
    assert [g["name"] for g in manifest["glyphs"]] == ["H.png", "L.png", "T.png"]
    for glyph in manifest["glyphs"]:
        assert glyph["seed"] == derive_seed(0, glyph["name"])
        assert (out / glyph["output"]).exists()


def test_batch_matches_single_runs(exemplar_files):
    out = exemplar_files / "results"
    assert main(["batch", *_source(exemplar_files), "--target-dir", str(exemplar_files / "targets"),
                 "--out", str(out), *FAST]) == 0
    for name in ("T", "L", "H"):
        single = exemplar_files / f"single_{name}.png"
        seed = derive_seed(0, f"{name}.png")
        assert _transfer(exemplar_files, exemplar_files / "targets" / f"{name}.png", single, "--seed", str(seed)) == 0
        assert single.read_bytes() == (out / f"{name}.png").read_bytes()


def test_batch_records_bad_glyph_and_continues(exemplar_files):
    (exemplar_files / "targets" / "X.png").write_bytes(b"definitely not a png")
    out = exemplar_files / "results"
    code = main(["batch", *_source(exemplar_files), "--target-dir", str(exemplar_files / "targets"),
                 "--out", str(out), *FAST])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["summary"] == {"total": 4, "succeeded": 3, "failed": 1}
    failed = [g for g in manifest["glyphs"] if g["status"] == "failed"]
    assert failed[0]["name"] == "X.png" and failed[0]["output"] is None


def test_batch_manifest_is_reproducible(exemplar_files):
    first, second = exemplar_files / "run1", exemplar_files / "run2"
    for out in (first, second):
        assert main(["batch", *_source(exemplar_files), "--target-dir", str(exemplar_files / "targets"),
                     "--out", str(out), *FAST]) == 0
    assert (first / "manifest.json").read_bytes() == (second / "manifest.json").read_bytes()


def test_batch_all_glyphs_fail(exemplar_files, tmp_path):
    targets = tmp_path / "blank_targets"
    targets.mkdir()
    Image.fromarray(np.zeros((48, 48), dtype=np.uint8)).save(targets / "A.png")
    code = main(["batch", *_source(exemplar_files), "--target-dir", str(targets),
                 "--out", str(tmp_path / "results"), *FAST])
    assert code == 3


def test_batch_missing_directory(exemplar_files):
    code = main(["batch", *_source(exemplar_files), "--target-dir", str(exemplar_files / "missing"),
                 "--out", str(exemplar_files / "results"), *FAST])
    assert code == 2


def test_analyze_reports_every_mode(exemplar_files):
    report = exemplar_files / "report.json"
    assert _analyze(exemplar_files, report) == 0
    data = json.loads(report.read_text())
    assert data["image"] == "ss.png"
    assert [m["mode"] for m in data["modes"]] == list(PARTITION_MODES)
    for mode in data["modes"]:
        assert 0.0 <= mode["r_color"] <= 1.0
        assert {"partition", "patch_size", "mean", "std", "count"} <= set(mode["curves"][0])


def test_analyze_keeps_requested_order(exemplar_files):
    report = exemplar_files / "report.json"
    assert _analyze(exemplar_files, report, "--modes", "distance,random") == 0
    assert [m["mode"] for m in json.loads(report.read_text())["modes"]] == ["distance", "random"]


def test_analyze_is_reproducible(exemplar_files):
    first, second = exemplar_files / "a.json", exemplar_files / "b.json"
    assert _analyze(exemplar_files, first, "--seed", "4") == 0
    assert _analyze(exemplar_files, second, "--seed", "4") == 0
    assert first.read_bytes() == second.read_bytes()


@pytest.mark.parametrize("extra", [["--modes", "spiral"], ["--patch-sizes", "3,4"], ["--patch-sizes", "a,b"],
                                   ["--partitions", "1"]])
def test_analyze_bad_options(exemplar_files, extra):
    assert _analyze(exemplar_files, exemplar_files / "r.json", *extra) == 1


def test_demo_writes_samples(tmp_path):
    result = CliRunner().invoke(cli, ["demo", "--out", str(tmp_path / "demo"), "--size", "48"])
    assert result.exit_code == 0
    assert (tmp_path / "demo" / "source_text.png").exists()
    assert (tmp_path / "demo" / "source_style.png").exists()
    assert sorted(p.name for p in (tmp_path / "demo" / "targets").iterdir()) == ["H.png", "L.png", "T.png"]
    assert "texfx batch" in result.output


def test_help_lists_subcommands():
    result = CliRunner().invoke(cli, ["--help"])
    assert result.exit_code == 0
    for name in ("transfer", "batch", "analyze", "demo"):
        assert name in result.output


def test_transfer_accepts_thread_count(exemplar_files):
    target = exemplar_files / "targets" / "T.png"
    default, capped = exemplar_files / "default.png", exemplar_files / "capped.png"
    assert _transfer(exemplar_files, target, default) == 0
    assert _transfer(exemplar_files, target, capped, "--threads", "1") == 0
    assert default.read_bytes() == capped.read_bytes()


@pytest.mark.parametrize("command", ["transfer", "analyze"])
def test_thread_count_must_be_positive(exemplar_files, command):
    if command == "transfer":
        code = _transfer(exemplar_files, exemplar_files / "targets" / "T.png", exemplar_files / "o.png",
                         "--threads", "0")
    else:
        code = _analyze(exemplar_files, exemplar_files / "r.json", "--threads", "0")
    assert code == 1


def test_analyze_dump_debug(exemplar_files):
    report = exemplar_files / "report.json"
    assert _analyze(exemplar_files, report, "--modes", "random", "--dump-debug") == 0
    assert (exemplar_files / "report.distance.png").exists()
    rows = json.loads((exemplar_files / "report.width.json").read_text())
    assert rows and {"rank", "radius", "fitted"} <= set(rows[0])
