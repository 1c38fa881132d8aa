import json

import numpy as np
import pytest

from puzzleforge.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from puzzleforge.cmx import read_cmx
from puzzleforge.dataset import save_image
from conftest import smooth_image


@pytest.fixture
def source_png(tmp_path):
    path = tmp_path / "src.png"
    save_image(smooth_image(24, 24, seed=0), path)
    return path


def run(*argv):
    return main([str(a) for a in argv])


def scramble(tmp_path, source_png, puzzle_type=1, erode=0, seed=5):
    out = tmp_path / f"bundle_t{puzzle_type}"
    code = run(
        "scramble",
        "--input", source_png,
        "--piece-size", 8,
        "--type", puzzle_type,
        "--erode", erode,
        "--seed", seed,
        "--out", out,
    )
    assert code == EXIT_OK
    return out


@pytest.mark.parametrize("puzzle_type", [1, 2])
def test_full_pipeline_oracle(tmp_path, source_png, puzzle_type):
    bundle = scramble(tmp_path, source_png, puzzle_type)
    scores = tmp_path / "scores.cmx"
    assert run(
        "compat", "--bundle", bundle, "--measure", "ssd-rgb", "--out", scores
    ) == EXIT_OK
    tensor = read_cmx(scores)
    assert tensor.normalized and tensor.symmetric
    assert tensor.puzzle_type == puzzle_type

    report = tmp_path / "report.json"
    rendered = tmp_path / "solution.png"
    assert run(
        "solve",
        "--bundle", bundle,
        "--scores", scores,
        "--pop", 20,
        "--stall", 3,
        "--seed", 1,
        "--out", report,
        "--render", rendered,
    ) == EXIT_OK
    assert rendered.exists()
    assert (tmp_path / "report_trace.png").exists()
    doc = json.loads(report.read_text())
    assert len(doc["cells"]) == 9

    evaluation = tmp_path / "eval.json"
    assert run(
        "eval",
        "--bundle", bundle,
        "--arrangement", report,
        "--scores", scores,
        "--out", evaluation,
    ) == EXIT_OK
    rep = json.loads(evaluation.read_text())
    assert 0.0 <= rep["neighbor_accuracy"] <= 1.0
    text = (tmp_path / "eval.txt").read_text()
    assert text.startswith("neighbor_accuracy=")
    assert (tmp_path / "eval_local_fitness.png").exists()


def test_topk_and_heatmap_outputs(tmp_path, source_png):
    bundle = scramble(tmp_path, source_png)
    scores = tmp_path / "s.cmx"
    run("compat", "--bundle", bundle, "--measure", "mgc", "--out", scores)

    csv = tmp_path / "topk.csv"
    assert run(
        "topk", "--bundle", bundle, "--scores", scores, "--imax", 4, "--out", csv
    ) == EXIT_OK
    lines = csv.read_text().strip().splitlines()
    assert lines[0] == "i,top_i"
    assert len(lines) == 5
    assert csv.with_suffix(".png").exists()

    pgm = tmp_path / "map.pgm"
    assert run(
        "heatmap", "--bundle", bundle, "--scores", scores,
        "--relation", "right", "--out", pgm,
    ) == EXIT_OK
    assert pgm.read_bytes().startswith(b"P5\n9 9\n255\n")
    assert pgm.with_suffix(".png").exists()


def test_heatmap_local_fitness(tmp_path, source_png):
    bundle = scramble(tmp_path, source_png)
    scores = tmp_path / "s.cmx"
    run("compat", "--bundle", bundle, "--measure", "ssd-rgb", "--out", scores)
    report = tmp_path / "r.json"
    run("solve", "--bundle", bundle, "--scores", scores, "--pop", 8,
        "--stall", 1, "--seed", 2, "--out", report)
    out = tmp_path / "lf.pgm"
    assert run(
        "heatmap", "--bundle", bundle, "--scores", scores,
        "--local-fitness", "--arrangement", report, "--out", out,
    ) == EXIT_OK
    assert out.read_bytes().startswith(b"P5\n3 3\n255\n")


def test_shred_command(tmp_path):
    page = tmp_path / "page.png"
    save_image(smooth_image(30, 64, seed=1, channels=1), page)
    out = tmp_path / "strips"
    assert run(
        "shred", "--input", page, "--strip-width", 8, "--seed", 3, "--out", out
    ) == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["pieces"]) == 8
    assert manifest["known_dims"] == [1, 8]


def test_compat_raw_flag(tmp_path, source_png):
    bundle = scramble(tmp_path, source_png)
    raw = tmp_path / "raw.cmx"
    run("compat", "--bundle", bundle, "--measure", "ssd-rgb", "--raw", "--out", raw)
    t = read_cmx(raw)
    assert not t.normalized and not t.symmetric
    assert (t.scores <= 0).all()  # negated dissimilarities


def test_compat_deterministic_bytes(tmp_path, source_png):
    bundle = scramble(tmp_path, source_png)
    a = tmp_path / "a.cmx"
    b = tmp_path / "b.cmx"
    run("compat", "--bundle", bundle, "--measure", "mgc", "--out", a)
    run("compat", "--bundle", bundle, "--measure", "mgc", "--workers", 2, "--out", b)
    assert a.read_bytes() == b.read_bytes()


def test_solve_deterministic_bytes(tmp_path, source_png):
    bundle = scramble(tmp_path, source_png, puzzle_type=2)
    scores = tmp_path / "s.cmx"
    run("compat", "--bundle", bundle, "--measure", "ssd-rgb", "--out", scores)
    r1 = tmp_path / "r1.json"
    r2 = tmp_path / "r2.json"
    for out in (r1, r2):
        run("solve", "--bundle", bundle, "--scores", scores, "--pop", 10,
            "--stall", 2, "--seed", 7, "--out", out)
    assert r1.read_bytes() == r2.read_bytes()


def test_scramble_with_erosion(tmp_path, source_png):
    bundle = scramble(tmp_path, source_png, erode=2)
    manifest = json.loads((bundle / "manifest.json").read_text())
    assert manifest["erosion_width"] == 2
    scores = tmp_path / "s.cmx"
    # skip width defaults to the manifest's erosion width
    assert run(
        "compat", "--bundle", bundle, "--measure", "ssd-rgb", "--out", scores
    ) == EXIT_OK


def test_missing_bundle_is_data_error(tmp_path):
    assert run(
        "compat", "--bundle", tmp_path / "nope", "--measure", "ssd-rgb",
        "--out", tmp_path / "x.cmx",
    ) == EXIT_DATA


def test_corrupt_scores_is_data_error(tmp_path, source_png):
    bundle = scramble(tmp_path, source_png)
    bad = tmp_path / "bad.cmx"
    bad.write_bytes(b"not a tensor")
    assert run(
        "solve", "--bundle", bundle, "--scores", bad, "--seed", 1,
        "--out", tmp_path / "r.json",
    ) == EXIT_DATA


def test_mismatched_scores_is_data_error(tmp_path, source_png):
    b1 = scramble(tmp_path, source_png, puzzle_type=1)
    b2 = scramble(tmp_path, source_png, puzzle_type=2)
    scores = tmp_path / "t1.cmx"
    run("compat", "--bundle", b1, "--measure", "ssd-rgb", "--out", scores)
    assert run(
        "solve", "--bundle", b2, "--scores", scores, "--seed", 1,
        "--out", tmp_path / "r.json",
    ) == EXIT_DATA


def test_usage_errors(tmp_path):
    assert run("scramble") == EXIT_USAGE
    assert run("no-such-command") == EXIT_USAGE
    assert run() == EXIT_USAGE
