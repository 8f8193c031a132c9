import json
import subprocess
import sys

import numpy as np
import pytest
from click.testing import CliRunner
from PIL import Image

from frost2ffpe.cli import main
from frost2ffpe.synthetic import make_synthetic_slide


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(main, list(args), catch_exceptions=False)


def test_help_exits_zero(runner):
    result = invoke(runner, "--help")
    assert result.exit_code == 0
    for sub in ["segment", "patchify", "train", "translate", "stitch", "fid", "turing-stats", "kappa", "deck-build", "serve-survey"]:
        assert sub in result.output


def test_unknown_flag_exits_two(runner):
    result = runner.invoke(main, ["segment", "--nonsense"])
    assert result.exit_code == 2


def test_missing_slide_exits_one_naming_path(runner, tmp_path):
    result = runner.invoke(
        main,
        ["translate", "--slide", "missing.tif", "--checkpoint", "x.bin", "--out", str(tmp_path)],
    )
    assert result.exit_code == 1
    assert "missing.tif" in result.output


def test_missing_checkpoint_exits_one(runner, tmp_path):
    slide = tmp_path / "s.png"
    Image.fromarray(np.zeros((64, 64, 3), np.uint8)).save(slide)
    result = runner.invoke(
        main,
        ["translate", "--slide", str(slide), "--checkpoint", str(tmp_path / "no.bin"), "--out", str(tmp_path)],
    )
    assert result.exit_code == 1
    assert "no.bin" in result.output


def _write_slide(path, seed, corrupted):
    img = make_synthetic_slide(np.random.default_rng(seed), width=320, height=256, corrupted=corrupted)
    Image.fromarray(img).save(path)


SEG_ARGS = ["--downsample", "1", "--min-tissue-area", "64", "--min-hole-area", "16", "--patch-size", "64"]


def test_full_chain(runner, tmp_path):
    frozen_slide = tmp_path / "frozen.png"
    ffpe_slide = tmp_path / "ffpe.png"
    _write_slide(frozen_slide, 3, corrupted=True)
    _write_slide(ffpe_slide, 103, corrupted=False)

    # segment
    seg_out = tmp_path / "seg"
    result = invoke(runner, "segment", "--slide", str(frozen_slide), "--out", str(seg_out), *SEG_ARGS)
    assert result.exit_code == 0, result.output
    assert (seg_out / "frozen_mask.png").is_file()
    assert (seg_out / "frozen_segmentation.json").is_file()

    # patchify both domains
    src_out = tmp_path / "src"
    tgt_out = tmp_path / "tgt"
    for slide, out in ((frozen_slide, src_out), (ffpe_slide, tgt_out)):
        result = invoke(
            runner, "patchify", "--slide", str(slide), "--out", str(out),
            "--patch-size", "64", "--min-coverage", "0.3", *SEG_ARGS[:6],
        )
        assert result.exit_code == 0, result.output
        assert (out / "manifest.json").is_file()
        n = json.loads((out / "manifest.json").read_text())
        assert len(n["entries"]) >= 5
        assert len(list((out / "patches").glob("*.png"))) == len(n["entries"])

    # train a tiny model for a handful of iterations
    run_out = tmp_path / "run"
    result = invoke(
        runner, "train",
        "--source-dir", str(src_out / "patches"),
        "--target-dir", str(tgt_out / "patches"),
        "--out", str(run_out),
        "--epochs", "1", "--seed", "3", "--locations", "16",
        "--n-res-blocks", "1", "--base-channels", "8",
    )
    assert result.exit_code == 0, result.output
    assert (run_out / "run_config.json").is_file()
    assert (run_out / "train_log.jsonl").is_file()
    final = json.loads(result.output.strip().splitlines()[-1])["final_checkpoint"]
    checkpoint = run_out / final
    assert checkpoint.is_file()
    log = [json.loads(l) for l in (run_out / "train_log.jsonl").read_text().splitlines()]
    assert len(log) >= 5

    # translate the patch directory, then stitch with the patchify manifest
    trans_out = tmp_path / "translated"
    result = invoke(
        runner, "translate",
        "--patches-dir", str(src_out / "patches"),
        "--checkpoint", str(checkpoint),
        "--out", str(trans_out),
        "--batch-size", "4",
    )
    assert result.exit_code == 0, result.output
    assert (trans_out / "timing.json").is_file()

    stitched = tmp_path / "stitched.png"
    result = invoke(
        runner, "stitch",
        "--manifest", str(src_out / "manifest.json"),
        "--patches-dir", str(trans_out),
        "--out", str(stitched),
        "--width", "320", "--height", "256",
    )
    assert result.exit_code == 0, result.output
    assert np.asarray(Image.open(stitched)).shape == (256, 320, 3)

    # whole-slide translate mode
    wsi_out = tmp_path / "wsi"
    result = invoke(
        runner, "translate",
        "--slide", str(frozen_slide),
        "--checkpoint", str(checkpoint),
        "--out", str(wsi_out),
        "--patch-size", "64", "--min-coverage", "0.3", *SEG_ARGS[:6],
    )
    assert result.exit_code == 0, result.output
    assert (wsi_out / "frozen_translated.png").is_file()
    assert (wsi_out / "manifest.json").is_file()
    assert (wsi_out / "frozen_timing.json").is_file()

    # fid between target patches and translations
    result = invoke(
        runner, "fid",
        "--dir-a", str(tgt_out / "patches"),
        "--dir-b", str(trans_out),
        "--extractor", "randproj", "--dim", "16",
        "--report", str(tmp_path / "fid.json"),
    )
    assert result.exit_code == 0, result.output
    doc = json.loads(result.output)
    assert doc["fid"] >= 0
    assert (tmp_path / "fid.json").is_file()

    # deck -> responses -> stats
    deck = tmp_path / "deck.json"
    result = invoke(
        runner, "deck-build",
        "--ffpe-dir", str(tgt_out / "patches"),
        "--ai-dir", str(trans_out),
        "--n-per-class", "3", "--seed", "1",
        "--out", str(deck),
    )
    assert result.exit_code == 0, result.output
    items = json.loads(deck.read_text())["items"]
    responses = [
        {
            "rater_id": rater,
            "item_id": it["item_id"],
            "true_source": it["true_source"],
            "judged_source": it["true_source"],
            "timestamp_iso8601": f"2026-01-01T00:00:{i:02d}+00:00",
        }
        for i, it in enumerate(items)
        for rater in ("r1", "r2")
    ]
    responses_path = tmp_path / "responses.json"
    responses_path.write_text(json.dumps(responses))

    result = invoke(runner, "turing-stats", "--responses", str(responses_path))
    assert result.exit_code == 0
    assert json.loads(result.output)["per_class"]["real_ffpe"]["f1"] == 1.0

    result = invoke(runner, "kappa", "--responses", str(responses_path))
    assert result.exit_code == 0
    assert "kappa" in json.loads(result.output)


def test_config_file_precedence(runner, tmp_path, rng):
    d1 = tmp_path / "a"
    d2 = tmp_path / "b"
    for d in (d1, d2):
        d.mkdir()
        for i in range(2):
            Image.fromarray(rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)).save(d / f"{i}.png")
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"fid": {"dim": 16}}))

    result = invoke(runner, "--config", str(config), "fid", "--dir-a", str(d1), "--dir-b", str(d2))
    assert result.exit_code == 0
    assert "randproj-d16" in json.loads(result.output)["extractor_id"]

    # explicit flag wins over the config value
    result = invoke(runner, "--config", str(config), "fid", "--dir-a", str(d1), "--dir-b", str(d2), "--dim", "8")
    assert "randproj-d8" in json.loads(result.output)["extractor_id"]

    # env var selects the config
    result = runner.invoke(
        main, ["fid", "--dir-a", str(d1), "--dir-b", str(d2)],
        env={"FROST2FFPE_CONFIG": str(config)}, catch_exceptions=False,
    )
    assert "randproj-d16" in json.loads(result.output)["extractor_id"]


def test_kappa_matrix_input(runner, tmp_path):
    matrix = tmp_path / "matrix.json"
    matrix.write_text(json.dumps([[2, 0], [0, 2]]))
    result = invoke(runner, "kappa", "--matrix", str(matrix))
    assert result.exit_code == 0
    assert json.loads(result.output)["kappa"] == 1.0


def test_console_script_installed():
    proc = subprocess.run(
        [sys.executable, "-m", "frost2ffpe", "--help"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert "frost2ffpe" in proc.stdout
