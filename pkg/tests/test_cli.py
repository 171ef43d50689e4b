import json
import os
import subprocess
import sys

import numpy as np
import pytest

from datefield import __version__
from datefield.cli import main
from datefield.raster import GrayImage, save_gray
from datefield.synth import SynthSpec, generate, write_page


def tree(root):
    out = {}
    for dirpath, _, files in os.walk(root):
        for f in files:
            p = os.path.join(dirpath, f)
            with open(p, "rb") as fh:
                out[os.path.relpath(p, root)] = fh.read()
    return out


@pytest.fixture()
def planted(tmp_path):
    spec = SynthSpec(seed=42, dates_per_page=1, class_mix=(1, 0, 0), distractor_density=0.0)
    img, truth = generate(spec)
    d = tmp_path / "in"
    d.mkdir()
    write_page(img, truth, d, "page_000")
    return d, truth


def test_scan_planted_page(planted, tmp_path):
    src, truth = planted
    out = tmp_path / "out"
    assert main(["scan", str(src / "page_000.pgm"), "--out", str(out)]) == 0
    (cand,) = json.loads((out / "page_000.json").read_text())
    assert cand["class"] == "Slash" and cand["line_index"] == 0
    assert cand["region"] == truth.dates[0].region.to_dict()
    assert (out / "page_000.dates.pgm").exists() and (out / "page_000.boxes.png").exists()


def test_scan_blank_page(tmp_path):
    p = tmp_path / "blank.png"
    save_gray(GrayImage(np.full((40, 60), 255, dtype=np.uint8)), p)
    assert main(["scan", str(p), "--out", str(tmp_path / "o"), "--no-overlay"]) == 0
    assert json.loads((tmp_path / "o" / "blank.json").read_text()) == []
    assert not (tmp_path / "o" / "blank.boxes.png").exists()


def test_scan_missing_file(tmp_path, capsys):
    assert main(["scan", str(tmp_path / "nope.pgm"), "--out", str(tmp_path / "o")]) == 2
    assert "nope.pgm" in capsys.readouterr().err


def test_scan_unreadable_image(tmp_path):
    p = tmp_path / "junk.png"
    p.write_bytes(b"not an image")
    assert main(["scan", str(p), "--out", str(tmp_path / "o")]) == 2


def test_scan_bad_config_is_failure(planted, tmp_path):
    src, _ = planted
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"ranges": [[2.0, 1.0]] * 6}))
    assert main(["scan", str(src), "--out", str(tmp_path / "o"), "--ranges", str(cfg)]) == 1


def test_synth_is_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["synth", "--out", str(a), "--pages", "3", "--seed", "9"]) == 0
    assert main(["synth", "--out", str(b), "--pages", "3", "--seed", "9", "--jobs", "2"]) == 0
    ta = tree(a)
    assert ta == tree(b)
    assert sorted(ta) == sorted(
        ["spec.json"] + [f"page_00{i}{s}" for i in range(3) for s in (".pgm", ".truth.json")]
    )


def test_synth_with_spec_file(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(SynthSpec(seed=4, dates_per_page=0, distractor_density=0.0).to_dict()))
    assert main(["synth", "--spec", str(spec), "--out", str(tmp_path / "c")]) == 0
    truth = json.loads((tmp_path / "c" / "page_000.truth.json").read_text())
    assert truth["dates"] == []


def test_synth_bad_spec_is_failure(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"class_mix": [0.9, 0.9, 0.9]}))
    assert main(["synth", "--spec", str(spec), "--out", str(tmp_path / "c")]) == 1


def test_full_round_trip(tmp_path):
    train, test = tmp_path / "train", tmp_path / "test"
    assert main(["synth", "--out", str(train), "--pages", "6", "--seed", "100"]) == 0
    assert main(["synth", "--out", str(test), "--pages", "4", "--seed", "5"]) == 0
    model = tmp_path / "knn.json"
    assert main(["train-knn", "--in", str(train), "--out", str(model)]) == 0
    assert json.loads(model.read_text())["k"] == 3
    ranges = tmp_path / "ranges.json"
    assert main(["calibrate", "--corpus", str(train), "--out", str(ranges)]) == 0
    assert len(json.loads(ranges.read_text())["ranges"]) == 6
    dets = tmp_path / "dets"
    assert main(["scan", str(test), "--out", str(dets), "--knn", str(model), "--no-overlay"]) == 0
    report = tmp_path / "report.json"
    assert main(["evaluate", "--detections", str(dets), "--truth", str(test), "--report", str(report)]) == 0
    r = json.loads(report.read_text())
    assert r["efficiency_pct"] == 100.0 and r["far_pct"] == 0.0 and r["documents"] == 4


def test_evaluate_prints_table(planted, tmp_path, capsys):
    src, _ = planted
    dets = tmp_path / "d"
    main(["scan", str(src), "--out", str(dets), "--no-overlay"])
    capsys.readouterr()
    assert main(["evaluate", "--detections", str(dets), "--truth", str(src)]) == 0
    out = capsys.readouterr().out
    assert "FAR (%)" in out and "100.00" in out


def test_evaluate_missing_dir(tmp_path):
    assert main(["evaluate", "--detections", str(tmp_path / "x"), "--truth", str(tmp_path)]) == 2


def test_train_knn_from_samples_file(tmp_path):
    s = tmp_path / "s.json"
    s.write_text(json.dumps([{"w3": 15, "w6": 16, "label": "Dash"}, {"w3": 2, "w6": 3, "label": "Dot"}, {"w3": 3, "w6": 2, "label": "Dot"}]))
    assert main(["train-knn", "--in", str(s), "--out", str(tmp_path / "m.json")]) == 0
    assert main(["train-knn", "--in", str(s), "--out", str(tmp_path / "m.json"), "--k", "5"]) == 1


def test_usage_errors():
    with pytest.raises(SystemExit) as e:
        main(["scan"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["synth", "--out", "x", "--jobs", "0"])
    assert e.value.code == 2


def test_version_and_help_via_console_script():
    r = subprocess.run([sys.executable, "-m", "datefield.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and __version__ in r.stdout
    r = subprocess.run([sys.executable, "-m", "datefield.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    for sub in ("scan", "synth", "calibrate", "train-knn", "evaluate"):
        assert sub in r.stdout
