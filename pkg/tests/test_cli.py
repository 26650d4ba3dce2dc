import json
import os
from pathlib import Path

import numpy as np
import pytest

from varifold_atlas.cli import main
from varifold_atlas.report import canonical_json, load_report

LENS_FAST = {
    "curves_a": [{"circle": {"center": [0, 0], "r": 1.0, "samples": 192}}],
    "curves_b": [{"circle": {"center": [1, 0], "r": 1.0, "samples": 192}}],
    "t": 0.07,
    "mesh": {"h": 0.1, "rho": 0.3},
}

TANGENT = {
    "curves_a": [{"circle": {"center": [0, 0], "r": 1.0, "samples": 256}}],
    "curves_b": [{"circle": {"center": [0.5, 0], "r": 0.5, "samples": 256}}],
}


def write_config(tmp_path, doc, name="config.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_arrange_and_svg(tmp_path, capsys):
    cfg = write_config(tmp_path, LENS_FAST)
    svg = tmp_path / "arr.svg"
    code = main(["arrange", cfg, "--out", str(tmp_path), "--svg", str(svg)])
    assert code == 0
    out = capsys.readouterr().out
    assert "crossings: 2" in out
    assert "upper bound: 3" in out
    assert svg.exists() and "<svg" in svg.read_text()
    rep = load_report(tmp_path / "config.arrange.json")
    assert rep["arrangement"]["crossings"] == 2
    assert rep["arrangement"]["fi_minus"] == 1


def test_enumerate_report(tmp_path):
    cfg = write_config(tmp_path, LENS_FAST)
    assert main(["enumerate", cfg, "--out", str(tmp_path)]) == 0
    rep = load_report(tmp_path / "config.enumerate.json")
    assert len(rep["varifolds"]) == 2
    chis = sorted(e["stats"]["chi"] for e in rep["varifolds"])
    assert chis == [0, 2]
    assert sum(e["least_area"] for e in rep["varifolds"]) == 1


def test_tangent_circles_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path, TANGENT)
    assert main(["arrange", cfg, "--out", str(tmp_path)]) == 2
    assert "tangential contact" in capsys.readouterr().err


def test_malformed_config_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{oops")
    assert main(["arrange", str(p), "--out", str(tmp_path)]) == 2


def test_build_selected_varifold(tmp_path):
    cfg = write_config(tmp_path, LENS_FAST)
    assert main(["build", cfg, "--varifold", "0", "--out", str(tmp_path),
                 "--no-figures"]) == 0
    assert (tmp_path / "config_0_0.obj").exists()
    assert not (tmp_path / "config_1_0.obj").exists()
    assert (tmp_path / "config_0_0_relax.csv").exists()
    rep = load_report(tmp_path / "config.build.json")
    assert rep["varifolds"][0]["meshes"]
    assert "relax" not in rep["varifolds"][1] or rep["varifolds"][1].get("relax") is None
    obj = (tmp_path / "config_0_0.obj").read_text().splitlines()
    assert obj[0].startswith("v ") and any(l.startswith("f ") for l in obj)


def test_build_all_with_threads_and_figures(tmp_path):
    cfg = write_config(tmp_path, LENS_FAST)
    os.environ["VARIFOLD_ATLAS_THREADS"] = "2"
    try:
        assert main(["build", cfg, "--all", "--out", str(tmp_path)]) == 0
    finally:
        del os.environ["VARIFOLD_ATLAS_THREADS"]
    for k, ncomp in ((0, 1), (1, 2)):
        for j in range(ncomp):
            assert (tmp_path / f"config_{k}_{j}.obj").exists()
    assert (tmp_path / "config_arrangement.png").exists()
    assert (tmp_path / "config_arrangement.svg").exists()
    assert (tmp_path / "config_0_surface.png").exists()
    assert (tmp_path / "config_0_0_relax.png").exists()


def test_report_round_trip_byte_identical(tmp_path):
    cfg = write_config(tmp_path, LENS_FAST)
    main(["enumerate", cfg, "--out", str(tmp_path)])
    path = tmp_path / "config.enumerate.json"
    text = path.read_text()
    assert canonical_json(json.loads(text)) + "\n" == text


def test_t_too_large_warns_but_runs(tmp_path, capsys):
    doc = dict(LENS_FAST)
    doc["t"] = 2.5
    cfg = write_config(tmp_path, doc)
    assert main(["arrange", cfg, "--out", str(tmp_path)]) == 0
    assert "asymptotic regime not guaranteed" in capsys.readouterr().err


def test_verify_lens_and_replay(tmp_path, capsys):
    cfg = write_config(tmp_path, LENS_FAST)
    assert main(["verify", cfg, "--out", str(tmp_path), "--no-figures"]) == 0
    out = capsys.readouterr().out
    assert "[PASS] enumeration-oracle-equality" in out
    report_path = tmp_path / "config.verify.json"
    assert load_report(report_path)["passed"] is True

    # replay the stored report: identical -> still 0
    assert main(["verify", cfg, "--out", str(tmp_path), "--no-figures",
                 "--replay", str(report_path)]) == 0

    # corrupt a chi and replay -> exit 1 with a chi-mismatch diagnostic
    rep = load_report(report_path)
    rep["varifolds"][0]["stats"]["chi"] = 99
    bad = tmp_path / "corrupted.json"
    bad.write_text(json.dumps(rep))
    capsys.readouterr()
    assert main(["verify", cfg, "--out", str(tmp_path), "--no-figures",
                 "--replay", str(bad)]) == 1
    assert "chi mismatch" in capsys.readouterr().out


def test_missing_varifold_selection(tmp_path, capsys):
    cfg = write_config(tmp_path, LENS_FAST)
    assert main(["build", cfg, "--out", str(tmp_path), "--no-figures"]) == 2
    assert main(["build", cfg, "--varifold", "7", "--out", str(tmp_path),
                 "--no-figures"]) == 2
