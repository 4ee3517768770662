"""Command-line interface: exit codes, artifacts, config plumbing."""
from __future__ import annotations

import json
from pathlib import Path

import pytest

from blockplan.cli import (
    EXIT_CANNOT_FIT,
    EXIT_CLIENT_UNAVAILABLE,
    EXIT_CONFIG_VIOLATION,
    EXIT_EMPTY_MESH,
    EXIT_MALFORMED_FILE,
    EXIT_OK,
    EXIT_REJECTED,
    EXIT_SCHEMA,
    EXIT_UNSEQUENCEABLE,
    EXIT_UNSUPPORTED_FORMAT,
    EXIT_VALIDATION_FAILED,
    PipelineConfig,
    main,
)
from blockplan.mesh_io import MeshFormat, serialize_mesh
from blockplan.sequencer import AssemblySequence
from blockplan.shapes import box_mesh
from tests.conftest import make_grid

PIPELINE_ARTIFACTS = ("grid.json", "report.json", "sequence.json", "toolpath.json", "summary.txt")


def read_artifacts(out_dir: Path, names=PIPELINE_ARTIFACTS):
    return {name: (out_dir / name).read_bytes() for name in names}


# --- pipeline ----------------------------------------------------------------


def test_pipeline_from_mesh_file(demo_mesh_files, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["pipeline", "--mesh", demo_mesh_files["table"], "--out-dir", str(out)])
    assert code == EXIT_OK
    for name in PIPELINE_ARTIFACTS:
        assert (out / name).is_file()
    summary = (out / "summary.txt").read_text()
    assert "simulate=ok" in summary and "report=consistent" in summary
    assert "pipeline ok" in capsys.readouterr().out


def test_pipeline_runs_are_reproducible(demo_mesh_files, tmp_path):
    outs = []
    for n in (1, 2):
        out = tmp_path / f"run{n}"
        assert main(["pipeline", "--mesh", demo_mesh_files["shelf"], "--out-dir", str(out)]) == EXIT_OK
        outs.append(read_artifacts(out))
    assert outs[0] == outs[1]


def test_pipeline_equals_composed_stages(demo_mesh_files, tmp_path):
    whole = tmp_path / "whole"
    assert main(["pipeline", "--mesh", demo_mesh_files["tee"], "--out-dir", str(whole)]) == EXIT_OK

    staged = tmp_path / "staged"
    grid = str(staged / "grid.json")
    seq = str(staged / "sequence.json")
    assert main(["check", "--mesh", demo_mesh_files["tee"], "--out-dir", str(staged)]) == EXIT_OK
    assert main(["sequence", "--grid", grid, "--out-dir", str(staged)]) == EXIT_OK
    assert main(["toolpath", "--grid", grid, "--sequence", seq, "--out-dir", str(staged)]) == EXIT_OK
    assert main(["validate", "--grid", grid, "--sequence", seq, "--out-dir", str(staged)]) == EXIT_OK

    names = ("grid.json", "report.json", "sequence.json", "toolpath.json")
    assert read_artifacts(whole, names) == read_artifacts(staged, names)
    assert json.loads((staged / "simulation.json").read_bytes())["ok"] is True


def test_pipeline_without_handling_reports_failure(demo_mesh_files, tmp_path):
    out = tmp_path / "out"
    code = main([
        "pipeline", "--mesh", demo_mesh_files["tee"],
        "--no-failure-handling", "--out-dir", str(out),
    ])
    assert code == EXIT_VALIDATION_FAILED
    report = json.loads((out / "report.json").read_bytes())
    assert report["checks"]["vertical_stack"] == "failed"
    assert report["modifications"] == []


def test_pipeline_robot_script_format(demo_mesh_files, tmp_path):
    out = tmp_path / "out"
    code = main([
        "pipeline", "--mesh", demo_mesh_files["tee"],
        "--format", "robot_script", "--out-dir", str(out),
    ])
    assert code == EXIT_OK
    script = (out / "toolpath.txt").read_text()
    assert script.startswith("MOVE ")
    assert not (out / "toolpath.json").exists()


def test_pipeline_from_text_with_manifest(demo_mesh_files, tmp_path):
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({"coffee table": demo_mesh_files["table"]}))
    out = tmp_path / "out"
    code = main([
        "pipeline", "--text", "make me a coffee table",
        "--mesh-manifest", str(manifest), "--out-dir", str(out),
    ])
    assert code == EXIT_OK
    assert (out / "grid.json").is_file()
    assert 'phrase "coffee table"' in (out / "summary.txt").read_text()


def test_pipeline_rejects_abstract_text(tmp_path, capsys):
    code = main(["pipeline", "--text", "Knowledge", "--out-dir", str(tmp_path / "out")])
    assert code == EXIT_REJECTED
    assert "restate" in capsys.readouterr().err.lower()


def test_pipeline_text_needs_mesh_source(tmp_path):
    code = main(["pipeline", "--text", "a chair", "--out-dir", str(tmp_path / "out")])
    assert code == EXIT_CLIENT_UNAVAILABLE


def test_pipeline_cannot_fit(tmp_path):
    mesh_path = tmp_path / "cube.stl"
    mesh_path.write_bytes(
        serialize_mesh(box_mesh((0, 0, 0), (15.0, 15.0, 15.0)), MeshFormat.STL_BINARY)
    )
    code = main([
        "pipeline", "--mesh", str(mesh_path),
        "--set", "inventory=1", "--out-dir", str(tmp_path / "out"),
    ])
    assert code == EXIT_CANNOT_FIT


# --- single stages -----------------------------------------------------------


def test_filter_prints_phrase(capsys):
    assert main(["filter", "--text", "make me a coffee table"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "coffee table"


def test_filter_rejects(capsys):
    assert main(["filter", "--text", "Knowledge"]) == EXIT_REJECTED
    assert "restate" in capsys.readouterr().err.lower()


def test_voxelize_writes_grid(demo_mesh_files, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["voxelize", "--mesh", demo_mesh_files["tee"], "--out-dir", str(out)]) == EXIT_OK
    doc = json.loads((out / "grid.json").read_bytes())
    assert len(doc["occupied"]) == 8
    assert "8 occupied cells" in capsys.readouterr().out


def test_check_writes_grid_and_report(demo_mesh_files, tmp_path, capsys):
    out = tmp_path / "out"
    code = main([
        "check", "--mesh", demo_mesh_files["block"],
        "--no-failure-handling", "--out-dir", str(out),
    ])
    assert code == EXIT_OK
    report = json.loads((out / "report.json").read_bytes())
    assert report["checks"]["component_count"] == "failed"
    assert report["final_component_count"] == 180
    assert "component_count=failed" in capsys.readouterr().out


def test_sequence_unbuildable_grid(tmp_path):
    arch = make_grid(
        [(0, 0, 0), (0, 0, 1), (0, 0, 2), (1, 0, 2), (2, 0, 2), (2, 0, 1)],
        dims=(3, 1, 3),
    )
    grid_path = tmp_path / "grid.json"
    grid_path.write_bytes(arch.to_json())
    code = main(["sequence", "--grid", str(grid_path), "--out-dir", str(tmp_path)])
    assert code == EXIT_UNSEQUENCEABLE


def test_toolpath_config_violation(tmp_path):
    grid = make_grid([(0, 0, 0)])
    seq = AssemblySequence(((0, 0, 0),))
    (tmp_path / "grid.json").write_bytes(grid.to_json())
    (tmp_path / "seq.json").write_bytes(seq.to_json())
    code = main([
        "toolpath", "--grid", str(tmp_path / "grid.json"),
        "--sequence", str(tmp_path / "seq.json"),
        "--set", "movement_plane_z=10", "--out-dir", str(tmp_path),
    ])
    assert code == EXIT_CONFIG_VIOLATION


def test_validate_reports_bad_sequence(tmp_path, capsys):
    grid = make_grid([(0, 0, 0), (0, 0, 1)])
    seq = AssemblySequence(((0, 0, 1), (0, 0, 0)))
    (tmp_path / "grid.json").write_bytes(grid.to_json())
    (tmp_path / "seq.json").write_bytes(seq.to_json())
    code = main([
        "validate", "--grid", str(tmp_path / "grid.json"),
        "--sequence", str(tmp_path / "seq.json"), "--out-dir", str(tmp_path),
    ])
    assert code == EXIT_VALIDATION_FAILED
    assert json.loads((tmp_path / "simulation.json").read_bytes())["first_failure"] == 0
    assert "failed at step 0" in capsys.readouterr().err


# --- input errors ----------------------------------------------------------


def test_malformed_mesh_file(tmp_path):
    bad = tmp_path / "bad.stl"
    bad.write_text("solid x\nfacet\nvertex 1 2\nendfacet\nendsolid x\n")
    assert main(["voxelize", "--mesh", str(bad), "--out-dir", str(tmp_path)]) == EXIT_MALFORMED_FILE


def test_unrecognizable_mesh_file(tmp_path):
    bad = tmp_path / "bad.xyz"
    bad.write_bytes(b"garbage")
    assert main(["voxelize", "--mesh", str(bad), "--out-dir", str(tmp_path)]) == EXIT_UNSUPPORTED_FORMAT


def test_empty_mesh_file(tmp_path):
    empty = tmp_path / "empty.stl"
    empty.write_text("solid x\nendsolid x\n")
    assert main(["voxelize", "--mesh", str(empty), "--out-dir", str(tmp_path)]) == EXIT_EMPTY_MESH


def test_junk_grid_document(tmp_path):
    bad = tmp_path / "grid.json"
    bad.write_text("{\"cells\": 1}")
    assert main(["sequence", "--grid", str(bad), "--out-dir", str(tmp_path)]) == EXIT_SCHEMA


# --- configuration ----------------------------------------------------------


def test_set_overrides_inventory(demo_mesh_files, tmp_path):
    out = tmp_path / "out"
    code = main([
        "check", "--mesh", demo_mesh_files["tee"],
        "--set", "inventory=5", "--out-dir", str(out),
    ])
    assert code == EXIT_OK
    assert json.loads((out / "report.json").read_bytes())["final_component_count"] <= 5


def test_set_rejects_unknown_key(demo_mesh_files, tmp_path):
    code = main([
        "check", "--mesh", demo_mesh_files["tee"],
        "--set", "warp_speed=9", "--out-dir", str(tmp_path),
    ])
    assert code == EXIT_SCHEMA


def test_set_requires_key_value(demo_mesh_files, tmp_path):
    code = main([
        "check", "--mesh", demo_mesh_files["tee"],
        "--set", "inventory", "--out-dir", str(tmp_path),
    ])
    assert code == EXIT_SCHEMA


def test_config_file_applies(demo_mesh_files, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"inventory": 3, "cell_size": 10.0}))
    out = tmp_path / "out"
    code = main([
        "check", "--mesh", demo_mesh_files["tee"],
        "--config", str(cfg), "--out-dir", str(out),
    ])
    assert code == EXIT_OK
    assert json.loads((out / "report.json").read_bytes())["final_component_count"] <= 3


def test_config_file_rejects_bad_documents(tmp_path):
    not_json = tmp_path / "cfg.json"
    not_json.write_text("{nope")
    assert main(["filter", "--text", "a box", "--config", str(not_json)]) == EXIT_SCHEMA
    not_object = tmp_path / "cfg2.json"
    not_object.write_text("[]")
    assert main(["filter", "--text", "a box", "--config", str(not_object)]) == EXIT_SCHEMA


def test_config_tuple_override_shape():
    cfg = PipelineConfig()
    cfg.apply_override("workspace", [30, 30, 30])
    assert cfg.workspace == (30.0, 30.0, 30.0)
    with pytest.raises(Exception):
        cfg.apply_override("workspace", [30, 30])


def test_argparse_usage_errors():
    with pytest.raises(SystemExit) as excinfo:
        main([])
    assert excinfo.value.code == 2
    with pytest.raises(SystemExit):
        main(["pipeline"])  # needs --mesh or --text
