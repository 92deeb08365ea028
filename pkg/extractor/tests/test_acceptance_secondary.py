"""Secondary acceptance: mock-extracted artifacts drive the scene compiler
end-to-end through its CLI, with the scripted-delegate sidecar honored."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from acdc_extractor import build_asset_db, extract
from acdc_extractor.adapters import ScriptedDelegate
from acdc_extractor.annotate import annotate
from acdc_extractor.formats import attach_sidecar

from conftest import asset_spec


def compiler(*args):
    """Invoke the scene compiler CLI as an external tool."""
    return subprocess.run(
        [sys.executable, "-m", "acdc.cli", *map(str, args)],
        capture_output=True,
        text=True,
    )


@pytest.fixture
def artifacts(image_with_fixture, tmp_path):
    bundle = extract(image_with_fixture, tmp_path / "bundle")
    db = build_asset_db(asset_spec(), tmp_path / "db")
    return bundle, db, tmp_path


def test_mock_artifacts_validate_cleanly(artifacts):
    bundle, db, _ = artifacts
    for path in (bundle, db):
        result = compiler("validate", path)
        assert result.returncode == 0, result.stdout + result.stderr
        assert "OK" in result.stdout


def test_full_pipeline_end_to_end(artifacts):
    bundle, db, tmp = artifacts
    matches = tmp / "matches.json"
    scene = tmp / "scene.scene.json"

    result = compiler("match", bundle, "--assets", db, "-o", matches, "--k-cous", "4")
    assert result.returncode == 0, result.stderr
    payload = json.loads(matches.read_text())
    assert len(payload["objects"]) == 3
    by_id = {o["object_id"]: o for o in payload["objects"]}
    # twin recovery through the mock encoders
    for oid, entry in by_id.items():
        assert entry["cousins"][0]["asset_id"] == f"{oid}_twin", oid
        assert entry["cousins"][0]["distance"] == 0.0
    # the articulated cabinet only matched articulated assets
    cab_ids = {c["asset_id"] for c in by_id["cab_0"]["cousins"]}
    assert cab_ids <= {"cab_0_twin", "cab_0_alt"}

    result = compiler(
        "generate", bundle, matches, "--assets", db, "-o", scene, "--dbscan-eps", "0.05"
    )
    assert result.returncode == 0, result.stderr
    result = compiler("validate", scene)
    assert result.returncode == 0, result.stdout + result.stderr

    result = compiler("eval", scene, scene, "--assets", db, "-o", tmp / "metrics.json")
    assert result.returncode == 0, result.stderr
    metrics = json.loads((tmp / "metrics.json").read_text())
    assert metrics["model_accuracy"] == 1.0


def test_scripted_delegate_sidecar_honored(artifacts):
    bundle, db, tmp = artifacts
    matches = tmp / "matches.json"
    assert compiler(
        "match", bundle, "--assets", db, "-o", matches, "--k-cous", "4"
    ).returncode == 0

    # delegate picks the rank-2 candidate for the cabinet
    delegate = ScriptedDelegate(
        {"cab_0": {"chosen_model": "cab_0_alt", "chosen_orientation_index": 1,
                   "mount_type": "on_support"}}
    )
    sidecar_path = annotate(matches, delegate, tmp / "sidecar.json",
                            transcript_path=tmp / "transcript.json")
    attach_sidecar(bundle, json.loads(sidecar_path.read_text()))

    sidecar_matches = tmp / "matches_sidecar.json"
    result = compiler(
        "match", bundle, "--assets", db, "-o", sidecar_matches,
        "--selector", "sidecar", "--k-cous", "4",
    )
    assert result.returncode == 0, result.stderr
    payload = json.loads(sidecar_matches.read_text())
    cab = next(o for o in payload["objects"] if o["object_id"] == "cab_0")
    assert cab["cousins"][0]["asset_id"] == "cab_0_alt"
    assert cab["cousins"][0]["trace"]["model"] == "delegate"
    assert cab["cousins"][0]["trace"]["orientation"] == "delegate"

    # the transcript recorded the exchange for provenance
    transcript = json.loads((tmp / "transcript.json").read_text())
    assert any(t["object_id"] == "cab_0" and t["reply"] for t in transcript["transcript"])


def test_out_of_list_choice_falls_back_with_warning(artifacts):
    bundle, db, tmp = artifacts
    # bypass the annotator's filter: a sidecar naming an asset the matcher
    # can never shortlist must fall back to the embedding path with a warning
    attach_sidecar(bundle, {"objects": {"cab_0": {"chosen_model": "tab_0_twin"}}})
    matches = tmp / "matches.json"
    result = compiler(
        "match", bundle, "--assets", db, "-o", matches,
        "--selector", "sidecar", "--k-cous", "4",
    )
    assert result.returncode == 0, result.stderr
    assert "outside the top" in result.stderr
    payload = json.loads(matches.read_text())
    cab = next(o for o in payload["objects"] if o["object_id"] == "cab_0")
    assert cab["cousins"][0]["asset_id"] == "cab_0_twin"
    assert cab["cousins"][0]["trace"]["model"] == "embedding"


def test_extractor_cli_round_trip(image_with_fixture, spec_file, tmp_path):
    from acdc_extractor.cli import main as extractor_main

    bundle_out = tmp_path / "bundle"
    db_out = tmp_path / "db"
    assert extractor_main(["extract", str(image_with_fixture), "-o", str(bundle_out)]) == 0
    assert extractor_main(["build-db", str(spec_file), "-o", str(db_out)]) == 0
    assert compiler("validate", bundle_out).returncode == 0
    assert compiler("validate", db_out).returncode == 0
