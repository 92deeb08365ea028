"""Delegate annotation pass: produce a sidecar of model/orientation/mount
choices constrained to the candidates the matcher offered."""

from __future__ import annotations

import json
import logging
from importlib import resources
from pathlib import Path

from .adapters import ScriptedDelegate
from .errors import DelegateUnavailable

log = logging.getLogger(__name__)

MOUNT_TYPES = ("wall_mounted", "on_support", "mixture")


def load_prompt(name: str) -> str:
    return resources.files("acdc_extractor.prompts").joinpath(name).read_text("utf-8")


def annotate(
    matches_path: str | Path,
    delegate: ScriptedDelegate,
    out_path: str | Path,
    transcript_path: str | Path | None = None,
    k_ori: int = 4,
) -> Path:
    """Query the delegate per object and write the sidecar.

    Choices naming an asset outside the object's offered candidate list, or an
    orientation index outside [0, k_ori), are dropped with a warning so the
    compiler falls back to its embedding path.
    """
    with open(matches_path, encoding="utf-8") as fh:
        matches = json.load(fh)

    model_prompt = load_prompt("model_selection.txt")
    mount_prompt = load_prompt("mount.txt")

    sidecar: dict = {"objects": {}}
    for entry in matches.get("objects", []):
        oid = entry["object_id"]
        offered = [c["asset_id"] for c in entry.get("cousins", [])]
        reply = delegate.choose(
            oid, model_prompt.format(object_id=oid, candidates=", ".join(offered))
        )
        delegate.choose(oid, mount_prompt.format(object_id=oid))
        fields: dict = {}

        chosen = reply.get("chosen_model")
        if chosen is not None:
            if chosen in offered:
                fields["chosen_model"] = chosen
            else:
                log.warning(
                    "object %s: delegate chose %r which was not offered; dropped",
                    oid, chosen,
                )
        idx = reply.get("chosen_orientation_index")
        if idx is not None:
            if isinstance(idx, int) and 0 <= idx < k_ori:
                fields["chosen_orientation_index"] = idx
            else:
                log.warning(
                    "object %s: delegate orientation index %r out of range; dropped",
                    oid, idx,
                )
        mount = reply.get("mount_type")
        if mount is not None:
            if mount in MOUNT_TYPES:
                fields["mount_type"] = mount
                if reply.get("wall_index") is not None:
                    fields["wall_index"] = int(reply["wall_index"])
            else:
                log.warning("object %s: malformed mount reply %r; dropped", oid, mount)
        if fields:
            sidecar["objects"][oid] = fields

    out_path = Path(out_path)
    out_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n", "utf-8")
    if transcript_path is not None:
        Path(transcript_path).write_text(
            json.dumps({"transcript": delegate.transcript}, indent=2) + "\n", "utf-8"
        )
    return out_path


def scripted_delegate_from_file(path: str | Path) -> ScriptedDelegate:
    try:
        with open(path, encoding="utf-8") as fh:
            return ScriptedDelegate(json.load(fh))
    except FileNotFoundError as exc:
        raise DelegateUnavailable(f"no delegate script at {path}") from exc
