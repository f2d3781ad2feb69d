"""Experiment manifest: what a run produced and under which settings.

The manifest is a JSON file with sorted keys and no timestamps, so a
repeated run with the same inputs writes byte-identical bytes.  Each
stage records a fingerprint hashing its own settings plus its upstream
stage's fingerprint; a stage whose fingerprint matches and whose output
files still exist is considered up to date.
"""

import hashlib
import json


def fingerprint(payload, upstream=None):
    """Stable digest of a stage's settings chained to its upstream."""
    canonical = json.dumps(
        {"config": payload, "upstream": upstream}, sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def new_manifest(version, master_seed, config_payload):
    return {
        "version": version,
        "master_seed": master_seed,
        "config": config_payload,
        "stages": {},
    }


def record_stage(manifest, name, stage_fingerprint, outputs, info=None):
    entry = {"fingerprint": stage_fingerprint, "outputs": sorted(outputs)}
    if info:
        entry["info"] = info
    manifest["stages"][name] = entry


def stage_fingerprint(manifest, name):
    entry = manifest["stages"].get(name)
    return entry["fingerprint"] if entry else None


def stage_outputs(manifest, name):
    entry = manifest["stages"].get(name)
    return list(entry["outputs"]) if entry else []


def stage_info(manifest, name):
    entry = manifest["stages"].get(name, {})
    return entry.get("info", {})


def save_manifest(manifest, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
