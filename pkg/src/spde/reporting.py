"""Deterministic CSV and manifest emission.

Floats are written with ``repr`` (shortest round-trip form), rows in fixed
order, newline-normalized, so identical runs produce byte-identical files.
The manifest records the master seed, the model label, the config
fingerprint and the tool version, and lists every artifact it refers to.
"""

from __future__ import annotations

import json
import os

__all__ = ["write_csv", "write_manifest", "fmt"]


def fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    text = str(value)
    if "," in text or '"' in text:
        text = '"' + text.replace('"', '""') + '"'
    return text


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_manifest(path, *, command, seed, model_label, config_hash, version, outputs, status, extra=None) -> None:
    doc = {
        "command": command,
        "seed": seed,
        "model": model_label,
        "config_sha256": config_hash,
        "tool_version": version,
        "outputs": sorted(os.path.basename(p) for p in outputs),
        "status": status,
    }
    if extra:
        doc.update(extra)
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
