"""Run manifests: every output directory records how it was produced."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from . import __version__

MANIFEST_NAME = "manifest.json"


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(
    out_dir: str | Path,
    subcommand: str,
    params: dict,
    inputs: dict[str, str | Path | None],
) -> Path:
    """Record resolved parameters, seed, and input digests next to the outputs.

    Deliberately timestamp-free so reruns with identical inputs produce an
    identical manifest.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    digests = {}
    for name, p in sorted(inputs.items()):
        if p is None:
            continue
        p = Path(p)
        if p.is_dir():
            digests[name] = {
                f.name: file_digest(f) for f in sorted(p.iterdir()) if f.is_file()
            }
        else:
            digests[name] = file_digest(p)
    manifest = {
        "tool": "pcnsim",
        "version": __version__,
        "subcommand": subcommand,
        "params": params,
        "inputs": digests,
    }
    path = out_dir / MANIFEST_NAME
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
