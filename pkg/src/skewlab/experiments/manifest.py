"""Run manifests: what was run, with which code, and the hash of every output."""
from __future__ import annotations

import hashlib
import json
import os
import platform
import time

import numpy as np

from .. import __version__


def _default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class OutputDir:
    """Collects output files and writes manifest.json at the end."""

    def __init__(self, path):
        self.path = os.fspath(path)
        os.makedirs(self.path, exist_ok=True)
        self.files: list[str] = []
        self.t0 = time.perf_counter()

    def file(self, name: str) -> str:
        if name not in self.files:
            self.files.append(name)
        return os.path.join(self.path, name)

    def write_json(self, name: str, obj) -> str:
        p = self.file(name)
        with open(p, "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True, default=_default)
            fh.write("\n")
        return p

    def write_manifest(self, cfg, command: str, exit_code: int) -> str:
        man = {
            "command": command,
            "config_hash": cfg.hash(),
            "config": cfg.to_dict(),
            "code_version": __version__,
            "python": platform.python_version(),
            "wall_time_s": time.perf_counter() - self.t0,
            "exit_code": int(exit_code),
            "files": {n: sha256_file(os.path.join(self.path, n)) for n in self.files
                      if os.path.exists(os.path.join(self.path, n))},
        }
        p = os.path.join(self.path, "manifest.json")
        with open(p, "w") as fh:
            json.dump(man, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return p
